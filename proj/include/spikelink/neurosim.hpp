#pragma once

// In-pipeline spiking networks: an exact parrot (repeater) population and a
// small LIF network for the closed-loop demo.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "spikelink/core.hpp"
#include "spikelink/nef.hpp"

namespace spikelink {

class UnknownNeuron : public Error {
 public:
  UnknownNeuron(NeuronId id, std::size_t n)
      : Error("spike from neuron " + std::to_string(id) + " but population has " +
              std::to_string(n)),
        id_(id) {}
  NeuronId id() const { return id_; }

 private:
  NeuronId id_;
};

// Re-emits every received spike `delay_ticks` calls later with its time
// shifted by delay_ticks * delta_t. With delay 0 the input is forwarded as is.
class ParrotNetwork {
 public:
  explicit ParrotNetwork(std::size_t n_neurons, int delay_ticks = 1)
      : n_(n_neurons), delay_(delay_ticks) {
    if (delay_ticks < 0) throw BadParameter("parrot: delay_ticks must be >= 0");
  }

  std::size_t size() const { return n_; }
  int delay_ticks() const { return delay_; }
  std::uint64_t spikes_in() const { return in_; }
  std::uint64_t spikes_out() const { return out_; }

  SpikeBatch step(const SpikeBatch& input, const SimClock& clock) {
    SpikeBatch out;
    step_into(input, clock, out);
    return out;
  }

  void step_into(const SpikeBatch& input, const SimClock& clock, SpikeBatch& out) {
    for (const auto& e : input.events)
      if (e.neuron_id >= n_) throw UnknownNeuron(e.neuron_id, n_);
    in_ += input.events.size();
    // Spikes released now were received delay_ calls ago and shifted by as
    // many ticks, so they fall into the window of the current input.
    out.tick_index = input.tick_index;
    if (delay_ == 0) {
      out.events = input.events;
      out_ += out.events.size();
      return;
    }
    pending_.push_back(input.events);
    out.events.clear();
    if (pending_.size() > static_cast<std::size_t>(delay_)) {
      const double shift = static_cast<double>(delay_) * clock.delta_t();
      auto& due = pending_.front();
      out.events.reserve(due.size());
      for (const auto& e : due) out.events.push_back({e.neuron_id, e.time + shift});
      pending_.pop_front();
    }
    out_ += out.events.size();
  }

 private:
  std::size_t n_;
  int delay_;
  std::deque<std::vector<SpikeEvent>> pending_;
  std::uint64_t in_ = 0;
  std::uint64_t out_ = 0;
};

struct DemoNetworkParams {
  std::size_t n_neurons = 2;
  std::vector<double> input_weights;  // one per neuron; empty means all `weight`
  double weight = 30.0;
  double bias = 0.0;
  Matrix lateral;  // optional n x n, lateral(i, j) is the weight from i to j
  LifParams lif{};
};

// LIF neurons driven 1:1 by input channels. An input spike injects
// weight * unit current into its neuron for the one integration step that
// contains the spike's offset within its tick window; lateral spikes act on
// the following step.
class DemoNetwork {
 public:
  explicit DemoNetwork(DemoNetworkParams params)
      : params_(std::move(params)), lif_(params_.n_neurons, params_.lif) {
    if (params_.input_weights.empty()) params_.input_weights.assign(params_.n_neurons, params_.weight);
    if (params_.input_weights.size() != params_.n_neurons) {
      throw DimensionMismatch("demo network: one input weight per neuron expected");
    }
    for (double w : params_.input_weights)
      if (!std::isfinite(w)) throw BadParameter("demo network: non-finite weight");
    if (!params_.lateral.empty()) {
      if (params_.lateral.rows() != params_.n_neurons || params_.lateral.cols() != params_.n_neurons)
        throw DimensionMismatch("demo network: lateral weights must be n x n");
      for (double w : params_.lateral.data())
        if (!std::isfinite(w)) throw BadParameter("demo network: non-finite lateral weight");
    }
    current_.assign(params_.n_neurons, 0.0);
    spiked_.assign(params_.n_neurons, 0);
    lateral_drive_.assign(params_.n_neurons, 0.0);
  }

  std::size_t size() const { return params_.n_neurons; }
  const LifGroup& lif() const { return lif_; }

  SpikeBatch step(const SpikeBatch& input, const SimClock& clock) {
    SpikeBatch out;
    step_into(input, clock, out);
    return out;
  }

  void step_into(const SpikeBatch& input, const SimClock& clock, SpikeBatch& out) {
    const double dt = params_.lif.dt;
    const double ratio = clock.delta_t() / dt;
    const auto sub = static_cast<std::int64_t>(std::llround(ratio));
    if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-6 * ratio) {
      throw BadParameter("demo network: tick is not a whole multiple of the neuron step");
    }
    // Bucket input spikes by substep offset inside their own window.
    buckets_.assign(static_cast<std::size_t>(sub), {});
    const double window_start = static_cast<double>(input.tick_index) * clock.delta_t();
    for (const auto& e : input.events) {
      if (e.neuron_id >= size()) throw UnknownNeuron(e.neuron_id, size());
      auto s = static_cast<std::int64_t>(std::floor((e.time - window_start) / dt));
      s = std::clamp<std::int64_t>(s, 0, sub - 1);
      buckets_[static_cast<std::size_t>(s)].push_back(e.neuron_id);
    }

    out.tick_index = clock.tick_index();
    out.events.clear();
    const double t0 = clock.tick_start();
    const double t1 = clock.tick_end();
    const std::int64_t base = clock.tick_index() * sub;
    for (std::int64_t s = 0; s < sub; ++s) {
      for (std::size_t n = 0; n < size(); ++n) current_[n] = params_.bias + lateral_drive_[n];
      for (NeuronId id : buckets_[static_cast<std::size_t>(s)]) current_[id] += params_.input_weights[id];
      lif_.step(current_, spiked_);
      std::fill(lateral_drive_.begin(), lateral_drive_.end(), 0.0);
      const double t = detail::clamp_to_window(static_cast<double>(base + s) * dt, t0, t1);
      for (std::size_t n = 0; n < size(); ++n) {
        if (!spiked_[n]) continue;
        out.events.push_back({static_cast<NeuronId>(n), t});
        if (!params_.lateral.empty())
          for (std::size_t j = 0; j < size(); ++j) lateral_drive_[j] += params_.lateral(n, j);
      }
    }
  }

 private:
  DemoNetworkParams params_;
  LifGroup lif_;
  std::vector<double> current_;
  std::vector<std::uint8_t> spiked_;
  std::vector<double> lateral_drive_;
  std::vector<std::vector<NeuronId>> buckets_;
};

}  // namespace spikelink
