#pragma once

// Continuous <-> spike conversion: regular and Poisson rate encoders, the
// exponential-kernel activity filter, linear readout, and the channel map that
// adapts an m-wide signal to n receiving neurons.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spikelink/core.hpp"
#include "spikelink/matrix.hpp"
#include "spikelink/rng.hpp"

namespace spikelink {

class BadParameter : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Rate encoders
// ---------------------------------------------------------------------------

struct RateEncoderParams {
  double v_min = 1.0;  // Hz
  double v_max = 2.0;  // Hz
  std::size_t n_neurons = 1;

  void validate() const {
    if (!std::isfinite(v_min) || !std::isfinite(v_max) || v_min < 0.0 || !(v_min < v_max)) {
      throw BadParameter("rate encoder: need finite 0 <= v_min < v_max");
    }
    if (n_neurons == 0) throw BadParameter("rate encoder: n_neurons must be positive");
  }
};

// Firing rate for input I in [-1, 1]; the reciprocal of the regular ISI.
inline double instantaneous_rate(const RateEncoderParams& p, double input) {
  return p.v_min + (p.v_max - p.v_min) * (1.0 + input) / 2.0;
}

// ISI drawn from the exponential distribution with the given rate, using the
// uniform variate r in (0, 1].
inline double exponential_isi(double rate, double r) { return -std::log(r) / rate; }

namespace detail {

// Largest double strictly below the end of the tick window.
inline double clamp_to_window(double t, double t0, double t1) {
  if (t < t0) return t0;
  if (t >= t1) return std::nextafter(t1, t0);
  return t;
}

}  // namespace detail

// Phase-accumulator realization of the regular rate code. The phase of each
// neuron integrates its instantaneous rate; a spike is emitted whenever the
// accumulated phase passes an integer, with the time interpolated inside the
// tick. A neuron at phase exactly 0 fires at the start of the next tick in
// which its rate is positive.
class RegularEncoder {
 public:
  explicit RegularEncoder(RateEncoderParams params)
      : params_(params), phase_((params.validate(), params.n_neurons), 0.0) {}

  const RateEncoderParams& params() const { return params_; }
  std::span<const double> phase() const { return phase_; }
  std::size_t size() const { return phase_.size(); }

  SpikeBatch step(const ContinuousFrame& frame, const SimClock& clock) {
    SpikeBatch batch;
    step_into(frame, clock, batch);
    return batch;
  }

  void step_into(const ContinuousFrame& frame, const SimClock& clock, SpikeBatch& batch) {
    if (frame.width() != phase_.size()) throw WidthMismatch(phase_.size(), frame.width());
    batch.tick_index = clock.tick_index();
    batch.events.clear();
    const double t0 = clock.tick_start();
    const double t1 = clock.tick_end();
    const double dt = clock.delta_t();
    for (std::size_t n = 0; n < phase_.size(); ++n) {
      const double rate = instantaneous_rate(params_, std::clamp(frame.values[n], -1.0, 1.0));
      if (!(rate > 0.0)) continue;
      const double p = phase_[n];
      double end = p + rate * dt;
      // A phase that lands on an integer up to rounding marks a spike exactly
      // at the tick boundary; it belongs to the next tick.
      if (const double r = std::round(end); std::abs(end - r) <= 1e-9 * std::max(1.0, r)) end = r;
      double k = (p == 0.0) ? 0.0 : 1.0;
      for (; k < end; k += 1.0) {
        const double t = detail::clamp_to_window(t0 + (k - p) / rate, t0, t1);
        batch.events.push_back({static_cast<NeuronId>(n), t});
      }
      phase_[n] = end - std::floor(end);
    }
    batch.sort();
  }

 private:
  RateEncoderParams params_;
  std::vector<double> phase_;
};

// Inhomogeneous Poisson encoder realized by thinning: proposals arrive at
// rate v_max and are accepted with probability rate(t) / v_max. Each neuron
// owns one counter-based stream; proposal j of neuron n consumes exactly one
// Philox block (two uniforms: acceptance and the gap to proposal j + 1).
class PoissonEncoder {
 public:
  static constexpr std::uint32_t kStreamPurpose = 0x50u;

  PoissonEncoder(RateEncoderParams params, std::uint64_t seed)
      : params_((params.validate(), params)),
        key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        next_time_(params.n_neurons),
        accept_u_(params.n_neurons),
        counter_(params.n_neurons, 0) {
    for (std::size_t n = 0; n < params_.n_neurons; ++n) {
      const auto [u_accept, u_gap] = draw(n);
      next_time_[n] = exponential_isi(params_.v_max, 1.0 - u_gap);
      accept_u_[n] = u_accept;
    }
  }

  const RateEncoderParams& params() const { return params_; }
  std::size_t size() const { return next_time_.size(); }

  SpikeBatch step(const ContinuousFrame& frame, const SimClock& clock) {
    SpikeBatch batch;
    step_into(frame, clock, batch);
    return batch;
  }

  void step_into(const ContinuousFrame& frame, const SimClock& clock, SpikeBatch& batch) {
    if (frame.width() != next_time_.size()) throw WidthMismatch(next_time_.size(), frame.width());
    batch.tick_index = clock.tick_index();
    batch.events.clear();
    const double t0 = clock.tick_start();
    const double t1 = clock.tick_end();
    for (std::size_t n = 0; n < next_time_.size(); ++n) {
      if (next_time_[n] >= t1) continue;
      const double rate = instantaneous_rate(params_, std::clamp(frame.values[n], -1.0, 1.0));
      const double accept_p = rate / params_.v_max;
      while (next_time_[n] < t1) {
        if (accept_u_[n] < accept_p) {
          batch.events.push_back(
              {static_cast<NeuronId>(n), detail::clamp_to_window(next_time_[n], t0, t1)});
        }
        const auto [u_accept, u_gap] = draw(n);
        next_time_[n] += exponential_isi(params_.v_max, 1.0 - u_gap);
        accept_u_[n] = u_accept;
      }
    }
    batch.sort();
  }

 private:
  std::pair<double, double> draw(std::size_t n) {
    const std::uint64_t c = counter_[n]++;
    const std::uint64_t sid = stream_id(kStreamPurpose, static_cast<std::uint32_t>(n));
    const auto block = Philox4x32::generate(
        {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
         static_cast<std::uint32_t>(sid), static_cast<std::uint32_t>(sid >> 32)},
        key_);
    const auto to_unit = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t bits = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
      return static_cast<double>(bits) * 0x1.0p-53;
    };
    return {to_unit(block[0], block[1]), to_unit(block[2], block[3])};
  }

  RateEncoderParams params_;
  Philox4x32::Key key_;
  std::vector<double> next_time_;
  std::vector<double> accept_u_;
  std::vector<std::uint64_t> counter_;
};

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

// a_n(t) = sum_i exp(-(t - t_{i,n}) / tau) over all spikes up to t. The state is
// advanced with the exact propagator, so results do not depend on how the
// spike train is chunked into ticks.
class ExponentialFilter {
 public:
  static constexpr double kDefaultTau = 0.030;

  ExponentialFilter(std::size_t n_neurons, double tau_dec = kDefaultTau)
      : tau_(tau_dec), activities_(n_neurons, 0.0) {
    if (!(tau_dec > 0.0) || !std::isfinite(tau_dec)) {
      throw BadParameter("filter: tau_dec must be finite and > 0");
    }
  }

  double tau() const { return tau_; }
  double last_time() const { return last_time_; }
  std::span<const double> activities() const { return activities_; }
  std::size_t size() const { return activities_.size(); }

  // Folds in the spikes of one tick and evaluates at the tick end.
  std::span<const double> step(const SpikeBatch& batch, const SimClock& clock) {
    return advance(batch.events, clock.tick_end());
  }

  // Folds in `events` (all with time <= t_eval) and moves the evaluation point
  // to t_eval.
  std::span<const double> advance(std::span<const SpikeEvent> events, double t_eval) {
    if (t_eval < last_time_) throw Error("filter: evaluation time moved backwards");
    if (t_eval > last_time_) {
      const double decay = std::exp(-(t_eval - last_time_) / tau_);
      for (double& a : activities_) a *= decay;
    }
    for (const auto& e : events) {
      if (e.neuron_id >= activities_.size()) {
        throw IndexOutOfRange("filter: neuron " + std::to_string(e.neuron_id) + " >= " +
                              std::to_string(activities_.size()));
      }
      // Spikes older than last_time are exact too: the kernel term is closed form.
      if (!(e.time <= t_eval)) {
        throw Error("filter: spike at " + std::to_string(e.time) + " after evaluation time " +
                    std::to_string(t_eval));
      }
      activities_[e.neuron_id] += std::exp(-(t_eval - e.time) / tau_);
    }
    last_time_ = t_eval;
    return activities_;
  }

 private:
  double tau_;
  std::vector<double> activities_;
  double last_time_ = 0.0;
};

struct LinearReadout {
  Matrix phi;  // n_neurons x k_outputs

  LinearReadout() = default;
  explicit LinearReadout(Matrix weights) : phi(std::move(weights)) {
    for (double w : phi.data())
      if (!std::isfinite(w)) throw BadParameter("readout: non-finite weight");
  }

  std::size_t inputs() const { return phi.rows(); }
  std::size_t outputs() const { return phi.cols(); }

  // Uniform weights 1/n from every neuron to every output.
  static LinearReadout uniform(std::size_t n_neurons, std::size_t outputs) {
    return LinearReadout(Matrix(n_neurons, outputs, 1.0 / static_cast<double>(n_neurons)));
  }
};

// z_k = sum_n a_n phi_nk, before clamping.
inline std::vector<double> readout_linear(std::span<const double> activities,
                                          const LinearReadout& r) {
  return transpose_times(r.phi, activities);
}

inline std::vector<double> readout(std::span<const double> activities, const LinearReadout& r) {
  auto z = readout_linear(activities, r);
  clamp_in_place(z);
  return z;
}

// ---------------------------------------------------------------------------
// Channel map
// ---------------------------------------------------------------------------

// out_j = clamp(sum over (i, w) in mapping_j of w * in_i). Stored in
// compressed-row form; each output row lists its (input, weight) taps.
class ChannelMap {
 public:
  using Tap = std::pair<std::size_t, double>;

  ChannelMap() = default;

  ChannelMap(std::size_t inputs, const std::vector<std::vector<Tap>>& mapping) : inputs_(inputs) {
    offsets_.reserve(mapping.size() + 1);
    offsets_.push_back(0);
    for (std::size_t j = 0; j < mapping.size(); ++j) {
      for (const auto& [i, w] : mapping[j]) {
        if (i >= inputs) {
          throw IndexOutOfRange("channel map: output " + std::to_string(j) + " reads input " +
                                std::to_string(i) + " of " + std::to_string(inputs));
        }
        if (!std::isfinite(w)) throw BadParameter("channel map: non-finite weight");
        index_.push_back(static_cast<std::uint32_t>(i));
        weight_.push_back(w);
      }
      offsets_.push_back(index_.size());
    }
  }

  static ChannelMap identity(std::size_t m) {
    std::vector<std::vector<Tap>> map(m);
    for (std::size_t i = 0; i < m; ++i) map[i] = {{i, 1.0}};
    return ChannelMap(m, map);
  }

  // Splits the inputs into `parts` contiguous blocks; output j is the mean of
  // block j. For a scan whose beam 0 is the rightmost, output 0 is the right
  // hemisphere.
  static ChannelMap hemispheres(std::size_t m, std::size_t parts = 2) {
    if (parts == 0 || parts > m) throw BadParameter("channel map: bad hemisphere count");
    std::vector<std::vector<Tap>> map(parts);
    for (std::size_t j = 0; j < parts; ++j) {
      const std::size_t lo = j * m / parts;
      const std::size_t hi = (j + 1) * m / parts;
      const double w = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) map[j].emplace_back(i, w);
    }
    return ChannelMap(m, map);
  }

  // Every output receives the mean of all inputs.
  static ChannelMap fan_in(std::size_t m, std::size_t n) {
    if (m == 0) throw BadParameter("channel map: no inputs");
    ChannelMap out;
    out.inputs_ = m;
    out.offsets_.reserve(n + 1);
    out.offsets_.push_back(0);
    out.index_.reserve(n * m);
    out.weight_.reserve(n * m);
    const double w = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        out.index_.push_back(static_cast<std::uint32_t>(i));
        out.weight_.push_back(w);
      }
      out.offsets_.push_back(out.index_.size());
    }
    return out;
  }

  // Dense matrix with one row per input and one column per output; zero
  // entries are dropped.
  static ChannelMap from_matrix(const Matrix& m) {
    std::vector<std::vector<Tap>> map(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0) map[j].emplace_back(i, m(i, j));
    return ChannelMap(m.rows(), map);
  }

  std::size_t inputs() const { return inputs_; }
  std::size_t outputs() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  std::vector<Tap> taps(std::size_t j) const {
    std::vector<Tap> out;
    for (std::size_t k = offsets_[j]; k < offsets_[j + 1]; ++k) out.emplace_back(index_[k], weight_[k]);
    return out;
  }

  ContinuousFrame apply(const ContinuousFrame& frame) const {
    ContinuousFrame out;
    apply_into(frame, out);
    return out;
  }

  void apply_into(const ContinuousFrame& frame, ContinuousFrame& out) const {
    if (frame.width() != inputs_) throw WidthMismatch(inputs_, frame.width());
    out.tick_index = frame.tick_index;
    out.values.resize(outputs());
    const double* in = frame.values.data();
    for (std::size_t j = 0; j + 1 < offsets_.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = offsets_[j]; k < offsets_[j + 1]; ++k) s += weight_[k] * in[index_[k]];
      out.values[j] = std::clamp(s, -1.0, 1.0);
    }
  }

 private:
  std::size_t inputs_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> index_;
  std::vector<double> weight_;
};

}  // namespace spikelink
