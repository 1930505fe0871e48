#pragma once

// Pipeline stages wrapping the codec, NEF, network and robot modules.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "spikelink/codec.hpp"
#include "spikelink/nef.hpp"
#include "spikelink/neurosim.hpp"
#include "spikelink/robosim.hpp"
#include "spikelink/runtime.hpp"

namespace spikelink::stages {

inline PortSpec input(std::string name, PortKind kind, std::size_t width) {
  return {std::move(name), PortDirection::in, kind, width, {}};
}

inline PortSpec output(std::string name, PortKind kind, std::size_t width, std::vector<double> initial = {}) {
  return {std::move(name), PortDirection::out, kind, width, std::move(initial)};
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

class ConstantSource : public Stage {
 public:
  ConstantSource(std::string name, std::size_t width, double value)
      : Stage({std::move(name), StageKind::source, "constant",
               {output("out", PortKind::continuous, width, {value})}}),
        value_(value) {}

  void step(const SimClock& clock, StageIO& io) override {
    auto& out = io.out_frame(0);
    out.tick_index = clock.tick_index();
    out.values.assign(desc_.ports[0].width, value_);
  }

 private:
  double value_;
};

// Holds `low` until step_tick, then `high`. The buffer starts at `low`.
class StepSource : public Stage {
 public:
  StepSource(std::string name, std::size_t width, double low, double high, std::int64_t step_tick)
      : Stage({std::move(name), StageKind::source, "step", {output("out", PortKind::continuous, width, {low})}}),
        low_(low),
        high_(high),
        step_tick_(step_tick) {}

  std::int64_t step_tick() const { return step_tick_; }

  void step(const SimClock& clock, StageIO& io) override {
    auto& out = io.out_frame(0);
    out.tick_index = clock.tick_index();
    out.values.assign(desc_.ports[0].width, clock.tick_index() >= step_tick_ ? high_ : low_);
  }

 private:
  double low_;
  double high_;
  std::int64_t step_tick_;
};

// amplitude * sin(2 pi f t) sampled at the tick start, same on every channel.
class SineSource : public Stage {
 public:
  SineSource(std::string name, std::size_t width, double amplitude, double frequency)
      : Stage({std::move(name), StageKind::source, "sine", {output("out", PortKind::continuous, width)}}),
        amplitude_(amplitude),
        frequency_(frequency) {}

  void step(const SimClock& clock, StageIO& io) override {
    auto& out = io.out_frame(0);
    out.tick_index = clock.tick_index();
    const double v = std::clamp(amplitude_ * std::sin(2.0 * std::numbers::pi * frequency_ * clock.time()), -1.0, 1.0);
    out.values.assign(desc_.ports[0].width, v);
  }

 private:
  double amplitude_;
  double frequency_;
};

class RobotStage : public Stage {
 public:
  RobotStage(std::string name, robo::RobotWorld world)
      : Stage({name, StageKind::source, "robot",
               {input("motor", PortKind::continuous, 2),
                output("scan", PortKind::continuous, world.params().scan.n_beams, world.sensor_frame(0).values)},
               0, true}),
        world_(std::move(world)) {}

  robo::RobotWorld& world() { return world_; }
  const robo::RobotWorld& world() const { return world_; }

  void step(const SimClock& clock, StageIO& io) override {
    io.out_frame(1) = world_.step(io.frame(0), clock);
  }

 private:
  robo::RobotWorld world_;
};

// ---------------------------------------------------------------------------
// Adapter, encoders
// ---------------------------------------------------------------------------

class ChannelMapStage : public Stage {
 public:
  ChannelMapStage(std::string name, ChannelMap map)
      : Stage({std::move(name), StageKind::adapter, "channel_map",
               {input("in", PortKind::continuous, map.inputs()), output("out", PortKind::continuous, map.outputs())}}),
        map_(std::move(map)) {}

  const ChannelMap& map() const { return map_; }

  void step(const SimClock& clock, StageIO& io) override {
    auto& out = io.out_frame(1);
    map_.apply_into(io.frame(0), out);
    out.tick_index = clock.tick_index();
  }

 private:
  ChannelMap map_;
};

class RegularEncoderStage : public Stage {
 public:
  RegularEncoderStage(std::string name, RateEncoderParams params)
      : Stage({std::move(name), StageKind::encoder, "regular",
               {input("in", PortKind::continuous, params.n_neurons),
                output("out", PortKind::event, params.n_neurons)}}),
        encoder_(params) {}

  const RegularEncoder& encoder() const { return encoder_; }

  void step(const SimClock& clock, StageIO& io) override { encoder_.step_into(io.frame(0), clock, io.out_spikes(1)); }

 private:
  RegularEncoder encoder_;
};

class PoissonEncoderStage : public Stage {
 public:
  PoissonEncoderStage(std::string name, RateEncoderParams params, std::uint64_t seed)
      : Stage({std::move(name), StageKind::encoder, "poisson",
               {input("in", PortKind::continuous, params.n_neurons),
                output("out", PortKind::event, params.n_neurons)}}),
        encoder_(params, seed) {}

  void step(const SimClock& clock, StageIO& io) override { encoder_.step_into(io.frame(0), clock, io.out_spikes(1)); }

 private:
  PoissonEncoder encoder_;
};

class NefEncoderStage : public Stage {
 public:
  NefEncoderStage(std::string name, NefPopulation pop)
      : Stage({std::move(name), StageKind::encoder, "nef",
               {input("in", PortKind::continuous, pop.dim()), output("out", PortKind::event, pop.size())}}),
        pop_(std::move(pop)) {}

  NefPopulation& population() { return pop_; }
  const NefPopulation& population() const { return pop_; }

  void step(const SimClock& clock, StageIO& io) override { pop_.encode_step_into(io.frame(0), clock, io.out_spikes(1)); }

 private:
  NefPopulation pop_;
};

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

class ParrotStage : public Stage {
 public:
  ParrotStage(std::string name, std::size_t n_neurons, int delay_ticks = 1)
      : Stage({std::move(name), StageKind::network, "parrot",
               {input("in", PortKind::event, n_neurons), output("out", PortKind::event, n_neurons)},
               delay_ticks}),
        net_(n_neurons, delay_ticks) {}

  const ParrotNetwork& network() const { return net_; }

  void step(const SimClock& clock, StageIO& io) override { net_.step_into(io.spikes(0), clock, io.out_spikes(1)); }

 private:
  ParrotNetwork net_;
};

class LifNetworkStage : public Stage {
 public:
  LifNetworkStage(std::string name, DemoNetworkParams params)
      : Stage({std::move(name), StageKind::network, "lif",
               {input("in", PortKind::event, params.n_neurons), output("out", PortKind::event, params.n_neurons)}}),
        net_(std::move(params)) {}

  void step(const SimClock& clock, StageIO& io) override { net_.step_into(io.spikes(0), clock, io.out_spikes(1)); }

 private:
  DemoNetwork net_;
};

// ---------------------------------------------------------------------------
// Decoder and sinks
// ---------------------------------------------------------------------------

// Filters the incoming spikes and applies a clamped linear readout. The
// activities are evaluated at the end of the window the incoming batch was
// stamped with, so transport delay shows up as a shift in tick index only.
class DecoderStage : public Stage {
 public:
  DecoderStage(std::string name, LinearReadout readout, double tau_dec, std::string model = "linear")
      : Stage({std::move(name), StageKind::decoder, std::move(model),
               {input("in", PortKind::event, readout.inputs()), output("out", PortKind::continuous, readout.outputs())}}),
        filter_(readout.inputs(), tau_dec),
        readout_(std::move(readout)) {}

  const ExponentialFilter& filter() const { return filter_; }
  const LinearReadout& readout() const { return readout_; }

  void step(const SimClock& clock, StageIO& io) override {
    const SpikeBatch& in = io.spikes(0);
    const double t_eval = static_cast<double>(in.tick_index + 1) * clock.delta_t();
    const auto a = filter_.advance(in.events, std::max(t_eval, filter_.last_time()));
    auto& out = io.out_frame(1);
    out.tick_index = clock.tick_index();
    out.values.assign(readout_.outputs(), 0.0);
    const Matrix& phi = readout_.phi;
    for (std::size_t n = 0; n < a.size(); ++n) {
      const double an = a[n];
      if (an == 0.0) continue;
      const auto r = phi.row(n);
      for (std::size_t k = 0; k < r.size(); ++k) out.values[k] += an * r[k];
    }
    clamp_in_place(out.values);
  }

 private:
  ExponentialFilter filter_;
  LinearReadout readout_;
};

// Turns decoder output into a twist frame: clamp(bias + gain * in).
class MotorStage : public Stage {
 public:
  MotorStage(std::string name, std::vector<double> bias, std::vector<double> gain)
      : Stage({std::move(name), StageKind::sink, "motor",
               {input("in", PortKind::continuous, bias.size()), output("out", PortKind::continuous, bias.size())}}),
        bias_(std::move(bias)),
        gain_(std::move(gain)) {
    if (gain_.size() != bias_.size()) throw DimensionMismatch("motor: bias and gain widths differ");
  }

  void step(const SimClock& clock, StageIO& io) override {
    const auto& in = io.frame(0);
    auto& out = io.out_frame(1);
    out.tick_index = clock.tick_index();
    out.values.resize(bias_.size());
    for (std::size_t i = 0; i < bias_.size(); ++i) out.values[i] = std::clamp(bias_[i] + gain_[i] * in.values[i], -1.0, 1.0);
  }

 private:
  std::vector<double> bias_;
  std::vector<double> gain_;
};

// Terminal sink; optionally keeps every frame it reads.
class ProbeStage : public Stage {
 public:
  ProbeStage(std::string name, std::size_t width, bool keep_history = false)
      : Stage({std::move(name), StageKind::sink, "probe", {input("in", PortKind::continuous, width)}}),
        keep_(keep_history) {}

  const std::vector<ContinuousFrame>& history() const { return history_; }
  void set_keep_history(bool on) { keep_ = on; }

  void step(const SimClock& clock, StageIO& io) override {
    if (!keep_) return;
    ContinuousFrame f = io.frame(0);
    f.tick_index = clock.tick_index();
    history_.push_back(std::move(f));
  }

 private:
  bool keep_;
  std::vector<ContinuousFrame> history_;
};

}  // namespace spikelink::stages
