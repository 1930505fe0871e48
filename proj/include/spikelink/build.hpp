#pragma once

// Config document -> stage graph.

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "spikelink/config.hpp"
#include "spikelink/stages.hpp"

namespace spikelink {

struct Pipeline {
  ConfigDocument doc;
  StageGraph graph;
  std::vector<std::string> robots;  // names of robot stages

  explicit Pipeline(ConfigDocument d) : doc(std::move(d)), graph(doc.global.delta_t) {}

  RunOptions options() const {
    RunOptions o;
    o.mode = doc.global.mode;
    o.threads = doc.global.threads;
    return o;
  }

  RunReport run(RunOptions o) { return graph.run(doc.global.t_sim, o); }
  RunReport run() { return run(options()); }

  robo::RobotWorld& robot(const std::string& name) { return graph.stage_as<stages::RobotStage>(name).world(); }
};

// Per-stage seed so that two stochastic stages never share a stream.
inline std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage_name) {
  return global_seed ^ fnv1a(stage_name);
}

namespace build_detail {

inline std::size_t count(const StageSection& s, const std::string& key) {
  const auto v = s.integer(key);
  if (v < 1) throw BadValue("[" + s.name + "] " + key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

inline bool looks_like_path(const std::string& v) {
  return v.find('/') != std::string::npos || v.ends_with(".csv") || v.ends_with(".txt");
}

inline Matrix load_values(const ConfigDocument& doc, const std::string& path) {
  return load_matrix_csv(doc.resolve(path)).values;
}

inline ChannelMap make_map(const ConfigDocument& doc, const StageSection& s) {
  const auto in = count(s, "inputs");
  const auto out = count(s, "outputs");
  const auto& m = s.get("map");
  if (m == "identity") {
    if (in != out) throw BadValue("[" + s.name + "] identity map needs inputs == outputs");
    return ChannelMap::identity(in);
  }
  if (m == "hemispheres") return ChannelMap::hemispheres(in, out);
  if (m == "fan_in") return ChannelMap::fan_in(in, out);
  const Matrix w = load_values(doc, m);
  if (w.rows() != in || w.cols() != out) throw BadValue("[" + s.name + "] map matrix must be inputs x outputs");
  return ChannelMap::from_matrix(w);
}

inline RateEncoderParams rate_params(const StageSection& s) {
  RateEncoderParams p;
  p.n_neurons = count(s, "n_neurons");
  p.v_min = s.number("v_min");
  p.v_max = s.number("v_max");
  p.validate();
  return p;
}

inline NefConfig nef_config(const StageSection& s, std::uint64_t seed) {
  NefConfig c;
  c.dim = count(s, "dim");
  c.n_neurons = count(s, "n_neurons");
  c.seed = seed;
  c.intercept_lo = s.number("intercept_lo");
  c.intercept_hi = s.number("intercept_hi");
  c.max_rate_lo = s.number("max_rate_lo");
  c.max_rate_hi = s.number("max_rate_hi");
  c.lif.tau_m = s.number("tau_m");
  c.lif.t_ref = s.number("t_ref");
  c.lif.dt = s.number("dt");
  return c;
}

inline std::unique_ptr<Stage> make_robot(const ConfigDocument& doc, const StageSection& s) {
  const auto& arena_path = s.get("arena");
  if (arena_path.empty()) throw BadValue("[" + s.name + "] robot needs an arena file");
  robo::Arena arena = robo::load_arena(doc.resolve(arena_path));
  robo::RobotState init;
  init.x = s.number("x");
  init.y = s.number("y");
  init.heading = s.number("heading");
  init.radius = s.number("radius");
  robo::WorldParams wp;
  wp.scan.n_beams = count(s, "n_beams");
  wp.scan.fov = s.number("fov");
  wp.scan.max_range = s.number("max_range");
  wp.scan.update_rate = 1.0 / doc.global.delta_t;
  wp.limits.v_max_lin = s.number("v_max_lin");
  wp.limits.omega_max = s.number("omega_max");
  wp.substep = s.number("substep");
  wp.proximity = s.flag("proximity");
  wp.halt_on_collision = s.flag("halt_on_collision");
  if (robo::collision_check(arena, init)) throw BadValue("[" + s.name + "] initial pose collides");
  return std::make_unique<stages::RobotStage>(s.name, robo::RobotWorld(std::move(arena), init, wp));
}

inline std::unique_ptr<Stage> make_lif(const StageSection& s) {
  DemoNetworkParams p;
  p.n_neurons = count(s, "n_neurons");
  p.weight = s.number("weight");
  p.input_weights = s.numbers("weights");
  p.bias = s.number("bias");
  if (const auto& lat = s.get("lateral"); !lat.empty()) p.lateral = parse_inline_matrix(lat, "[" + s.name + "] lateral");
  p.lif.tau_m = s.number("tau_m");
  p.lif.v_thresh = s.number("v_thresh");
  p.lif.v_reset = s.number("v_reset");
  p.lif.t_ref = s.number("t_ref");
  p.lif.dt = s.number("dt");
  p.lif.validate();
  return std::make_unique<stages::LifNetworkStage>(s.name, std::move(p));
}

inline std::unique_ptr<Stage> make_linear_decoder(const ConfigDocument& doc, const StageSection& s) {
  const auto n = count(s, "n_neurons");
  const auto k = count(s, "outputs");
  const double tau = s.number("tau_dec");
  const auto& phi = s.get("phi");
  Matrix w;
  if (phi == "uniform") {
    w = Matrix(n, k, 1.0 / static_cast<double>(n));
  } else if (looks_like_path(phi)) {
    w = load_values(doc, phi);
  } else {
    w = parse_inline_matrix(phi, "[" + s.name + "] phi");
  }
  if (w.rows() != n || w.cols() != k) throw BadValue("[" + s.name + "] phi must be n_neurons x outputs");
  return std::make_unique<stages::DecoderStage>(s.name, LinearReadout(std::move(w)), tau);
}

inline std::unique_ptr<Stage> make_nef_decoder(const ConfigDocument& doc, const StageSection& s, StageGraph& g) {
  const auto& pop_name = s.get("population");
  if (pop_name.empty()) throw BadValue("[" + s.name + "] nef decoder needs a population");
  const auto& pop = g.stage_as<stages::NefEncoderStage>(pop_name).population();
  const double tau = s.number("tau_dec");
  const auto& dec = s.get("decoders");
  const auto& reg_text = s.get("reg");
  Matrix phi;
  if (dec == "auto") {
    const double reg = reg_text == "auto" ? nef_default_reg(pop.config()) : s.number("reg");
    phi = nef_train_decoders(pop, nef_default_grid(pop.dim()), reg);
  } else if (dec == "uniform") {
    // Untrained readout with the same shape; only useful for timing runs.
    phi = Matrix(pop.size(), pop.dim(), 1.0 / static_cast<double>(pop.size()));
  } else {
    phi = load_values(doc, dec);
  }
  if (phi.rows() != pop.size() || phi.cols() != pop.dim())
    throw BadValue("[" + s.name + "] decoders must be n_neurons x dim");
  return std::make_unique<stages::DecoderStage>(s.name, nef_spiking_readout(phi, tau), tau, "nef");
}

}  // namespace build_detail

inline std::unique_ptr<Stage> make_stage(const ConfigDocument& doc, const StageSection& s, StageGraph& g) {
  using namespace build_detail;
  const std::string& m = s.model;
  if (s.kind == "source") {
    if (m == "constant")
      return std::make_unique<stages::ConstantSource>(s.name, count(s, "width"), s.number("value"));
    if (m == "step") {
      const auto step_tick = ticks_for(s.number("step_time"), doc.global.delta_t);
      return std::make_unique<stages::StepSource>(s.name, count(s, "width"), s.number("low"), s.number("high"),
                                                  step_tick);
    }
    if (m == "sine")
      return std::make_unique<stages::SineSource>(s.name, count(s, "width"), s.number("amplitude"),
                                                  s.number("frequency"));
    if (m == "robot") return make_robot(doc, s);
  } else if (s.kind == "adapter") {
    return std::make_unique<stages::ChannelMapStage>(s.name, make_map(doc, s));
  } else if (s.kind == "encoder") {
    if (m == "regular") return std::make_unique<stages::RegularEncoderStage>(s.name, rate_params(s));
    if (m == "poisson")
      return std::make_unique<stages::PoissonEncoderStage>(s.name, rate_params(s),
                                                           stage_seed(doc.global.seed, s.name));
    if (m == "nef")
      return std::make_unique<stages::NefEncoderStage>(
          s.name, NefPopulation::build(nef_config(s, stage_seed(doc.global.seed, s.name))));
  } else if (s.kind == "network") {
    if (m == "parrot") {
      const auto d = s.integer("delay_ticks");
      if (d < 0) throw BadValue("[" + s.name + "] delay_ticks must be >= 0");
      return std::make_unique<stages::ParrotStage>(s.name, count(s, "n_neurons"), static_cast<int>(d));
    }
    if (m == "lif") return make_lif(s);
  } else if (s.kind == "decoder") {
    if (m == "linear") return make_linear_decoder(doc, s);
    if (m == "nef") return make_nef_decoder(doc, s, g);
  } else if (s.kind == "sink") {
    if (m == "motor") {
      const auto w = count(s, "width");
      auto bias = s.numbers("bias");
      auto gain = s.numbers("gain");
      if (bias.size() != w || gain.size() != w) throw BadValue("[" + s.name + "] bias and gain need 'width' entries");
      return std::make_unique<stages::MotorStage>(s.name, std::move(bias), std::move(gain));
    }
    if (m == "probe") return std::make_unique<stages::ProbeStage>(s.name, count(s, "width"));
  }
  throw UnknownStageKind("no builder for " + s.kind + "/" + m);
}

// Builds all stages in declaration order (an NEF decoder must come after its
// population), wires the connections and validates the graph. The elapsed
// wall time is stored as the graph's build time.
inline Pipeline build_pipeline(ConfigDocument doc) {
  const auto t0 = std::chrono::steady_clock::now();
  Pipeline p(std::move(doc));
  for (const auto& s : p.doc.stages) {
    p.graph.add_stage(make_stage(p.doc, s, p.graph));
    if (s.kind == "source" && s.model == "robot") p.robots.push_back(s.name);
  }
  for (const auto& c : p.doc.connections) p.graph.connect(c.from_stage, c.from_port, c.to_stage, c.to_port);
  p.graph.validate();
  p.graph.set_build_seconds(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return p;
}

}  // namespace spikelink
