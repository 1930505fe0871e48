// spikelink command-line front end: run a pipeline config, run the
// measurement suite, or run the closed-loop robot demo.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spikelink/spikelink.hpp"

namespace sl = spikelink;
namespace bench = spikelink::bench;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

// Errors detected before a run starts map to exit code 2.
struct SetupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_config(const std::string& name) { return std::string(SPIKELINK_CONFIG_DIR) + "/" + name; }

// "10,20,50ms" -> {0.01, 0.02, 0.05}. A unit (s, ms, us) on an item applies
// to that item; a unit on the last item also applies to unit-less items.
std::vector<double> parse_durations(const std::string& text) {
  struct Item {
    double value;
    std::optional<double> scale;
  };
  std::vector<Item> items;
  for (auto cell : sl::detail::split(text, ',')) {
    if (cell.empty()) throw SetupError("empty entry in duration list '" + text + "'");
    std::optional<double> scale;
    auto strip = [&](const std::string& suffix, double s) {
      if (!scale && cell.size() > suffix.size() && cell.ends_with(suffix)) {
        cell.erase(cell.size() - suffix.size());
        scale = s;
      }
    };
    strip("ms", 1e-3);
    strip("us", 1e-6);
    strip("s", 1.0);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size() || !(v > 0.0)) throw SetupError("bad duration '" + cell + "' in '" + text + "'");
    items.push_back({v, scale});
  }
  const double fallback = items.back().scale.value_or(1.0);
  std::vector<double> out;
  for (const auto& it : items) out.push_back(it.value * it.scale.value_or(fallback));
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  try {
    return sl::config_detail::to_numbers(text, what);
  } catch (const sl::Error& e) {
    throw SetupError(e.what());
  }
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_numbers(text, "--counts")) {
    if (!(v >= 1.0) || v != std::floor(v)) throw SetupError("--counts entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw SetupError("cannot write " + path);
  return f;
}

// Settings shared by every subcommand. Command-line values win over the
// config file; the seed falls back to SPIKELINK_SEED before the config.
struct Overrides {
  std::string config;
  double t_sim = 0.0;
  std::string dt;
  std::string mode;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  unsigned trials = 1;
  std::string out;
  CLI::Option* t_sim_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* trials_opt = nullptr;

  void add_to(CLI::App* app, bool dt_list = false) {
    app->add_option("--config", config, "Pipeline configuration file");
    t_sim_opt = app->add_option("--t-sim", t_sim, "Simulated seconds")->check(CLI::NonNegativeNumber);
    dt_opt = app->add_option("--dt", dt, dt_list ? "Tick lengths, e.g. 10,20,50ms" : "Tick length, e.g. 0.05 or 50ms");
    mode_opt = app->add_option("--mode", mode, "deterministic or realtime")
                   ->check(CLI::IsMember({"deterministic", "realtime"}));
    seed_opt = app->add_option("--seed", seed, "Global seed");
    threads_opt = app->add_option("--threads", threads, "Execution units")->check(CLI::PositiveNumber);
    trials_opt = app->add_option("--trials", trials, "Repetitions per measurement")->check(CLI::PositiveNumber);
    app->add_option("--out", out, "CSV output file");
  }

  void apply(sl::GlobalSettings& g) const {
    if (t_sim_opt->count()) g.t_sim = t_sim;
    if (dt_opt->count()) {
      const auto v = parse_durations(dt);
      if (v.size() != 1) throw SetupError("--dt takes a single value here");
      g.delta_t = v[0];
    }
    if (mode_opt->count()) g.mode = sl::parse_run_mode(mode);
    if (seed_opt->count()) {
      g.seed = seed;
    } else if (const char* env = std::getenv("SPIKELINK_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing text");
        g.seed = v;
      } catch (const std::exception&) {
        throw SetupError(std::string("SPIKELINK_SEED is not an unsigned integer: '") + env + "'");
      }
    }
    if (threads_opt->count()) g.threads = threads;
    if (trials_opt->count()) g.trials = trials;
  }

  sl::ConfigDocument load(const std::string& fallback) const {
    auto doc = sl::load_config(config.empty() ? fallback : config);
    apply(doc.global);
    return doc;
  }
};

void print_report(std::ostream& os, const sl::RunReport& r) {
  os << sl::kRunReportCsvHeader << '\n';
  sl::write_run_report_csv_row(os, r);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunArgs {
  Overrides common;
  std::string trace;
  std::string transcript;
  std::string frames;
};

int cmd_run(const RunArgs& a, const std::string& fallback_config, bool demo) {
  sl::Pipeline p = [&] {
    try {
      return sl::build_pipeline(a.common.load(fallback_config));
    } catch (const SetupError&) {
      throw;
    } catch (const std::exception& e) {
      throw SetupError(e.what());
    }
  }();
  if (!a.trace.empty() && p.robots.empty()) throw SetupError("--trace needs a robot stage in the config");
  for (const auto& r : p.robots) p.robot(r).set_tracing(!a.trace.empty());

  sl::Transcript tr;
  sl::RunOptions opt = p.options();
  opt.transcript = &tr;
  if (!a.frames.empty())
    for (std::size_t i = 0; i < p.graph.size(); ++i) opt.frame_stages.push_back(p.graph.stage(i).name());
  const sl::RunReport rep = p.run(opt);

  // Artifacts are written even for failed runs; they hold the partial run.
  if (!a.transcript.empty()) {
    auto f = open_out(a.transcript);
    sl::write_spike_transcript(f, tr);
  }
  if (!a.frames.empty()) {
    auto f = open_out(a.frames);
    sl::write_frame_transcript(f, tr);
  }
  if (!a.trace.empty()) {
    auto f = open_out(a.trace);
    sl::robo::write_pose_trace(f, p.robot(p.robots.front()).trace());
  }
  if (!a.common.out.empty()) {
    auto f = open_out(a.common.out);
    print_report(f, rep);
  }

  print_report(std::cout, rep);
  std::cout << "transcript_hash=" << std::hex << sl::transcript_hash(tr) << std::dec << '\n';
  for (const auto& name : p.robots) {
    const auto& w = p.robot(name);
    std::cout << name << ": path_length_m=" << w.path_length() << " collision_ticks=" << w.collision_ticks()
              << " final_pose=(" << w.state().x << ", " << w.state().y << ", " << w.state().heading << ")\n";
  }
  if (!rep.ok()) {
    std::cerr << "error: stage '" << *rep.failed_stage << "' failed: " << rep.failure << '\n';
    return kRuntimeError;
  }
  if (demo) {
    const auto& w = p.robot(p.robots.front());
    std::cout << (w.collision_ticks() == 0 ? "demo: no collisions\n" : "demo: robot collided\n");
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  Overrides common;
  std::string encoder;
  std::size_t n = 0;
  CLI::Option* n_opt = nullptr;
  std::size_t lo = 1000;
  std::size_t hi = 2000;
  std::size_t max_n = std::size_t{1} << 22;
  std::string rates = "0,10,20,40,80,160";
  int hops = 1;
  std::string dts;
  std::string counts = "1000,10000,100000";
};

bench::Scenario bench_scenario(const BenchArgs& a) {
  std::string tmpl = a.common.config;
  if (tmpl.empty()) {
    const std::string kind = a.encoder.empty() ? "rate" : a.encoder;
    tmpl = default_config("bench_" + std::string(bench::to_string(bench::parse_encoder_kind(kind))) + ".cfg");
  }
  sl::ConfigDocument doc = sl::load_config(tmpl);
  a.common.apply(doc.global);
  bench::Scenario s = bench::scenario_from_config(doc);
  if (!a.encoder.empty()) s.encoder = bench::parse_encoder_kind(a.encoder);
  if (a.n_opt->count()) s.n_neurons = a.n;
  if (s.n_neurons < 1) throw SetupError("--n must be >= 1");
  return s;
}

void emit(const BenchArgs& a, const std::vector<bench::BenchRecord>& rows) {
  bench::print_table(std::cout, rows);
  if (!a.common.out.empty()) {
    auto f = open_out(a.common.out);
    bench::write_bench_csv(f, rows);
  }
}

int cmd_bench(const std::string& which, const BenchArgs& a) {
  bench::Scenario s;
  std::vector<double> dts;
  try {
    if (which != "latency") s = bench_scenario(a);
    if (which == "latency" || which == "overhead") {
      if (a.common.dt_opt->count()) {
        dts = parse_durations(a.common.dt);
      } else if (!a.dts.empty()) {
        dts = parse_durations(a.dts);
      } else {
        dts = {0.001, 0.005, 0.01, 0.05};
      }
    }
  } catch (const SetupError&) {
    throw;
  } catch (const std::exception& e) {
    throw SetupError(e.what());
  }

  if (which == "rtf") {
    s.name = "rtf";
    const auto r = bench::measure_rtf(s);
    emit(a, r.rows());
    std::cout << "rtf_mean=" << r.mean.rtf << " rtf_stddev=" << r.rtf_stddev << '\n';
  } else if (which == "limit") {
    bench::LimitOptions lo;
    lo.max_n = a.max_n;
    const auto r = bench::measure_limit(s, a.lo, a.hi, lo);
    emit(a, {r.record});
    std::cout << "n_limit=" << r.search.n_limit << " probes=" << r.search.probes
              << (r.search.capped ? " (capped at --max-n)" : "") << '\n';
  } else if (which == "bandwidth") {
    const auto pts = bench::measure_bandwidth(s, parse_numbers(a.rates, "--rates"));
    std::vector<bench::BenchRecord> rows;
    for (const auto& p : pts) {
      rows.push_back(p.record);
      std::cout << "rate_hz=" << p.record.rate_hz << " throughput_spikes_per_s=" << p.throughput << '\n';
    }
    emit(a, rows);
  } else if (which == "latency") {
    bench::LatencyOptions o;
    o.hops = a.hops;
    if (a.common.mode_opt->count()) o.mode = sl::parse_run_mode(a.common.mode);
    if (a.common.trials_opt->count()) o.trials = a.common.trials;
    const auto r = bench::measure_latency(dts, o);
    emit(a, r.records);
    if (r.fitted) std::cout << "fit: slope=" << r.fit.slope << " intercept_s=" << r.fit.intercept
                            << " r2=" << r.fit.r_squared << '\n';
  } else if (which == "overhead") {
    const auto r = bench::sweep_overhead(s, dts, parse_counts(a.counts));
    emit(a, r.records);
    std::cout << "borders:";
    for (std::size_t i = 0; i < r.delta_ts.size(); ++i) std::cout << ' ' << r.delta_ts[i] << "s->" << r.borders[i];
    std::cout << (r.monotone ? " (non-decreasing)\n" : " (not monotone)\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikelink: spiking sensor-motor pipelines, benchmarks and a robot demo"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Build and run a pipeline config");
  run_args.common.add_to(run);
  run->add_option("--trace", run_args.trace, "Pose trace CSV of the first robot stage");
  run->add_option("--transcript", run_args.transcript, "Spike transcript CSV");
  run->add_option("--frames", run_args.frames, "Continuous-frame transcript CSV");

  auto* bench_cmd = app.add_subcommand("bench", "Measurement suite");
  bench_cmd->require_subcommand(1);
  // One argument set per bench subcommand so option handles stay distinct.
  std::vector<std::pair<std::string, CLI::App*>> bench_subs;
  std::map<std::string, BenchArgs> bench_args;
  for (const char* name_c : {"rtf", "limit", "bandwidth", "latency", "overhead"}) {
    const std::string name = name_c;
    auto* sub = bench_cmd->add_subcommand(name);
    bench_subs.emplace_back(name, sub);
    BenchArgs& b = bench_args[name];
    b.common.add_to(sub, name == "latency" || name == "overhead");
    sub->add_option("--encoder", b.encoder, "rate, poisson or nef")
        ->check(CLI::IsMember({"rate", "regular", "poisson", "nef"}));
    b.n_opt = sub->add_option("--n", b.n, "Encoder neurons");
    sub->add_option("--lo", b.lo, "Limit search: lower bracket");
    sub->add_option("--hi", b.hi, "Limit search: upper bracket");
    sub->add_option("--max-n", b.max_n, "Limit search: largest size probed");
    sub->add_option("--rates", b.rates, "Bandwidth: firing rates in Hz");
    sub->add_option("--hops", b.hops, "Latency: buffered hops")->check(CLI::PositiveNumber);
    sub->add_option("--dts", b.dts, "Tick lengths, e.g. 1,5,10,50ms");
    sub->add_option("--counts", b.counts, "Overhead: neuron counts");
  }

  RunArgs demo_args;
  auto* demo = app.add_subcommand("demo", "Closed-loop demos");
  demo->require_subcommand(1);
  auto* braitenberg = demo->add_subcommand("braitenberg", "Braitenberg explorer in the shipped arena");
  demo_args.common.add_to(braitenberg);
  braitenberg->add_option("--trace", demo_args.trace, "Pose trace CSV");
  braitenberg->add_option("--transcript", demo_args.transcript, "Spike transcript CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) {
      if (run_args.common.config.empty()) throw SetupError("run needs --config");
      return cmd_run(run_args, run_args.common.config, false);
    }
    if (braitenberg->parsed()) return cmd_run(demo_args, default_config("braitenberg.cfg"), true);
    for (auto& [name, sub] : bench_subs)
      if (sub->parsed()) return cmd_bench(name, bench_args.at(name));
  } catch (const SetupError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const sl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
