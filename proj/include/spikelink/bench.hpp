#pragma once

// Measurement harness: real-time factor, real-time limit search, bandwidth,
// latency and the tick x neurons overhead grid.
//
// Capability measurements (rtf, limit, bandwidth, overhead) run unpaced, so
// rtf > 1 means the pipeline could keep up with that much headroom. Realtime
// mode is used for pacing and wall-clock latency measurements.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spikelink/build.hpp"
#include "spikelink/stats.hpp"

namespace spikelink::bench {

class BracketInvalid : public Error {
 public:
  using Error::Error;
};

class NoResponse : public Error {
 public:
  using Error::Error;
};

enum class EncoderKind { rate, poisson, nef };

inline const char* to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::rate: return "rate";
    case EncoderKind::poisson: return "poisson";
    case EncoderKind::nef: return "nef";
  }
  return "?";
}

inline EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "rate" || s == "regular") return EncoderKind::rate;
  if (s == "poisson") return EncoderKind::poisson;
  if (s == "nef") return EncoderKind::nef;
  throw BadParameter("unknown encoder kind '" + s + "' (rate, poisson, nef)");
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct BenchRecord {
  std::string scenario;
  std::string encoder;
  std::size_t n_neurons = 0;
  double rate_hz = 0.0;
  double delta_t = 0.0;
  std::string trial;  // index or "mean"
  double t_build = 0.0;
  double t_run = 0.0;
  double t_sim = 0.0;
  double rtf = 0.0;
  std::optional<double> latency;
  std::uint64_t spikes = 0;
};

inline const char* kBenchCsvHeader =
    "scenario,encoder,n_neurons,rate_hz,delta_t_s,trial,t_build_s,t_run_s,t_sim_s,rtf,latency_s,spikes";

inline void write_bench_row(std::ostream& out, const BenchRecord& r) {
  using detail::format_double;
  out << r.scenario << ',' << r.encoder << ',' << r.n_neurons << ',' << format_double(r.rate_hz) << ','
      << format_double(r.delta_t) << ',' << r.trial << ',' << format_double(r.t_build) << ','
      << format_double(r.t_run) << ',' << format_double(r.t_sim) << ',' << format_double(r.rtf) << ','
      << (r.latency ? format_double(*r.latency) : std::string()) << ',' << r.spikes << '\n';
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kBenchCsvHeader << '\n';
  for (const auto& r : records) write_bench_row(out, r);
}

inline void print_table(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << std::left << std::setw(10) << "scenario" << std::setw(9) << "encoder" << std::right << std::setw(10)
      << "neurons" << std::setw(9) << "rate_hz" << std::setw(9) << "dt_s" << std::setw(7) << "trial"
      << std::setw(11) << "t_run_s" << std::setw(11) << "rtf" << std::setw(11) << "latency_s" << std::setw(12)
      << "spikes" << '\n';
  for (const auto& r : records) {
    out << std::left << std::setw(10) << r.scenario << std::setw(9) << r.encoder << std::right << std::setw(10)
        << r.n_neurons << std::setw(9) << std::setprecision(4) << r.rate_hz << std::setw(9) << r.delta_t
        << std::setw(7) << r.trial << std::setw(11) << std::setprecision(5) << r.t_run << std::setw(11) << r.rtf
        << std::setw(11);
    if (r.latency)
      out << *r.latency;
    else
      out << "-";
    out << std::setw(12) << r.spikes << '\n';
  }
}

// Mean row over trial rows. rtf is t_sim / mean(t_run) so the row obeys the
// same accounting identity as the trials.
inline BenchRecord aggregate(const std::vector<BenchRecord>& trials) {
  if (trials.empty()) throw BadParameter("aggregate: no trials");
  BenchRecord a = trials.front();
  a.trial = "mean";
  std::vector<double> build, run, lat;
  double spikes = 0.0;
  for (const auto& r : trials) {
    build.push_back(r.t_build);
    run.push_back(r.t_run);
    if (r.latency) lat.push_back(*r.latency);
    spikes += static_cast<double>(r.spikes);
  }
  a.t_build = stats::mean(build);
  a.t_run = stats::mean(run);
  a.rtf = a.t_sim / a.t_run;
  a.latency = lat.empty() ? std::nullopt : std::optional<double>(stats::mean(lat));
  a.spikes = static_cast<std::uint64_t>(std::llround(spikes / static_cast<double>(trials.size())));
  return a;
}

// ---------------------------------------------------------------------------
// Scenario: constant source -> encoder -> parrot -> decoder -> probe
// ---------------------------------------------------------------------------

struct Scenario {
  std::string name = "rtf";
  EncoderKind encoder = EncoderKind::rate;
  std::size_t n_neurons = 1000;
  double v_min = 1.0;  // rate encoders
  double v_max = 2.0;
  double input = 0.0;  // constant source value in [-1, 1]
  double delta_t = 0.05;
  double t_sim = 10.0;
  std::uint64_t seed = 1;
  unsigned trials = 5;
  unsigned threads = 1;
  RunMode mode = RunMode::deterministic;
  std::size_t nef_train_max = 1000;  // larger NEF populations use an untrained readout
};

// Nominal per-neuron rate of the scenario's rate encoders.
inline double nominal_rate(const Scenario& s) {
  if (s.encoder == EncoderKind::nef) return 0.0;
  RateEncoderParams p{s.v_min, s.v_max, 1};
  return instantaneous_rate(p, s.input);
}

// Sets v_min = 0 and picks (v_max, input) so that the encoders fire at `hz`.
inline void set_rate(Scenario& s, double hz) {
  if (!(hz >= 0.0) || !std::isfinite(hz)) throw BadParameter("rate must be finite and >= 0");
  s.v_min = 0.0;
  s.v_max = std::max(hz, 1.0);
  s.input = 2.0 * hz / s.v_max - 1.0;
}

inline ConfigDocument scenario_document(const Scenario& s) {
  ConfigDocument doc;
  doc.global.delta_t = s.delta_t;
  doc.global.t_sim = s.t_sim;
  doc.global.mode = s.mode;
  doc.global.seed = s.seed;
  doc.global.threads = s.threads;
  doc.global.trials = s.trials;
  const std::string n = std::to_string(s.n_neurons);
  // The source is as wide as the encoder input so that its initial buffer
  // value already carries the input on the first tick.
  const std::string width = s.encoder == EncoderKind::nef ? "1" : n;
  doc.stages.push_back(
      make_section("src", "source", "constant", {{"width", width}, {"value", detail::format_double(s.input)}}));
  if (s.encoder == EncoderKind::nef) {
    doc.stages.push_back(make_section("enc", "encoder", "nef", {{"n_neurons", n}}));
  } else {
    doc.stages.push_back(make_section("enc", "encoder", s.encoder == EncoderKind::rate ? "regular" : "poisson",
                                      {{"n_neurons", n}, {"v_min", detail::format_double(s.v_min)},
                                       {"v_max", detail::format_double(s.v_max)}}));
  }
  doc.stages.push_back(make_section("net", "network", "parrot", {{"n_neurons", n}}));
  if (s.encoder == EncoderKind::nef) {
    doc.stages.push_back(make_section(
        "dec", "decoder", "nef",
        {{"population", "enc"}, {"decoders", s.n_neurons <= s.nef_train_max ? "auto" : "uniform"}}));
  } else {
    doc.stages.push_back(make_section("dec", "decoder", "linear", {{"n_neurons", n}, {"outputs", "1"}}));
  }
  doc.stages.push_back(make_section("probe", "sink", "probe", {{"width", "1"}}));
  doc.connections.push_back({"src", "out", "enc", "in"});
  doc.connections.push_back({"enc", "out", "net", "in"});
  doc.connections.push_back({"net", "out", "dec", "in"});
  doc.connections.push_back({"dec", "out", "probe", "in"});
  return doc;
}

// Reads the scenario parameters from a template config: the first encoder
// section gives kind, size and rates; a constant source gives the input.
inline Scenario scenario_from_config(const ConfigDocument& doc) {
  Scenario s;
  s.delta_t = doc.global.delta_t;
  s.t_sim = doc.global.t_sim;
  s.mode = doc.global.mode;
  s.seed = doc.global.seed;
  s.trials = doc.global.trials;
  s.threads = doc.global.threads;
  bool have_encoder = false;
  for (const auto& st : doc.stages) {
    if (st.kind == "source" && st.model == "constant") s.input = st.number("value");
    if (st.kind != "encoder" || have_encoder) continue;
    have_encoder = true;
    s.encoder = parse_encoder_kind(st.model);
    s.n_neurons = static_cast<std::size_t>(st.integer("n_neurons"));
    if (s.encoder != EncoderKind::nef) {
      s.v_min = st.number("v_min");
      s.v_max = st.number("v_max");
    }
  }
  if (!have_encoder) throw ConfigError("benchmark template has no encoder stage");
  return s;
}

struct TrialRun {
  BenchRecord record;
  RunReport report;
};

inline TrialRun run_trial(const Scenario& s, const std::string& trial, const RunOptions* override_opts = nullptr) {
  Pipeline p = build_pipeline(scenario_document(s));
  RunOptions opt = override_opts ? *override_opts : p.options();
  RunReport rep = p.run(opt);
  rep.throw_if_failed();
  BenchRecord r;
  r.scenario = s.name;
  r.encoder = to_string(s.encoder);
  r.n_neurons = s.n_neurons;
  r.delta_t = s.delta_t;
  r.trial = trial;
  r.t_build = rep.t_build;
  r.t_run = rep.t_run;
  r.t_sim = rep.t_sim;
  r.rtf = rep.rtf();
  r.spikes = rep.events_out("enc");
  r.rate_hz = s.encoder == EncoderKind::nef
                  ? static_cast<double>(r.spikes) / (static_cast<double>(s.n_neurons) * rep.t_sim)
                  : nominal_rate(s);
  return {std::move(r), std::move(rep)};
}

struct RtfResult {
  std::vector<BenchRecord> trials;
  BenchRecord mean;
  double rtf_stddev = 0.0;  // sample stddev of the per-trial rtf

  std::vector<BenchRecord> rows() const {
    auto out = trials;
    out.push_back(mean);
    return out;
  }
};

// One discarded warm-up run (optional), then `s.trials` timed runs. Every run
// rebuilds the graph; build time is reported separately from t_run.
inline RtfResult measure_rtf(const Scenario& s, bool warm_up = true) {
  if (s.trials < 1) throw BadParameter("trials must be >= 1");
  if (warm_up) run_trial(s, "warmup");
  RtfResult res;
  std::vector<double> rtfs;
  for (unsigned t = 0; t < s.trials; ++t) {
    res.trials.push_back(run_trial(s, std::to_string(t)).record);
    rtfs.push_back(res.trials.back().rtf);
  }
  res.mean = aggregate(res.trials);
  res.rtf_stddev = stats::stddev(rtfs);
  return res;
}

// ---------------------------------------------------------------------------
// Real-time limit search
// ---------------------------------------------------------------------------

using RtfProbe = std::function<double(std::size_t)>;

struct LimitOptions {
  double rel_window = 0.10;
  std::size_t max_n = std::size_t{1} << 22;
};

struct LimitResult {
  std::size_t n_limit = 0;
  std::size_t probes = 0;
  bool capped = false;  // hi reached max_n while still real-time capable
  std::vector<std::pair<std::size_t, double>> history;

  double rtf_at(std::size_t n) const {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
      if (it->first == n) return it->second;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

// Largest n with probe(n) >= 1. The bracket is validated first; while hi is
// still real-time capable it is doubled (up to max_n). Bisection stops once
// (hi - lo) <= rel_window * lo.
inline LimitResult find_realtime_limit(const RtfProbe& probe, std::size_t lo, std::size_t hi,
                                       const LimitOptions& opt = {}) {
  if (lo < 1 || hi <= lo) throw BracketInvalid("limit search: need 1 <= lo < hi");
  LimitResult res;
  auto eval = [&](std::size_t n) {
    const double r = probe(n);
    ++res.probes;
    res.history.emplace_back(n, r);
    return r;
  };
  if (eval(lo) < 1.0) throw BracketInvalid("limit search: rtf(lo = " + std::to_string(lo) + ") < 1");
  while (eval(hi) >= 1.0) {
    lo = hi;
    if (hi >= opt.max_n) {
      res.capped = true;
      res.n_limit = lo;
      return res;
    }
    hi = std::min(hi * 2, opt.max_n);
  }
  while (static_cast<double>(hi - lo) > opt.rel_window * static_cast<double>(lo) && hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (eval(mid) >= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  res.n_limit = lo;
  return res;
}

// Probe that measures the scenario's mean rtf at size n (no warm-up).
inline RtfProbe scenario_probe(Scenario s) {
  return [s](std::size_t n) mutable {
    s.n_neurons = n;
    return measure_rtf(s, false).mean.rtf;
  };
}

struct LimitRun {
  LimitResult search;
  BenchRecord record;  // aggregate row at n_limit
};

inline LimitRun measure_limit(Scenario s, std::size_t lo, std::size_t hi, const LimitOptions& opt = {}) {
  s.name = "limit";
  run_trial(s, "warmup");
  LimitRun out;
  out.search = find_realtime_limit(scenario_probe(s), lo, hi, opt);
  s.n_neurons = out.search.n_limit;
  out.record = measure_rtf(s, false).mean;
  return out;
}

// ---------------------------------------------------------------------------
// Bandwidth
// ---------------------------------------------------------------------------

struct BandwidthPoint {
  BenchRecord record;  // aggregate over trials
  double throughput = 0.0;  // encoder spikes per simulated second
};

inline std::vector<BandwidthPoint> measure_bandwidth(Scenario s, const std::vector<double>& rates_hz) {
  if (s.encoder == EncoderKind::nef) throw BadParameter("bandwidth sweep needs a rate or poisson encoder");
  s.name = "bandwidth";
  std::vector<BandwidthPoint> out;
  bool warmed = false;
  for (double hz : rates_hz) {
    set_rate(s, hz);
    const auto res = measure_rtf(s, !warmed);
    warmed = true;
    out.push_back({res.mean, static_cast<double>(res.mean.spikes) / res.mean.t_sim});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Latency: step source -> regular encoder (v_min = 0) -> H-1 zero-delay
// parrots -> decoder -> probe
// ---------------------------------------------------------------------------

struct LatencyOptions {
  int hops = 1;  // buffered hops from encoder to decoder
  RunMode mode = RunMode::deterministic;
  std::int64_t step_tick = 10;  // first tick the source emits the high value
  double v_max = 100.0;
  double tau_dec = 0.03;
  double threshold = 1e-3;  // decoder output counted as a response above this
  std::int64_t max_ticks = 100;
  unsigned trials = 1;
};

inline ConfigDocument latency_document(double delta_t, const LatencyOptions& o) {
  if (o.hops < 1) throw BadParameter("latency: hops must be >= 1");
  ConfigDocument doc;
  doc.global.delta_t = delta_t;
  doc.global.mode = o.mode;
  doc.global.t_sim = static_cast<double>(o.step_tick + o.max_ticks + 2) * delta_t;
  doc.stages.push_back(make_section(
      "src", "source", "step",
      {{"width", "1"}, {"low", "-1"}, {"high", "1"}, {"step_time", detail::format_double(static_cast<double>(o.step_tick) * delta_t)}}));
  doc.stages.push_back(make_section("enc", "encoder", "regular",
                                    {{"n_neurons", "1"}, {"v_min", "0"}, {"v_max", detail::format_double(o.v_max)}}));
  doc.connections.push_back({"src", "out", "enc", "in"});
  std::string prev = "enc";
  for (int h = 1; h < o.hops; ++h) {
    const std::string name = "hop" + std::to_string(h);
    doc.stages.push_back(make_section(name, "network", "parrot", {{"n_neurons", "1"}, {"delay_ticks", "0"}}));
    doc.connections.push_back({prev, "out", name, "in"});
    prev = name;
  }
  doc.stages.push_back(make_section("dec", "decoder", "linear",
                                    {{"n_neurons", "1"}, {"outputs", "1"}, {"phi", "1"},
                                     {"tau_dec", detail::format_double(o.tau_dec)}}));
  doc.stages.push_back(make_section("probe", "sink", "probe", {{"width", "1"}}));
  doc.connections.push_back({prev, "out", "dec", "in"});
  doc.connections.push_back({"dec", "out", "probe", "in"});
  return doc;
}

struct LatencySample {
  std::int64_t k_from = 0;  // tick the encoder first saw the step
  std::int64_t k_to = 0;    // tick the decoder output crossed the threshold
  double latency = 0.0;     // seconds
  RunReport report;
};

inline LatencySample latency_once(double delta_t, const LatencyOptions& o) {
  Pipeline p = build_pipeline(latency_document(delta_t, o));
  Transcript tr;
  RunOptions opt = p.options();
  opt.transcript = &tr;
  opt.frame_stages = {"dec"};
  opt.record_tick_times = true;
  LatencySample s;
  s.report = p.run(opt);
  s.report.throw_if_failed();
  const auto enc = tr.events_of("enc");
  if (enc.empty()) throw NoResponse("latency: encoder never responded to the step");
  s.k_from = enc.front().tick;
  bool found = false;
  for (const auto& f : tr.frames_of("dec")) {
    if (f.tick >= s.k_from && f.values[0] > o.threshold) {
      s.k_to = f.tick;
      found = true;
      break;
    }
  }
  if (!found || s.k_to - s.k_from > o.max_ticks)
    throw NoResponse("latency: no decoder response within " + std::to_string(o.max_ticks) + " ticks");
  if (o.mode == RunMode::deterministic) {
    s.latency = static_cast<double>(s.k_to - s.k_from) * delta_t;
  } else {
    s.latency = s.report.tick_done_wall[static_cast<std::size_t>(s.k_to)] - static_cast<double>(s.k_from) * delta_t;
  }
  return s;
}

struct LatencyResult {
  std::vector<BenchRecord> records;
  stats::LinearFit fit;  // latency vs delta_t over per-dt means
  bool fitted = false;
};

inline LatencyResult measure_latency(const std::vector<double>& delta_ts, const LatencyOptions& o) {
  LatencyResult res;
  std::vector<double> xs, ys;
  for (double dt : delta_ts) {
    std::vector<double> lat;
    for (unsigned t = 0; t < std::max(1u, o.trials); ++t) {
      const auto s = latency_once(dt, o);
      BenchRecord r;
      r.scenario = "latency";
      r.encoder = "rate";
      r.n_neurons = 1;
      r.rate_hz = o.v_max;
      r.delta_t = dt;
      r.trial = std::to_string(t);
      r.t_build = s.report.t_build;
      r.t_run = s.report.t_run;
      r.t_sim = s.report.t_sim;
      r.rtf = s.report.rtf();
      r.latency = s.latency;
      r.spikes = s.report.events_out("enc");
      res.records.push_back(r);
      lat.push_back(s.latency);
    }
    xs.push_back(dt);
    ys.push_back(stats::mean(lat));
  }
  if (xs.size() >= 2 && std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) != xs.end()) {
    res.fit = stats::linear_fit(xs, ys);
    res.fitted = true;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Overhead grid
// ---------------------------------------------------------------------------

struct OverheadResult {
  std::vector<BenchRecord> records;  // |delta_ts| x |counts| x trials
  std::vector<double> delta_ts;
  std::vector<std::size_t> borders;  // per delta_t: largest count with mean rtf >= 1, 0 if none
  bool monotone = true;              // borders non-decreasing in delta_t
  std::vector<std::vector<double>> mean_rtf;  // [dt][count]
};

inline OverheadResult sweep_overhead(Scenario s, std::vector<double> delta_ts, std::vector<std::size_t> counts) {
  if (delta_ts.empty() || counts.empty()) throw BadParameter("overhead: need delta_t values and neuron counts");
  std::sort(delta_ts.begin(), delta_ts.end());
  s.name = "overhead";
  OverheadResult res;
  res.delta_ts = delta_ts;
  run_trial(s, "warmup");
  for (double dt : delta_ts) {
    s.delta_t = dt;
    std::size_t border = 0;
    std::vector<double> row;
    for (std::size_t n : counts) {
      s.n_neurons = n;
      const auto r = measure_rtf(s, false);
      res.records.insert(res.records.end(), r.trials.begin(), r.trials.end());
      row.push_back(r.mean.rtf);
      if (r.mean.rtf >= 1.0) border = std::max(border, n);
    }
    res.mean_rtf.push_back(std::move(row));
    res.borders.push_back(border);
  }
  for (std::size_t i = 1; i < res.borders.size(); ++i)
    if (res.borders[i] < res.borders[i - 1]) res.monotone = false;
  return res;
}

}  // namespace spikelink::bench
