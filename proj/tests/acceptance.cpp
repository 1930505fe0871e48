// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Reference values are computed here, independently
// of the library helpers they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spikelink/spikelink.hpp"

using namespace spikelink;
using namespace spikelink::stages;
namespace bn = spikelink::bench;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += "[FAILED: " + what + "] ";
    }
  }
  void note(const std::string& s) { detail += s + "; "; }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_path(const std::string& name) { return std::string(SPIKELINK_CONFIG_DIR) + "/" + name; }

// --- independent reference computations -----------------------------------

double ref_mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double ref_cv(const std::vector<double>& x) {
  const double m = ref_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / (x.size() - 1)) / m;
}

// Kolmogorov distance between the sample and Exp(rate), with the asymptotic
// 1% critical value 1.628 / sqrt(n).
std::pair<double, double> ref_ks_exponential(std::vector<double> x, double rate) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = 1.0 - std::exp(-rate * x[i]);
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return {d, 1.628 / std::sqrt(n)};
}

std::vector<double> ref_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double ref_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = ref_mean(x), my = ref_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double ref_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return ref_pearson(ref_ranks(x), ref_ranks(y));
}

// Ordinary least squares y = a + b x; returns (b, R^2).
std::pair<double, double> ref_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = ref_mean(x), my = ref_mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += std::pow(y[i] - (a + b * x[i]), 2);
    ss_tot += std::pow(y[i] - my, 2);
  }
  return {b, ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot};
}

// --- 1. NEF reconstruction -------------------------------------------------

Outcome nef_reconstruction() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NefConfig c;
    c.dim = 1;
    c.n_neurons = 100;
    c.seed = seed;
    const auto pop = nef_build(c);
    const Matrix grid = nef_default_grid(1, 500);
    const Matrix phi = nef_train_decoders(pop, grid, nef_default_reg(c));
    // Reconstruction error from the tuning curves and decoders directly.
    double ss = 0.0;
    for (std::size_t i = 0; i < grid.rows(); ++i) {
      const double x = grid(i, 0);
      const auto a = pop.rates(std::vector<double>{x});
      double xhat = 0.0;
      for (std::size_t n = 0; n < a.size(); ++n) xhat += a[n] * phi(n, 0);
      ss += (xhat - x) * (xhat - x);
    }
    errors.push_back(std::sqrt(ss / grid.rows()));
  }
  const double elapsed = seconds_since(t0);
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const double median = (sorted[4] + sorted[5]) / 2.0;
  o.note("rmse(seed 0) = " + fmt(errors[0]) + ", max = " + fmt(sorted.back()) + ", median = " + fmt(median) +
         ", " + fmt(elapsed, 3) + " s");
  o.require(errors[0] <= 0.02, "rmse <= 0.02");
  o.require(sorted.back() <= 0.02, "every seed rmse <= 0.02");
  o.require(median <= 0.015, "median rmse <= 0.015");
  o.require(elapsed < 10.0, "runtime < 10 s");
  return o;
}

// --- 2. Encoder statistics --------------------------------------------------

template <class Encoder>
std::vector<double> spike_times(Encoder& enc, double input, double dt, std::int64_t ticks) {
  std::vector<double> times;
  ContinuousFrame f;
  f.values = {input};
  SpikeBatch b;
  for (std::int64_t k = 0; k < ticks; ++k) {
    enc.step_into(f, SimClock(dt, k), b);
    for (const auto& e : b.events) times.push_back(e.time);
  }
  return times;
}

std::vector<double> intervals(const std::vector<double>& t) {
  std::vector<double> d;
  for (std::size_t i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
  return d;
}

Outcome encoder_statistics() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();

  RateEncoderParams p;
  p.v_min = 10.0;
  p.v_max = 90.0;
  p.n_neurons = 1;
  const double input = 0.35;
  const double rate = p.v_min + (p.v_max - p.v_min) * (1.0 + input) / 2.0;  // 64 Hz

  RegularEncoder reg(p);
  const auto isi = intervals(spike_times(reg, input, 0.01, 3000));
  double max_rel = 0.0;
  for (double d : isi) max_rel = std::max(max_rel, std::abs(d * rate - 1.0));
  const double cv_reg = ref_cv(isi);
  o.note("regular: " + std::to_string(isi.size()) + " ISIs, max rel err " + fmt(max_rel) + ", CV " + fmt(cv_reg));
  o.require(isi.size() > 1000, "enough regular ISIs");
  o.require(max_rel < 1e-6, "regular ISI rel err < 1e-6");
  o.require(cv_reg < 1e-9, "regular CV < 1e-9");

  PoissonEncoder poi(p, 20240917);
  // 5% more simulated time than 1e5 mean ISIs, then keep the first 1e5.
  auto pisi = intervals(spike_times(poi, input, 0.05, static_cast<std::int64_t>(1.05e5 / rate / 0.05)));
  if (pisi.size() > 100000) pisi.resize(100000);
  const auto [d, crit] = ref_ks_exponential(pisi, rate);
  const double cv_poi = ref_cv(pisi);
  o.note("poisson: " + std::to_string(pisi.size()) + " ISIs, KS D " + fmt(d) + " (crit " + fmt(crit) + "), CV " +
         fmt(cv_poi));
  o.require(pisi.size() == 100000, "1e5 Poisson ISIs");
  o.require(d <= crit, "KS at alpha 0.01");
  o.require(cv_poi >= 0.95 && cv_poi <= 1.05, "Poisson CV in [0.95, 1.05]");

  const double elapsed = seconds_since(t0);
  o.note(fmt(elapsed, 3) + " s");
  o.require(elapsed < 30.0, "runtime < 30 s");
  return o;
}

// --- 3. Parrot fidelity -----------------------------------------------------

RateEncoderParams rate_params(std::size_t n, double v_min, double v_max) {
  RateEncoderParams p;
  p.n_neurons = n;
  p.v_min = v_min;
  p.v_max = v_max;
  return p;
}

Transcript parrot_run(int parrot_delay /* < 0: no parrot */) {
  StageGraph g(0.02);
  g.emplace_stage<SineSource>("src", 30, 0.9, 1.1);
  g.emplace_stage<PoissonEncoderStage>("enc", rate_params(30, 0.0, 80.0), 11);
  g.emplace_stage<DecoderStage>("dec", LinearReadout::uniform(30, 1), 0.05);
  g.emplace_stage<ProbeStage>("probe", 1);
  g.connect("src", "out", "enc", "in");
  if (parrot_delay >= 0) {
    g.emplace_stage<ParrotStage>("net", 30, parrot_delay);
    g.connect("enc", "out", "net", "in");
    g.connect("net", "out", "dec", "in");
  } else {
    g.connect("enc", "out", "dec", "in");
  }
  g.connect("dec", "out", "probe", "in");
  Transcript t;
  RunOptions opt;
  opt.transcript = &t;
  opt.frame_stages = {"dec"};
  g.run(5.0, opt).throw_if_failed();
  return t;
}

// Smallest shift s with via[k] == direct[k - s] for every k >= s and zeros before.
// A repeat delay re-times spikes by t + delay*dt, so those frames agree only
// up to rounding; tol = 0 demands bit equality.
int frame_shift(const std::vector<TranscriptFrame>& direct, const std::vector<TranscriptFrame>& via,
                double tol = 0.0) {
  auto close = [tol](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(std::abs(a[i] - b[i]) <= tol)) return false;
    return true;
  };
  for (int s = 0; s < 5; ++s) {
    bool ok = via.size() == direct.size();
    for (std::size_t k = 0; ok && k < via.size(); ++k) {
      if (k < static_cast<std::size_t>(s)) {
        ok = via[k].values == std::vector<double>(via[k].values.size(), 0.0);
      } else {
        ok = close(via[k].values, direct[k - s].values);
      }
    }
    if (ok) return s;
  }
  return -1;
}

Outcome parrot_fidelity() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();

  const Transcript direct = parrot_run(-1);
  const Transcript hop = parrot_run(0);
  const Transcript repeat = parrot_run(1);
  const auto df = direct.frames_of("dec");
  double energy = 0.0;
  for (const auto& f : df) energy += std::abs(f.values[0]);
  const int shift_hop = frame_shift(df, hop.frames_of("dec"));
  const int shift_repeat = frame_shift(df, repeat.frames_of("dec"), 1e-12);
  o.note("decoder shift via zero-delay parrot = " + std::to_string(shift_hop) +
         " tick, via default parrot (delay 1) = " + std::to_string(shift_repeat) + " ticks");
  o.require(energy > 1.0, "non-trivial decoder output");
  o.require(shift_hop == 1, "zero-delay parrot shifts decoder transcript by exactly one tick");
  o.require(shift_repeat == 2, "default parrot adds its repeat tick");

  // The parrot re-emits the encoder's spikes unchanged, one tick later.
  // Spikes of the final tick have not crossed the hop when the run ends.
  auto enc = hop.events_of("enc");
  const auto net = hop.events_of("net");
  const std::int64_t last = static_cast<std::int64_t>(df.size()) - 1;
  std::erase_if(enc, [&](const TranscriptEvent& e) { return e.tick == last; });
  bool same = !enc.empty() && enc.size() == net.size();
  for (std::size_t i = 0; same && i < enc.size(); ++i)
    same = net[i].tick == enc[i].tick + 1 && net[i].neuron == enc[i].neuron && net[i].time == enc[i].time;
  o.require(same, "parrot spike transcript equals encoder transcript shifted by one tick");

  // Conservation: 1000 regular neurons at 100 Hz for exactly 10 s, then silent.
  StageGraph g(0.05);
  g.emplace_stage<StepSource>("src", 1000, 1.0, -1.0, 199);
  g.emplace_stage<RegularEncoderStage>("enc", rate_params(1000, 0.0, 100.0));
  g.emplace_stage<ParrotStage>("net", 1000);
  g.emplace_stage<DecoderStage>("dec", LinearReadout::uniform(1000, 1), 0.03);
  g.emplace_stage<ProbeStage>("probe", 1);
  g.connect("src", "out", "enc", "in");
  g.connect("enc", "out", "net", "in");
  g.connect("net", "out", "dec", "in");
  g.connect("dec", "out", "probe", "in");
  Transcript t;
  RunOptions opt;
  opt.transcript = &t;
  const auto rep = g.run(10.5, opt);
  rep.throw_if_failed();
  auto in = t.events_of("enc");
  auto out = t.events_of("net");
  o.note("conservation run: " + std::to_string(in.size()) + " spikes in, " + std::to_string(out.size()) + " out");
  o.require(in.size() == 1000000, "exactly 1e6 encoder spikes");
  o.require(out.size() == in.size(), "spike count conserved");
  auto key = [](const TranscriptEvent& e) { return std::make_pair(e.neuron, e.time); };
  auto by_key = [&](const TranscriptEvent& a, const TranscriptEvent& b) { return key(a) < key(b); };
  std::sort(in.begin(), in.end(), by_key);
  std::sort(out.begin(), out.end(), by_key);
  bool multiset = in.size() == out.size();
  for (std::size_t i = 0; multiset && i < in.size(); ++i)
    multiset = in[i].neuron == out[i].neuron && std::abs(out[i].time - in[i].time - 0.05) < 1e-9;
  o.require(multiset, "every spike re-emitted once, one repeat delay later");

  const double elapsed = seconds_since(t0);
  o.note(fmt(elapsed, 3) + " s");
  o.require(elapsed < 60.0, "runtime < 60 s");
  return o;
}

// --- 4. Latency law ---------------------------------------------------------

Outcome latency_law() {
  Outcome o;
  const std::vector<double> dts{0.001, 0.005, 0.01, 0.05};
  for (int h : {1, 2, 3}) {
    bn::LatencyOptions lo;
    lo.hops = h;
    const auto r = bn::measure_latency(dts, lo);
    std::vector<double> x, y;
    bool exact = r.records.size() == dts.size();
    for (const auto& rec : r.records) {
      exact = exact && rec.latency && *rec.latency == h * rec.delta_t;
      x.push_back(rec.delta_t);
      y.push_back(rec.latency.value_or(-1.0));
    }
    const auto [slope, r2] = ref_fit(x, y);
    o.note("H=" + std::to_string(h) + ": slope " + fmt(slope, 10) + ", R^2 " + fmt(r2, 10));
    o.require(exact, "latency == H*dt for H=" + std::to_string(h));
    o.require(std::abs(slope - h) < 1e-9, "slope == H");
    o.require(r2 > 0.999, "R^2 > 0.999");
  }
  return o;
}

// --- 5. RTF accounting ------------------------------------------------------

Outcome rtf_accounting() {
  Outcome o;
  double worst = 0.0;
  std::size_t runs = 0;
  auto check = [&](double rtf, double t_run, double t_sim) {
    worst = std::max(worst, std::abs(rtf * t_run - t_sim) / t_sim);
    ++runs;
  };
  for (auto kind : {bn::EncoderKind::rate, bn::EncoderKind::poisson, bn::EncoderKind::nef}) {
    bn::Scenario s;
    s.encoder = kind;
    s.n_neurons = 500;
    s.t_sim = 1.0;
    s.trials = 3;
    for (const auto& rec : bn::measure_rtf(s).rows()) check(rec.rtf, rec.t_run, rec.t_sim);
  }
  auto p = build_pipeline(load_config(config_path("braitenberg.cfg")));
  const auto rep = p.run();
  check(rep.rtf(), rep.t_run, rep.t_sim);
  o.note(std::to_string(runs) + " runs, worst |rtf*t_run - t_sim|/t_sim = " + fmt(worst));
  o.require(worst <= 1e-9, "rtf * t_run == t_sim");

  bn::Scenario rt;
  rt.n_neurons = 10;
  rt.delta_t = 0.01;
  rt.t_sim = 10.0;
  rt.trials = 1;
  rt.mode = RunMode::realtime;
  const auto paced = bn::measure_rtf(rt, false).mean;
  o.note("realtime trivial graph over 10 s: rtf " + fmt(paced.rtf, 6));
  o.require(paced.rtf >= 0.98 && paced.rtf <= 1.02, "paced rtf in [0.98, 1.02]");
  return o;
}

// --- shared limit measurements (criteria 6 and 7) ---------------------------

bn::Scenario limit_scenario(bn::EncoderKind kind) {
  bn::Scenario s;
  s.encoder = kind;
  s.delta_t = 0.01;
  s.t_sim = 0.5;
  s.trials = 1;
  return s;
}

std::map<bn::EncoderKind, bn::LimitRun>& limits() {
  static std::map<bn::EncoderKind, bn::LimitRun> cache;
  return cache;
}

const bn::LimitRun& limit_of(bn::EncoderKind kind) {
  auto& c = limits();
  if (!c.count(kind)) c.emplace(kind, bn::measure_limit(limit_scenario(kind), 1000, 2000));
  return c.at(kind);
}

// --- 6. Bandwidth trend -----------------------------------------------------

Outcome bandwidth_trend() {
  Outcome o;
  const std::size_t n = limit_of(bn::EncoderKind::rate).search.n_limit;
  bn::Scenario s = limit_scenario(bn::EncoderKind::rate);
  s.n_neurons = n;
  const std::vector<double> rates{0, 20, 40, 80, 120, 160};
  const auto pts = bn::measure_bandwidth(s, rates);
  std::vector<double> rtf;
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rtf.push_back(pts[i].record.rtf);
    const double expect = static_cast<double>(n) * rates[i];
    if (expect > 0) worst = std::max(worst, std::abs(pts[i].throughput - expect) / expect);
    o.require(expect > 0 || pts[i].throughput == 0.0, "no spikes at 0 Hz");
  }
  const double rho = ref_spearman(rates, rtf);
  std::string curve;
  for (std::size_t i = 0; i < rates.size(); ++i) curve += fmt(rates[i]) + "Hz:" + fmt(rtf[i], 3) + " ";
  o.note("n = " + std::to_string(n) + ", rtf " + curve + ", Spearman rho " + fmt(rho));
  o.note("throughput vs n*rate worst rel err " + fmt(worst));
  o.require(rho <= 0.0, "Spearman rho <= 0");
  o.require(worst <= 0.05, "throughput within 5% of n*rate");

  // Reported counts against a transcript of the same scenario.
  bn::Scenario small = limit_scenario(bn::EncoderKind::rate);
  small.n_neurons = 5000;
  double worst_tr = 0.0;
  for (double hz : {20.0, 80.0}) {
    bn::set_rate(small, hz);
    const auto reported = bn::measure_bandwidth(small, {hz}).front();
    auto pipe = build_pipeline(bn::scenario_document(small));
    Transcript t;
    RunOptions opt = pipe.options();
    opt.transcript = &t;
    pipe.run(opt).throw_if_failed();
    const double counted = static_cast<double>(t.events_of("enc").size()) / small.t_sim;
    worst_tr = std::max(worst_tr, std::abs(reported.throughput - counted) / counted);
  }
  o.note("throughput vs transcript count worst rel err " + fmt(worst_tr));
  o.require(worst_tr <= 0.05, "throughput matches transcript counts within 5%");
  return o;
}

// --- 7. Scalability ordering ------------------------------------------------

Outcome scalability_ordering() {
  Outcome o;
  const auto& rate = limit_of(bn::EncoderKind::rate);
  const auto& poisson = limit_of(bn::EncoderKind::poisson);
  const auto& nef = limit_of(bn::EncoderKind::nef);
  o.note("limits at dt 10 ms: rate " + std::to_string(rate.search.n_limit) + " (" +
         std::to_string(rate.search.probes) + " probes), poisson " + std::to_string(poisson.search.n_limit) + " (" +
         std::to_string(poisson.search.probes) + "), nef " + std::to_string(nef.search.n_limit) + " (" +
         std::to_string(nef.search.probes) + ")");
  o.require(!rate.search.capped && !poisson.search.capped, "searches not capped");
  o.require(rate.search.n_limit > nef.search.n_limit, "n(rate) > n(nef)");
  o.require(poisson.search.n_limit > nef.search.n_limit, "n(poisson) > n(nef)");

  double worst_err = 0.0, worst_excess = -1e9;
  for (double k : {1e3, 3e4, 1e6, 5e7}) {
    std::size_t calls = 0;
    const bn::RtfProbe oracle = [&](std::size_t n) {
      ++calls;
      return k / static_cast<double>(n);
    };
    bn::LimitOptions lo;
    lo.max_n = std::size_t{1} << 32;
    const auto r = bn::find_realtime_limit(oracle, 1, 2, lo);
    worst_err = std::max(worst_err, std::abs(static_cast<double>(r.n_limit) - k) / k);
    worst_excess = std::max(worst_excess, static_cast<double>(calls) - (std::log2(k) + std::log2(10.0)));
    o.require(k / static_cast<double>(r.n_limit) >= 1.0, "oracle limit is real-time capable");
  }
  o.note("synthetic oracle: worst rel err " + fmt(worst_err) + ", probes minus log2(k/0.1) at most " +
         fmt(worst_excess));
  o.require(worst_err <= 0.10, "oracle error <= 10%");
  o.require(worst_excess <= 4.0, "probe count logarithmic");
  return o;
}

// --- 8. Overhead trend ------------------------------------------------------

Outcome overhead_trend() {
  Outcome o;
  bn::Scenario s;
  s.encoder = bn::EncoderKind::rate;
  s.t_sim = 0.2;
  s.trials = 1;
  const std::vector<std::size_t> counts{10000, 30000, 100000, 300000, 1000000};
  const auto r = bn::sweep_overhead(s, {0.001, 0.005, 0.01, 0.05}, counts);
  std::string b;
  bool monotone = true;
  for (std::size_t i = 0; i < r.delta_ts.size(); ++i) {
    // Border recomputed from the raw grid: largest count with mean rtf >= 1.
    std::size_t border = 0;
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (r.mean_rtf[i][j] >= 1.0) border = std::max(border, counts[j]);
    o.require(border == r.borders[i], "reported border matches grid");
    if (i > 0) monotone = monotone && r.borders[i] >= r.borders[i - 1];
    b += fmt(r.delta_ts[i] * 1000) + "ms:" + std::to_string(r.borders[i]) + " ";
  }
  o.note("borders " + b);
  o.require(monotone, "border non-decreasing in dt");
  o.require(r.borders.back() > r.borders.front(), "border grows across the dt range");
  return o;
}

// --- 9. Braitenberg demo ----------------------------------------------------

Outcome braitenberg_demo() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto doc = load_config(config_path("braitenberg.cfg"));
  auto p = build_pipeline(doc);
  const auto rep = p.run();
  const double elapsed = seconds_since(t0);
  rep.throw_if_failed();
  const auto& w = p.robot(p.robots.front());
  o.note("seed " + std::to_string(doc.global.seed) + ", " + std::to_string(rep.ticks) + " ticks at " +
         fmt(1.0 / doc.global.delta_t) + " Hz, collisions " + std::to_string(w.collision_ticks()) + ", path " +
         fmt(w.path_length()) + " m, " + fmt(elapsed, 3) + " s");
  o.require(doc.global.mode == RunMode::deterministic, "deterministic mode");
  o.require(rep.ticks == 1200 && std::abs(rep.t_sim - 60.0) < 1e-9, "60 s at 20 Hz");
  o.require(w.collision_ticks() == 0, "zero collisions");
  o.require(w.path_length() >= 5.0, "path length >= 5 m");
  o.require(elapsed < 60.0, "runtime < 60 s");
  return o;
}

// --- 10. Determinism --------------------------------------------------------

std::pair<std::string, std::string> artifacts(const std::string& cfg, double t_sim) {
  auto doc = load_config(config_path(cfg));
  doc.global.t_sim = t_sim;
  auto p = build_pipeline(doc);
  for (const auto& r : p.robots) p.robot(r).set_tracing(true);
  Transcript t;
  RunOptions opt = p.options();
  opt.transcript = &t;
  for (std::size_t i = 0; i < p.graph.size(); ++i) opt.frame_stages.push_back(p.graph.stage(i).name());
  p.run(opt).throw_if_failed();
  std::ostringstream spikes, poses;
  write_spike_transcript(spikes, t);
  write_frame_transcript(spikes, t);
  for (const auto& r : p.robots) robo::write_pose_trace(poses, p.robot(r).trace());
  return {spikes.str(), poses.str()};
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::pair<std::string, double>> cases = {{"braitenberg.cfg", 60.0},
                                                             {"braitenberg_lif.cfg", 20.0},
                                                             {"bench_poisson.cfg", 2.0},
                                                             {"bench_rate.cfg", 2.0},
                                                             {"bench_nef.cfg", 2.0}};
  for (const auto& [cfg, t] : cases) {
    const auto a = artifacts(cfg, t);
    const auto b = artifacts(cfg, t);
    o.note(cfg + ": " + std::to_string(a.first.size()) + " transcript bytes, " + std::to_string(a.second.size()) +
           " pose bytes");
    o.require(a.first.size() > 1000, cfg + " transcript non-trivial");
    o.require(a.first == b.first, cfg + " transcripts byte-identical");
    o.require(a.second == b.second, cfg + " pose traces byte-identical");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"NEF reconstruction", nef_reconstruction},
      {"Encoder statistics", encoder_statistics},
      {"Parrot fidelity", parrot_fidelity},
      {"Latency law", latency_law},
      {"RTF accounting", rtf_accounting},
      {"Bandwidth trend", bandwidth_trend},
      {"Scalability ordering", scalability_ordering},
      {"Overhead trend", overhead_trend},
      {"Braitenberg demo", braitenberg_demo},
      {"Determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail += std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
