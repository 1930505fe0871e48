#pragma once

// Stage graph and tick scheduler.
//
// Every connection is a double buffer. During tick k each stage reads the
// front buffers of its inputs (written at tick k-1) and writes the back
// buffers of its outputs. A global barrier then swaps all buffers, so data
// crosses exactly one tick per hop regardless of stage order or thread count.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "spikelink/core.hpp"
#include "spikelink/csv.hpp"

namespace spikelink {

class UnknownStageKind : public Error {
 public:
  using Error::Error;
};
class PortMismatch : public Error {
 public:
  using Error::Error;
};
class CycleError : public Error {
 public:
  using Error::Error;
};
class NoPath : public Error {
 public:
  using Error::Error;
};

class StageFailure : public Error {
 public:
  StageFailure(std::string stage, std::string cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), cause_(std::move(cause)) {}
  const std::string& stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

enum class StageKind { source, adapter, encoder, decoder, network, sink };
enum class PortKind { continuous, event };
enum class PortDirection { in, out };
enum class RunMode { deterministic, realtime };

inline const char* to_string(StageKind k) {
  switch (k) {
    case StageKind::source: return "source";
    case StageKind::adapter: return "adapter";
    case StageKind::encoder: return "encoder";
    case StageKind::decoder: return "decoder";
    case StageKind::network: return "network";
    case StageKind::sink: return "sink";
  }
  return "?";
}

inline StageKind parse_stage_kind(const std::string& s) {
  if (s == "source") return StageKind::source;
  if (s == "adapter") return StageKind::adapter;
  if (s == "encoder") return StageKind::encoder;
  if (s == "decoder") return StageKind::decoder;
  if (s == "network") return StageKind::network;
  if (s == "sink") return StageKind::sink;
  throw UnknownStageKind("unknown stage kind '" + s + "'");
}

inline const char* to_string(RunMode m) { return m == RunMode::realtime ? "realtime" : "deterministic"; }

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "deterministic") return RunMode::deterministic;
  if (s == "realtime") return RunMode::realtime;
  throw Error("unknown run mode '" + s + "'");
}

struct PortSpec {
  std::string name;
  PortDirection direction = PortDirection::in;
  PortKind kind = PortKind::continuous;
  std::size_t width = 0;
  // Contents of the buffer before the producer's first write: empty means
  // zeros, one value fills the frame, otherwise the full frame.
  std::vector<double> initial;
};

struct StageDescriptor {
  std::string name;
  StageKind kind = StageKind::source;
  std::string model;
  std::vector<PortSpec> ports;
  int internal_delay_ticks = 0;
  // The robot world consumes the tick-k motor command and produces the tick
  // k+1 scan, so closed loops through it are legal.
  bool breaks_cycles = false;

  std::optional<std::size_t> port_index(const std::string& port) const {
    for (std::size_t i = 0; i < ports.size(); ++i)
      if (ports[i].name == port) return i;
    return std::nullopt;
  }
};

using Signal = std::variant<ContinuousFrame, SpikeBatch>;

inline Signal initial_signal(const PortSpec& p) {
  if (p.kind == PortKind::event) return SpikeBatch{-1, {}};
  ContinuousFrame f{-1, std::vector<double>(p.width, 0.0)};
  if (p.initial.size() == 1) {
    std::fill(f.values.begin(), f.values.end(), p.initial[0]);
  } else if (!p.initial.empty()) {
    if (p.initial.size() != p.width) throw PortMismatch("port '" + p.name + "': initial frame width");
    f.values = p.initial;
  }
  return f;
}

// Single-producer single-consumer tick buffer.
class TickPort {
 public:
  explicit TickPort(const PortSpec& spec) : slots_{initial_signal(spec), initial_signal(spec)} {}

  const Signal& front() const { return slots_[front_]; }
  Signal& back() { return slots_[1 - front_]; }
  const Signal& back() const { return slots_[1 - front_]; }

  // O(1) exchange; `tick` is the tick whose writes become readable.
  void swap(std::int64_t tick) {
    front_ = 1 - front_;
    front_generation_ = tick;
  }
  std::int64_t front_generation() const { return front_generation_; }

 private:
  Signal slots_[2];
  int front_ = 0;
  std::int64_t front_generation_ = -1;
};

struct Connection {
  std::size_t from_stage = 0;
  std::size_t from_port = 0;
  std::size_t to_stage = 0;
  std::size_t to_port = 0;
  std::unique_ptr<TickPort> buffer;
};

// Port access for one stage during one tick.
class StageIO {
 public:
  const ContinuousFrame& frame(std::size_t port) const { return std::get<ContinuousFrame>(read(port)); }
  const SpikeBatch& spikes(std::size_t port) const { return std::get<SpikeBatch>(read(port)); }
  ContinuousFrame& out_frame(std::size_t port) { return std::get<ContinuousFrame>(write(port)); }
  SpikeBatch& out_spikes(std::size_t port) { return std::get<SpikeBatch>(write(port)); }

  const Signal& read(std::size_t port) const {
    if (const TickPort* c = ports_[port].conn) {
#ifndef NDEBUG
      // Barrier check: the front must hold exactly the previous tick's writes.
      assert(c->front_generation() == tick_ - 1);
#endif
      return c->front();
    }
    return ports_[port].own;
  }

  Signal& write(std::size_t port) {
    if (TickPort* c = ports_[port].conn) return c->back();
    return ports_[port].own;
  }

  const Signal& written(std::size_t port) const {
    if (const TickPort* c = ports_[port].conn) return c->back();
    return ports_[port].own;
  }

 private:
  friend class StageGraph;
  struct Slot {
    TickPort* conn = nullptr;
    Signal own;  // default input or scratch output for unconnected ports
  };
  std::vector<Slot> ports_;
  std::int64_t tick_ = 0;
};

class Stage {
 public:
  explicit Stage(StageDescriptor desc) : desc_(std::move(desc)) {}
  virtual ~Stage() = default;
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;

  const StageDescriptor& descriptor() const { return desc_; }
  const std::string& name() const { return desc_.name; }

  virtual void step(const SimClock& clock, StageIO& io) = 0;

 protected:
  StageDescriptor desc_;
};

// ---------------------------------------------------------------------------
// Run report and transcripts
// ---------------------------------------------------------------------------

struct StageStats {
  std::string name;
  std::uint64_t events_out = 0;
};

struct RunReport {
  double t_build = 0.0;  // wall seconds
  double t_run = 0.0;    // wall seconds, start barrier to end of final tick
  double t_sim = 0.0;    // simulated seconds actually executed
  double delta_t = 0.0;
  std::int64_t ticks = 0;
  std::uint64_t overrun_ticks = 0;
  std::uint64_t spikes_transported = 0;
  RunMode mode = RunMode::deterministic;
  std::vector<StageStats> stages;
  std::vector<double> tick_done_wall;  // seconds since start barrier, optional
  std::optional<std::string> failed_stage;
  std::string failure;

  double rtf() const { return t_sim / t_run; }
  bool ok() const { return !failed_stage.has_value(); }

  std::uint64_t events_out(const std::string& stage) const {
    for (const auto& s : stages)
      if (s.name == stage) return s.events_out;
    throw Error("no stage named '" + stage + "' in report");
  }

  void throw_if_failed() const {
    if (failed_stage) throw StageFailure(*failed_stage, failure);
  }
};

inline const char* kRunReportCsvHeader =
    "mode,ticks,delta_t_s,t_build_s,t_run_s,t_sim_s,rtf,overrun_ticks,spikes_transported";

inline void write_run_report_csv_row(std::ostream& out, const RunReport& r) {
  out << to_string(r.mode) << ',' << r.ticks << ',' << detail::format_double(r.delta_t) << ','
      << detail::format_double(r.t_build) << ',' << detail::format_double(r.t_run) << ','
      << detail::format_double(r.t_sim) << ',' << detail::format_double(r.rtf()) << ','
      << r.overrun_ticks << ',' << r.spikes_transported << '\n';
}

struct TranscriptEvent {
  std::uint32_t stage = 0;
  std::uint32_t port = 0;
  std::int64_t tick = 0;
  NeuronId neuron = 0;
  double time = 0.0;
  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

struct TranscriptFrame {
  std::uint32_t stage = 0;
  std::uint32_t port = 0;
  std::int64_t tick = 0;
  std::vector<double> values;
  friend bool operator==(const TranscriptFrame&, const TranscriptFrame&) = default;
};

// Everything written to output ports during a run, keyed by the tick at
// which the producing stage wrote it.
struct Transcript {
  std::vector<std::string> stage_names;
  std::vector<TranscriptEvent> events;
  std::vector<TranscriptFrame> frames;

  std::vector<TranscriptEvent> events_of(const std::string& stage) const {
    std::vector<TranscriptEvent> out;
    for (const auto& e : events)
      if (stage_names[e.stage] == stage) out.push_back(e);
    return out;
  }
  std::vector<TranscriptFrame> frames_of(const std::string& stage) const {
    std::vector<TranscriptFrame> out;
    for (const auto& f : frames)
      if (stage_names[f.stage] == stage) out.push_back(f);
    return out;
  }
};

inline void write_spike_transcript(std::ostream& out, const Transcript& t) {
  out << "stage,tick,neuron_id,time\n";
  for (const auto& e : t.events)
    out << t.stage_names[e.stage] << ',' << e.tick << ',' << e.neuron << ','
        << detail::format_double(e.time) << '\n';
}

inline void write_frame_transcript(std::ostream& out, const Transcript& t) {
  out << "stage,tick,values\n";
  for (const auto& f : t.frames) {
    out << t.stage_names[f.stage] << ',' << f.tick << ',';
    for (std::size_t i = 0; i < f.values.size(); ++i)
      out << (i ? ";" : "") << detail::format_double(f.values[i]);
    out << '\n';
  }
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t transcript_hash(const Transcript& t) {
  std::ostringstream s;
  write_spike_transcript(s, t);
  write_frame_transcript(s, t);
  return fnv1a(s.str());
}

struct RunOptions {
  RunMode mode = RunMode::deterministic;
  unsigned threads = 1;
  Transcript* transcript = nullptr;         // record events when set
  std::vector<std::string> frame_stages;    // stages whose continuous outputs are recorded
  bool record_tick_times = false;
};

// Number of ticks needed to cover t_sim.
inline std::int64_t ticks_for(double t_sim, double delta_t) {
  if (!(t_sim >= 0.0) || !std::isfinite(t_sim)) throw Error("t_sim must be finite and >= 0");
  const double r = t_sim / delta_t;
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, r)) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(r));
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

class StageGraph {
 public:
  using Clock = std::chrono::steady_clock;

  explicit StageGraph(double delta_t) : delta_t_(delta_t) {
    if (!(delta_t > 0.0) || !std::isfinite(delta_t)) throw Error("graph: delta_t must be > 0");
  }

  StageGraph(StageGraph&&) noexcept = default;
  StageGraph& operator=(StageGraph&&) noexcept = default;

  double delta_t() const { return delta_t_; }
  std::size_t size() const { return stages_.size(); }
  const std::vector<Connection>& connections() const { return connections_; }

  Stage& stage(std::size_t i) { return *stages_[i]; }
  const Stage& stage(std::size_t i) const { return *stages_[i]; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < stages_.size(); ++i)
      if (stages_[i]->name() == name) return i;
    throw Error("no stage named '" + name + "'");
  }

  template <typename T>
  T& stage_as(const std::string& name) {
    auto* p = dynamic_cast<T*>(stages_[index_of(name)].get());
    if (!p) throw Error("stage '" + name + "' has a different type");
    return *p;
  }

  std::size_t add_stage(std::unique_ptr<Stage> stage) {
    for (const auto& s : stages_)
      if (s->name() == stage->name()) throw Error("duplicate stage name '" + stage->name() + "'");
    stages_.push_back(std::move(stage));
    return stages_.size() - 1;
  }

  template <typename T, typename... Args>
  T& emplace_stage(Args&&... args) {
    auto p = std::make_unique<T>(std::forward<Args>(args)...);
    T& ref = *p;
    add_stage(std::move(p));
    return ref;
  }

  void connect(const std::string& from_stage, const std::string& from_port, const std::string& to_stage,
               const std::string& to_port) {
    const std::size_t fs = index_of(from_stage);
    const std::size_t ts = index_of(to_stage);
    const auto& fd = stages_[fs]->descriptor();
    const auto& td = stages_[ts]->descriptor();
    const auto fp = fd.port_index(from_port);
    const auto tp = td.port_index(to_port);
    const std::string label = from_stage + "." + from_port + " -> " + to_stage + "." + to_port;
    if (!fp || fd.ports[*fp].direction != PortDirection::out)
      throw PortMismatch(label + ": '" + from_port + "' is not an output of " + from_stage);
    if (!tp || td.ports[*tp].direction != PortDirection::in)
      throw PortMismatch(label + ": '" + to_port + "' is not an input of " + to_stage);
    const auto& out = fd.ports[*fp];
    const auto& in = td.ports[*tp];
    if (out.kind != in.kind) throw PortMismatch(label + ": continuous/event kind differs");
    if (out.width != in.width) {
      throw PortMismatch(label + ": width " + std::to_string(out.width) + " vs " + std::to_string(in.width));
    }
    for (const auto& c : connections_) {
      if (c.from_stage == fs && c.from_port == *fp) throw PortMismatch(label + ": output already connected");
      if (c.to_stage == ts && c.to_port == *tp) throw PortMismatch(label + ": input already connected");
    }
    // The consumer sees the producer's initial value until the first swap.
    connections_.push_back({fs, *fp, ts, *tp, std::make_unique<TickPort>(out)});
  }

  // Rejects cycles that do not pass through a cycle-breaking stage.
  void validate() const {
    const std::size_t n = stages_.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& c : connections_)
      if (!stages_[c.to_stage]->descriptor().breaks_cycles) adj[c.from_stage].push_back(c.to_stage);
    std::vector<int> color(n, 0);
    std::function<void(std::size_t)> visit = [&](std::size_t u) {
      color[u] = 1;
      for (std::size_t v : adj[u]) {
        if (color[v] == 1) {
          throw CycleError("cycle through '" + stages_[v]->name() + "' without a cycle-breaking stage");
        }
        if (color[v] == 0) visit(v);
      }
      color[u] = 2;
    };
    for (std::size_t i = 0; i < n; ++i)
      if (color[i] == 0) visit(i);
  }

  // Stages on a shortest connection path from `from` to `to`, inclusive.
  std::vector<std::size_t> shortest_path(const std::string& from, const std::string& to) const {
    const std::size_t s = index_of(from);
    const std::size_t t = index_of(to);
    std::vector<std::ptrdiff_t> prev(stages_.size(), -1);
    std::vector<bool> seen(stages_.size(), false);
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      if (u == t) break;
      for (const auto& c : connections_) {
        if (c.from_stage != u || seen[c.to_stage]) continue;
        seen[c.to_stage] = true;
        prev[c.to_stage] = static_cast<std::ptrdiff_t>(u);
        q.push(c.to_stage);
      }
    }
    if (!seen[t] || s == t) throw NoPath("no path from '" + from + "' to '" + to + "'");
    std::vector<std::size_t> path{t};
    while (path.back() != s) path.push_back(static_cast<std::size_t>(prev[path.back()]));
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Buffered hops on the shortest path.
  int hops(const std::string& from, const std::string& to) const {
    return static_cast<int>(shortest_path(from, to).size()) - 1;
  }

  // Hops plus the declared internal delay of every intermediate stage.
  int path_latency_ticks(const std::string& from, const std::string& to) const {
    const auto path = shortest_path(from, to);
    int ticks = static_cast<int>(path.size()) - 1;
    for (std::size_t i = 1; i + 1 < path.size(); ++i) ticks += stages_[path[i]]->descriptor().internal_delay_ticks;
    return ticks;
  }

  void set_build_seconds(double s) { build_seconds_ = s; }
  double build_seconds() const { return build_seconds_; }

  RunReport run(double t_sim, const RunOptions& opt = {});

 private:
  void wire();
  void swap_all(std::int64_t tick);
  void collect(std::int64_t tick, RunReport& report, const RunOptions& opt,
               const std::vector<bool>& frame_stage);

  double delta_t_;
  double build_seconds_ = 0.0;
  std::vector<std::unique_ptr<Stage>> stages_;
  std::vector<Connection> connections_;
  std::vector<StageIO> io_;
  std::int64_t next_tick_ = 0;
};

inline std::size_t step_latency_hops(const StageGraph& g, const std::string& from, const std::string& to) {
  return static_cast<std::size_t>(g.hops(from, to));
}

inline void StageGraph::wire() {
  if (io_.size() == stages_.size()) return;
  io_.assign(stages_.size(), StageIO{});
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& ports = stages_[s]->descriptor().ports;
    io_[s].ports_.resize(ports.size());
    for (std::size_t p = 0; p < ports.size(); ++p) io_[s].ports_[p].own = initial_signal(ports[p]);
  }
  for (auto& c : connections_) {
    io_[c.from_stage].ports_[c.from_port].conn = c.buffer.get();
    io_[c.to_stage].ports_[c.to_port].conn = c.buffer.get();
  }
}

inline void StageGraph::swap_all(std::int64_t tick) {
  for (auto& c : connections_) c.buffer->swap(tick);
}

// Runs on one thread between compute and swap.
inline void StageGraph::collect(std::int64_t tick, RunReport& report, const RunOptions& opt,
                                const std::vector<bool>& frame_stage) {
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& ports = stages_[s]->descriptor().ports;
    for (std::size_t p = 0; p < ports.size(); ++p) {
      if (ports[p].direction != PortDirection::out) continue;
      const Signal& sig = io_[s].written(p);
      if (ports[p].kind == PortKind::event) {
        const auto& batch = std::get<SpikeBatch>(sig);
        report.stages[s].events_out += batch.events.size();
        if (io_[s].ports_[p].conn) report.spikes_transported += batch.events.size();
        if (opt.transcript) {
          for (const auto& e : batch.events)
            opt.transcript->events.push_back(
                {static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p), tick, e.neuron_id, e.time});
        }
      } else if (opt.transcript && frame_stage[s]) {
        opt.transcript->frames.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p), tick,
                                          std::get<ContinuousFrame>(sig).values});
      }
    }
  }
}

inline RunReport StageGraph::run(double t_sim, const RunOptions& opt) {
  const auto prep_start = Clock::now();
  validate();
  wire();
  const std::int64_t n_ticks = ticks_for(t_sim, delta_t_);

  RunReport report;
  report.mode = opt.mode;
  report.delta_t = delta_t_;
  for (const auto& s : stages_) report.stages.push_back({s->name(), 0});
  if (opt.record_tick_times) report.tick_done_wall.reserve(static_cast<std::size_t>(n_ticks));
  std::vector<bool> frame_stage(stages_.size(), false);
  for (const auto& name : opt.frame_stages) frame_stage[index_of(name)] = true;
  if (opt.transcript) {
    opt.transcript->stage_names.clear();
    for (const auto& s : stages_) opt.transcript->stage_names.push_back(s->name());
  }

  const unsigned workers =
      std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(std::max<std::size_t>(1, stages_.size()))));
  const std::int64_t first_tick = next_tick_;

  std::mutex fail_mu;
  std::atomic<bool> failed{false};
  auto run_stage = [&](std::size_t s, std::int64_t tick) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      io_[s].tick_ = tick;
      stages_[s]->step(SimClock(delta_t_, tick), io_[s]);
    } catch (const std::exception& e) {
      std::lock_guard lock(fail_mu);
      if (!report.failed_stage) {
        report.failed_stage = stages_[s]->name();
        report.failure = e.what();
      }
      failed.store(true);
    }
  };

  Clock::time_point start;
  Clock::time_point end;
  std::int64_t done = 0;
  bool stop = n_ticks == 0;
  // Tick epilogue: record, swap, pace. Returns true when the run is over.
  auto finish_tick = [&]() {
    const std::int64_t tick = first_tick + done;
    if (failed.load()) return true;
    collect(tick, report, opt, frame_stage);
    swap_all(tick);
    ++done;
    const auto slot_end = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(static_cast<double>(done) * delta_t_));
    auto now = Clock::now();
    if (opt.mode == RunMode::realtime) {
      if (now > slot_end) {
        ++report.overrun_ticks;
      } else {
        std::this_thread::sleep_until(slot_end);
        now = Clock::now();
      }
    }
    if (opt.record_tick_times) report.tick_done_wall.push_back(std::chrono::duration<double>(now - start).count());
    return done >= n_ticks;
  };

  report.t_build = build_seconds_ + std::chrono::duration<double>(Clock::now() - prep_start).count();

  if (workers == 1) {
    start = Clock::now();
    while (!stop) {
      const std::int64_t tick = first_tick + done;
      for (std::size_t s = 0; s < stages_.size(); ++s) run_stage(s, tick);
      stop = finish_tick();
    }
    end = Clock::now();
  } else {
    std::atomic<bool> stop_flag{stop};
    bool started = false;
    // The first completion is the start barrier; every later one ends a tick.
    auto on_barrier = [&]() noexcept {
      if (!started) {
        started = true;
        start = Clock::now();
        return;
      }
      if (!stop_flag.load()) stop_flag.store(finish_tick());
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(workers), on_barrier);
    auto worker = [&](unsigned w) {
      sync.arrive_and_wait();
      while (!stop_flag.load()) {
        const std::int64_t tick = first_tick + done;
        for (std::size_t s = w; s < stages_.size(); s += workers) run_stage(s, tick);
        sync.arrive_and_wait();
      }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker, w);
    worker(0);
    end = Clock::now();
  }

  report.t_run = std::chrono::duration<double>(end - start).count();
  report.ticks = done;
  report.t_sim = static_cast<double>(done) * delta_t_;
  next_tick_ = first_tick + done;
  return report;
}

}  // namespace spikelink
