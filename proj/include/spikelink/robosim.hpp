#pragma once

// Planar robot world: segment arena, unicycle kinematics, ray-cast laser
// scanner and disc collision test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spikelink/codec.hpp"
#include "spikelink/core.hpp"
#include "spikelink/csv.hpp"

namespace spikelink::robo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Segment {
  Vec2 a;
  Vec2 b;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

class ArenaError : public Error {
 public:
  using Error::Error;
};

class CollisionHalt : public Error {
 public:
  using Error::Error;
};

struct Arena {
  std::vector<Segment> obstacles;
  Rect bounds;

  void validate() const {
    for (const auto& s : obstacles) {
      if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) || !std::isfinite(s.b.x) ||
          !std::isfinite(s.b.y)) {
        throw ArenaError("arena: non-finite segment");
      }
    }
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
      throw ArenaError("arena: degenerate bounds");
    }
  }

  // Rectangle with walls on its border.
  static Arena box(double width, double height) {
    Arena a;
    a.bounds = {0.0, 0.0, width, height};
    a.obstacles = {{{0, 0}, {width, 0}},
                   {{width, 0}, {width, height}},
                   {{width, height}, {0, height}},
                   {{0, height}, {0, 0}}};
    return a;
  }
};

// Arena text format: one segment per line "x1 y1 x2 y2" in meters, '#' starts
// a comment. An optional "bounds x_min y_min x_max y_max" line sets the
// bounds; otherwise they are the bounding box of all segments.
inline Arena parse_arena(std::istream& in, const std::string& origin = "arena") {
  Arena arena;
  bool have_bounds = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    if (first == "bounds") {
      Rect r;
      if (!(ls >> r.x_min >> r.y_min >> r.x_max >> r.y_max)) throw ArenaError(where + ": bad bounds line");
      arena.bounds = r;
      have_bounds = true;
    } else {
      Segment s;
      try {
        s.a.x = std::stod(first);
      } catch (const std::exception&) {
        throw ArenaError(where + ": expected 'x1 y1 x2 y2'");
      }
      if (!(ls >> s.a.y >> s.b.x >> s.b.y)) throw ArenaError(where + ": expected 'x1 y1 x2 y2'");
      arena.obstacles.push_back(s);
    }
    std::string extra;
    if (ls >> extra) throw ArenaError(where + ": trailing text '" + extra + "'");
  }
  if (!have_bounds) {
    if (arena.obstacles.empty()) throw ArenaError(origin + ": no segments and no bounds");
    Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : arena.obstacles) {
      for (const Vec2 p : {s.a, s.b}) {
        r.x_min = std::min(r.x_min, p.x);
        r.y_min = std::min(r.y_min, p.y);
        r.x_max = std::max(r.x_max, p.x);
        r.y_max = std::max(r.y_max, p.y);
      }
    }
    arena.bounds = r;
  }
  arena.validate();
  return arena;
}

inline Arena load_arena(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArenaError("cannot open arena file " + path);
  return parse_arena(in, path);
}

// Heading wrapped into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double radius = 0.2;
  double v = 0.0;
  double omega = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct ScanParams {
  std::size_t n_beams = 100;
  double fov = std::numbers::pi;
  double max_range = 5.0;
  double update_rate = 20.0;  // Hz
};

struct LaserScan {
  ScanParams params;
  std::vector<double> ranges;
};

// Beam i points at heading + beam_angle(i); beam 0 is the rightmost.
inline double beam_angle(const ScanParams& p, std::size_t i) {
  return -p.fov / 2.0 + p.fov * (static_cast<double>(i) + 0.5) / static_cast<double>(p.n_beams);
}

// Distance along the unit ray (origin, dir) to segment s, or +inf.
inline double ray_segment_distance(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15 * std::max(1.0, norm(e))) return std::numeric_limits<double>::infinity();
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
  return t;
}

inline LaserScan raycast_scan(const Arena& arena, const RobotState& pose, const ScanParams& params) {
  LaserScan scan{params, std::vector<double>(params.n_beams, params.max_range)};
  const Vec2 origin = pose.position();
  for (std::size_t i = 0; i < params.n_beams; ++i) {
    const double ang = pose.heading + beam_angle(params, i);
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    double best = params.max_range;
    for (const auto& s : arena.obstacles) best = std::min(best, ray_segment_distance(origin, dir, s));
    scan.ranges[i] = std::clamp(best, 0.0, params.max_range);
  }
  return scan;
}

// Proximity coding: +1 touching, -1 nothing within range. Raw mode maps range
// the other way round (-1 touching, +1 free).
inline ContinuousFrame scan_to_frame(const LaserScan& scan, bool proximity = true,
                                     std::int64_t tick = 0) {
  ContinuousFrame f{tick, std::vector<double>(scan.ranges.size())};
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = std::clamp(scan.ranges[i], 0.0, scan.params.max_range);
    const double v = 1.0 - 2.0 * (r / scan.params.max_range);
    f.values[i] = proximity ? v : -v;
  }
  return f;
}

struct TwistCommand {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
};

struct TwistLimits {
  double v_max_lin = 0.5;   // m/s
  double omega_max = 1.5;   // rad/s

  TwistCommand ingest(double linear, double angular) const {
    return {std::clamp(linear, -v_max_lin, v_max_lin), std::clamp(angular, -omega_max, omega_max)};
  }

  // Motor frame in [-1, 1]^2 -> bounded twist.
  TwistCommand from_frame(std::span<const double> values) const {
    if (values.size() != 2) throw WidthMismatch(2, values.size());
    return ingest(std::clamp(values[0], -1.0, 1.0) * v_max_lin,
                  std::clamp(values[1], -1.0, 1.0) * omega_max);
  }
};

// Exact unicycle motion under a constant twist for dt seconds.
inline RobotState apply_twist(RobotState s, const TwistCommand& cmd, double dt) {
  const double v = cmd.linear;
  const double w = cmd.angular;
  const double th = s.heading;
  if (std::abs(w) < 1e-9) {
    s.x += v * std::cos(th) * dt;
    s.y += v * std::sin(th) * dt;
    s.heading = normalize_angle(th + w * dt);
  } else {
    const double r = v / w;
    const double th1 = th + w * dt;
    s.x += r * (std::sin(th1) - std::sin(th));
    s.y -= r * (std::cos(th1) - std::cos(th));
    s.heading = normalize_angle(th1);
  }
  s.v = v;
  s.omega = w;
  return s;
}

inline double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double len2 = dot(e, e);
  double u = len2 > 0.0 ? dot(p - s.a, e) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return norm(p - (s.a + u * e));
}

inline bool collision_check(const Arena& arena, const RobotState& s) {
  const auto& b = arena.bounds;
  if (s.x - s.radius < b.x_min || s.x + s.radius > b.x_max || s.y - s.radius < b.y_min ||
      s.y + s.radius > b.y_max) {
    return true;
  }
  const Vec2 c = s.position();
  for (const auto& seg : arena.obstacles)
    if (point_segment_distance(c, seg) <= s.radius) return true;
  return false;
}

struct WorldParams {
  ScanParams scan{};
  TwistLimits limits{};
  double substep = 0.001;  // physics step, seconds
  bool proximity = true;
  bool halt_on_collision = false;
};

struct PoseSample {
  std::int64_t tick = 0;
  RobotState state;
  bool collided = false;
};

// The robot world as one pipeline stage: consume the tick-k motor command,
// advance physics by one tick in fixed substeps, emit the scan for tick k+1.
// A substep whose end pose would collide is rejected, so the robot stays put
// against obstacles and the collision is counted.
class RobotWorld {
 public:
  RobotWorld(Arena arena, RobotState initial, WorldParams params)
      : arena_((arena.validate(), std::move(arena))), state_(initial), params_(params) {
    if (!(initial.radius > 0.0)) throw BadParameter("robot: radius must be > 0");
    if (!(params.substep > 0.0)) throw BadParameter("robot: substep must be > 0");
    if (params.scan.n_beams == 0 || !(params.scan.max_range > 0.0) || !(params.scan.fov > 0.0))
      throw BadParameter("robot: bad scan parameters");
    state_.heading = normalize_angle(state_.heading);
  }

  const Arena& arena() const { return arena_; }
  const RobotState& state() const { return state_; }
  const WorldParams& params() const { return params_; }
  double path_length() const { return path_length_; }
  std::uint64_t collision_ticks() const { return collision_ticks_; }
  const std::vector<PoseSample>& trace() const { return trace_; }
  void set_tracing(bool on) { tracing_ = on; }

  LaserScan scan() const { return raycast_scan(arena_, state_, params_.scan); }
  ContinuousFrame sensor_frame(std::int64_t tick) const {
    return scan_to_frame(scan(), params_.proximity, tick);
  }

  ContinuousFrame step(const ContinuousFrame& motor, const SimClock& clock) {
    const TwistCommand cmd = params_.limits.from_frame(motor.values);
    const double ratio = clock.delta_t() / params_.substep;
    const auto sub = std::max<std::int64_t>(1, std::llround(ratio));
    const double h = clock.delta_t() / static_cast<double>(sub);
    bool collided = false;
    for (std::int64_t i = 0; i < sub; ++i) {
      const RobotState next = apply_twist(state_, cmd, h);
      if (collision_check(arena_, next)) {
        collided = true;
        state_.v = 0.0;
        state_.omega = 0.0;
        continue;
      }
      path_length_ += norm(next.position() - state_.position());
      state_ = next;
    }
    if (collided) {
      ++collision_ticks_;
      if (params_.halt_on_collision) {
        if (tracing_) trace_.push_back({clock.tick_index(), state_, true});
        throw CollisionHalt("robot collided at tick " + std::to_string(clock.tick_index()));
      }
    }
    if (tracing_) trace_.push_back({clock.tick_index(), state_, collided});
    return sensor_frame(clock.tick_index() + 1);
  }

 private:
  Arena arena_;
  RobotState state_;
  WorldParams params_;
  double path_length_ = 0.0;
  std::uint64_t collision_ticks_ = 0;
  bool tracing_ = false;
  std::vector<PoseSample> trace_;
};

inline void write_pose_trace(std::ostream& out, const std::vector<PoseSample>& trace) {
  out << "tick,x,y,heading,v,omega,collided\n";
  for (const auto& p : trace) {
    out << p.tick << ',' << detail::format_double(p.state.x) << ','
        << detail::format_double(p.state.y) << ',' << detail::format_double(p.state.heading) << ','
        << detail::format_double(p.state.v) << ',' << detail::format_double(p.state.omega) << ','
        << (p.collided ? 1 : 0) << '\n';
  }
}

}  // namespace spikelink::robo
