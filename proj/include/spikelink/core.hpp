#pragma once

// Signal, spike and clock value types shared by every pipeline stage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikelink {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WidthMismatch : public Error {
 public:
  WidthMismatch(std::size_t expected, std::size_t actual)
      : Error("width mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class RangeViolation : public Error {
 public:
  RangeViolation(std::size_t index, double value)
      : Error("value " + std::to_string(value) + " at index " + std::to_string(index) +
              " outside [-1, 1]"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class NonFinite : public Error {
 public:
  explicit NonFinite(std::size_t index)
      : Error("non-finite value at index " + std::to_string(index)), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Spikes
// ---------------------------------------------------------------------------

using NeuronId = std::uint32_t;

struct SpikeEvent {
  NeuronId neuron_id = 0;
  double time = 0.0;  // simulated seconds

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

// Total order used inside a batch: time first, then neuron id.
struct SpikeOrder {
  bool operator()(const SpikeEvent& a, const SpikeEvent& b) const {
    if (a.time != b.time) return a.time < b.time;
    return a.neuron_id < b.neuron_id;
  }
};

struct SpikeBatch {
  std::int64_t tick_index = 0;
  std::vector<SpikeEvent> events;

  void sort() { std::sort(events.begin(), events.end(), SpikeOrder{}); }

  friend bool operator==(const SpikeBatch&, const SpikeBatch&) = default;
};

// ---------------------------------------------------------------------------
// Clock
// ---------------------------------------------------------------------------

// Simulated time is always derived from the tick index, never accumulated.
class SimClock {
 public:
  SimClock() = default;
  SimClock(double delta_t, std::int64_t tick_index = 0) : delta_t_(delta_t), tick_(tick_index) {
    if (!(delta_t > 0.0) || !std::isfinite(delta_t)) {
      throw Error("SimClock: delta_t must be finite and > 0");
    }
    if (tick_index < 0) throw Error("SimClock: tick index must be >= 0");
  }

  double delta_t() const { return delta_t_; }
  std::int64_t tick_index() const { return tick_; }

  double time() const { return static_cast<double>(tick_) * delta_t_; }
  double tick_start() const { return time(); }
  double tick_end() const { return static_cast<double>(tick_ + 1) * delta_t_; }

  SimClock at(std::int64_t tick) const { return SimClock(delta_t_, tick); }
  SimClock next() const { return at(tick_ + 1); }

 private:
  double delta_t_ = 1e-3;
  std::int64_t tick_ = 0;
};

// Checks the batch invariants against the window of `clock`. Returns false on
// the first violation.
inline bool batch_is_valid(const SpikeBatch& batch, double delta_t,
                           std::size_t population_size) {
  const SimClock clock(delta_t, batch.tick_index < 0 ? 0 : batch.tick_index);
  if (batch.tick_index < 0) return false;
  const double lo = clock.tick_start();
  const double hi = clock.tick_end();
  for (std::size_t i = 0; i < batch.events.size(); ++i) {
    const auto& e = batch.events[i];
    if (!std::isfinite(e.time) || e.time < lo || e.time >= hi) return false;
    if (e.neuron_id >= population_size) return false;
    if (i > 0) {
      const auto& p = batch.events[i - 1];
      if (!SpikeOrder{}(p, e)) return false;  // also rejects exact duplicates
    }
  }
  return true;
}

// Merges two valid batches of the same tick into one sorted batch.
inline SpikeBatch merge_batches(const SpikeBatch& a, const SpikeBatch& b) {
  if (a.tick_index != b.tick_index) throw Error("merge_batches: tick index differs");
  SpikeBatch out;
  out.tick_index = a.tick_index;
  out.events.reserve(a.events.size() + b.events.size());
  std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(),
             std::back_inserter(out.events), SpikeOrder{});
  return out;
}

// ---------------------------------------------------------------------------
// Continuous frames
// ---------------------------------------------------------------------------

struct ContinuousFrame {
  std::int64_t tick_index = 0;
  std::vector<double> values;

  std::size_t width() const { return values.size(); }

  friend bool operator==(const ContinuousFrame&, const ContinuousFrame&) = default;
};

inline const ContinuousFrame& validate_frame(const ContinuousFrame& frame, std::size_t width) {
  if (frame.values.size() != width) throw WidthMismatch(width, frame.values.size());
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    const double v = frame.values[i];
    if (!(v >= -1.0 && v <= 1.0)) throw RangeViolation(i, v);
  }
  return frame;
}

inline std::vector<double> clamp_frame(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw NonFinite(i);
    out[i] = std::clamp(out[i], -1.0, 1.0);
  }
  return out;
}

// In-place variant for hot paths where values are known finite.
inline void clamp_in_place(std::span<double> values) {
  for (double& v : values) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace spikelink
