#pragma once

// Neural Engineering Framework population of leaky integrate-and-fire
// neurons: tuning-curve sampling, exact-propagator simulation, least-squares
// decoder training and linear reconstruction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikelink/codec.hpp"
#include "spikelink/core.hpp"
#include "spikelink/csv.hpp"
#include "spikelink/matrix.hpp"
#include "spikelink/rng.hpp"

namespace spikelink {

class BadRange : public Error {
 public:
  using Error::Error;
};

struct LifParams {
  double tau_m = 0.020;
  double v_thresh = 1.0;
  double v_reset = 0.0;
  double t_ref = 0.002;
  double dt = 0.001;

  void validate() const {
    if (!(tau_m > 0.0) || !(dt > 0.0) || !(t_ref >= 0.0) || !(v_reset < v_thresh) ||
        !std::isfinite(tau_m) || !std::isfinite(dt) || !std::isfinite(t_ref) ||
        !std::isfinite(v_thresh) || !std::isfinite(v_reset)) {
      throw BadParameter("LIF: need tau_m > 0, dt > 0, t_ref >= 0, v_reset < v_thresh");
    }
  }
};

// Steady-state firing rate of a LIF neuron under constant drive J. Drives
// within rounding distance of the threshold count as the onset; the rate
// there only approaches 0 logarithmically.
inline double lif_rate(const LifParams& p, double current) {
  if (!(current - p.v_thresh > 1e-12 * std::max(1.0, std::abs(p.v_thresh)))) return 0.0;
  const double isi =
      p.t_ref + p.tau_m * std::log1p((p.v_thresh - p.v_reset) / (current - p.v_thresh));
  return 1.0 / isi;
}

// Drive at which the steady-state rate equals `rate`.
inline double lif_current_for_rate(const LifParams& p, double rate) {
  const double free_time = 1.0 / rate - p.t_ref;
  if (!(free_time > 0.0)) {
    throw BadRange("rate " + std::to_string(rate) + " Hz not reachable with t_ref " +
                   std::to_string(p.t_ref));
  }
  const double e = std::exp(free_time / p.tau_m);
  return (e * p.v_thresh - p.v_reset) / (e - 1.0);
}

// Membrane state of a group of LIF neurons. Sub-threshold dynamics are
// integrated with the exact exponential propagator; threshold crossings are
// located inside the step so the refractory period starts at the true
// crossing time and leftover time is integrated from reset.
class LifGroup {
 public:
  LifGroup() = default;
  LifGroup(std::size_t n, LifParams params)
      : params_((params.validate(), params)),
        decay_(std::exp(-params.dt / params.tau_m)),
        v_(n, params.v_reset),
        ref_left_(n, 0.0) {}

  const LifParams& params() const { return params_; }
  std::size_t size() const { return v_.size(); }
  std::span<double> voltage() { return v_; }
  std::span<const double> voltage() const { return v_; }
  std::span<const double> refractory_left() const { return ref_left_; }

  // Advances every neuron by one dt. spikes[n] is set to 1 for neurons that
  // crossed threshold during the step (at most one spike per neuron per step).
  void step(std::span<const double> current, std::span<std::uint8_t> spikes) {
    if (current.size() != v_.size()) throw WidthMismatch(v_.size(), current.size());
    if (spikes.size() != v_.size()) throw WidthMismatch(v_.size(), spikes.size());
    const double dt = params_.dt;
    for (std::size_t n = 0; n < v_.size(); ++n) {
      spikes[n] = 0;
      double integ = dt;
      if (ref_left_[n] > 0.0) {
        if (ref_left_[n] >= dt) {
          ref_left_[n] -= dt;
          continue;
        }
        integ = dt - ref_left_[n];
        ref_left_[n] = 0.0;
      }
      const double j = current[n];
      const double v0 = v_[n];
      const double f = (integ == dt) ? decay_ : std::exp(-integ / params_.tau_m);
      const double v1 = j + (v0 - j) * f;
      if (v1 < params_.v_thresh) {
        v_[n] = v1;
        continue;
      }
      spikes[n] = 1;
      const double to_cross =
          (v0 >= params_.v_thresh)
              ? 0.0
              : params_.tau_m * std::log((j - v0) / (j - params_.v_thresh));
      const double after = std::max(0.0, integ - to_cross);
      v_[n] = params_.v_reset;
      if (after <= params_.t_ref) {
        ref_left_[n] = params_.t_ref - after;
        continue;
      }
      const double rest = after - params_.t_ref;
      const double v2 = j + (params_.v_reset - j) * std::exp(-rest / params_.tau_m);
      // A second crossing in the same step fires at the start of the next one.
      v_[n] = std::min(v2, params_.v_thresh);
    }
  }

  void reset() {
    std::fill(v_.begin(), v_.end(), params_.v_reset);
    std::fill(ref_left_.begin(), ref_left_.end(), 0.0);
  }

 private:
  LifParams params_;
  double decay_ = 0.0;
  std::vector<double> v_;
  std::vector<double> ref_left_;
};

struct NefConfig {
  std::size_t dim = 1;
  std::size_t n_neurons = 100;
  std::uint64_t seed = 0;
  double intercept_lo = -0.95;
  double intercept_hi = 0.95;
  double max_rate_lo = 100.0;  // Hz
  double max_rate_hi = 200.0;  // Hz
  LifParams lif{};
};

class NefPopulation {
 public:
  static constexpr std::uint32_t kEncoderStream = 0x4E01u;
  static constexpr std::uint32_t kInterceptStream = 0x4E02u;
  static constexpr std::uint32_t kRateStream = 0x4E03u;

  // Samples encoders uniformly on the unit sphere, then intercepts and max
  // rates uniformly in their ranges, and solves each neuron's gain and bias so
  // that it starts firing at the intercept and reaches the max rate at
  // alpha . I = 1.
  static NefPopulation build(const NefConfig& cfg) {
    if (cfg.dim == 0 || cfg.n_neurons == 0) throw BadRange("NEF: dim and n_neurons must be >= 1");
    if (!(cfg.intercept_lo > -1.0) || !(cfg.intercept_hi < 1.0) ||
        !(cfg.intercept_lo <= cfg.intercept_hi)) {
      throw BadRange("NEF: intercepts must lie inside (-1, 1)");
    }
    if (!(cfg.max_rate_lo > 0.0) || !(cfg.max_rate_lo <= cfg.max_rate_hi) ||
        !std::isfinite(cfg.max_rate_hi)) {
      throw BadRange("NEF: max rates must be positive and ordered");
    }
    cfg.lif.validate();

    NefPopulation pop;
    pop.cfg_ = cfg;
    const std::size_t n = cfg.n_neurons;
    const std::size_t d = cfg.dim;
    pop.encoders_ = Matrix(n, d);
    pop.gains_.resize(n);
    pop.biases_.resize(n);
    pop.intercepts_.resize(n);
    pop.max_rates_.resize(n);

    RandomStream enc_rng(cfg.seed, stream_id(kEncoderStream, 0));
    RandomStream icpt_rng(cfg.seed, stream_id(kInterceptStream, 0));
    RandomStream rate_rng(cfg.seed, stream_id(kRateStream, 0));
    for (std::size_t i = 0; i < n; ++i) {
      auto row = pop.encoders_.row(i);
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (double& x : row) {
          x = enc_rng.normal();
          norm2 += x * x;
        }
      } while (norm2 < 1e-24);
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& x : row) x *= inv;

      pop.intercepts_[i] = cfg.intercept_lo + (cfg.intercept_hi - cfg.intercept_lo) * icpt_rng.uniform();
      pop.max_rates_[i] = cfg.max_rate_lo + (cfg.max_rate_hi - cfg.max_rate_lo) * rate_rng.uniform();

      const double j_max = lif_current_for_rate(cfg.lif, pop.max_rates_[i]);
      pop.gains_[i] = (j_max - cfg.lif.v_thresh) / (1.0 - pop.intercepts_[i]);
      pop.biases_[i] = cfg.lif.v_thresh - pop.gains_[i] * pop.intercepts_[i];
    }
    pop.lif_ = LifGroup(n, cfg.lif);
    pop.current_.assign(n, 0.0);
    pop.spiked_.assign(n, 0);
    return pop;
  }

  // Explicit construction, e.g. for mirrored test populations.
  static NefPopulation from_parameters(Matrix encoders, std::vector<double> gains,
                                       std::vector<double> biases, LifParams lif) {
    const std::size_t n = encoders.rows();
    if (gains.size() != n || biases.size() != n) throw DimensionMismatch("NEF: parameter sizes differ");
    for (double g : gains)
      if (!(g > 0.0)) throw BadRange("NEF: gains must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      double norm2 = 0.0;
      for (double x : encoders.row(i)) norm2 += x * x;
      if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw BadRange("NEF: encoders must be unit norm");
    }
    NefPopulation pop;
    pop.cfg_.dim = encoders.cols();
    pop.cfg_.n_neurons = n;
    pop.cfg_.lif = lif;
    pop.encoders_ = std::move(encoders);
    pop.gains_ = std::move(gains);
    pop.biases_ = std::move(biases);
    pop.intercepts_.assign(n, 0.0);
    pop.max_rates_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      pop.intercepts_[i] = (lif.v_thresh - pop.biases_[i]) / pop.gains_[i];
      pop.max_rates_[i] = lif_rate(lif, pop.gains_[i] + pop.biases_[i]);
    }
    pop.lif_ = LifGroup(n, lif);
    pop.current_.assign(n, 0.0);
    pop.spiked_.assign(n, 0);
    return pop;
  }

  std::size_t dim() const { return cfg_.dim; }
  std::size_t size() const { return cfg_.n_neurons; }
  const NefConfig& config() const { return cfg_; }
  const LifParams& lif_params() const { return cfg_.lif; }
  const Matrix& encoders() const { return encoders_; }
  std::span<const double> gains() const { return gains_; }
  std::span<const double> biases() const { return biases_; }
  std::span<const double> intercepts() const { return intercepts_; }
  std::span<const double> max_rates() const { return max_rates_; }
  LifGroup& lif() { return lif_; }
  const LifGroup& lif() const { return lif_; }

  const std::optional<Matrix>& decoders() const { return decoders_; }
  void set_decoders(Matrix phi) {
    if (phi.rows() != size() || phi.cols() != dim()) throw DimensionMismatch("NEF: decoder shape");
    decoders_ = std::move(phi);
  }

  // J_n = gain_n (alpha_n . I) + bias_n
  void currents_into(std::span<const double> input, std::span<double> out) const {
    if (input.size() != dim()) throw WidthMismatch(dim(), input.size());
    for (std::size_t i = 0; i < size(); ++i) {
      const auto a = encoders_.row(i);
      double proj = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) proj += a[k] * input[k];
      out[i] = gains_[i] * proj + biases_[i];
    }
  }

  std::vector<double> currents(std::span<const double> input) const {
    std::vector<double> j(size());
    currents_into(input, j);
    return j;
  }

  // Analytic steady-state rates (the tuning curves) at `input`.
  std::vector<double> rates(std::span<const double> input) const {
    auto j = currents(input);
    for (double& x : j) x = lif_rate(cfg_.lif, x);
    return j;
  }

  // Feeds one tick of constant input through the LIF dynamics in dt substeps.
  // Spikes carry the start time of the substep in which they occurred.
  SpikeBatch encode_step(const ContinuousFrame& frame, const SimClock& clock) {
    SpikeBatch batch;
    encode_step_into(frame, clock, batch);
    return batch;
  }

  void encode_step_into(const ContinuousFrame& frame, const SimClock& clock, SpikeBatch& batch) {
    if (frame.width() != dim()) throw WidthMismatch(dim(), frame.width());
    const std::int64_t sub = substeps(clock.delta_t());
    currents_into(frame.values, current_);
    batch.tick_index = clock.tick_index();
    batch.events.clear();
    const double t0 = clock.tick_start();
    const double t1 = clock.tick_end();
    const std::int64_t base = clock.tick_index() * sub;
    for (std::int64_t s = 0; s < sub; ++s) {
      lif_.step(current_, spiked_);
      const double t = detail::clamp_to_window(static_cast<double>(base + s) * cfg_.lif.dt, t0, t1);
      for (std::size_t i = 0; i < spiked_.size(); ++i)
        if (spiked_[i]) batch.events.push_back({static_cast<NeuronId>(i), t});
    }
  }

  // Number of LIF substeps per tick; the tick must be a whole multiple of dt.
  std::int64_t substeps(double delta_t) const {
    const double ratio = delta_t / cfg_.lif.dt;
    const auto sub = static_cast<std::int64_t>(std::llround(ratio));
    if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-6 * ratio) {
      throw BadParameter("NEF: tick " + std::to_string(delta_t) +
                         " s is not a whole multiple of the neuron step");
    }
    return sub;
  }

 private:
  NefConfig cfg_;
  Matrix encoders_;
  std::vector<double> gains_;
  std::vector<double> biases_;
  std::vector<double> intercepts_;
  std::vector<double> max_rates_;
  LifGroup lif_;
  std::vector<double> current_;
  std::vector<std::uint8_t> spiked_;
  std::optional<Matrix> decoders_;
};

inline NefPopulation nef_build(const NefConfig& cfg) { return NefPopulation::build(cfg); }

// Evaluation points for decoder training: an evenly spaced grid for one
// dimension, a Halton sequence scaled to [-1, 1]^d otherwise.
inline Matrix nef_default_grid(std::size_t dim, std::size_t points_per_dim = 500) {
  if (dim == 1) {
    Matrix g(points_per_dim, 1);
    for (std::size_t i = 0; i < points_per_dim; ++i)
      g(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points_per_dim - 1);
    return g;
  }
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (dim > std::size(kPrimes)) throw BadParameter("NEF: default grid supports up to 25 dimensions");
  const std::size_t count = points_per_dim * dim;
  Matrix g(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const int base = kPrimes[k];
      double f = 1.0;
      double r = 0.0;
      for (std::size_t idx = i + 1; idx > 0; idx /= static_cast<std::size_t>(base)) {
        f /= base;
        r += f * static_cast<double>(idx % static_cast<std::size_t>(base));
      }
      g(i, k) = 2.0 * r - 1.0;
    }
  }
  return g;
}

// Ridge coefficient per sample: (0.1 * upper max rate)^2.
inline double nef_default_reg(const NefConfig& cfg) {
  const double s = 0.1 * cfg.max_rate_hi;
  return s * s;
}

// Steady-state rate matrix A (points x neurons).
inline Matrix nef_activity_matrix(const NefPopulation& pop, const Matrix& grid) {
  if (grid.cols() != pop.dim()) throw DimensionMismatch("NEF: grid dimension");
  Matrix a(grid.rows(), pop.size());
  for (std::size_t p = 0; p < grid.rows(); ++p) {
    const auto r = pop.rates(grid.row(p));
    std::copy(r.begin(), r.end(), a.row(p).begin());
  }
  return a;
}

// phi = argmin ||A phi - X||^2 + reg * P * ||phi||^2 with P grid points.
inline Matrix nef_train_decoders(const NefPopulation& pop, const Matrix& grid, double reg) {
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw BadParameter("NEF: reg must be >= 0");
  const Matrix a = nef_activity_matrix(pop, grid);
  return ridge_solve(a, grid, reg * static_cast<double>(grid.rows()));
}

// I_hat = sum_n a_n phi_n, not clamped.
inline std::vector<double> nef_decode(std::span<const double> activities, const Matrix& phi) {
  return transpose_times(phi, activities);
}

// Root-mean-square reconstruction error of steady-state decoding over `grid`.
inline double nef_rmse(const NefPopulation& pop, const Matrix& phi, const Matrix& grid) {
  double sse = 0.0;
  for (std::size_t p = 0; p < grid.rows(); ++p) {
    const auto est = nef_decode(pop.rates(grid.row(p)), phi);
    for (std::size_t k = 0; k < est.size(); ++k) {
      const double e = est[k] - grid(p, k);
      sse += e * e;
    }
  }
  return std::sqrt(sse / static_cast<double>(grid.rows() * grid.cols()));
}

// Readout for filtered spike trains: a spike train at rate r filtered with
// exp(-t / tau) has mean activity r * tau, so rate decoders scale by 1 / tau.
inline LinearReadout nef_spiking_readout(const Matrix& phi, double tau_dec) {
  Matrix scaled = phi;
  for (double& w : scaled.data()) w /= tau_dec;
  return LinearReadout(std::move(scaled));
}

inline NamedMatrix nef_decoders_table(const Matrix& phi) {
  NamedMatrix t;
  for (std::size_t k = 0; k < phi.cols(); ++k) t.columns.push_back("x" + std::to_string(k));
  t.values = phi;
  return t;
}

}  // namespace spikelink
