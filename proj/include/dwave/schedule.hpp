#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dwave/rng.hpp"

namespace dwave {

/// Discrete diffusion chain. Steps are 1-based throughout; index 0 of the
/// alpha-bar accessor is the clean end of the chain (alpha_bar(0) == 1).
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  /// Validates and builds the chain from beta_1..beta_T.
  explicit NoiseSchedule(std::vector<double> betas);

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t t) const;
  double alpha(std::size_t t) const;
  /// t in [0, T].
  double alpha_bar(std::size_t t) const;
  double sqrt_alpha_bar(std::size_t t) const;

  /// Variance of q(x_{t-1} | x_t, x_0): (1 - abar_{t-1}) / (1 - abar_t) * beta_t.
  double posterior_variance(std::size_t t) const;

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  bool operator==(const NoiseSchedule&) const = default;

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

NoiseSchedule make_linear_schedule(std::size_t steps, double beta_start, double beta_end);
NoiseSchedule make_geometric_schedule(std::size_t steps, double beta_start, double beta_end);

/// Evenly spaced increasing step indices tau_1 < ... < tau_K = T.
std::vector<std::size_t> even_step_indices(std::size_t steps, std::size_t num_steps);

/// Keeps alpha-bar at even_step_indices(T, num_steps) and recomputes betas
/// so the shorter chain reproduces exactly those cumulative products.
NoiseSchedule subsample_schedule(const NoiseSchedule& schedule, std::size_t num_steps);

struct NoiseLevel {
  double sqrt_alpha_bar = 1.0;
  std::optional<std::size_t> step;
};

/// s ~ U{1..T}, then sqrt(abar) ~ U(sqrt(abar_s), sqrt(abar_{s-1})).
NoiseLevel sample_continuous_noise_level(const NoiseSchedule& schedule, Rng& rng);

}  // namespace dwave
