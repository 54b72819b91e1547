#include "dwave/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dwave {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw std::invalid_argument("noise schedule needs at least one step");
  alphas_.resize(betas_.size());
  alpha_bars_.resize(betas_.size());
  double running = 1.0;
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0)) {
      throw std::invalid_argument("beta_" + std::to_string(i + 1) + " = " + std::to_string(b) +
                                  " outside (0, 1)");
    }
    if (i > 0 && !(b > betas_[i - 1])) {
      throw std::invalid_argument("betas must be strictly increasing (step " +
                                  std::to_string(i + 1) + ")");
    }
    alphas_[i] = 1.0 - b;
    running *= alphas_[i];
    alpha_bars_[i] = running;
  }
}

double NoiseSchedule::beta(std::size_t t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("step index out of range");
  return betas_[t - 1];
}

double NoiseSchedule::alpha(std::size_t t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("step index out of range");
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t > steps()) throw std::out_of_range("step index out of range");
  return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

double NoiseSchedule::sqrt_alpha_bar(std::size_t t) const { return std::sqrt(alpha_bar(t)); }

double NoiseSchedule::posterior_variance(std::size_t t) const {
  return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
}

NoiseSchedule make_linear_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw std::invalid_argument("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw std::invalid_argument("need 0 < beta_start <= beta_end < 1");
  }
  if (steps > 1 && beta_start == beta_end) {
    throw std::invalid_argument("constant betas violate strict monotonicity");
  }
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule make_geometric_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw std::invalid_argument("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw std::invalid_argument("need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  const double ratio = std::log(beta_end / beta_start);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start * std::exp(ratio * frac);
  }
  return NoiseSchedule(std::move(betas));
}

std::vector<std::size_t> even_step_indices(std::size_t steps, std::size_t num_steps) {
  if (num_steps < 1 || num_steps > steps) {
    throw std::invalid_argument("num_steps must lie in [1, " + std::to_string(steps) + "]");
  }
  std::vector<std::size_t> tau(num_steps);
  for (std::size_t k = 1; k <= num_steps; ++k) {
    // round(k * T / K) in integer arithmetic; strictly increasing since T >= K.
    tau[k - 1] = (2 * k * steps + num_steps) / (2 * num_steps);
  }
  return tau;
}

NoiseSchedule subsample_schedule(const NoiseSchedule& schedule, std::size_t num_steps) {
  const auto tau = even_step_indices(schedule.steps(), num_steps);
  std::vector<double> betas(num_steps);
  double prev = 1.0;
  for (std::size_t k = 0; k < num_steps; ++k) {
    const double ab = schedule.alpha_bar(tau[k]);
    betas[k] = 1.0 - ab / prev;
    prev = ab;
  }
  if (num_steps == schedule.steps()) return schedule;
  return NoiseSchedule(std::move(betas));
}

NoiseLevel sample_continuous_noise_level(const NoiseSchedule& schedule, Rng& rng) {
  const std::size_t s = 1 + uniform_index(rng, schedule.steps());
  const double lo = schedule.sqrt_alpha_bar(s);
  const double hi = schedule.sqrt_alpha_bar(s - 1);
  return NoiseLevel{uniform(rng, lo, hi), s};
}

}  // namespace dwave
