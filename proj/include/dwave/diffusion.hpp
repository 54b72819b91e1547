#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "dwave/features.hpp"
#include "dwave/schedule.hpp"

namespace dwave {

using Signal = std::vector<double>;

/// Anything that estimates the added noise from (x_t, c, sqrt(abar)).
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  /// Waveform length implied by the conditioning sequence.
  virtual std::size_t signal_length(const FeatureSequence& c) const = 0;
  virtual Signal predict_noise(std::span<const double> x_t, const FeatureSequence& c,
                               double sqrt_alpha_bar) const = 0;
};

/// Wraps a predictor and counts evaluations.
class CountingPredictor final : public NoisePredictor {
 public:
  explicit CountingPredictor(const NoisePredictor& inner) : inner_(inner) {}
  std::size_t signal_length(const FeatureSequence& c) const override { return inner_.signal_length(c); }
  Signal predict_noise(std::span<const double> x_t, const FeatureSequence& c,
                       double sqrt_alpha_bar) const override {
    ++calls_;
    return inner_.predict_noise(x_t, c, sqrt_alpha_bar);
  }
  std::size_t calls() const { return calls_; }

 private:
  const NoisePredictor& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// sqrt(abar) * x0 + sqrt(1 - abar) * eps.
Signal forward_diffuse(std::span<const double> x0, double sqrt_alpha_bar, std::span<const double> eps);

/// (x_t - sqrt(1 - abar) * eps_hat) / sqrt(abar).
Signal predict_x0(std::span<const double> x_t, std::span<const double> eps_hat, double sqrt_alpha_bar);

/// Leading coefficient of the reverse-step mean. Standard is 1/sqrt(alpha_t);
/// AlphaBar reproduces the 1/sqrt(abar_t) variant for A/B checks only.
enum class MeanCoefficient { Standard, AlphaBar };

Signal posterior_mean(std::span<const double> x_t, std::span<const double> eps_hat, std::size_t t,
                      const NoiseSchedule& schedule, MeanCoefficient coef = MeanCoefficient::Standard);

/// Mean absolute error between eps and the prediction on the diffused input.
double training_loss(const NoisePredictor& model, std::span<const double> x0, const FeatureSequence& c,
                     const NoiseLevel& level, std::span<const double> eps);

enum class SamplerKind { Ancestral, ContinuousFewStep, Ddim };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Ancestral;
  std::size_t num_steps = 1000;
  double eta = 0.0;
  std::uint64_t seed = 0;
  MeanCoefficient mean_coefficient = MeanCoefficient::Standard;
};

/// Parses "ancestral", "cont-N" or "ddim-K".
SamplerConfig parse_sampler(std::string_view spec, std::size_t schedule_steps);

Signal ancestral_sample(const NoisePredictor& model, const FeatureSequence& c,
                        const NoiseSchedule& schedule, const SamplerConfig& config);

Signal ddim_sample(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
                   const SamplerConfig& config);

/// Dispatches on config.kind. ContinuousFewStep runs the ancestral sampler
/// over subsample_schedule(schedule, num_steps).
Signal sample(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
              const SamplerConfig& config);

}  // namespace dwave
