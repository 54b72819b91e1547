#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dwave/diffusion.hpp"
#include "dwave/graph.hpp"

namespace dwave {

struct DenoiserConfig {
  std::vector<std::size_t> upsample_factors{5, 4, 4, 2, 2, 2};
  std::size_t feature_dim = 80;
  std::size_t base_channels = 32;
  std::size_t noise_embed_dim = 128;

  /// Samples per conditioning frame: product of the upsampling factors.
  std::size_t hop() const;
  /// Channel width after each upsampling stage, index 0 = frame rate.
  std::vector<std::size_t> stage_channels() const;
  void validate() const;

  bool operator==(const DenoiserConfig&) const = default;

  /// (4,4,2,2) at 8 kHz for CI-sized runs.
  static DenoiserConfig desk();
};

struct DenoiserParams {
  DenoiserConfig config;
  std::vector<nn::Tensor> tensors;

  std::size_t parameter_count() const;
  std::size_t index_of(const std::string& name) const;
  bool all_finite() const;
};

/// Centered uniform init scaled by fan-in; the output layer starts at zero.
DenoiserParams init_denoiser(const DenoiserConfig& config, std::uint64_t seed);

/// Sinusoidal embedding of 5000 * sqrt(abar), dim values.
std::vector<double> noise_level_embedding(double sqrt_alpha_bar, std::size_t dim);

/// Stage lengths of the conditioning branch: frames * u_1, frames * u_1 * u_2, ...
std::vector<std::size_t> upsample_stage_lengths(std::size_t num_frames, std::span<const std::size_t> factors);

/// Parameter-free staged hold upsampling of c: one F x len matrix per stage.
std::vector<nn::Matrix> upsample_condition(const FeatureSequence& c, std::span<const std::size_t> factors);

/// eps estimate for x_noisy (length hop * S) given S x F conditioning.
Signal denoise(const DenoiserParams& params, std::span<const double> x_noisy, const FeatureSequence& c,
               double sqrt_alpha_bar);

/// NoisePredictor view over a parameter set (not owning).
class DenoiserNet final : public NoisePredictor {
 public:
  explicit DenoiserNet(const DenoiserParams& params) : params_(params) {}
  std::size_t signal_length(const FeatureSequence& c) const override;
  Signal predict_noise(std::span<const double> x_t, const FeatureSequence& c, double sqrt_alpha_bar) const override;

 private:
  const DenoiserParams& params_;
};

struct TrainingExample {
  std::vector<double> x0;
  FeatureSequence condition;
  NoiseLevel level;
  std::vector<double> eps;
};

struct GradientResult {
  double loss = 0.0;
  nn::GradientSet grads;
};

/// Exact gradients of the batch-mean L1 noise-prediction loss. The
/// subgradient of |r| at r == 0 is taken as 0.
GradientResult backprop_gradients(const DenoiserParams& params, std::span<const TrainingExample> batch);

/// Batch-mean loss only (no graph recording).
double batch_loss(const DenoiserParams& params, std::span<const TrainingExample> batch);

}  // namespace dwave
