#pragma once

#include <cstdint>

#include "dwave/denoiser.hpp"

namespace dwave {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  /// Coordinates dropped because a residual changed sign inside [-h, +h],
  /// where the L1 loss is not differentiable.
  std::size_t kinks_skipped = 0;
  std::string worst_tensor;
};

struct GradCheckOptions {
  std::size_t min_coordinates = 200;
  std::uint64_t seed = 0;
  /// Gradients below this magnitude are compared absolutely.
  double magnitude_floor = 1e-6;
};

/// Central differences against backprop_gradients on a single example.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const DenoiserParams& params, const TrainingExample& example, double h,
                           const GradCheckOptions& options = {});

/// Same, but compares against a caller-supplied analytic gradient.
GradCheckResult grad_check_against(const DenoiserParams& params, const TrainingExample& example,
                                   const nn::GradientSet& analytic, double h, const GradCheckOptions& options = {});

}  // namespace dwave
