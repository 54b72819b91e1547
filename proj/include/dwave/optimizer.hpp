#pragma once

#include <cstdint>
#include <vector>

#include "dwave/graph.hpp"

namespace dwave {

struct LrSchedule {
  double peak = 1e-4;
  std::uint64_t warmup_steps = 10000;
  std::uint64_t total_steps = 1000000;
};

/// Linear warmup from 0 to peak, then half-cosine decay to 0 at total_steps.
double lr_at_step(std::uint64_t step, const LrSchedule& schedule);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<nn::Tensor> first_moment;
  std::vector<nn::Tensor> second_moment;

  static AdamState zeros_like(const std::vector<nn::Tensor>& params);
};

/// Bias-corrected Adam update in double precision. Parameters and moments
/// are rounded to float after the update so checkpoints store them exactly.
/// Throws (leaving everything untouched) on a non-finite gradient.
void adam_step(std::vector<nn::Tensor>& params, const nn::GradientSet& grads, AdamState& state, double lr);

double global_norm(const nn::GradientSet& grads);

/// Scales grads so their global L2 norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(nn::GradientSet& grads, double max_norm);

}  // namespace dwave
