#include "dwave/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dwave {

double lr_at_step(std::uint64_t step, const LrSchedule& s) {
  if (s.warmup_steps > s.total_steps) throw std::invalid_argument("warmup_steps exceeds total_steps");
  if (step > s.total_steps) {
    throw std::out_of_range("step " + std::to_string(step) + " beyond total_steps " + std::to_string(s.total_steps));
  }
  if (step < s.warmup_steps) return s.peak * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  if (s.total_steps == s.warmup_steps) return s.peak;
  const double progress =
      static_cast<double>(step - s.warmup_steps) / static_cast<double>(s.total_steps - s.warmup_steps);
  return s.peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamState AdamState::zeros_like(const std::vector<nn::Tensor>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.push_back(nn::Tensor{p.name + ".adam_m", p.shape, std::vector<double>(p.size(), 0.0)});
    s.second_moment.push_back(nn::Tensor{p.name + ".adam_v", p.shape, std::vector<double>(p.size(), 0.0)});
  }
  return s;
}

namespace {

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void adam_step(std::vector<nn::Tensor>& params, const nn::GradientSet& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state layout mismatch");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (grads[t].size() != params[t].size()) throw std::invalid_argument("adam_step: shape mismatch for " + params[t].name);
    for (double g : grads[t]) {
      if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient for " + params[t].name);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t].values;
    auto& m = state.first_moment[t].values;
    auto& v = state.second_moment[t].values;
    const auto& g = grads[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.epsilon);
      m[i] = to_float_precision(mi);
      v[i] = to_float_precision(vi);
      p[i] = to_float_precision(p[i] - update);
    }
  }
}

double global_norm(const nn::GradientSet& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_global_norm(nn::GradientSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (auto& v : g) v *= scale;
    }
  }
  return norm;
}

}  // namespace dwave
