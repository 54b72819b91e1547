#include "dwave/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dwave {

namespace {

struct Probe {
  double loss;
  std::vector<double> residual;
};

Probe evaluate(const DenoiserParams& params, const TrainingExample& ex, const Signal& x_t) {
  const Signal pred = denoise(params, x_t, ex.condition, ex.level.sqrt_alpha_bar);
  Probe p{0.0, std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p.residual[i] = pred[i] - ex.eps[i];
    p.loss += std::abs(p.residual[i]);
  }
  p.loss /= static_cast<double>(pred.size());
  return p;
}

}  // namespace

GradCheckResult grad_check(const DenoiserParams& params, const TrainingExample& example, double h,
                           const GradCheckOptions& options) {
  const TrainingExample batch[] = {example};
  const auto analytic = backprop_gradients(params, batch);
  return grad_check_against(params, example, analytic.grads, h, options);
}

GradCheckResult grad_check_against(const DenoiserParams& params, const TrainingExample& example,
                                   const nn::GradientSet& analytic, double h, const GradCheckOptions& options) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grad_check: step h must be positive and finite");
  if (analytic.size() != params.tensors.size()) throw std::invalid_argument("grad_check: gradient layout mismatch");
  const Signal x_t = forward_diffuse(example.x0, example.level.sqrt_alpha_bar, example.eps);

  // At least two coordinates from every tensor, the rest uniform overall.
  Rng rng(options.seed);
  std::set<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    const std::size_t n = params.tensors[t].size();
    for (std::size_t r = 0; r < std::min<std::size_t>(2, n); ++r) coords.emplace(t, uniform_index(rng, n));
  }
  const std::size_t total = params.parameter_count();
  std::vector<std::size_t> offsets;
  for (const auto& t : params.tensors) offsets.push_back(t.size());
  auto random_coord = [&]() {
    std::size_t flat = uniform_index(rng, total);
    std::size_t t = 0;
    while (flat >= offsets[t]) flat -= offsets[t++];
    return std::make_pair(t, flat);
  };

  DenoiserParams work = params;
  GradCheckResult result;
  std::set<std::pair<std::size_t, std::size_t>> done;
  auto check = [&](std::size_t t, std::size_t i) {
    double& theta = work.tensors[t].values[i];
    const double saved = theta;
    theta = saved + h;
    const Probe plus = evaluate(work, example, x_t);
    theta = saved - h;
    const Probe minus = evaluate(work, example, x_t);
    theta = saved;
    for (std::size_t k = 0; k < plus.residual.size(); ++k) {
      if ((plus.residual[k] > 0.0) != (minus.residual[k] > 0.0)) {
        ++result.kinks_skipped;
        return;
      }
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * h);
    const double a = analytic[t][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.magnitude_floor});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_tensor = params.tensors[t].name;
    }
    ++result.coordinates_checked;
  };

  for (const auto& [t, i] : coords) {
    check(t, i);
    done.emplace(t, i);
  }
  std::size_t attempts = 0;
  while (result.coordinates_checked < options.min_coordinates) {
    if (++attempts > 100 * options.min_coordinates) {
      throw std::runtime_error("grad_check: could not find enough differentiable coordinates");
    }
    const auto c = random_coord();
    if (!done.insert(c).second) continue;
    check(c.first, c.second);
  }
  return result;
}

}  // namespace dwave
