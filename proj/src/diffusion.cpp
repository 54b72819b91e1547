#include "dwave/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dwave {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

void require_noise_level(double sqrt_alpha_bar) {
  if (!(sqrt_alpha_bar > 0.0 && sqrt_alpha_bar <= 1.0)) {
    throw std::invalid_argument("sqrt_alpha_bar must lie in (0, 1], got " +
                                std::to_string(sqrt_alpha_bar));
  }
}

std::size_t parse_count(std::string_view text, std::string_view spec) {
  if (text.empty()) throw std::invalid_argument("sampler '" + std::string(spec) + "' lacks a step count");
  std::size_t n = 0;
  for (char ch : text) {
    if (ch < '0' || ch > '9') throw std::invalid_argument("bad sampler step count in '" + std::string(spec) + "'");
    n = n * 10 + static_cast<std::size_t>(ch - '0');
  }
  return n;
}

}  // namespace

Signal forward_diffuse(std::span<const double> x0, double sqrt_alpha_bar, std::span<const double> eps) {
  require_same_length(x0.size(), eps.size(), "forward_diffuse");
  require_noise_level(sqrt_alpha_bar);
  const double noise_scale = std::sqrt(std::max(0.0, 1.0 - sqrt_alpha_bar * sqrt_alpha_bar));
  Signal out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sqrt_alpha_bar * x0[i] + noise_scale * eps[i];
  return out;
}

Signal predict_x0(std::span<const double> x_t, std::span<const double> eps_hat, double sqrt_alpha_bar) {
  require_same_length(x_t.size(), eps_hat.size(), "predict_x0");
  require_noise_level(sqrt_alpha_bar);
  const double noise_scale = std::sqrt(std::max(0.0, 1.0 - sqrt_alpha_bar * sqrt_alpha_bar));
  Signal out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - noise_scale * eps_hat[i]) / sqrt_alpha_bar;
  return out;
}

Signal posterior_mean(std::span<const double> x_t, std::span<const double> eps_hat, std::size_t t,
                      const NoiseSchedule& schedule, MeanCoefficient coef) {
  if (t < 1 || t > schedule.steps()) {
    throw std::out_of_range("posterior_mean: step " + std::to_string(t) + " outside [1, " +
                            std::to_string(schedule.steps()) + "]");
  }
  require_same_length(x_t.size(), eps_hat.size(), "posterior_mean");
  const double alpha = schedule.alpha(t);
  const double lead = coef == MeanCoefficient::Standard ? 1.0 / std::sqrt(alpha)
                                                        : 1.0 / std::sqrt(schedule.alpha_bar(t));
  const double eps_coef = (1.0 - alpha) / std::sqrt(1.0 - schedule.alpha_bar(t));
  Signal out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = lead * (x_t[i] - eps_coef * eps_hat[i]);
  return out;
}

double training_loss(const NoisePredictor& model, std::span<const double> x0, const FeatureSequence& c,
                     const NoiseLevel& level, std::span<const double> eps) {
  require_same_length(model.signal_length(c), x0.size(), "training_loss (conditioning vs waveform)");
  require_same_length(x0.size(), eps.size(), "training_loss");
  if (x0.empty()) throw std::invalid_argument("training_loss: empty segment");
  const Signal x_t = forward_diffuse(x0, level.sqrt_alpha_bar, eps);
  const Signal eps_hat = model.predict_noise(x_t, c, level.sqrt_alpha_bar);
  require_same_length(eps_hat.size(), eps.size(), "training_loss (prediction)");
  double total = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) total += std::abs(eps[i] - eps_hat[i]);
  return total / static_cast<double>(eps.size());
}

SamplerConfig parse_sampler(std::string_view spec, std::size_t schedule_steps) {
  SamplerConfig cfg;
  if (spec == "ancestral") {
    cfg.kind = SamplerKind::Ancestral;
    cfg.num_steps = schedule_steps;
  } else if (spec.starts_with("cont-")) {
    cfg.kind = SamplerKind::ContinuousFewStep;
    cfg.num_steps = parse_count(spec.substr(5), spec);
  } else if (spec.starts_with("ddim-")) {
    cfg.kind = SamplerKind::Ddim;
    cfg.num_steps = parse_count(spec.substr(5), spec);
    cfg.eta = 0.0;
  } else {
    throw std::invalid_argument("unknown sampler '" + std::string(spec) +
                                "' (expected ancestral, cont-N or ddim-K)");
  }
  if (cfg.num_steps < 1 || cfg.num_steps > schedule_steps) {
    throw std::invalid_argument("sampler '" + std::string(spec) + "' needs 1 <= steps <= " +
                                std::to_string(schedule_steps));
  }
  return cfg;
}

Signal ancestral_sample(const NoisePredictor& model, const FeatureSequence& c,
                        const NoiseSchedule& schedule, const SamplerConfig& config) {
  if (config.kind == SamplerKind::Ddim || config.num_steps != schedule.steps()) {
    throw std::invalid_argument("ancestral_sample: config must request exactly T = " +
                                std::to_string(schedule.steps()) + " steps");
  }
  Rng rng(config.seed);
  const std::size_t n = model.signal_length(c);
  Signal x = standard_normal(rng, n);
  for (std::size_t t = schedule.steps(); t >= 1; --t) {
    const Signal eps_hat = model.predict_noise(x, c, schedule.sqrt_alpha_bar(t));
    Signal mean = posterior_mean(x, eps_hat, t, schedule, config.mean_coefficient);
    if (t > 1) {
      const double sigma = std::sqrt(schedule.posterior_variance(t));
      const Signal z = standard_normal(rng, n);
      for (std::size_t i = 0; i < n; ++i) mean[i] += sigma * z[i];
    }
    x = std::move(mean);
  }
  return x;
}

Signal ddim_sample(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
                   const SamplerConfig& config) {
  if (config.kind != SamplerKind::Ddim) throw std::invalid_argument("ddim_sample: config kind is not Ddim");
  if (config.eta < 0.0) throw std::invalid_argument("ddim_sample: eta must be >= 0");
  const auto tau = even_step_indices(schedule.steps(), config.num_steps);
  Rng rng(config.seed);
  const std::size_t n = model.signal_length(c);
  Signal x = standard_normal(rng, n);
  for (std::size_t k = tau.size(); k >= 1; --k) {
    const std::size_t t = tau[k - 1];
    const double sab = schedule.sqrt_alpha_bar(t);
    const Signal eps_hat = model.predict_noise(x, c, sab);
    Signal x0 = predict_x0(x, eps_hat, sab);
    if (k == 1) {
      x = std::move(x0);
      break;
    }
    const std::size_t prev = tau[k - 2];
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(prev);
    const double sigma =
        config.eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_prev);
    const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
    const double sq_prev = std::sqrt(ab_prev);
    Signal next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = sq_prev * x0[i] + dir * eps_hat[i];
    if (sigma > 0.0) {
      const Signal z = standard_normal(rng, n);
      for (std::size_t i = 0; i < n; ++i) next[i] += sigma * z[i];
    }
    x = std::move(next);
  }
  return x;
}

Signal sample(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
              const SamplerConfig& config) {
  switch (config.kind) {
    case SamplerKind::Ancestral:
      return ancestral_sample(model, c, schedule, config);
    case SamplerKind::ContinuousFewStep: {
      const NoiseSchedule reduced = subsample_schedule(schedule, config.num_steps);
      SamplerConfig inner = config;
      inner.kind = SamplerKind::Ancestral;
      return ancestral_sample(model, c, reduced, inner);
    }
    case SamplerKind::Ddim:
      return ddim_sample(model, c, schedule, config);
  }
  throw std::logic_error("unhandled sampler kind");
}

}  // namespace dwave
