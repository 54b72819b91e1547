#include "dwave/denoiser.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dwave {

using nn::Graph;
using nn::Matrix;
using nn::Tensor;

std::size_t DenoiserConfig::hop() const {
  return std::accumulate(upsample_factors.begin(), upsample_factors.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> DenoiserConfig::stage_channels() const {
  const std::size_t k_total = upsample_factors.size();
  std::vector<std::size_t> ch(k_total + 1);
  ch[0] = 2 * base_channels;
  for (std::size_t k = 1; k <= k_total; ++k) {
    const std::size_t shift = k == k_total ? 2 : (2 * k) / k_total;
    ch[k] = std::max<std::size_t>(4, (2 * base_channels) >> std::min<std::size_t>(shift, 2));
  }
  return ch;
}

void DenoiserConfig::validate() const {
  if (upsample_factors.empty()) throw std::invalid_argument("denoiser needs at least one upsampling factor");
  for (auto f : upsample_factors) {
    if (f == 0) throw std::invalid_argument("upsampling factor of zero");
  }
  if (feature_dim == 0 || base_channels == 0) throw std::invalid_argument("denoiser dims must be positive");
  if (noise_embed_dim < 2 || noise_embed_dim % 2 != 0) throw std::invalid_argument("noise_embed_dim must be even");
}

DenoiserConfig DenoiserConfig::desk() {
  DenoiserConfig c;
  c.upsample_factors = {4, 4, 2, 2};
  c.feature_dim = 80;
  c.base_channels = 32;
  c.noise_embed_dim = 128;
  return c;
}

std::size_t DenoiserParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::size_t DenoiserParams::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name == name) return i;
  }
  throw std::out_of_range("no parameter tensor named '" + name + "'");
}

bool DenoiserParams::all_finite() const {
  for (const auto& t : tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

namespace {

struct Layout {
  std::vector<Tensor> tensors;
  void add(std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    tensors.push_back(Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  }
  void conv(const std::string& name, std::size_t k, std::size_t cout, std::size_t cin) {
    add(name + ".w", {k, cout, cin});
    add(name + ".b", {cout});
  }
  void dense(const std::string& name, std::size_t cout, std::size_t cin) {
    add(name + ".w", {cout, cin});
    add(name + ".b", {cout});
  }
};

std::vector<Tensor> build_layout(const DenoiserConfig& c) {
  const auto& u = c.upsample_factors;
  const std::size_t K = u.size();
  const auto ch = c.stage_channels();
  const std::size_t hidden = c.noise_embed_dim;
  Layout L;
  L.dense("noise.fc1", hidden, c.noise_embed_dim);
  L.dense("noise.fc2", hidden, hidden);
  L.conv("cond.in", 3, ch[0], c.feature_dim);
  L.conv("wave.in", 3, ch[K], 1);
  for (std::size_t k = K; k >= 2; --k) {
    const std::string p = "down" + std::to_string(k);
    L.conv(p + ".down", u[k - 1], ch[k - 1], ch[k]);
    L.conv(p + ".skip", u[k - 1], ch[k - 1], ch[k]);
    L.conv(p + ".conv", 3, ch[k - 1], ch[k - 1]);
  }
  for (std::size_t k = 1; k <= K; ++k) {
    const std::string f = "film" + std::to_string(k);
    L.dense(f + ".noise", ch[k], hidden);
    L.conv(f + ".gamma", 1, ch[k], ch[k]);
    L.conv(f + ".beta", 1, ch[k], ch[k]);
    const std::string p = "up" + std::to_string(k);
    L.conv(p + ".up", u[k - 1], ch[k], ch[k - 1]);
    L.conv(p + ".skip", u[k - 1], ch[k], ch[k - 1]);
    L.conv(p + ".conv", 3, ch[k], ch[k]);
  }
  L.conv("out", 3, 1, ch[K]);
  return std::move(L.tensors);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

DenoiserParams init_denoiser(const DenoiserConfig& config, std::uint64_t seed) {
  config.validate();
  DenoiserParams p{config, build_layout(config)};
  Rng rng(seed);
  for (auto& t : p.tensors) {
    if (t.name.rfind("out.", 0) == 0) continue;  // zero predictor at step 0
    if (ends_with(t.name, ".b")) {
      if (ends_with(t.name, ".gamma.b")) std::fill(t.values.begin(), t.values.end(), 1.0);
      continue;
    }
    // conv [k, Cout, Cin] -> fan-in k * Cin; dense [Cout, Cin] -> Cin.
    const std::size_t fan_in = t.shape.size() == 3 ? t.shape[0] * t.shape[2] : t.shape[1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values) v = static_cast<double>(static_cast<float>(uniform(rng, -bound, bound)));
  }
  return p;
}

std::vector<double> noise_level_embedding(double sqrt_alpha_bar, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> e(dim);
  const double pos = 5000.0 * sqrt_alpha_bar;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(pos * freq);
    e[half + i] = std::cos(pos * freq);
  }
  return e;
}

std::vector<std::size_t> upsample_stage_lengths(std::size_t num_frames, std::span<const std::size_t> factors) {
  std::vector<std::size_t> out;
  std::size_t len = num_frames;
  for (auto f : factors) {
    if (f == 0) throw std::invalid_argument("upsampling factor of zero");
    len *= f;
    out.push_back(len);
  }
  return out;
}

std::vector<Matrix> upsample_condition(const FeatureSequence& c, std::span<const std::size_t> factors) {
  if (c.num_frames == 0 || factors.empty()) throw std::invalid_argument("upsample_condition needs frames and factors");
  for (auto f : factors) {
    if (f == 0) throw std::invalid_argument("upsampling factor of zero");
  }
  Matrix cur = Eigen::Map<const Eigen::MatrixXf>(c.values.data(), static_cast<Eigen::Index>(c.dim),
                                                 static_cast<Eigen::Index>(c.num_frames))
                   .cast<double>();
  std::vector<Matrix> stages;
  for (auto f : factors) {
    const auto u = static_cast<Eigen::Index>(f);
    Matrix next(cur.rows(), cur.cols() * u);
    for (Eigen::Index i = 0; i < cur.cols(); ++i) {
      for (Eigen::Index j = 0; j < u; ++j) next.col(i * u + j) = cur.col(i);
    }
    stages.push_back(next);
    cur = std::move(next);
  }
  return stages;
}

namespace {

void check_shapes(const DenoiserConfig& cfg, std::size_t x_len, const FeatureSequence& c) {
  if (c.dim != cfg.feature_dim) {
    throw std::invalid_argument("conditioning feature dim " + std::to_string(c.dim) + " != configured " +
                                std::to_string(cfg.feature_dim));
  }
  if (c.num_frames == 0) throw std::invalid_argument("conditioning sequence has no frames");
  if (c.values.size() != c.num_frames * c.dim) throw std::invalid_argument("conditioning matrix is malformed");
  if (x_len != cfg.hop() * c.num_frames) {
    throw std::invalid_argument("waveform length " + std::to_string(x_len) + " != hop " + std::to_string(cfg.hop()) +
                                " x frames " + std::to_string(c.num_frames));
  }
}

/// Builds the network on g and returns the output node (1 x N).
Graph::NodeId build_forward(Graph& g, const DenoiserParams& p, std::span<const double> x, const FeatureSequence& c,
                            double sqrt_alpha_bar) {
  const auto& cfg = p.config;
  check_shapes(cfg, x.size(), c);
  const std::size_t K = cfg.upsample_factors.size();
  auto idx = [&](const std::string& n) { return p.index_of(n); };

  const auto emb_vals = noise_level_embedding(sqrt_alpha_bar, cfg.noise_embed_dim);
  Matrix emb = Eigen::Map<const Matrix>(emb_vals.data(), static_cast<Eigen::Index>(emb_vals.size()), 1);
  auto e = g.input(std::move(emb), "noise.embedding");
  e = g.silu(g.linear(e, idx("noise.fc1.w"), idx("noise.fc1.b"), "noise.fc1"), "noise.act1");
  e = g.silu(g.linear(e, idx("noise.fc2.w"), idx("noise.fc2.b"), "noise.fc2"), "noise.act2");

  // Waveform branch, full resolution down to one step above frame rate.
  std::vector<Graph::NodeId> wave(K + 1);
  Matrix xin = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  wave[K] = g.conv1d(g.input(std::move(xin), "x_noisy"), idx("wave.in.w"), idx("wave.in.b"), 1, "wave.in");
  for (std::size_t k = K; k >= 2; --k) {
    const std::string p_ = "down" + std::to_string(k);
    auto a = g.downsample_conv(wave[k], idx(p_ + ".down.w"), idx(p_ + ".down.b"), p_ + ".down");
    a = g.conv1d(g.silu(a, p_ + ".act"), idx(p_ + ".conv.w"), idx(p_ + ".conv.b"), 1, p_ + ".conv");
    const auto s = g.downsample_conv(wave[k], idx(p_ + ".skip.w"), idx(p_ + ".skip.b"), p_ + ".skip");
    wave[k - 1] = g.add(a, s, p_ + ".out");
  }

  // Conditioning branch, frame rate up to sample rate, modulated per stage.
  Matrix cin = Eigen::Map<const Eigen::MatrixXf>(c.values.data(), static_cast<Eigen::Index>(c.dim),
                                                 static_cast<Eigen::Index>(c.num_frames))
                   .cast<double>();
  auto h = g.conv1d(g.input(std::move(cin), "condition"), idx("cond.in.w"), idx("cond.in.b"), 1, "cond.in");
  for (std::size_t k = 1; k <= K; ++k) {
    const std::string f = "film" + std::to_string(k);
    const auto level = g.linear(e, idx(f + ".noise.w"), idx(f + ".noise.b"), f + ".noise");
    const auto fin = g.silu(g.add_channel_vector(wave[k], level, f + ".in"), f + ".act");
    const auto gamma = g.conv1d(fin, idx(f + ".gamma.w"), idx(f + ".gamma.b"), 1, f + ".gamma");
    const auto beta = g.conv1d(fin, idx(f + ".beta.w"), idx(f + ".beta.b"), 1, f + ".beta");

    const std::string p_ = "up" + std::to_string(k);
    auto a = g.upsample_conv(g.silu(h, p_ + ".act_in"), idx(p_ + ".up.w"), idx(p_ + ".up.b"), p_ + ".up");
    a = g.silu(g.film(a, gamma, beta, p_ + ".film"), p_ + ".act");
    a = g.conv1d(a, idx(p_ + ".conv.w"), idx(p_ + ".conv.b"), 2, p_ + ".conv");
    const auto s = g.upsample_conv(h, idx(p_ + ".skip.w"), idx(p_ + ".skip.b"), p_ + ".skip");
    h = g.add(a, s, p_ + ".out");
  }
  return g.conv1d(g.silu(h, "out.act"), idx("out.w"), idx("out.b"), 1, "out");
}

}  // namespace

Signal denoise(const DenoiserParams& params, std::span<const double> x_noisy, const FeatureSequence& c,
               double sqrt_alpha_bar) {
  Graph g(params.tensors, false);
  const auto out = build_forward(g, params, x_noisy, c, sqrt_alpha_bar);
  const Matrix& y = g.value(out);
  if (!y.allFinite()) throw std::runtime_error("denoiser produced non-finite output");
  return Signal(y.data(), y.data() + y.size());
}

std::size_t DenoiserNet::signal_length(const FeatureSequence& c) const { return params_.config.hop() * c.num_frames; }

Signal DenoiserNet::predict_noise(std::span<const double> x_t, const FeatureSequence& c, double sqrt_alpha_bar) const {
  return denoise(params_, x_t, c, sqrt_alpha_bar);
}

GradientResult backprop_gradients(const DenoiserParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw std::invalid_argument("backprop_gradients: empty batch");
  GradientResult out;
  out.grads = nn::zeros_like(params.tensors);
  const double batch_scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (ex.eps.size() != ex.x0.size()) throw std::invalid_argument("backprop_gradients: eps/x0 length mismatch");
    const Signal x_t = forward_diffuse(ex.x0, ex.level.sqrt_alpha_bar, ex.eps);
    Graph g(params.tensors, true);
    const auto node = build_forward(g, params, x_t, ex.condition, ex.level.sqrt_alpha_bar);
    const Matrix& pred = g.value(node);
    const auto n = static_cast<double>(ex.eps.size());
    Matrix seed(1, pred.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
      const double r = pred(0, i) - ex.eps[static_cast<std::size_t>(i)];
      loss += std::abs(r);
      seed(0, i) = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * batch_scale / n;
    }
    out.loss += loss / n * batch_scale;
    g.backward(node, seed, out.grads);
  }
  return out;
}

double batch_loss(const DenoiserParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  const DenoiserNet net(params);
  double total = 0.0;
  for (const auto& ex : batch) total += training_loss(net, ex.x0, ex.condition, ex.level, ex.eps);
  return total / static_cast<double>(batch.size());
}

}  // namespace dwave
