#include "dwave/mel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace dwave {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t fft_size(const MelConfig& c) { return c.n_fft == 0 ? c.window : std::max(c.n_fft, c.window); }

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void power_spectrum(std::vector<double>& power) {
    fftw_execute(plan_);
    power.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

std::vector<double> mel_filterbank(const MelConfig& c) {
  const std::size_t n_fft = fft_size(c);
  const std::size_t bins = n_fft / 2 + 1;
  const double nyquist = c.sample_rate / 2.0;
  const double mel_hi = hz_to_mel(nyquist);
  std::vector<double> edges(c.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(c.n_mels + 1));
  }
  std::vector<double> fb(c.n_mels * bins, 0.0);
  for (std::size_t m = 0; m < c.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * c.sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb[m * bins + k] = w;
      total += w;
    }
    if (total == 0.0) {
      // Narrower than one FFT bin: take the bin nearest the centre.
      const auto k = static_cast<std::size_t>(std::lround(mid * static_cast<double>(n_fft) / c.sample_rate));
      fb[m * bins + std::min(k, bins - 1)] = 1.0;
    }
  }
  return fb;
}

FeatureSequence extract_melproxy_features(std::span<const double> waveform, const MelConfig& c,
                                          ConditionView view) {
  if (waveform.empty()) throw std::invalid_argument("extract_melproxy_features: empty waveform");
  if (c.hop == 0 || c.window == 0 || c.n_mels == 0) throw std::invalid_argument("mel config has a zero size");
  if (waveform.size() < c.window) {
    throw std::invalid_argument("extract_melproxy_features: waveform shorter than one window (" +
                                std::to_string(waveform.size()) + " < " + std::to_string(c.window) + ")");
  }
  const std::size_t n_fft = fft_size(c);
  const std::size_t bins = n_fft / 2 + 1;
  const std::size_t frames = waveform.size() / c.hop;
  const auto fb = mel_filterbank(c);

  std::vector<double> hann(c.window);
  for (std::size_t i = 0; i < c.window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(c.window));
  }

  FeatureSequence out(frames, c.n_mels, view, c.sample_rate / static_cast<double>(c.hop));
  RealFft fft(n_fft);
  std::vector<double> power;
  const auto len = static_cast<std::ptrdiff_t>(waveform.size());
  for (std::size_t l = 0; l < frames; ++l) {
    double* buf = fft.input();
    std::fill(buf, buf + n_fft, 0.0);
    const auto start = static_cast<std::ptrdiff_t>(l * c.hop + c.hop / 2) - static_cast<std::ptrdiff_t>(c.window / 2);
    for (std::size_t i = 0; i < c.window; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < len) buf[i] = waveform[static_cast<std::size_t>(idx)] * hann[i];
    }
    fft.power_spectrum(power);
    for (std::size_t m = 0; m < c.n_mels; ++m) {
      double e = 0.0;
      const double* row = fb.data() + m * bins;
      for (std::size_t k = 0; k < bins; ++k) e += row[k] * power[k];
      const double logged = e > 0.0 ? std::log(e) : c.log_floor;
      out.at(l, m) = static_cast<float>(std::max(logged, c.log_floor));
    }
  }
  return out;
}

double log_mel_distance(std::span<const double> a, std::span<const double> b, const MelConfig& c) {
  const std::size_t n = std::min(a.size(), b.size());
  auto unit_rms = [n](std::span<const double> x) {
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += x[i] * x[i];
    const double rms = std::sqrt(energy / static_cast<double>(n));
    std::vector<double> out(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    if (rms > 0.0) {
      for (auto& v : out) v /= rms;
    }
    return out;
  };
  const auto fa = extract_melproxy_features(unit_rms(a), c);
  const auto fb = extract_melproxy_features(unit_rms(b), c);
  double total = 0.0;
  for (std::size_t i = 0; i < fa.values.size(); ++i) total += std::abs(static_cast<double>(fa.values[i]) - fb.values[i]);
  return total / static_cast<double>(fa.values.size());
}

}  // namespace dwave
