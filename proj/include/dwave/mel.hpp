#pragma once

#include <span>
#include <vector>

#include "dwave/features.hpp"

namespace dwave {

struct MelConfig {
  double sample_rate = 16000.0;
  std::size_t n_mels = 80;
  std::size_t hop = 640;
  std::size_t window = 1280;
  /// Zero-padded FFT size; 0 means "same as window".
  std::size_t n_fft = 0;
  double log_floor = -10.0;
};

/// Log mel-filterbank energies, one frame per hop: floor(len / hop) frames,
/// each Hann-windowed over `window` samples centred on its hop cell.
FeatureSequence extract_melproxy_features(std::span<const double> waveform, const MelConfig& config,
                                          ConditionView view = ConditionView::A);

/// Triangular HTK-style filterbank, n_mels x (n_fft/2 + 1), row-major.
std::vector<double> mel_filterbank(const MelConfig& config);

/// Mean absolute difference of log-mel matrices after scaling each signal
/// to unit RMS. Signals are truncated to the shorter length.
double log_mel_distance(std::span<const double> a, std::span<const double> b, const MelConfig& config);

}  // namespace dwave
