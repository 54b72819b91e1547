#pragma once

#include <filesystem>
#include <vector>

namespace dwave {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1)
  unsigned sample_rate = 16000;
};

/// 16-bit PCM mono RIFF/WAVE.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wav);

/// Returns max |x|; 0 for silence.
double peak_amplitude(const std::vector<double>& x);

}  // namespace dwave
