#include "dwave/wav.hpp"
#include "dwave/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dwave {

Waveform read_wav(const std::filesystem::path& path) {
  BinaryReader r(read_file_bytes(path), path.string());
  if (r.bytes(4) != "RIFF") throw std::runtime_error(path.string() + ": not a RIFF file");
  r.u32();
  if (r.bytes(4) != "WAVE") throw std::runtime_error(path.string() + ": not a WAVE file");
  Waveform wav;
  bool have_fmt = false;
  while (true) {
    const std::string id = r.bytes(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      const auto format = r.pod<std::uint16_t>();
      const auto channels = r.pod<std::uint16_t>();
      wav.sample_rate = r.u32();
      r.u32();
      r.pod<std::uint16_t>();
      const auto bits = r.pod<std::uint16_t>();
      if (format != 1 || bits != 16) throw std::runtime_error(path.string() + ": only 16-bit PCM is supported");
      if (channels != 1) throw std::runtime_error(path.string() + ": only mono audio is supported");
      if (size > 16) r.bytes(size - 16);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data chunk before fmt chunk");
      if (size % 2 != 0) throw std::runtime_error(path.string() + ": odd PCM byte count");
      wav.samples.resize(size / 2);
      for (auto& s : wav.samples) s = static_cast<double>(r.pod<std::int16_t>()) / 32768.0;
      return wav;
    } else {
      r.bytes(size + (size & 1));
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wav) {
  BinaryWriter w;
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
  w.bytes("RIFF", 4);
  w.u32(36 + data_bytes);
  w.bytes("WAVE", 4);
  w.bytes("fmt ", 4);
  w.u32(16);
  w.pod<std::uint16_t>(1);
  w.pod<std::uint16_t>(1);
  w.u32(wav.sample_rate);
  w.u32(wav.sample_rate * 2);
  w.pod<std::uint16_t>(2);
  w.pod<std::uint16_t>(16);
  w.bytes("data", 4);
  w.u32(data_bytes);
  for (double s : wav.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0);
    w.pod<std::int16_t>(static_cast<std::int16_t>(scaled));
  }
  w.commit_atomic(path);
}

double peak_amplitude(const std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

}  // namespace dwave
