#include "dwave/toy_corpus.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dwave/wav.hpp"

namespace dwave {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Voice {
  double f0_lo;
  double f0_hi;
  bool grid_pitch;   // snap f0 to multiples of 125 Hz
  bool fixed_phase;  // corpus-wide harmonic phases
};

double fixed_phase(std::size_t h) {
  // Fixed pseudo-random phase per harmonic, shared by every target utterance.
  Rng r(derive_seed(0x70a5e5ULL, static_cast<std::uint64_t>(h)));
  return uniform(r, 0.0, kTwoPi);
}

double formant_gain(double f, double f1, double f2, double f3) {
  auto bump = [&](double c, double w, double a) { return a * std::exp(-0.5 * (f - c) * (f - c) / (w * w)); };
  return 0.05 + bump(f1, 150.0, 1.0) + bump(f2, 250.0, 0.6) + bump(f3, 350.0, 0.3);
}

std::vector<double> syllable_stream(Rng& rng, std::size_t n, double sr, const Voice& voice) {
  std::vector<double> out(n, 0.0);
  const double nyquist = 0.5 * sr;
  std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.02, 0.15) * sr);
  while (pos < n) {
    const auto len = static_cast<std::size_t>(uniform(rng, 0.12, 0.30) * sr);
    const double amp = uniform(rng, 0.5, 1.0);
    double f0 = uniform(rng, voice.f0_lo, voice.f0_hi);
    if (voice.grid_pitch) f0 = 125.0 * std::max(1.0, std::round(f0 / 125.0));
    const double f1a = uniform(rng, 300.0, 900.0), f1b = uniform(rng, 300.0, 900.0);
    const double f2a = uniform(rng, 900.0, 2200.0), f2b = uniform(rng, 900.0, 2200.0);
    const double f3a = uniform(rng, 2200.0, 3400.0), f3b = uniform(rng, 2200.0, 3400.0);
    const std::size_t harmonics = static_cast<std::size_t>((nyquist - 200.0) / f0);
    std::vector<double> phases(harmonics + 1);
    for (std::size_t h = 1; h <= harmonics; ++h) phases[h] = voice.fixed_phase ? fixed_phase(h) : uniform(rng, 0.0, kTwoPi);

    const auto ramp = static_cast<std::size_t>(0.02 * sr);
    const std::size_t end = std::min(n, pos + len);
    // Envelopes change slowly; evaluate them on a coarse grid.
    constexpr std::size_t kBlock = 16;
    std::vector<double> gains(harmonics + 1);
    for (std::size_t b = pos; b < end; b += kBlock) {
      const double u = static_cast<double>(b - pos) / static_cast<double>(len);
      const double f1 = f1a + (f1b - f1a) * u, f2 = f2a + (f2b - f2a) * u, f3 = f3a + (f3b - f3a) * u;
      for (std::size_t h = 1; h <= harmonics; ++h) gains[h] = formant_gain(f0 * static_cast<double>(h), f1, f2, f3);
      for (std::size_t i = b; i < std::min(end, b + kBlock); ++i) {
        const std::size_t k = i - pos;
        double env = amp;
        if (k < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k) / ramp);
        if (len - k < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(len - k) / ramp);
        const double t = static_cast<double>(i) / sr;
        double v = 0.0;
        for (std::size_t h = 1; h <= harmonics; ++h) v += gains[h] * std::sin(kTwoPi * f0 * h * t + phases[h]);
        out[i] += env * v;
      }
    }
    pos += len + static_cast<std::size_t>(uniform(rng, 0.03, 0.15) * sr);
  }
  const double peak = peak_amplitude(out);
  if (peak > 0.0) {
    for (double& v : out) v *= 0.5 / peak;
  }
  return out;
}

std::filesystem::path write_clip(const std::filesystem::path& dir, const std::string& rel, const std::vector<double>& x,
                                 double sr) {
  const auto path = dir / rel;
  std::filesystem::create_directories(path.parent_path());
  write_wav(path, Waveform{x, static_cast<unsigned>(sr)});
  return rel;
}

}  // namespace

std::vector<double> pseudo_speech(Rng& rng, std::size_t n, double sr) {
  return syllable_stream(rng, n, sr, Voice{110.0, 270.0, true, true});
}

std::vector<double> interfering_speech(Rng& rng, std::size_t n, double sr) {
  return syllable_stream(rng, n, sr, Voice{140.0, 230.0, false, false});
}

std::vector<double> toy_noise(Rng& rng, std::size_t n, double sr) {
  const double pole = uniform(rng, -0.5, 0.95);
  const double wobble_hz = uniform(rng, 0.5, 3.0);
  const double wobble = uniform(rng, 0.0, 0.5);
  const auto white = standard_normal(rng, n);
  std::vector<double> out(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prev = pole * prev + white[i];
    out[i] = prev * (1.0 + wobble * std::sin(kTwoPi * wobble_hz * static_cast<double>(i) / sr));
  }
  const double peak = peak_amplitude(out);
  for (double& v : out) v *= 0.5 / peak;
  return out;
}

ToyCorpus write_toy_corpus(const std::filesystem::path& dir, const ToyCorpusConfig& c) {
  if (c.num_heldout >= c.num_utterances) throw std::invalid_argument("held-out split must leave training data");
  if (c.num_interferers == 0) throw std::invalid_argument("need at least one interferer per kind");
  std::filesystem::create_directories(dir);
  Manifest train, heldout, speech, noise;
  auto seconds = [&](Rng& r) { return static_cast<std::size_t>(uniform(r, c.min_seconds, c.max_seconds) * c.sample_rate); };

  for (std::size_t i = 0; i < c.num_utterances; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "utt%04zu", i);
    Rng rng(derive_seed(c.seed, std::string_view(id)));
    const auto x = pseudo_speech(rng, seconds(rng), c.sample_rate);
    UtteranceRecord r;
    r.id = id;
    r.clean_audio_path = write_clip(dir, std::string("clean/") + id + ".wav", x, c.sample_rate).string();
    r.duration_s = static_cast<double>(x.size()) / c.sample_rate;
    (i < c.num_utterances - c.num_heldout ? train : heldout).push_back(r);
  }
  for (std::size_t i = 0; i < c.num_interferers; ++i) {
    for (InterfererKind kind : {InterfererKind::Speech, InterfererKind::Noise}) {
      char id[32];
      std::snprintf(id, sizeof id, "%s%03zu", kind == InterfererKind::Speech ? "talker" : "noise", i);
      Rng rng(derive_seed(c.seed, std::string_view(id)));
      // Shorter than most targets so mixing has to loop them.
      const auto n = static_cast<std::size_t>(uniform(rng, 0.8, 2.0) * c.sample_rate);
      const auto x = kind == InterfererKind::Speech ? interfering_speech(rng, n, c.sample_rate)
                                                    : toy_noise(rng, n, c.sample_rate);
      UtteranceRecord r;
      r.id = id;
      r.clean_audio_path = write_clip(dir, std::string("interferers/") + id + ".wav", x, c.sample_rate).string();
      r.duration_s = static_cast<double>(n) / c.sample_rate;
      r.interferer_kind = kind;
      (kind == InterfererKind::Speech ? speech : noise).push_back(r);
    }
  }
  ToyCorpus out{dir / "train.jsonl", dir / "heldout.jsonl", dir / "speech_interferers.jsonl",
                dir / "noise_interferers.jsonl"};
  write_manifest(out.train_manifest, train);
  write_manifest(out.heldout_manifest, heldout);
  write_manifest(out.speech_interferers, speech);
  write_manifest(out.noise_interferers, noise);
  return out;
}

}  // namespace dwave
