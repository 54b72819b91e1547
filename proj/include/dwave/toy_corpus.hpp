#pragma once

#include <filesystem>
#include <vector>

#include "dwave/manifest.hpp"
#include "dwave/rng.hpp"

namespace dwave {

/// Band-limited pseudo-speech: voiced syllables on a 125 Hz harmonic grid
/// with drifting formant envelopes, separated by short pauses. Harmonic
/// phases are fixed across the corpus, so the waveform is a deterministic
/// function of its spectral envelope.
std::vector<double> pseudo_speech(Rng& rng, std::size_t num_samples, double sample_rate);

/// Competing talker: same construction but with off-grid pitch and random
/// phases, so it never shares the target's harmonic structure.
std::vector<double> interfering_speech(Rng& rng, std::size_t num_samples, double sample_rate);

/// Coloured stationary noise with a random one-pole tilt and a slow
/// amplitude wobble.
std::vector<double> toy_noise(Rng& rng, std::size_t num_samples, double sample_rate);

struct ToyCorpusConfig {
  std::size_t num_utterances = 200;
  std::size_t num_heldout = 30;
  std::size_t num_interferers = 40;  // per kind
  double sample_rate = 8000.0;
  double min_seconds = 1.5;
  double max_seconds = 3.0;
  std::uint64_t seed = 1;
};

struct ToyCorpus {
  std::filesystem::path train_manifest;
  std::filesystem::path heldout_manifest;
  std::filesystem::path speech_interferers;
  std::filesystem::path noise_interferers;
};

/// Writes clean/, interferers/ and four manifests under `dir`.
ToyCorpus write_toy_corpus(const std::filesystem::path& dir, const ToyCorpusConfig& config);

}  // namespace dwave
