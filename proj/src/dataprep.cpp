#include "dwave/dataprep.hpp"
#include "dwave/parallel.hpp"
#include "dwave/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dwave {

namespace {

double mean_power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> loop_to_length(std::span<const double> interferer, std::size_t length, std::size_t crossfade) {
  if (interferer.empty()) throw std::invalid_argument("cannot loop an empty interferer");
  if (interferer.size() >= length) return {interferer.begin(), interferer.begin() + static_cast<std::ptrdiff_t>(length)};
  crossfade = std::min(crossfade, interferer.size() / 2);
  std::vector<double> out(interferer.begin(), interferer.end());
  out.reserve(length + interferer.size());
  while (out.size() < length) {
    const std::size_t base = out.size() - crossfade;
    for (std::size_t i = 0; i < crossfade; ++i) {
      const double w = static_cast<double>(i + 1) / static_cast<double>(crossfade + 1);
      out[base + i] = (1.0 - w) * out[base + i] + w * interferer[i];
    }
    out.insert(out.end(), interferer.begin() + static_cast<std::ptrdiff_t>(crossfade), interferer.end());
  }
  out.resize(length);
  return out;
}

MixResult mix_at_snr(std::span<const double> speech, std::span<const double> interferer, double snr_db,
                     double sample_rate) {
  if (speech.empty()) throw std::invalid_argument("mix_at_snr: empty speech");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("mix_at_snr: non-finite SNR");
  const double p_speech = mean_power(speech);
  if (p_speech == 0.0) throw std::invalid_argument("mix_at_snr: speech is all zeros");
  const auto crossfade = static_cast<std::size_t>(std::lround(0.010 * sample_rate));
  const auto noise = loop_to_length(interferer, speech.size(), crossfade);
  const double p_noise = mean_power(noise);
  if (p_noise == 0.0) throw std::invalid_argument("mix_at_snr: interferer is all zeros");
  MixResult out;
  out.interferer_scale = std::sqrt(p_speech / (p_noise * std::pow(10.0, snr_db / 10.0)));
  out.mixed.resize(speech.size());
  for (std::size_t i = 0; i < speech.size(); ++i) out.mixed[i] = speech[i] + out.interferer_scale * noise[i];
  return out;
}

double measure_snr_db(std::span<const double> speech, std::span<const double> scaled_interferer) {
  const std::size_t n = std::min(speech.size(), scaled_interferer.size());
  return 10.0 * std::log10(mean_power(speech.first(n)) / mean_power(scaled_interferer.first(n)));
}

double sample_snr(InterfererKind kind, Rng& rng) {
  switch (kind) {
    case InterfererKind::Speech: return uniform(rng, -15.0, 5.0);
    case InterfererKind::Noise: return uniform(rng, -10.0, 10.0);
    case InterfererKind::None: break;
  }
  throw std::invalid_argument("sample_snr: no SNR band for interferer kind None");
}

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw std::invalid_argument("si_sdr: length mismatch");
  double ref_energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += estimate[i] * reference[i];
  }
  if (ref_energy == 0.0) throw std::invalid_argument("si_sdr: reference is all zeros");
  const double alpha = dot / ref_energy;
  double target = 0.0, error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double e = s - estimate[i];
    target += s * s;
    error += e * e;
  }
  if (error <= target * 1e-10 || error < std::numeric_limits<double>::min()) return kSiSdrClamp;
  if (target == 0.0) return -kSiSdrClamp;
  return std::min(kSiSdrClamp, 10.0 * std::log10(target / error));
}

double OraclePairEstimator::score(std::span<const double> waveform,
                                  std::optional<std::span<const double>> reference) const {
  if (!reference) throw std::invalid_argument("oracle estimator requires a clean reference");
  const std::size_t n = std::min(waveform.size(), reference->size());
  return si_sdr(waveform.first(n), reference->first(n));
}

double EnergyHeuristicEstimator::score(std::span<const double> x, std::optional<std::span<const double>>) const {
  if (x.size() < frame_) throw std::invalid_argument("energy estimator: signal shorter than one frame");
  const std::size_t frames = x.size() / frame_;
  std::vector<double> energies;
  double peakiness = 0.0;
  std::size_t active = 0;
  // Real DFT by direct evaluation of a coarse band grid keeps this estimator
  // dependency-free; 32 bands are enough to tell tones from broadband noise.
  constexpr std::size_t kBands = 32;
  for (std::size_t f = 0; f < frames; ++f) {
    const auto seg = x.subspan(f * frame_, frame_);
    const double e = mean_power(seg);
    energies.push_back(e);
    if (e <= 0.0) continue;
    std::array<double, kBands> band{};
    for (std::size_t b = 0; b < kBands; ++b) {
      double re = 0.0, im = 0.0;
      const double w = M_PI * (static_cast<double>(b) + 0.5) / static_cast<double>(kBands);
      for (std::size_t i = 0; i < frame_; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(frame_));
        re += hann * seg[i] * std::cos(w * static_cast<double>(i));
        im -= hann * seg[i] * std::sin(w * static_cast<double>(i));
      }
      band[b] = re * re + im * im + 1e-20;
    }
    double am = 0.0, log_gm = 0.0;
    for (double p : band) {
      am += p;
      log_gm += std::log(p);
    }
    am /= kBands;
    log_gm /= kBands;
    peakiness += 10.0 * (std::log10(am) - log_gm / std::log(10.0));
    ++active;
  }
  if (active == 0) return -kSiSdrClamp;
  std::sort(energies.begin(), energies.end());
  const double lo = energies[energies.size() / 10] + 1e-20;
  const double hi = energies[(energies.size() * 9) / 10] + 1e-20;
  return peakiness / static_cast<double>(active) + 0.5 * 10.0 * std::log10(hi / lo);
}

std::unique_ptr<QualityEstimator> make_estimator(std::string_view name) {
  if (name == "oracle" || name == "oracle-pair") return std::make_unique<OraclePairEstimator>();
  if (name == "energy" || name == "energy-heuristic") return std::make_unique<EnergyHeuristicEstimator>();
  throw std::invalid_argument("unknown quality estimator '" + std::string(name) + "' (oracle | energy)");
}

double estimate_quality(UtteranceRecord& record, const QualityEstimator& estimator,
                        const std::filesystem::path& manifest_dir) {
  const bool has_mix = record.mixed_audio_path.has_value();
  const auto probe_path = resolve_path(manifest_dir, has_mix ? *record.mixed_audio_path : record.clean_audio_path);
  const Waveform probe = read_wav(probe_path);
  double score = 0.0;
  if (estimator.needs_reference()) {
    if (!has_mix) {
      // The clean file is its own reference; an oracle cannot score it.
      throw std::invalid_argument(record.id + ": oracle estimator needs a mixed signal and a clean reference");
    }
    const Waveform ref = read_wav(resolve_path(manifest_dir, record.clean_audio_path));
    score = estimator.score(probe.samples, std::span<const double>(ref.samples));
  } else {
    score = estimator.score(probe.samples, std::nullopt);
  }
  record.quality_score = score;
  return score;
}

FilterResult filter_manifest(const Manifest& manifest, double threshold_db, const QualityEstimator& estimator,
                             const std::filesystem::path& manifest_dir) {
  Manifest scored = manifest;
  parallel_for(scored.size(), [&](std::size_t i) {
    if (!scored[i].quality_score) estimate_quality(scored[i], estimator, manifest_dir);
  });
  FilterResult out;
  out.report.threshold_db = threshold_db;
  out.report.total = scored.size();
  for (auto& r : scored) {
    out.report.total_hours += r.duration_s / 3600.0;
    if (*r.quality_score > threshold_db) {
      out.report.kept_hours += r.duration_s / 3600.0;
      out.kept.push_back(std::move(r));
    }
  }
  out.report.kept = out.kept.size();
  return out;
}

std::string rebase_path(const std::filesystem::path& from_dir, const std::string& p, const std::filesystem::path& to_dir) {
  const auto abs = std::filesystem::absolute(resolve_path(from_dir, p)).lexically_normal();
  return abs.lexically_proximate(std::filesystem::absolute(to_dir).lexically_normal()).generic_string();
}

MixCorpusResult mix_corpus(const Manifest& clean, const std::filesystem::path& clean_dir, const Manifest& interferers,
                           const std::filesystem::path& interferer_dir, std::optional<InterfererKind> kind,
                           std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (kind == InterfererKind::None) throw std::invalid_argument("mix_corpus: kind none has no SNR band");
  std::vector<std::size_t> speech_pool, noise_pool;
  for (std::size_t i = 0; i < interferers.size(); ++i) {
    const auto k = interferers[i].interferer_kind;
    if (k == InterfererKind::Speech) speech_pool.push_back(i);
    if (k == InterfererKind::Noise) noise_pool.push_back(i);
  }
  std::filesystem::create_directories(out_dir / "mixed");

  std::vector<std::optional<UtteranceRecord>> rows(clean.size());
  std::vector<std::string> errors(clean.size());
  parallel_for(clean.size(), [&](std::size_t i) {
    const UtteranceRecord& src = clean[i];
    try {
      Rng rng(derive_seed(seed, std::string_view(src.id)));
      InterfererKind k = kind ? *kind : (uniform_index(rng, 2) == 0 ? InterfererKind::Speech : InterfererKind::Noise);
      const auto& pool = k == InterfererKind::Speech ? speech_pool : noise_pool;
      if (pool.empty()) throw std::runtime_error("no " + std::string(to_string(k)) + " interferers in pool");
      const UtteranceRecord& itf = interferers[pool[uniform_index(rng, pool.size())]];
      const double snr = sample_snr(k, rng);

      const Waveform speech = read_wav(resolve_path(clean_dir, src.clean_audio_path));
      const Waveform noise = read_wav(resolve_path(interferer_dir, itf.clean_audio_path));
      if (speech.sample_rate != noise.sample_rate) throw std::runtime_error("sample rate mismatch with " + itf.id);
      MixResult mix = mix_at_snr(speech.samples, noise.samples, snr, speech.sample_rate);
      const double peak = peak_amplitude(mix.mixed);
      if (peak > 0.99) {
        for (double& v : mix.mixed) v *= 0.99 / peak;
      }
      const std::string rel = "mixed/" + src.id + ".wav";
      write_wav(out_dir / rel, Waveform{std::move(mix.mixed), speech.sample_rate});

      UtteranceRecord r = src;
      r.clean_audio_path = rebase_path(clean_dir, src.clean_audio_path, out_dir);
      for (auto& [view, path] : r.feature_paths) path = rebase_path(clean_dir, path, out_dir);
      r.feature_paths.erase(ConditionView::AVN);
      r.mixed_audio_path = rel;
      r.interferer_audio_path = rebase_path(interferer_dir, itf.clean_audio_path, out_dir);
      r.interferer_kind = k;
      r.snr_db = snr;
      r.quality_score.reset();
      r.enhanced_audio_path.reset();
      rows[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  MixCorpusResult out;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (rows[i]) {
      out.mixed.push_back(std::move(*rows[i]));
    } else {
      out.failures.push_back({clean[i].id, errors[i]});
    }
  }
  return out;
}

double threshold_preset(std::string_view name) {
  if (name == "av2wav-23") return 23.0;
  if (name == "av2wav-25") return 25.0;
  throw std::invalid_argument("unknown threshold preset '" + std::string(name) + "'");
}

}  // namespace dwave
