#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dwave/manifest.hpp"
#include "dwave/rng.hpp"

namespace dwave {

struct MixResult {
  std::vector<double> mixed;
  /// Gain applied to the (looped) interferer.
  double interferer_scale = 0.0;
};

/// Loops a short interferer with a linear crossfade of `crossfade` samples
/// until it covers `length` samples, then truncates.
std::vector<double> loop_to_length(std::span<const double> interferer, std::size_t length, std::size_t crossfade);

/// speech + g * interferer with g chosen so the power ratio over the speech
/// span is exactly snr_db. Interferers shorter than the speech are looped
/// with a 10 ms crossfade.
MixResult mix_at_snr(std::span<const double> speech, std::span<const double> interferer, double snr_db,
                     double sample_rate = 16000.0);

/// 10 log10(P_speech / P_interferer) over the common span.
double measure_snr_db(std::span<const double> speech, std::span<const double> scaled_interferer);

/// Speech: U[-15, 5] dB. Noise: U[-10, 10] dB.
double sample_snr(InterfererKind kind, Rng& rng);

inline constexpr double kSiSdrClamp = 100.0;

/// Scale-invariant SDR in dB, clamped at +100 when the error vanishes.
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

class QualityEstimator {
 public:
  virtual ~QualityEstimator() = default;
  virtual std::string name() const = 0;
  virtual bool needs_reference() const = 0;
  virtual double score(std::span<const double> waveform, std::optional<std::span<const double>> reference) const = 0;
};

/// SI-SDR against the clean reference.
class OraclePairEstimator final : public QualityEstimator {
 public:
  std::string name() const override { return "oracle"; }
  bool needs_reference() const override { return true; }
  double score(std::span<const double> waveform, std::optional<std::span<const double>> reference) const override;
};

/// Reference-free proxy: mean spectral peakiness (arithmetic over geometric
/// mean of the power spectrum) plus half the frame-energy dynamic range.
class EnergyHeuristicEstimator final : public QualityEstimator {
 public:
  explicit EnergyHeuristicEstimator(std::size_t frame = 512) : frame_(frame) {}
  std::string name() const override { return "energy"; }
  bool needs_reference() const override { return false; }
  double score(std::span<const double> waveform, std::optional<std::span<const double>> reference) const override;

 private:
  std::size_t frame_;
};

std::unique_ptr<QualityEstimator> make_estimator(std::string_view name);

/// Scores the record's mixed audio (or clean audio when no mix exists) and
/// stores the result in record.quality_score.
double estimate_quality(UtteranceRecord& record, const QualityEstimator& estimator,
                        const std::filesystem::path& manifest_dir = {});

struct FilterReport {
  double threshold_db = 0.0;
  std::size_t total = 0;
  std::size_t kept = 0;
  double total_hours = 0.0;
  double kept_hours = 0.0;
};

struct FilterResult {
  Manifest kept;
  FilterReport report;
};

/// Keeps records whose score is strictly above threshold_db, preserving
/// order. Records without a cached score are scored with `estimator`.
FilterResult filter_manifest(const Manifest& manifest, double threshold_db, const QualityEstimator& estimator,
                             const std::filesystem::path& manifest_dir = {});

struct ItemFailure {
  std::string id;
  std::string error;
};

struct MixCorpusResult {
  Manifest mixed;
  std::vector<ItemFailure> failures;
};

/// Mixes each clean record with an interferer from the pool at an SNR drawn
/// from the kind's band. With no kind given each utterance draws speech or
/// noise with equal odds. Per-utterance randomness comes from (seed, id).
/// Mixtures that would clip are scaled down as a whole. WAVs land in
/// out_dir/mixed/, and paths in the result are relative to out_dir.
MixCorpusResult mix_corpus(const Manifest& clean, const std::filesystem::path& clean_dir, const Manifest& interferers,
                           const std::filesystem::path& interferer_dir, std::optional<InterfererKind> kind,
                           std::uint64_t seed, const std::filesystem::path& out_dir);

/// Path of `p` (relative to from_dir) re-expressed relative to to_dir.
std::string rebase_path(const std::filesystem::path& from_dir, const std::string& p, const std::filesystem::path& to_dir);

/// Named thresholds: "av2wav-23" and "av2wav-25".
double threshold_preset(std::string_view name);

}  // namespace dwave
