#pragma once

#include <atomic>
#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dwave/checkpoint.hpp"
#include "dwave/conditioning.hpp"
#include "dwave/denoiser.hpp"
#include "dwave/manifest.hpp"
#include "dwave/optimizer.hpp"
#include "dwave/views.hpp"

namespace dwave {

enum class TrainStage { Vocode, FinetunePairs, FinetuneCleanAudio };

std::string_view to_string(TrainStage stage);
TrainStage parse_stage(std::string_view name);

struct TrainConfig {
  TrainStage stage = TrainStage::Vocode;
  ViewProbabilities view_probs = ViewProbabilities::vocode();
  double lr_peak = 1e-4;
  std::uint64_t warmup_steps = 10000;
  std::uint64_t total_steps = 1000000;
  std::size_t batch_size = 32;
  std::size_t segment_frames = 24;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 10000;
  double grad_clip = 1.0;

  void validate() const;
  LrSchedule lr_schedule() const { return {lr_peak, warmup_steps, total_steps}; }

  /// "paper" (1M / 500k steps, batch 32) or "desk" (2000 / 1000 steps, batch 8)
  /// with the stage's default view probabilities.
  static TrainConfig preset(TrainStage stage, std::string_view scale);
};

std::string train_config_to_json(const TrainConfig& config);

/// One utterance held in memory for training. Waveforms are peak-normalized.
struct CorpusItem {
  std::string id;
  std::vector<double> clean;
  ViewMap clean_views;
  /// Fixed AVN view when the record carries mixed audio or AVN features.
  std::optional<FeatureSequence> noisy_view;
  /// Lip-channel stream used to fuse on-the-fly mixtures into AVN.
  std::optional<FeatureSequence> visual_stream;
  std::optional<std::vector<double>> interferer;
  InterfererKind interferer_kind = InterfererKind::None;
  double duration_s = 0.0;
};

struct DrawnExample {
  TrainingExample example;
  std::size_t item = 0;
  /// 1-based segment start frame.
  std::size_t start_frame = 1;
  ConditionView view = ConditionView::A;
};

class TrainingCorpus {
 public:
  TrainingCorpus(std::vector<CorpusItem> items, ViewBuilder builder, std::size_t hop);

  /// Utterance (prob. proportional to duration), segment, view, noise level, eps.
  DrawnExample draw(Rng& rng, const TrainConfig& config, const NoiseSchedule& schedule) const;

  std::size_t size() const { return items_.size(); }
  const CorpusItem& item(std::size_t i) const { return items_[i]; }
  const ViewBuilder& builder() const { return builder_; }
  std::size_t hop() const { return hop_; }
  /// False when some record never went through quality filtering.
  bool all_scored() const { return all_scored_; }
  void set_all_scored(bool v) { all_scored_ = v; }

  /// How often each view's features were read, indexed by ConditionView.
  std::array<std::size_t, 4> view_reads() const;

 private:
  FeatureSequence condition_for(const CorpusItem& item, ConditionView view, Rng& rng) const;

  std::vector<CorpusItem> items_;
  ViewBuilder builder_;
  std::size_t hop_;
  std::vector<double> cumulative_;
  bool all_scored_ = true;
  std::unique_ptr<std::array<std::atomic<std::size_t>, 4>> reads_ = std::make_unique<std::array<std::atomic<std::size_t>, 4>>();
};

/// Reads a manifest into a corpus. Stage 1 and the clean-audio variant only
/// touch clean audio; FinetunePairs needs mixed audio, an AVN feature file,
/// or an interferer for on-the-fly mixing on every record.
/// Only the views with nonzero probability in `config` are built.
TrainingCorpus load_corpus(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                           const TrainConfig& config, const FeatureConfig& features, std::size_t hop);

/// Fixed examples for held-out loss tracking.
std::vector<TrainingExample> draw_fixed_examples(const TrainingCorpus& corpus, std::size_t count, std::uint64_t seed,
                                                 const TrainConfig& config, const NoiseSchedule& schedule);

struct StepLog {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainOutputs {
  /// Periodic checkpoints land here as step_<N>.dwck plus final.dwck.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// JSON-lines {step, lr, loss, wall_ms}.
  std::optional<std::filesystem::path> log_path;
  std::function<void(const StepLog&)> on_step;
};

/// Runs config.total_steps optimizer steps starting from `start`. The step
/// counter restarts at 0 so each stage gets its own warmup and cosine decay.
Checkpoint train(Checkpoint start, const TrainingCorpus& corpus, const TrainConfig& config,
                 const NoiseSchedule& schedule, const TrainOutputs& outputs = {});

/// Stage 1: fresh parameters, vocoding on the (filtered) clean corpus.
Checkpoint train_stage1(const TrainingCorpus& corpus, const DenoiserConfig& denoiser, const TrainConfig& config,
                        const NoiseSchedule& schedule, const TrainOutputs& outputs = {});

/// Stage 2: continue from a checkpoint on noisy/clean pairs (or clean audio).
Checkpoint finetune_stage2(const TrainingCorpus& corpus, const Checkpoint& from, const TrainConfig& config,
                           const NoiseSchedule& schedule, const TrainOutputs& outputs = {});

}  // namespace dwave
