#include "dwave/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dwave/dataprep.hpp"
#include "dwave/parallel.hpp"
#include "dwave/wav.hpp"

namespace dwave {

namespace {

using nlohmann::json;

std::vector<double> peak_normalized(std::vector<double> x) {
  const double peak = peak_amplitude(x);
  if (peak > 0.0) {
    for (double& v : x) v /= peak;
  }
  return x;
}

std::vector<double> load_audio(const std::filesystem::path& path, double sample_rate) {
  const Waveform w = read_wav(path);
  if (static_cast<double>(w.sample_rate) != sample_rate) {
    throw std::runtime_error(path.string() + ": sample rate " + std::to_string(w.sample_rate) + " != " +
                             std::to_string(static_cast<long>(sample_rate)));
  }
  return w.samples;
}

void check_alignment(const FeatureSequence& f, std::size_t samples, std::size_t hop, const std::string& id) {
  const std::size_t frames = samples / hop;
  const std::size_t diff = f.num_frames > frames ? f.num_frames - frames : frames - f.num_frames;
  if (diff > 1) {
    throw std::runtime_error(id + ": " + std::string(to_string(f.view)) + " view has " + std::to_string(f.num_frames) +
                             " frames but audio spans " + std::to_string(frames));
  }
}

std::vector<ConditionView> needed_views(const ViewProbabilities& probs) {
  std::vector<ConditionView> out;
  for (auto v : {ConditionView::AV, ConditionView::A, ConditionView::V, ConditionView::AVN}) {
    if (probs.of(v) > 0.0) out.push_back(v);
  }
  return out;
}

// Cuts x0 and condition to a common frame count so segments stay aligned.
void trim_to_frames(CorpusItem& item, std::size_t hop) {
  std::size_t frames = item.clean.size() / hop;
  for (const auto& [view, f] : item.clean_views) frames = std::min(frames, f.num_frames);
  if (item.noisy_view) frames = std::min(frames, item.noisy_view->num_frames);
  if (item.visual_stream) frames = std::min(frames, item.visual_stream->num_frames);
  if (frames == 0) throw std::runtime_error(item.id + ": utterance shorter than one frame");
  for (auto& [view, f] : item.clean_views) f = f.slice(0, frames);
  if (item.noisy_view) item.noisy_view = item.noisy_view->slice(0, frames);
  if (item.visual_stream) item.visual_stream = item.visual_stream->slice(0, frames);
  item.clean.resize(frames * hop);
}

}  // namespace

std::string_view to_string(TrainStage stage) {
  switch (stage) {
    case TrainStage::Vocode: return "vocode";
    case TrainStage::FinetunePairs: return "finetune-pairs";
    case TrainStage::FinetuneCleanAudio: return "finetune-clean-audio";
  }
  return "?";
}

TrainStage parse_stage(std::string_view name) {
  if (name == "vocode") return TrainStage::Vocode;
  if (name == "finetune-pairs") return TrainStage::FinetunePairs;
  if (name == "finetune-clean-audio") return TrainStage::FinetuneCleanAudio;
  throw std::invalid_argument("unknown training stage: " + std::string(name));
}

void TrainConfig::validate() const {
  view_probs.validate();
  if (warmup_steps > total_steps) throw std::invalid_argument("warmup_steps must be <= total_steps");
  if (total_steps == 0) throw std::invalid_argument("total_steps must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (segment_frames == 0) throw std::invalid_argument("segment_frames must be >= 1");
  if (!(lr_peak > 0.0) || !std::isfinite(lr_peak)) throw std::invalid_argument("lr_peak must be > 0");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be > 0");
}

TrainConfig TrainConfig::preset(TrainStage stage, std::string_view scale) {
  TrainConfig c;
  c.stage = stage;
  switch (stage) {
    case TrainStage::Vocode: c.view_probs = ViewProbabilities::vocode(); break;
    case TrainStage::FinetunePairs: c.view_probs = ViewProbabilities::finetune_pairs(); break;
    case TrainStage::FinetuneCleanAudio: c.view_probs = ViewProbabilities::finetune_clean_audio(); break;
  }
  const bool first = stage == TrainStage::Vocode;
  if (scale == "paper") {
    c.total_steps = first ? 1000000 : 500000;
    c.warmup_steps = 10000;
    c.batch_size = 32;
    c.checkpoint_every = 10000;
  } else if (scale == "desk") {
    c.total_steps = first ? 2000 : 1000;
    c.warmup_steps = first ? 200 : 100;
    c.batch_size = 16;
    c.lr_peak = 1e-3;
    c.checkpoint_every = 500;
  } else {
    throw std::invalid_argument("unknown preset: " + std::string(scale));
  }
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["stage"] = std::string(to_string(c.stage));
  j["view_probs"] = {{"av", c.view_probs.av}, {"a", c.view_probs.a}, {"v", c.view_probs.v}, {"avn", c.view_probs.avn}};
  j["lr_peak"] = c.lr_peak;
  j["warmup_steps"] = c.warmup_steps;
  j["total_steps"] = c.total_steps;
  j["batch_size"] = c.batch_size;
  j["segment_frames"] = c.segment_frames;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["grad_clip"] = c.grad_clip;
  return j.dump();
}

TrainingCorpus::TrainingCorpus(std::vector<CorpusItem> items, ViewBuilder builder, std::size_t hop)
    : items_(std::move(items)), builder_(std::move(builder)), hop_(hop) {
  if (items_.empty()) throw std::invalid_argument("training corpus is empty");
  if (hop_ == 0) throw std::invalid_argument("hop must be >= 1");
  double total = 0.0;
  for (const auto& it : items_) {
    if (it.clean.size() < hop_) throw std::invalid_argument(it.id + ": utterance shorter than one frame");
    const double w = it.duration_s > 0.0 ? it.duration_s : static_cast<double>(it.clean.size());
    total += w;
    cumulative_.push_back(total);
  }
}

std::array<std::size_t, 4> TrainingCorpus::view_reads() const {
  std::array<std::size_t, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = (*reads_)[i].load();
  return out;
}

FeatureSequence TrainingCorpus::condition_for(const CorpusItem& item, ConditionView view, Rng& rng) const {
  (*reads_)[static_cast<std::size_t>(view)].fetch_add(1);
  if (view != ConditionView::AVN) {
    const auto it = item.clean_views.find(view);
    if (it == item.clean_views.end()) throw std::runtime_error(item.id + ": missing " + std::string(to_string(view)) + " view");
    return it->second;
  }
  if (item.interferer && item.visual_stream) {
    const double snr = sample_snr(item.interferer_kind, rng);
    const auto mix = mix_at_snr(item.clean, *item.interferer, snr, builder_.config().mel.sample_rate);
    FeatureSequence f = builder_.noisy_audio_visual_view(mix.mixed, *item.visual_stream);
    return f.num_frames > item.visual_stream->num_frames ? f.slice(0, item.visual_stream->num_frames) : f;
  }
  if (item.noisy_view) return *item.noisy_view;
  throw std::runtime_error(item.id + ": no mixed audio, AVN features or interferer");
}

DrawnExample TrainingCorpus::draw(Rng& rng, const TrainConfig& config, const NoiseSchedule& schedule) const {
  DrawnExample d;
  const double u = uniform(rng, 0.0, cumulative_.back());
  d.item = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  d.item = std::min(d.item, items_.size() - 1);
  const CorpusItem& item = items_[d.item];

  d.view = draw_condition_view(config.view_probs, rng);
  const std::size_t frames = item.clean.size() / hop_;
  const std::size_t s = config.segment_frames;
  d.start_frame = frames >= s ? sample_segment(frames, s, rng) : 1;

  FeatureSequence full = condition_for(item, d.view, rng);
  auto& ex = d.example;
  const std::size_t take = std::min(s, frames);
  ex.condition = pad_by_repetition(full.slice(d.start_frame - 1, take), s);
  ex.x0.assign(s * hop_, 0.0);
  const std::size_t begin = (d.start_frame - 1) * hop_;
  std::copy_n(item.clean.begin() + static_cast<std::ptrdiff_t>(begin), take * hop_, ex.x0.begin());
  ex.level = sample_continuous_noise_level(schedule, rng);
  ex.eps = standard_normal(rng, ex.x0.size());
  return d;
}

TrainingCorpus load_corpus(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                           const TrainConfig& config, const FeatureConfig& features, std::size_t hop) {
  if (manifest.empty()) throw std::invalid_argument("manifest is empty");
  ViewBuilder builder(features);
  if (hop != features.mel.hop) throw std::invalid_argument("denoiser hop does not match feature hop");
  const double sr = features.mel.sample_rate;
  config.view_probs.validate();
  const auto views = needed_views(config.view_probs);
  const bool pairs = config.view_probs.avn > 0.0;

  std::vector<CorpusItem> items(manifest.size());
  parallel_for(manifest.size(), [&](std::size_t i) {
    const UtteranceRecord& rec = manifest[i];
    CorpusItem& item = items[i];
    item.id = rec.id;
    item.duration_s = rec.duration_s;
    std::vector<double> raw = load_audio(resolve_path(manifest_dir, rec.clean_audio_path), sr);
    if (raw.size() < hop) throw std::runtime_error(rec.id + ": utterance shorter than one frame");

    auto load_view = [&](ConditionView v) -> std::optional<FeatureSequence> {
      const auto it = rec.feature_paths.find(v);
      if (it == rec.feature_paths.end()) return std::nullopt;
      FeatureSequence f = layer_normalize(load_precomputed_features(resolve_path(manifest_dir, it->second),
                                                                    builder.feature_dim()));
      check_alignment(f, raw.size(), hop, rec.id);
      return f;
    };

    // Audio features are taken from the raw waveform; only the regression
    // target is peak-normalized. LN makes the views scale-free anyway.
    auto audio = [&]() {
      if (auto f = load_view(ConditionView::A)) return *f;
      return builder.audio_view(raw);
    };
    auto visual = [&]() {
      if (auto f = load_view(ConditionView::V)) return *f;
      return builder.visual_view(audio());
    };

    for (ConditionView v : views) {
      if (v == ConditionView::A) {
        item.clean_views[v] = audio();
      } else if (v == ConditionView::V) {
        item.clean_views[v] = visual();
      } else if (v == ConditionView::AV) {
        if (auto f = load_view(v)) {
          item.clean_views[v] = *f;
        } else {
          item.clean_views[v] = builder.audio_visual_view(audio(), visual());
        }
      }
    }

    if (pairs) {
      if (rec.interferer_audio_path) {
        if (rec.interferer_kind == InterfererKind::None) {
          throw std::runtime_error(rec.id + ": interferer given without interferer_kind");
        }
        item.interferer = load_audio(resolve_path(manifest_dir, *rec.interferer_audio_path), sr);
        item.interferer_kind = rec.interferer_kind;
        item.visual_stream = visual();
      } else if (auto f = load_view(ConditionView::AVN)) {
        item.noisy_view = *f;
      } else if (rec.mixed_audio_path) {
        std::vector<double> mixed = load_audio(resolve_path(manifest_dir, *rec.mixed_audio_path), sr);
        const std::size_t diff = mixed.size() > raw.size() ? mixed.size() - raw.size() : raw.size() - mixed.size();
        if (diff > hop) {
          throw std::runtime_error(rec.id + ": mixed audio has " + std::to_string(mixed.size()) +
                                   " samples, clean has " + std::to_string(raw.size()));
        }
        mixed.resize(raw.size(), 0.0);
        item.noisy_view = builder.noisy_audio_visual_view(mixed, visual());
      } else {
        throw std::runtime_error(rec.id + ": stage-2 pairs need mixed audio, AVN features or an interferer");
      }
    }

    item.clean = peak_normalized(std::move(raw));
    trim_to_frames(item, hop);
  });

  TrainingCorpus corpus(std::move(items), std::move(builder), hop);
  corpus.set_all_scored(std::all_of(manifest.begin(), manifest.end(),
                                    [](const UtteranceRecord& r) { return r.quality_score.has_value(); }));
  return corpus;
}

std::vector<TrainingExample> draw_fixed_examples(const TrainingCorpus& corpus, std::size_t count, std::uint64_t seed,
                                                 const TrainConfig& config, const NoiseSchedule& schedule) {
  std::vector<TrainingExample> out(count);
  const std::uint64_t base = derive_seed(seed, "fixed-examples");
  parallel_for(count, [&](std::size_t i) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    out[i] = corpus.draw(rng, config, schedule).example;
  });
  return out;
}

Checkpoint train(Checkpoint ckpt, const TrainingCorpus& corpus, const TrainConfig& config,
                 const NoiseSchedule& schedule, const TrainOutputs& outputs) {
  config.validate();
  const DenoiserConfig& arch = ckpt.params.config;
  if (arch.feature_dim != corpus.builder().feature_dim()) {
    throw std::invalid_argument("denoiser feature_dim " + std::to_string(arch.feature_dim) + " != corpus feature dim " +
                                std::to_string(corpus.builder().feature_dim()));
  }
  if (arch.hop() != corpus.hop()) throw std::invalid_argument("denoiser hop does not match corpus hop");

  ckpt.optimizer = AdamState::zeros_like(ckpt.params.tensors);
  ckpt.step = 0;
  ckpt.run_config_json = train_config_to_json(config);
  const LrSchedule lrs = config.lr_schedule();

  std::ofstream log;
  if (outputs.log_path) {
    log.open(*outputs.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open " + outputs.log_path->string());
  }
  if (outputs.checkpoint_dir) std::filesystem::create_directories(*outputs.checkpoint_dir);

  std::vector<TrainingExample> batch(config.batch_size);
  for (std::uint64_t step = 1; step <= config.total_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t step_seed = derive_seed(config.seed, step);
    parallel_for(batch.size(), [&](std::size_t b) {
      Rng rng(derive_seed(step_seed, static_cast<std::uint64_t>(b)));
      batch[b] = corpus.draw(rng, config, schedule).example;
    });

    GradientResult g = backprop_gradients(ckpt.params, batch);
    const double norm = clip_global_norm(g.grads, config.grad_clip);
    const double lr = lr_at_step(step, lrs);
    try {
      adam_step(ckpt.params.tensors, g.grads, ckpt.optimizer, lr);
    } catch (const std::exception& e) {
      throw std::runtime_error("step " + std::to_string(step) + ": " + e.what());
    }
    ckpt.step = step;

    StepLog entry{step, lr, g.loss, norm,
                  std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()};
    if (log) {
      log << json{{"step", entry.step}, {"lr", entry.lr}, {"loss", entry.loss}, {"wall_ms", entry.wall_ms}}.dump()
          << '\n';
      log.flush();
    }
    if (outputs.on_step) outputs.on_step(entry);
    if (outputs.checkpoint_dir && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      save_checkpoint(*outputs.checkpoint_dir / ("step_" + std::to_string(step) + ".dwck"), ckpt);
    }
  }
  if (outputs.checkpoint_dir) save_checkpoint(*outputs.checkpoint_dir / "final.dwck", ckpt);
  return ckpt;
}

Checkpoint train_stage1(const TrainingCorpus& corpus, const DenoiserConfig& denoiser, const TrainConfig& config,
                        const NoiseSchedule& schedule, const TrainOutputs& outputs) {
  if (config.stage != TrainStage::Vocode) throw std::invalid_argument("train_stage1 expects a vocode config");
  if (config.view_probs.avn > 0.0) {
    std::cerr << "warning: stage 1 draws the AVN view with probability " << config.view_probs.avn << '\n';
  }
  if (!corpus.all_scored()) std::cerr << "warning: stage-1 manifest has records without a quality score (unfiltered?)\n";
  denoiser.validate();
  Checkpoint start;
  start.params = init_denoiser(denoiser, derive_seed(config.seed, "init"));
  return train(std::move(start), corpus, config, schedule, outputs);
}

Checkpoint finetune_stage2(const TrainingCorpus& corpus, const Checkpoint& from, const TrainConfig& config,
                           const NoiseSchedule& schedule, const TrainOutputs& outputs) {
  if (config.stage == TrainStage::Vocode) throw std::invalid_argument("finetune_stage2 expects a fine-tuning config");
  if (!from.params.all_finite()) throw std::invalid_argument("checkpoint has non-finite parameters");
  return train(from, corpus, config, schedule, outputs);
}

}  // namespace dwave
