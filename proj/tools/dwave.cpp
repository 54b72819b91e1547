// dwave: corpus preparation, training and enhancement from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dwave/checkpoint.hpp"
#include "dwave/dataprep.hpp"
#include "dwave/mel.hpp"
#include "dwave/parallel.hpp"
#include "dwave/run_config.hpp"
#include "dwave/synthesis.hpp"
#include "dwave/toml_config.hpp"
#include "dwave/trainer.hpp"
#include "dwave/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dwave;

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

struct Context {
  RunConfig cfg;
  json resolved;
  fs::path manifest_path;
  fs::path manifest_dir;
  fs::path out;
};

Context prepare(const Common& c, std::string_view command) {
  json j = json::object();
  if (!c.config_path.empty()) j = load_toml(c.config_path);
  if (!c.preset.empty()) j["preset"] = c.preset;
  for (const auto& o : c.overrides) apply_override(j, o);
  if (c.seed) j["seed"] = *c.seed;
  json resolved = default_config(j.value("preset", std::string("paper")));
  resolved.merge_patch(j);

  Context ctx{resolve_run_config(resolved), resolved, c.manifest, {}, c.out};
  ctx.manifest_dir = ctx.manifest_path.parent_path();
  fs::create_directories(ctx.out);
  json snapshot = resolved;
  snapshot["command"] = std::string(command);
  std::ofstream(ctx.out / "config.resolved.toml") << to_toml(snapshot);
  return ctx;
}

void add_common(CLI::App* app, Common& c, bool needs_manifest = true) {
  app->add_option("--config", c.config_path, "TOML run config")->check(CLI::ExistingFile);
  app->add_option("--preset", c.preset, "paper | desk defaults");
  app->add_option("--set", c.overrides, "key=value override, repeatable");
  auto* m = app->add_option("--manifest", c.manifest, "input manifest (JSON lines)");
  if (needs_manifest) m->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory")->required();
  app->add_option("--seed", c.seed, "master seed");
}

// Collects per-item errors; written in input order at the end.
class Failures {
 public:
  explicit Failures(std::size_t n) : errors_(n) {}
  void set(std::size_t i, std::string id, std::string err) { errors_[i] = {std::move(id), std::move(err)}; }
  int finish(const fs::path& out) const {
    std::ostringstream ss;
    std::size_t count = 0;
    for (const auto& e : errors_) {
      if (!e) continue;
      ss << json{{"id", e->first}, {"error", e->second}}.dump() << '\n';
      std::cerr << "failed " << e->first << ": " << e->second << '\n';
      ++count;
    }
    const auto path = out / "failures.jsonl";
    if (count > 0) {
      std::ofstream(path) << ss.str();
    } else {
      fs::remove(path);
    }
    return count > 0 ? 1 : 0;
  }

 private:
  std::vector<std::optional<std::pair<std::string, std::string>>> errors_;
};

template <typename F>
int for_each_record(const Manifest& m, const fs::path& out, F&& body) {
  Failures failures(m.size());
  parallel_for(m.size(), [&](std::size_t i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      failures.set(i, m[i].id, e.what());
    }
  });
  return failures.finish(out);
}

std::vector<double> load_audio(const fs::path& p, const RunConfig& cfg) {
  Waveform w = read_wav(p);
  if (static_cast<double>(w.sample_rate) != cfg.features.mel.sample_rate) {
    throw std::runtime_error(p.string() + ": sample rate " + std::to_string(w.sample_rate) + " does not match config");
  }
  return std::move(w.samples);
}

DenoiserParams load_model(const fs::path& path, const RunConfig& cfg) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  Checkpoint ck = load_checkpoint(path);
  require_compatible(ck.params.config, cfg.denoiser);
  return std::move(ck.params);
}

void write_output_manifest(const Manifest& in, const std::vector<std::optional<UtteranceRecord>>& rows,
                           const fs::path& path) {
  Manifest out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (rows[i]) out.push_back(*rows[i]);
  }
  write_manifest(path, out);
}

// Rewrites every path in a record so it resolves from `to_dir`.
UtteranceRecord rebase_record(UtteranceRecord r, const fs::path& from_dir, const fs::path& to_dir) {
  r.clean_audio_path = rebase_path(from_dir, r.clean_audio_path, to_dir);
  if (r.mixed_audio_path) r.mixed_audio_path = rebase_path(from_dir, *r.mixed_audio_path, to_dir);
  if (r.interferer_audio_path) r.interferer_audio_path = rebase_path(from_dir, *r.interferer_audio_path, to_dir);
  if (r.enhanced_audio_path) r.enhanced_audio_path = rebase_path(from_dir, *r.enhanced_audio_path, to_dir);
  for (auto& [view, p] : r.feature_paths) p = rebase_path(from_dir, p, to_dir);
  return r;
}

std::vector<ConditionView> parse_views(const std::string& list) {
  std::vector<ConditionView> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_view(item));
  if (out.empty()) throw std::invalid_argument("no views requested");
  return out;
}

int cmd_features(const Common& c, const std::string& view_list) {
  const Context ctx = prepare(c, "features");
  const Manifest m = read_manifest(ctx.manifest_path);
  const ViewBuilder builder(ctx.cfg.features);
  const auto views = parse_views(view_list);
  fs::create_directories(ctx.out / "features");
  std::vector<std::optional<UtteranceRecord>> rows(m.size());
  const int rc = for_each_record(m, ctx.out, [&](std::size_t i) {
    UtteranceRecord r = rebase_record(m[i], ctx.manifest_dir, ctx.out);
    std::optional<std::vector<double>> clean;
    std::optional<FeatureSequence> audio, visual;
    auto get_clean = [&]() -> const std::vector<double>& {
      if (!clean) clean = load_audio(resolve_path(ctx.manifest_dir, m[i].clean_audio_path), ctx.cfg);
      return *clean;
    };
    auto get_audio = [&]() -> const FeatureSequence& {
      if (!audio) audio = builder.audio_view(get_clean());
      return *audio;
    };
    auto get_visual = [&]() -> const FeatureSequence& {
      if (!visual) visual = builder.visual_view(get_audio());
      return *visual;
    };
    for (ConditionView v : views) {
      const std::string rel = "features/" + r.id + "." + std::string(to_string(v)) + ".featbin";
      const fs::path path = ctx.out / rel;
      if (!c.force && fs::exists(path)) {
        // Existing files are validated, not rewritten.
        load_precomputed_features(path, builder.feature_dim());
        r.feature_paths[v] = rel;
        continue;
      }
      FeatureSequence f;
      switch (v) {
        case ConditionView::A: f = get_audio(); break;
        case ConditionView::V: f = get_visual(); break;
        case ConditionView::AV: f = builder.audio_visual_view(get_audio(), get_visual()); break;
        case ConditionView::AVN: {
          if (!m[i].mixed_audio_path) throw std::runtime_error("AVN view needs mixed_audio_path");
          const auto mixed = load_audio(resolve_path(ctx.manifest_dir, *m[i].mixed_audio_path), ctx.cfg);
          f = builder.noisy_audio_visual_view(mixed, get_visual());
          break;
        }
      }
      f.utterance_id = r.id;
      write_featbin(path, f);
      r.feature_paths[v] = rel;
    }
    rows[i] = std::move(r);
  });
  write_output_manifest(m, rows, ctx.out / "manifest.jsonl");
  return rc;
}

int cmd_filter(const Common& c, const std::string& threshold, const std::string& estimator_name) {
  const Context ctx = prepare(c, "filter");
  double t = 0.0;
  try {
    t = threshold_preset(threshold);
  } catch (const std::invalid_argument&) {
    t = std::stod(threshold);
  }
  Manifest m = read_manifest(ctx.manifest_path);
  for (auto& r : m) r = rebase_record(r, ctx.manifest_dir, ctx.out);
  const auto estimator = make_estimator(estimator_name);
  const FilterResult res = filter_manifest(m, t, *estimator, ctx.out);
  write_manifest(ctx.out / "filtered.jsonl", res.kept);
  const json report = {{"threshold_db", res.report.threshold_db}, {"estimator", estimator->name()},
                       {"total", res.report.total},               {"kept", res.report.kept},
                       {"total_hours", res.report.total_hours},   {"kept_hours", res.report.kept_hours}};
  std::ofstream(ctx.out / "filter_report.json") << report.dump(2) << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_mix(const Common& c, const std::string& interferers, const std::string& kind) {
  const Context ctx = prepare(c, "mix");
  const Manifest clean = read_manifest(ctx.manifest_path);
  const fs::path ipath(interferers);
  const Manifest pool = read_manifest(ipath);
  std::optional<InterfererKind> k;
  if (kind != "any") k = parse_interferer_kind(kind);
  const auto res = mix_corpus(clean, ctx.manifest_dir, pool, ipath.parent_path(),
                              k, ctx.resolved.at("seed").get<std::uint64_t>(), ctx.out);
  write_manifest(ctx.out / "mixed.jsonl", res.mixed);
  Failures f(res.failures.size());
  for (std::size_t i = 0; i < res.failures.size(); ++i) f.set(i, res.failures[i].id, res.failures[i].error);
  return f.finish(ctx.out);
}

TrainOutputs train_outputs(const Context& ctx) {
  TrainOutputs o;
  o.checkpoint_dir = ctx.out / "checkpoints";
  o.log_path = ctx.out / "train_log.jsonl";
  o.on_step = [](const StepLog& s) {
    if (s.step % 100 == 0) std::fprintf(stderr, "step %llu loss %.4f lr %.3g\n", (unsigned long long)s.step, s.loss, s.lr);
  };
  return o;
}

int cmd_train(const Common& c) {
  const Context ctx = prepare(c, "train");
  const Manifest m = read_manifest(ctx.manifest_path);
  const auto corpus = load_corpus(m, ctx.manifest_dir, ctx.cfg.train, ctx.cfg.features, ctx.cfg.denoiser.hop());
  train_stage1(corpus, ctx.cfg.denoiser, ctx.cfg.train, ctx.cfg.schedule(), train_outputs(ctx));
  return 0;
}

int cmd_finetune(const Common& c, const std::string& checkpoint) {
  const Context ctx = prepare(c, "finetune");
  const Manifest m = read_manifest(ctx.manifest_path);
  Checkpoint from = load_checkpoint(checkpoint);
  require_compatible(from.params.config, ctx.cfg.denoiser);
  const auto corpus = load_corpus(m, ctx.manifest_dir, ctx.cfg.finetune, ctx.cfg.features, ctx.cfg.denoiser.hop());
  finetune_stage2(corpus, from, ctx.cfg.finetune, ctx.cfg.schedule(), train_outputs(ctx));
  return 0;
}

FeatureSequence load_feature_view(const UtteranceRecord& r, ConditionView v, const fs::path& dir, std::size_t dim) {
  return layer_normalize(load_precomputed_features(resolve_path(dir, r.feature_paths.at(v)), dim));
}

// Synthesizes from `cond`, writes <out>/<subdir>/<id>.wav and returns the record.
UtteranceRecord render(const Context& ctx, const DenoiserParams& params, const NoiseSchedule& schedule,
                       const UtteranceRecord& src, const FeatureSequence& cond, std::size_t num_samples, double gain,
                       const std::string& subdir) {
  const DenoiserNet net(params);
  Signal y = synthesize(net, cond, schedule, ctx.cfg.synthesis, src.id, ctx.cfg.denoiser.hop());
  y = fit_output(std::move(y), num_samples, gain);
  const std::string rel = subdir + "/" + src.id + ".wav";
  write_wav(ctx.out / rel, Waveform{std::move(y), static_cast<unsigned>(ctx.cfg.features.mel.sample_rate)});
  UtteranceRecord r = rebase_record(src, ctx.manifest_dir, ctx.out);
  r.enhanced_audio_path = rel;
  return r;
}

int cmd_enhance(const Common& c, const std::string& checkpoint) {
  const Context ctx = prepare(c, "enhance");
  const Manifest m = read_manifest(ctx.manifest_path);
  const DenoiserParams params = load_model(checkpoint, ctx.cfg);
  const auto schedule = ctx.cfg.schedule();
  const ViewBuilder builder(ctx.cfg.features);
  const std::size_t dim = builder.feature_dim();
  fs::create_directories(ctx.out / "enhanced");
  std::vector<std::optional<UtteranceRecord>> rows(m.size());
  const int rc = for_each_record(m, ctx.out, [&](std::size_t i) {
    const UtteranceRecord& r = m[i];
    std::optional<std::vector<double>> mixed;
    if (r.mixed_audio_path) mixed = load_audio(resolve_path(ctx.manifest_dir, *r.mixed_audio_path), ctx.cfg);
    FeatureSequence cond;
    if (r.feature_paths.count(ConditionView::AVN)) {
      cond = load_feature_view(r, ConditionView::AVN, ctx.manifest_dir, dim);
    } else {
      if (!mixed) throw std::runtime_error("needs AVN features or mixed_audio_path");
      // The lip stream comes from V features, or is derived from the clean
      // recording when no video features exist.
      const FeatureSequence visual =
          r.feature_paths.count(ConditionView::V)
              ? load_feature_view(r, ConditionView::V, ctx.manifest_dir, dim)
              : builder.visual_view(builder.audio_view(load_audio(resolve_path(ctx.manifest_dir, r.clean_audio_path), ctx.cfg)));
      cond = builder.noisy_audio_visual_view(*mixed, visual);
    }
    const std::size_t n = mixed ? mixed->size() : cond.num_frames * ctx.cfg.denoiser.hop();
    const double gain = mixed ? peak_amplitude(*mixed) : 1.0;
    rows[i] = render(ctx, params, schedule, r, cond, n, gain > 0.0 ? gain : 1.0, "enhanced");
  });
  write_output_manifest(m, rows, ctx.out / "enhanced.jsonl");
  return rc;
}

int cmd_resynth(const Common& c, const std::string& checkpoint, const std::string& view_name) {
  const Context ctx = prepare(c, "resynth");
  const Manifest m = read_manifest(ctx.manifest_path);
  const DenoiserParams params = load_model(checkpoint, ctx.cfg);
  const auto schedule = ctx.cfg.schedule();
  const ConditionView view = parse_view(view_name);
  if (view == ConditionView::AVN) throw CLI::ValidationError("--view", "resynthesis conditions on a clean-signal view");
  const std::size_t dim = ctx.cfg.features.mel.n_mels;
  fs::create_directories(ctx.out / "resynth");
  std::vector<std::optional<UtteranceRecord>> rows(m.size());
  const int rc = for_each_record(m, ctx.out, [&](std::size_t i) {
    const UtteranceRecord& r = m[i];
    if (!r.feature_paths.count(view)) throw std::runtime_error("no " + view_name + " features; run `dwave features` first");
    const FeatureSequence cond = load_feature_view(r, view, ctx.manifest_dir, dim);
    std::size_t n = cond.num_frames * ctx.cfg.denoiser.hop();
    double gain = 1.0;
    const fs::path clean_path = resolve_path(ctx.manifest_dir, r.clean_audio_path);
    if (fs::exists(clean_path)) {
      const auto clean = load_audio(clean_path, ctx.cfg);
      n = clean.size();
      gain = peak_amplitude(clean) > 0.0 ? peak_amplitude(clean) : 1.0;
    }
    rows[i] = render(ctx, params, schedule, r, cond, n, gain, "resynth");
  });
  write_output_manifest(m, rows, ctx.out / "resynth.jsonl");
  return rc;
}

int cmd_eval(const Common& c) {
  const Context ctx = prepare(c, "eval");
  const Manifest m = read_manifest(ctx.manifest_path);
  struct Row {
    double si_sdr = 0.0, mel = 0.0;
    std::optional<double> mixed_si_sdr, mixed_mel;
  };
  std::vector<std::optional<Row>> rows(m.size());
  const int rc = for_each_record(m, ctx.out, [&](std::size_t i) {
    const UtteranceRecord& r = m[i];
    if (!r.enhanced_audio_path) throw std::runtime_error("no enhanced_audio_path");
    const auto clean = load_audio(resolve_path(ctx.manifest_dir, r.clean_audio_path), ctx.cfg);
    auto score = [&](std::vector<double> x, double& sdr, double& mel) {
      const std::size_t n = std::min(x.size(), clean.size());
      x.resize(n);
      sdr = si_sdr(x, std::span<const double>(clean).first(n));
      mel = log_mel_distance(x, clean, ctx.cfg.features.mel);
    };
    Row row;
    score(load_audio(resolve_path(ctx.manifest_dir, *r.enhanced_audio_path), ctx.cfg), row.si_sdr, row.mel);
    if (r.mixed_audio_path) {
      double s = 0.0, d = 0.0;
      score(load_audio(resolve_path(ctx.manifest_dir, *r.mixed_audio_path), ctx.cfg), s, d);
      row.mixed_si_sdr = s;
      row.mixed_mel = d;
    }
    rows[i] = row;
  });

  json per = json::array();
  double sum_sdr = 0.0, sum_mel = 0.0, sum_msdr = 0.0, sum_mmel = 0.0;
  std::size_t n = 0, n_mixed = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!rows[i]) continue;
    json j = {{"id", m[i].id}, {"si_sdr", rows[i]->si_sdr}, {"log_mel_distance", rows[i]->mel}};
    sum_sdr += rows[i]->si_sdr;
    sum_mel += rows[i]->mel;
    ++n;
    if (rows[i]->mixed_si_sdr) {
      j["mixed_si_sdr"] = *rows[i]->mixed_si_sdr;
      j["mixed_log_mel_distance"] = *rows[i]->mixed_mel;
      sum_msdr += *rows[i]->mixed_si_sdr;
      sum_mmel += *rows[i]->mixed_mel;
      ++n_mixed;
    }
    per.push_back(std::move(j));
  }
  json report = {{"count", n}, {"utterances", per}};
  if (n > 0) {
    report["mean_si_sdr"] = sum_sdr / static_cast<double>(n);
    report["mean_log_mel_distance"] = sum_mel / static_cast<double>(n);
  }
  if (n_mixed > 0) {
    report["mean_mixed_si_sdr"] = sum_msdr / static_cast<double>(n_mixed);
    report["mean_mixed_log_mel_distance"] = sum_mmel / static_cast<double>(n_mixed);
  }
  std::ofstream(ctx.out / "report.json") << report.dump(2) << '\n';
  json summary = report;
  summary.erase("utterances");
  std::cout << summary.dump() << '\n';
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dwave: diffusion speech enhancement toolkit"};
  app.require_subcommand(1);
  Common common;
  std::string views = "A", threshold = "av2wav-23", estimator = "oracle", interferers, kind = "any", checkpoint,
              sampler, view = "A";

  auto* features = app.add_subcommand("features", "compute conditioning features for a manifest");
  add_common(features, common);
  features->add_option("--views", views, "comma-separated views (A,V,AV,AVN)");
  features->add_flag("--force", common.force, "recompute existing feature files");

  auto* filter = app.add_subcommand("filter", "keep utterances above a quality threshold");
  add_common(filter, common);
  filter->add_option("--threshold", threshold, "dB value or preset (av2wav-23, av2wav-25)");
  filter->add_option("--estimator", estimator, "oracle | energy");

  auto* mix = app.add_subcommand("mix", "mix clean speech with interferers at sampled SNRs");
  add_common(mix, common);
  mix->add_option("--interferers", interferers, "interferer manifest")->required()->check(CLI::ExistingFile);
  mix->add_option("--kind", kind, "speech | noise | any");

  auto* train = app.add_subcommand("train", "stage-1 vocoder training");
  add_common(train, common);

  auto* finetune = app.add_subcommand("finetune", "stage-2 fine-tuning from a checkpoint");
  add_common(finetune, common);
  finetune->add_option("--checkpoint", checkpoint, "stage-1 checkpoint")->required();

  auto* enhance = app.add_subcommand("enhance", "enhance mixed speech");
  add_common(enhance, common);
  enhance->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  enhance->add_option("--sampler", sampler, "ancestral | cont-N | ddim-K");

  auto* resynth = app.add_subcommand("resynth", "re-synthesize from clean-signal features");
  add_common(resynth, common);
  resynth->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  resynth->add_option("--view", view, "A | V | AV");
  resynth->add_option("--sampler", sampler, "ancestral | cont-N | ddim-K");

  auto* eval = app.add_subcommand("eval", "SI-SDR and log-mel distance against clean references");
  add_common(eval, common);

  CLI11_PARSE(app, argc, argv);
  if (!sampler.empty()) common.overrides.push_back("synthesis.sampler=\"" + sampler + "\"");
  try {
    if (*features) return cmd_features(common, views);
    if (*filter) return cmd_filter(common, threshold, estimator);
    if (*mix) return cmd_mix(common, interferers, kind);
    if (*train) return cmd_train(common);
    if (*finetune) return cmd_finetune(common, checkpoint);
    if (*enhance) return cmd_enhance(common, checkpoint);
    if (*resynth) return cmd_resynth(common, checkpoint, view);
    if (*eval) return cmd_eval(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
