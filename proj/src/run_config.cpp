#include "dwave/run_config.hpp"

#include <stdexcept>

namespace dwave {

namespace {

using nlohmann::json;

json views_json(const ViewProbabilities& p) { return json::array({p.av, p.a, p.v, p.avn}); }

json train_json(const TrainConfig& c) {
  return {{"lr_peak", c.lr_peak},
          {"warmup_steps", c.warmup_steps},
          {"total_steps", c.total_steps},
          {"batch_size", c.batch_size},
          {"segment_frames", c.segment_frames},
          {"checkpoint_every", c.checkpoint_every},
          {"grad_clip", c.grad_clip},
          {"view_probs", views_json(c.view_probs)}};
}

TrainConfig train_from(const json& j, TrainConfig c, std::uint64_t seed) {
  c.lr_peak = j.value("lr_peak", c.lr_peak);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.segment_frames = j.value("segment_frames", c.segment_frames);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  if (j.contains("stage")) c.stage = parse_stage(j.at("stage").get<std::string>());
  if (j.contains("view_probs")) {
    const auto& v = j.at("view_probs");
    if (!v.is_array() || v.size() != 4) throw std::invalid_argument("view_probs must be [av, a, v, avn]");
    c.view_probs = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  }
  c.seed = seed;
  c.validate();
  return c;
}

const json& section(const json& j, const char* name) {
  static const json empty = json::object();
  return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

NoiseSchedule RunConfig::schedule() const {
  if (schedule_kind == "linear") return make_linear_schedule(schedule_steps, beta_start, beta_end);
  if (schedule_kind == "geometric") return make_geometric_schedule(schedule_steps, beta_start, beta_end);
  throw std::invalid_argument("unknown schedule kind '" + schedule_kind + "'");
}

json default_config(std::string_view preset) {
  const bool desk = preset == "desk";
  if (!desk && preset != "paper") throw std::invalid_argument("unknown preset '" + std::string(preset) + "'");
  const FeatureConfig f = desk ? FeatureConfig::desk() : FeatureConfig{};
  const DenoiserConfig d = desk ? DenoiserConfig::desk() : DenoiserConfig{};
  const auto scale = desk ? "desk" : "paper";
  const TrainConfig t1 = TrainConfig::preset(TrainStage::Vocode, scale);
  const TrainConfig t2 = TrainConfig::preset(TrainStage::FinetunePairs, scale);
  json j;
  j["preset"] = std::string(preset);
  j["seed"] = 0;
  j["features"] = {{"sample_rate", f.mel.sample_rate}, {"n_mels", f.mel.n_mels},     {"hop", f.mel.hop},
                   {"window", f.mel.window},           {"n_fft", f.mel.n_fft},       {"log_floor", f.mel.log_floor},
                   {"visual_rank", f.visual_rank},     {"visual_seed", f.visual_seed}};
  j["denoiser"] = {{"upsample_factors", d.upsample_factors},
                   {"feature_dim", d.feature_dim},
                   {"base_channels", d.base_channels},
                   {"noise_embed_dim", d.noise_embed_dim}};
  j["schedule"] = {{"kind", "linear"}, {"steps", 1000}, {"beta_start", 1e-6}, {"beta_end", 0.01}};
  j["train"] = train_json(t1);
  j["finetune"] = train_json(t2);
  j["finetune"]["stage"] = "finetune-pairs";
  j["synthesis"] = {{"sampler", "ancestral"}, {"segment_frames", 24}};
  return j;
}

RunConfig resolve_run_config(const json& config) {
  const std::string preset = config.value("preset", std::string("paper"));
  json merged = default_config(preset);
  merged.merge_patch(config);
  const auto seed = merged.at("seed").get<std::uint64_t>();

  RunConfig r;
  const auto& f = section(merged, "features");
  r.features.mel.sample_rate = f.at("sample_rate").get<double>();
  r.features.mel.n_mels = f.at("n_mels").get<std::size_t>();
  r.features.mel.hop = f.at("hop").get<std::size_t>();
  r.features.mel.window = f.at("window").get<std::size_t>();
  r.features.mel.n_fft = f.at("n_fft").get<std::size_t>();
  r.features.mel.log_floor = f.at("log_floor").get<double>();
  r.features.visual_rank = f.at("visual_rank").get<std::size_t>();
  r.features.visual_seed = f.at("visual_seed").get<std::uint64_t>();

  const auto& d = section(merged, "denoiser");
  r.denoiser.upsample_factors = d.at("upsample_factors").get<std::vector<std::size_t>>();
  r.denoiser.feature_dim = d.at("feature_dim").get<std::size_t>();
  r.denoiser.base_channels = d.at("base_channels").get<std::size_t>();
  r.denoiser.noise_embed_dim = d.at("noise_embed_dim").get<std::size_t>();
  r.denoiser.validate();
  if (r.denoiser.hop() != r.features.mel.hop) {
    throw std::invalid_argument("denoiser upsampling product " + std::to_string(r.denoiser.hop()) +
                                " != feature hop " + std::to_string(r.features.mel.hop));
  }
  if (r.denoiser.feature_dim != r.features.mel.n_mels) {
    throw std::invalid_argument("denoiser feature_dim != features.n_mels");
  }

  const auto& s = section(merged, "schedule");
  r.schedule_kind = s.at("kind").get<std::string>();
  r.schedule_steps = s.at("steps").get<std::size_t>();
  r.beta_start = s.at("beta_start").get<double>();
  r.beta_end = s.at("beta_end").get<double>();
  (void)r.schedule();

  const auto scale = preset == "desk" ? "desk" : "paper";
  r.train = train_from(section(merged, "train"), TrainConfig::preset(TrainStage::Vocode, scale), seed);
  r.finetune = train_from(section(merged, "finetune"), TrainConfig::preset(TrainStage::FinetunePairs, scale), seed);

  const auto& y = section(merged, "synthesis");
  r.synthesis.sampler = parse_sampler(y.at("sampler").get<std::string>(), r.schedule_steps);
  r.synthesis.sampler.seed = seed;
  r.synthesis.segment_frames = y.at("segment_frames").get<std::size_t>();
  return r;
}

}  // namespace dwave
