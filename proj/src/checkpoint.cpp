#include "dwave/checkpoint.hpp"
#include "dwave/binary_io.hpp"

#include <json.hpp>

#include <sstream>
#include <stdexcept>

namespace dwave {

using nlohmann::json;

namespace {

json config_json(const DenoiserConfig& c) {
  return json{{"upsample_factors", c.upsample_factors},
              {"feature_dim", c.feature_dim},
              {"base_channels", c.base_channels},
              {"noise_embed_dim", c.noise_embed_dim}};
}

DenoiserConfig config_from(const json& j) {
  DenoiserConfig c;
  c.upsample_factors = j.at("upsample_factors").get<std::vector<std::size_t>>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.base_channels = j.at("base_channels").get<std::size_t>();
  c.noise_embed_dim = j.at("noise_embed_dim").get<std::size_t>();
  c.validate();
  return c;
}

void write_tensor(BinaryWriter& w, const nn::Tensor& t) {
  w.str(t.name);
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.values) w.f32(static_cast<float>(v));
}

nn::Tensor read_tensor(BinaryReader& r) {
  nn::Tensor t;
  t.name = r.str();
  const auto rank = r.u32();
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.shape.push_back(r.u32());
    n *= t.shape.back();
  }
  t.values.resize(n);
  for (auto& v : t.values) v = r.f32();
  return t;
}

void adopt(std::vector<nn::Tensor>& expected, std::vector<nn::Tensor>::const_iterator& it,
           const std::vector<nn::Tensor>& loaded, const std::string& source) {
  for (auto& t : expected) {
    if (it == loaded.end()) throw std::runtime_error(source + ": checkpoint is missing tensor " + t.name);
    if (it->name != t.name || it->shape != t.shape) {
      throw std::runtime_error(source + ": tensor " + it->name + " does not match expected layout entry " + t.name);
    }
    t.values = it->values;
    ++it;
  }
}

}  // namespace

std::string denoiser_config_to_json(const DenoiserConfig& config) { return config_json(config).dump(); }

DenoiserConfig denoiser_config_from_json(const std::string& text) { return config_from(json::parse(text)); }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header{{"denoiser", config_json(ckpt.params.config)},
              {"step", ckpt.step},
              {"adam", {{"beta1", ckpt.optimizer.beta1},
                        {"beta2", ckpt.optimizer.beta2},
                        {"epsilon", ckpt.optimizer.epsilon},
                        {"step", ckpt.optimizer.step}}},
              {"run", json::parse(ckpt.run_config_json)}};
  BinaryWriter w;
  w.bytes("DWCK", 4);
  w.u32(kCheckpointVersion);
  w.str(header.dump());
  const bool has_moments = !ckpt.optimizer.first_moment.empty();
  const std::size_t count = ckpt.params.tensors.size() * (has_moments ? 3 : 1);
  w.u32(static_cast<std::uint32_t>(count));
  for (const auto& t : ckpt.params.tensors) write_tensor(w, t);
  if (has_moments) {
    for (const auto& t : ckpt.optimizer.first_moment) write_tensor(w, t);
    for (const auto& t : ckpt.optimizer.second_moment) write_tensor(w, t);
  }
  w.commit_atomic(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string src = path.string();
  BinaryReader r(read_file_bytes(path), src);
  if (r.bytes(4) != "DWCK") throw std::runtime_error(src + ": not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error(src + ": checkpoint version " + std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion));
  }
  const json header = json::parse(r.str());
  Checkpoint ckpt;
  ckpt.params = init_denoiser(config_from(header.at("denoiser")), 0);
  ckpt.step = header.at("step").get<std::uint64_t>();
  ckpt.run_config_json = header.value("run", json::object()).dump();
  const auto& adam = header.at("adam");

  const auto count = r.u32();
  std::vector<nn::Tensor> loaded;
  for (std::uint32_t i = 0; i < count; ++i) loaded.push_back(read_tensor(r));
  if (!r.at_end()) throw std::runtime_error(src + ": trailing bytes after tensors");

  auto it = loaded.cbegin();
  adopt(ckpt.params.tensors, it, loaded, src);
  ckpt.optimizer = AdamState::zeros_like(ckpt.params.tensors);
  ckpt.optimizer.beta1 = adam.at("beta1").get<double>();
  ckpt.optimizer.beta2 = adam.at("beta2").get<double>();
  ckpt.optimizer.epsilon = adam.at("epsilon").get<double>();
  ckpt.optimizer.step = adam.at("step").get<std::uint64_t>();
  if (it != loaded.cend()) {
    adopt(ckpt.optimizer.first_moment, it, loaded, src);
    adopt(ckpt.optimizer.second_moment, it, loaded, src);
  }
  if (it != loaded.cend()) throw std::runtime_error(src + ": unexpected extra tensors");
  if (!ckpt.params.all_finite()) throw std::runtime_error(src + ": non-finite parameters");
  return ckpt;
}

void require_compatible(const DenoiserConfig& ckpt, const DenoiserConfig& expected) {
  std::ostringstream diff;
  if (ckpt.feature_dim != expected.feature_dim) {
    diff << " feature_dim " << ckpt.feature_dim << " vs " << expected.feature_dim << ";";
  }
  if (ckpt.upsample_factors != expected.upsample_factors) diff << " upsample_factors differ;";
  if (ckpt.base_channels != expected.base_channels) {
    diff << " base_channels " << ckpt.base_channels << " vs " << expected.base_channels << ";";
  }
  if (ckpt.noise_embed_dim != expected.noise_embed_dim) {
    diff << " noise_embed_dim " << ckpt.noise_embed_dim << " vs " << expected.noise_embed_dim << ";";
  }
  if (!diff.str().empty()) throw std::invalid_argument("checkpoint architecture mismatch:" + diff.str());
}

}  // namespace dwave
