#include <doctest.h>

#include "dwave/run_config.hpp"
#include "dwave/toml_config.hpp"

using namespace dwave;
using nlohmann::json;

TEST_CASE("toml subset parsing") {
  const auto j = parse_toml(R"(
# run settings
preset = "desk"
seed = 7

[train]
lr_peak = 1e-3      # higher for short runs
total_steps = 2_000
view_probs = [0.5, 0.5, 0.0, 0.0]
verbose = true

[denoiser.extra]
name = 'literal \n'
)");
  CHECK(j["preset"] == "desk");
  CHECK(j["seed"] == 7);
  CHECK(j["train"]["lr_peak"].get<double>() == doctest::Approx(1e-3));
  CHECK(j["train"]["total_steps"] == 2000);
  CHECK(j["train"]["view_probs"].size() == 4);
  CHECK(j["train"]["verbose"] == true);
  CHECK(j["denoiser"]["extra"]["name"] == "literal \\n");

  CHECK_THROWS_WITH(parse_toml("a = 1\na = 2\n"), doctest::Contains("line 2"));
  CHECK_THROWS(parse_toml("[broken\n"));
  CHECK_THROWS(parse_toml("key = \n"));
  CHECK(parse_toml("s = \"tab\\there\"")["s"] == "tab\there");
}

TEST_CASE("overrides and round trip") {
  auto j = default_config("desk");
  apply_override(j, "train.total_steps=50");
  apply_override(j, "synthesis.sampler=ddim-50");
  apply_override(j, "train.lr_peak=0.002");
  CHECK(j["train"]["total_steps"] == 50);
  CHECK(j["synthesis"]["sampler"] == "ddim-50");
  CHECK(j["train"]["lr_peak"].get<double>() == doctest::Approx(0.002));
  CHECK_THROWS(apply_override(j, "no_equals_sign"));

  const auto back = parse_toml(to_toml(j));
  CHECK(back == j);
}

TEST_CASE("resolved run configs") {
  SUBCASE("paper preset") {
    const auto r = resolve_run_config(json{{"preset", "paper"}});
    CHECK(r.denoiser.hop() == 640);
    CHECK(r.features.mel.sample_rate == 16000.0);
    CHECK(r.features.mel.hop == 640);
    CHECK(r.train.lr_peak == 1e-4);
    CHECK(r.train.view_probs.avn == 0.0);
    CHECK(r.finetune.view_probs.avn == 1.0);
    CHECK(r.schedule().steps() == 1000);
    CHECK(r.synthesis.sampler.kind == SamplerKind::Ancestral);
  }

  SUBCASE("desk preset with a partial override") {
    auto j = json{{"preset", "desk"}, {"train", {{"total_steps", 30}, {"warmup_steps", 5}}}};
    const auto r = resolve_run_config(j);
    CHECK(r.denoiser.hop() == 64);
    CHECK(r.features.mel.hop == 64);
    CHECK(r.train.total_steps == 30);
    CHECK(r.train.batch_size == 16);
  }

  SUBCASE("inconsistent configs are rejected") {
    auto j = default_config("desk");
    j["features"]["hop"] = 128;
    CHECK_THROWS(resolve_run_config(j));
    auto k = default_config("desk");
    k["features"]["n_mels"] = 40;
    CHECK_THROWS(resolve_run_config(k));
    auto v = default_config("desk");
    v["train"]["view_probs"] = {0.5, 0.5, 0.5, 0.0};
    CHECK_THROWS(resolve_run_config(v));
    CHECK_THROWS(default_config("enormous"));
  }
}
