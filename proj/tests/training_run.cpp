// Seeded stage-1 run on a small synthetic corpus: held-out loss has to drop by
// at least 30% from the untrained model.
#include <cstdio>
#include <filesystem>

#include "dwave/dataprep.hpp"
#include "dwave/run_config.hpp"
#include "dwave/toy_corpus.hpp"
#include "dwave/trainer.hpp"

using namespace dwave;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "dwave_training_run";
  fs::remove_all(dir);
  const RunConfig cfg =
      resolve_run_config(nlohmann::json{{"preset", "desk"}, {"seed", 7}, {"train", {{"batch_size", 8}}}});
  const auto schedule = cfg.schedule();

  ToyCorpusConfig tc;
  tc.num_utterances = 60;
  tc.num_heldout = 10;
  tc.num_interferers = 1;
  tc.sample_rate = cfg.features.mel.sample_rate;
  tc.min_seconds = 0.75;
  tc.max_seconds = 1.5;
  tc.seed = 7;
  const auto toy = write_toy_corpus(dir, tc);

  auto train = load_corpus(read_manifest(toy.train_manifest), dir, cfg.train, cfg.features, cfg.denoiser.hop());
  train.set_all_scored(true);  // synthetic speech is clean by construction
  const auto held = load_corpus(read_manifest(toy.heldout_manifest), dir, cfg.train, cfg.features, cfg.denoiser.hop());
  const auto probe = draw_fixed_examples(held, 64, derive_seed(7, "held-loss"), cfg.train, schedule);

  const double before = batch_loss(init_denoiser(cfg.denoiser, derive_seed(cfg.train.seed, "init")), probe);
  const auto ck = train_stage1(train, cfg.denoiser, cfg.train, schedule);
  const double after = batch_loss(ck.params, probe);
  const double drop = 1.0 - after / before;

  std::printf("%zu utterances, %llu steps, batch %zu: held-out loss %.4f -> %.4f (%.0f%% lower)\n", train.size(),
              static_cast<unsigned long long>(cfg.train.total_steps), cfg.train.batch_size, before, after,
              100.0 * drop);
  return drop >= 0.3 ? 0 : 1;
}
