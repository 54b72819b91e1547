// Writes the synthetic pseudo-speech corpus used by the examples and tests.

#include <iostream>

#include <CLI11.hpp>

#include "dwave/toy_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a toy pseudo-speech corpus"};
  dwave::ToyCorpusConfig c;
  std::string out;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--utterances", c.num_utterances, "number of clean utterances");
  app.add_option("--heldout", c.num_heldout, "utterances reserved for evaluation");
  app.add_option("--interferers", c.num_interferers, "interferer clips per kind");
  app.add_option("--sample-rate", c.sample_rate);
  app.add_option("--min-seconds", c.min_seconds);
  app.add_option("--max-seconds", c.max_seconds);
  app.add_option("--seed", c.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = dwave::write_toy_corpus(out, c);
    std::cout << corpus.train_manifest.string() << '\n' << corpus.heldout_manifest.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
