#include <doctest.h>

#include <cmath>

#include "dwave/schedule.hpp"
#include "dwave/synthesis.hpp"

using namespace dwave;

namespace {

// Predicts a scaled copy of its input; enough structure to make windows differ.
class ScaledInput final : public NoisePredictor {
 public:
  explicit ScaledInput(std::size_t hop) : hop_(hop) {}
  std::size_t signal_length(const FeatureSequence& c) const override { return c.num_frames * hop_; }
  Signal predict_noise(std::span<const double> x, const FeatureSequence&, double sab) const override {
    Signal out(x.begin(), x.end());
    for (auto& v : out) v *= std::sqrt(1.0 - sab * sab);
    return out;
  }

 private:
  std::size_t hop_;
};

FeatureSequence frames(std::size_t n) { return FeatureSequence(n, 2); }

}  // namespace

TEST_CASE("window starts") {
  CHECK(chunk_starts(10, 24) == std::vector<std::size_t>{0});
  CHECK(chunk_starts(24, 24) == std::vector<std::size_t>{0});
  CHECK(chunk_starts(25, 24) == std::vector<std::size_t>{0, 1});
  CHECK(chunk_starts(50, 24) == std::vector<std::size_t>{0, 23, 26});
  CHECK(chunk_starts(47, 24) == std::vector<std::size_t>{0, 23});
  CHECK_THROWS(chunk_starts(10, 1));
}

TEST_CASE("synthesis length and determinism") {
  const auto schedule = make_linear_schedule(20, 1e-4, 0.2);
  ScaledInput model(8);
  SynthesisOptions opts;
  opts.segment_frames = 6;
  opts.sampler = parse_sampler("ddim-5", schedule.steps());
  opts.sampler.seed = 3;

  for (std::size_t n : {1u, 4u, 6u, 7u, 13u, 30u}) {
    const auto y = synthesize(model, frames(n), schedule, opts, "u", 8);
    CHECK(y.size() == n * 8);
    for (double v : y) REQUIRE(std::isfinite(v));
  }
  const auto a = synthesize(model, frames(13), schedule, opts, "u", 8);
  CHECK(a == synthesize(model, frames(13), schedule, opts, "u", 8));
  CHECK(a != synthesize(model, frames(13), schedule, opts, "v", 8));
  opts.sampler.seed = 4;
  CHECK(a != synthesize(model, frames(13), schedule, opts, "u", 8));
}

TEST_CASE("output fitting") {
  CHECK(fit_output({1.0, -1.0}, 4, 0.5) == Signal{0.5, -0.5, 0.0, 0.0});
  CHECK(fit_output({1.0, 2.0, 3.0}, 2, 2.0) == Signal{2.0, 4.0});
}
