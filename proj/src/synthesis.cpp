#include "dwave/synthesis.hpp"

#include <algorithm>
#include <stdexcept>

#include "dwave/conditioning.hpp"
#include "dwave/rng.hpp"

namespace dwave {

std::vector<std::size_t> chunk_starts(std::size_t num_frames, std::size_t segment_frames) {
  if (segment_frames < 2) throw std::invalid_argument("segment_frames must be >= 2 for overlapped synthesis");
  if (num_frames <= segment_frames) return {0};
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + segment_frames < num_frames; s += segment_frames - 1) starts.push_back(s);
  starts.push_back(num_frames - segment_frames);
  return starts;
}

Signal synthesize(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
                  const SynthesisOptions& options, std::string_view utterance_id, std::size_t hop) {
  if (c.num_frames == 0) throw std::invalid_argument("synthesize: empty condition");
  if (hop == 0) throw std::invalid_argument("synthesize: hop must be >= 1");
  const std::size_t S = options.segment_frames;
  const std::size_t L = c.num_frames;
  const std::uint64_t utt_seed = derive_seed(options.sampler.seed, utterance_id);

  auto run = [&](const FeatureSequence& window, std::size_t index) {
    SamplerConfig cfg = options.sampler;
    cfg.seed = derive_seed(utt_seed, static_cast<std::uint64_t>(index));
    return sample(model, window, schedule, cfg);
  };

  if (L <= S) {
    Signal y = run(pad_by_repetition(c, S), 0);
    y.resize(L * hop);
    return y;
  }

  Signal out(L * hop, 0.0);
  std::size_t written = 0;  // frames already filled
  const auto starts = chunk_starts(L, S);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t start = starts[k];
    const Signal y = run(c.slice(start, S), k);
    const std::size_t base = start * hop;
    std::size_t from = 0;  // offset into y where plain copying begins
    if (k > 0) {
      // Fade across the last overlapping hop.
      const std::size_t fade_begin = written * hop - hop;
      for (std::size_t i = 0; i < hop; ++i) {
        const double w = (static_cast<double>(i) + 0.5) / static_cast<double>(hop);
        const std::size_t n = fade_begin + i;
        out[n] = (1.0 - w) * out[n] + w * y[n - base];
      }
      from = written * hop - base;
    }
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(from), y.end(),
              out.begin() + static_cast<std::ptrdiff_t>(base + from));
    written = start + S;
  }
  return out;
}

Signal fit_output(Signal y, std::size_t num_samples, double gain) {
  y.resize(num_samples, 0.0);
  for (double& v : y) v *= gain;
  return y;
}

}  // namespace dwave
