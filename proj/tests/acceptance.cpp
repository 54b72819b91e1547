// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [--only N,M,...]
//
// Criteria 7-9 train the toy model twice from scratch and take a while.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dwave/dataprep.hpp"
#include "dwave/denoiser.hpp"
#include "dwave/diffusion.hpp"
#include "dwave/gradcheck.hpp"
#include "dwave/mel.hpp"
#include "dwave/run_config.hpp"
#include "dwave/schedule.hpp"
#include "dwave/synthesis.hpp"
#include "dwave/toy_corpus.hpp"
#include "dwave/trainer.hpp"
#include "dwave/wav.hpp"

using namespace dwave;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Optimal eps-predictor for x0 ~ N(0, var), applied independently per sample.
class GaussianOracle final : public NoisePredictor {
 public:
  GaussianOracle(double var, std::size_t len) : var_(var), len_(len) {}
  std::size_t signal_length(const FeatureSequence&) const override { return len_; }
  Signal predict_noise(std::span<const double> x, const FeatureSequence&, double sab) const override {
    const double ab = sab * sab;
    Signal out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sqrt(1.0 - ab) * x[i] / (ab * var_ + 1.0 - ab);
    return out;
  }

 private:
  double var_;
  std::size_t len_;
};

// ---------------------------------------------------------------------------

// Exact output variance of the ancestral chain driven by the optimal predictor:
// every step is linear in x_t, so the variance follows a scalar recursion.
double exact_sampler_variance(const NoiseSchedule& s, double var) {
  double v = 1.0;
  for (std::size_t t = s.steps(); t >= 1; --t) {
    const double ab = s.alpha_bar(t);
    const double k = std::sqrt(1.0 - ab) / (ab * var + 1.0 - ab);
    const double m = (1.0 - s.beta(t) / std::sqrt(1.0 - ab) * k) / std::sqrt(s.alpha(t));
    v = m * m * v + (t > 1 ? s.posterior_variance(t) : 0.0);
  }
  return v;
}

Outcome gaussian_oracle_sampler() {
  const auto t0 = Clock::now();
  // Minimises the worst exact variance error over the three data variances.
  const auto schedule = make_geometric_schedule(50, 0.003, 0.31);
  const std::size_t draws = 10000;
  bool ok = true;
  bool paper_form_fails = false;
  std::string detail;
  for (double var : {0.25, 1.0, 4.0}) {
    const double sd = std::sqrt(var);
    const GaussianOracle oracle(var, draws);
    for (auto coef : {MeanCoefficient::Standard, MeanCoefficient::AlphaBar}) {
      SamplerConfig sc;
      sc.num_steps = schedule.steps();
      sc.seed = 11;
      sc.mean_coefficient = coef;
      const auto x = ancestral_sample(oracle, FeatureSequence{}, schedule, sc);
      const double m = mean(x);
      double v = 0.0;
      for (double s : x) v += (s - m) * (s - m);
      v /= static_cast<double>(draws - 1);
      const bool good = std::abs(m) <= 0.05 * sd && std::abs(v / var - 1.0) <= 0.10;
      if (coef == MeanCoefficient::Standard) {
        ok = ok && good;
        detail += fmt(" var %.2f: mean %+.4f var %.4f (ratio %.3f, exact %.3f);", var, m, v, v / var,
                      exact_sampler_variance(schedule, var) / var);
      } else if (!good) {
        paper_form_fails = true;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  detail += paper_form_fails ? " 1/sqrt(abar_t) form rejected;" : " 1/sqrt(abar_t) form NOT rejected;";
  detail += fmt(" %.1fs", elapsed);
  return {ok && paper_form_fails && elapsed < 60.0, detail};
}

Outcome forward_moments() {
  const std::size_t n = 100000;
  const double x0 = 0.8;
  bool ok = true;
  std::string detail;
  Rng rng(21);
  for (double ab : {0.999, 0.9, 0.5, 0.1, 0.001}) {
    const auto eps = standard_normal(rng, n);
    const Signal x(n, x0);
    const auto y = forward_diffuse(x, std::sqrt(ab), eps);
    const double m = mean(y);
    double v = 0.0;
    for (double s : y) v += (s - m) * (s - m);
    v /= static_cast<double>(n - 1);
    const double se = std::sqrt((1.0 - ab) / static_cast<double>(n));
    const double z = (m - std::sqrt(ab) * x0) / se;
    const double rel = v / (1.0 - ab) - 1.0;
    ok = ok && std::abs(z) <= 3.0 && std::abs(rel) <= 0.05;
    detail += fmt(" abar %.3g: z %+.2f var %+.2f%%;", ab, z, 100.0 * rel);
  }
  return {ok, detail};
}

Outcome gradient_audit() {
  DenoiserConfig cfg;
  cfg.upsample_factors = {2, 2};
  cfg.feature_dim = 4;
  cfg.base_channels = 4;
  cfg.noise_embed_dim = 8;
  auto p = init_denoiser(cfg, 21);
  Rng rng(22);
  for (auto& t : p.tensors) {
    for (auto& v : t.values) v += 0.1 * uniform(rng, -1.0, 1.0);
  }
  TrainingExample ex;
  const std::size_t frames = 6, n = frames * cfg.hop();
  ex.x0 = standard_normal(rng, n);
  for (auto& v : ex.x0) v *= 0.3;
  ex.condition = FeatureSequence(frames, cfg.feature_dim);
  for (auto& v : ex.condition.values) v = static_cast<float>(uniform(rng, -2.0, 2.0));
  ex.level.sqrt_alpha_bar = 0.6;
  ex.eps = standard_normal(rng, n);

  GradCheckOptions opts;
  opts.min_coordinates = 200;
  opts.seed = 23;
  const auto r = grad_check(p, ex, 1e-4, opts);
  const bool ok = p.parameter_count() <= 10000 && r.coordinates_checked >= 200 && r.max_relative_error < 1e-4;
  return {ok, fmt(" %zu params, %zu coordinates (%zu at kinks skipped), max rel err %.2e in %s", p.parameter_count(),
                  r.coordinates_checked, r.kinks_skipped, r.max_relative_error, r.worst_tensor.c_str())};
}

Outcome algebraic_inverses() {
  Rng rng(31);
  bool ok = true;
  std::string detail;

  double worst = 0.0;
  for (double sab : {0.02, 0.3, 0.7, 0.999}) {
    const auto x0 = standard_normal(rng, 4096);
    const auto eps = standard_normal(rng, 4096);
    const auto back = predict_x0(forward_diffuse(x0, sab, eps), eps, sab);
    for (std::size_t i = 0; i < x0.size(); ++i) worst = std::max(worst, std::abs(back[i] - x0[i]) / std::max(std::abs(x0[i]), 1e-3));
  }
  ok = ok && worst <= 1e-9;
  detail += fmt(" predict_x0 inverse rel err %.1e;", worst);

  const auto sched = make_linear_schedule(1000, 1e-6, 0.01);
  const auto same = subsample_schedule(sched, 1000);
  double dbeta = 0.0;
  for (std::size_t t = 1; t <= 1000; ++t) dbeta = std::max(dbeta, std::abs(same.beta(t) - sched.beta(t)));
  ok = ok && dbeta <= 1e-12;
  detail += fmt(" subsample(T) max |dbeta| %.1e;", dbeta);

  Manifest m;
  for (int i = 0; i < 40; ++i) {
    UtteranceRecord r;
    r.id = fmt("u%02d", i);
    r.clean_audio_path = r.id + ".wav";
    r.quality_score = uniform(rng, 0.0, 40.0);
    r.duration_s = 1.0;
    m.push_back(r);
  }
  const OraclePairEstimator oracle;
  const auto once = filter_manifest(m, 23.0, oracle);
  const auto twice = filter_manifest(once.kept, 23.0, oracle);
  bool idem = once.kept.size() == twice.kept.size();
  for (std::size_t i = 0; idem && i < once.kept.size(); ++i) idem = once.kept[i].id == twice.kept[i].id;
  ok = ok && idem;
  detail += fmt(" filter idempotent %s (%zu kept);", idem ? "yes" : "no", once.kept.size());

  const auto ref = standard_normal(rng, 8000);
  auto est = ref;
  const auto noise = standard_normal(rng, 8000);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.3 * noise[i];
  const double base = si_sdr(est, ref);
  double drift = 0.0;
  for (double k : {1e-3, 0.5, 7.0, 1e3}) {
    auto scaled = est;
    for (auto& v : scaled) v *= k;
    drift = std::max(drift, std::abs(si_sdr(scaled, ref) - base));
  }
  ok = ok && drift <= 1e-6;
  detail += fmt(" SI-SDR scale drift %.1e dB", drift);
  return {ok, detail};
}

Outcome exact_mixing() {
  Rng rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto speech = standard_normal(rng, 16000);
    // Shorter than the speech so the looping path is exercised too.
    const auto interferer = standard_normal(rng, trial % 2 == 0 ? 16000 : 5000);
    for (double snr : {-15.0, -5.0, 0.0, 5.0, 10.0}) {
      const auto r = mix_at_snr(speech, interferer, snr);
      std::vector<double> scaled(speech.size());
      for (std::size_t i = 0; i < speech.size(); ++i) scaled[i] = r.mixed[i] - speech[i];
      worst = std::max(worst, std::abs(measure_snr_db(speech, scaled) - snr));
    }
  }
  return {worst <= 1e-6, fmt(" max |SNR error| %.2e dB over 25 mixtures", worst)};
}

Outcome filtering_oracle(const fs::path& work) {
  const auto dir = work / "filter_oracle";
  fs::remove_all(dir);
  fs::create_directories(dir / "wav");
  Rng rng(51);
  Manifest m;
  std::vector<double> nominal;
  std::size_t disagreements = 0;
  for (int i = 0; i < 100; ++i) {
    // Known SNRs on a quarter-odd grid, so none sits on the threshold.
    const double snr = 10.25 + 0.5 * static_cast<double>(uniform_index(rng, 56));
    const std::size_t len = 4000 + uniform_index(rng, 4000);
    auto clean = pseudo_speech(rng, len, 8000.0);
    const auto noise = toy_noise(rng, len, 8000.0);
    auto mixed = mix_at_snr(clean, noise, snr, 8000.0).mixed;
    const double peak = std::max(peak_amplitude(mixed), peak_amplitude(clean));
    for (auto& v : clean) v *= 0.9 / peak;
    for (auto& v : mixed) v *= 0.9 / peak;
    UtteranceRecord r;
    r.id = fmt("f%03d", i);
    r.clean_audio_path = "wav/" + r.id + ".clean.wav";
    r.mixed_audio_path = "wav/" + r.id + ".mixed.wav";
    r.interferer_kind = InterfererKind::Noise;
    r.snr_db = snr;
    r.duration_s = static_cast<double>(len) / 8000.0;
    write_wav(dir / r.clean_audio_path, {clean, 8000});
    write_wav(dir / *r.mixed_audio_path, {mixed, 8000});
    // Independent check that 16-bit storage did not move any item across 23 dB.
    const auto c16 = read_wav(dir / r.clean_audio_path).samples;
    const auto m16 = read_wav(dir / *r.mixed_audio_path).samples;
    double num = 0.0, den = 0.0, err = 0.0;
    for (std::size_t k = 0; k < c16.size(); ++k) {
      num += m16[k] * c16[k];
      den += c16[k] * c16[k];
    }
    const double a = num / den;
    for (std::size_t k = 0; k < c16.size(); ++k) err += (m16[k] - a * c16[k]) * (m16[k] - a * c16[k]);
    const double direct = 10.0 * std::log10(a * a * den / err);
    if ((direct > 23.0) != (snr > 23.0)) ++disagreements;
    nominal.push_back(snr);
    m.push_back(r);
  }
  const OraclePairEstimator oracle;
  const auto kept = filter_manifest(m, 23.0, oracle, dir).kept;
  std::set<std::string> want, got;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (nominal[i] > 23.0) want.insert(m[i].id);
  }
  for (const auto& r : kept) got.insert(r.id);
  std::vector<std::string> diff;
  std::set_symmetric_difference(want.begin(), want.end(), got.begin(), got.end(), std::back_inserter(diff));
  return {diff.empty() && disagreements == 0,
          fmt(" %zu of 100 above 23 dB, filter kept %zu, %zu errors (direct SI-SDR disagrees on %zu)", want.size(),
              got.size(), diff.size(), disagreements)};
}

// ---------------------------------------------------------------------------
// Toy end-to-end run shared by criteria 7-9.

struct SamplerRun {
  std::string name;
  std::vector<double> mel;
  std::vector<double> si_sdr;
  std::size_t calls = 0;
  double seconds = 0.0;
};

struct ToyRun {
  std::vector<std::string> ids;
  std::vector<double> mixed_mel;
  std::vector<double> mixed_si_sdr;
  std::vector<SamplerRun> samplers;
  double held_loss_start = 0.0;
  double held_loss_end = 0.0;
  double prep_seconds = 0.0;
  double train_seconds = 0.0;
  std::string checkpoint_bytes;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ToyRun run_toy(const fs::path& dir, std::uint64_t seed) {
  ToyRun out;
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  const RunConfig cfg = resolve_run_config(nlohmann::json{{"preset", "desk"}, {"seed", seed}});
  const auto schedule = cfg.schedule();

  ToyCorpusConfig tc;
  tc.num_utterances = 200;
  tc.num_heldout = 30;
  tc.num_interferers = 40;
  tc.sample_rate = cfg.features.mel.sample_rate;
  tc.min_seconds = 0.75;
  tc.max_seconds = 1.5;
  tc.seed = seed;
  const auto toy = write_toy_corpus(dir / "toy", tc);
  Manifest pool = read_manifest(toy.speech_interferers);
  const auto noise = read_manifest(toy.noise_interferers);
  pool.insert(pool.end(), noise.begin(), noise.end());
  const auto train_pairs =
      mix_corpus(read_manifest(toy.train_manifest), dir / "toy", pool, dir / "toy", std::nullopt,
                 derive_seed(seed, "mix-train"), dir / "train_mix");
  const auto held_pairs = mix_corpus(read_manifest(toy.heldout_manifest), dir / "toy", pool, dir / "toy",
                                     std::nullopt, derive_seed(seed, "mix-heldout"), dir / "held_mix");
  if (!train_pairs.failures.empty() || !held_pairs.failures.empty()) throw std::runtime_error("toy mixing failed");

  auto stage1 = load_corpus(read_manifest(toy.train_manifest), dir / "toy", cfg.train, cfg.features, cfg.denoiser.hop());
  stage1.set_all_scored(true);  // synthetic speech is clean by construction
  const auto stage2 = load_corpus(train_pairs.mixed, dir / "train_mix", cfg.finetune, cfg.features, cfg.denoiser.hop());
  const auto held_examples = draw_fixed_examples(stage2, 64, derive_seed(seed, "held-loss"), cfg.finetune, schedule);
  out.prep_seconds = seconds_since(t0);

  const auto t1 = Clock::now();
  out.held_loss_start = batch_loss(init_denoiser(cfg.denoiser, derive_seed(cfg.train.seed, "init")), held_examples);
  const auto ck1 = train_stage1(stage1, cfg.denoiser, cfg.train, schedule, {dir / "stage1", std::nullopt, {}});
  const auto ck2 = finetune_stage2(stage2, ck1, cfg.finetune, schedule, {dir / "stage2", std::nullopt, {}});
  out.held_loss_end = batch_loss(ck2.params, held_examples);
  out.train_seconds = seconds_since(t1);
  out.checkpoint_bytes = slurp(dir / "stage2" / "final.dwck");

  const ViewBuilder builder(cfg.features);
  const DenoiserNet net(ck2.params);
  struct Held {
    std::vector<double> clean, mixed;
    FeatureSequence cond;
  };
  std::vector<Held> held;
  const auto hd = dir / "held_mix";
  for (const auto& r : held_pairs.mixed) {
    Held h;
    h.clean = read_wav(resolve_path(hd, r.clean_audio_path)).samples;
    h.mixed = read_wav(resolve_path(hd, *r.mixed_audio_path)).samples;
    h.cond = builder.noisy_audio_visual_view(h.mixed, builder.visual_view(builder.audio_view(h.clean)));
    out.ids.push_back(r.id);
    out.mixed_mel.push_back(log_mel_distance(h.mixed, h.clean, cfg.features.mel));
    out.mixed_si_sdr.push_back(si_sdr(h.mixed, h.clean));
    held.push_back(std::move(h));
  }

  for (const char* spec : {"ancestral", "ddim-50", "cont-100"}) {
    const auto ts = Clock::now();
    SamplerRun s;
    s.name = spec;
    SynthesisOptions opts = cfg.synthesis;
    opts.sampler = parse_sampler(spec, schedule.steps());
    opts.sampler.seed = seed;
    const CountingPredictor counted(net);
    fs::create_directories(dir / "enhanced" / spec);
    for (std::size_t i = 0; i < held.size(); ++i) {
      const auto y = fit_output(synthesize(counted, held[i].cond, schedule, opts, out.ids[i], cfg.denoiser.hop()),
                                held[i].clean.size(), peak_amplitude(held[i].mixed));
      write_wav(dir / "enhanced" / spec / (out.ids[i] + ".wav"),
                {y, static_cast<unsigned>(cfg.features.mel.sample_rate)});
      s.mel.push_back(log_mel_distance(y, held[i].clean, cfg.features.mel));
      s.si_sdr.push_back(si_sdr(y, held[i].clean));
    }
    s.calls = counted.calls();
    s.seconds = seconds_since(ts);
    out.samplers.push_back(std::move(s));
  }
  return out;
}

const SamplerRun& by_name(const ToyRun& r, const std::string& name) {
  for (const auto& s : r.samplers) {
    if (s.name == name) return s;
  }
  throw std::logic_error("no sampler run " + name);
}

Outcome toy_enhancement(const ToyRun& r) {
  const auto& anc = by_name(r, "ancestral");
  std::size_t wins = 0;
  for (std::size_t i = 0; i < anc.mel.size(); ++i) wins += anc.mel[i] < r.mixed_mel[i];
  const double share = static_cast<double>(wins) / static_cast<double>(anc.mel.size());
  const double gain = mean(anc.si_sdr) - mean(r.mixed_si_sdr);
  const double minutes = (r.prep_seconds + r.train_seconds + anc.seconds) / 60.0;
  const bool ok = share >= 0.8 && gain > 1.0 && minutes <= 30.0;
  // Reported only; the criterion is judged on the full sampler.
  std::string others;
  for (const char* name : {"ddim-50", "cont-100"}) {
    const auto& s = by_name(r, name);
    std::size_t w = 0;
    for (std::size_t i = 0; i < s.mel.size(); ++i) w += s.mel[i] < r.mixed_mel[i];
    others += fmt(" %s better on %zu/%zu;", name, w, s.mel.size());
  }
  return {ok, fmt(" log-mel better on %zu/%zu (%.0f%%), mean %.3f vs mixed %.3f; SI-SDR %.2f vs %.2f dB (%+.2f);"
                  " held-out loss %.4f -> %.4f; %.1f min",
                  wins, anc.mel.size(), 100.0 * share, mean(anc.mel), mean(r.mixed_mel), mean(anc.si_sdr),
                  mean(r.mixed_si_sdr), gain, r.held_loss_start, r.held_loss_end, minutes) +
                  others};
}

Outcome fast_inference(const ToyRun& r) {
  const auto& anc = by_name(r, "ancestral");
  const double ref = mean(anc.mel);
  bool ok = true;
  std::string detail = fmt(" ancestral mel %.3f (%zu calls);", ref, anc.calls);
  for (const char* name : {"ddim-50", "cont-100"}) {
    const auto& s = by_name(r, name);
    const double rel = mean(s.mel) / ref - 1.0;
    const double fewer = static_cast<double>(anc.calls) / static_cast<double>(s.calls);
    ok = ok && std::abs(rel) <= 0.15 && fewer >= 10.0;
    detail += fmt(" %s mel %.3f (%+.1f%%), %.0fx fewer calls;", name, mean(s.mel), 100.0 * rel, fewer);
  }
  return {ok, detail};
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome determinism(const ToyRun& a, const ToyRun& b) {
  bool ok = a.ids == b.ids && same_bits(a.mixed_mel, b.mixed_mel) && same_bits(a.mixed_si_sdr, b.mixed_si_sdr) &&
            a.samplers.size() == b.samplers.size() && a.checkpoint_bytes == b.checkpoint_bytes &&
            std::memcmp(&a.held_loss_end, &b.held_loss_end, sizeof(double)) == 0;
  std::size_t compared = 2 * a.mixed_mel.size() + 1;
  for (std::size_t i = 0; ok && i < a.samplers.size(); ++i) {
    ok = same_bits(a.samplers[i].mel, b.samplers[i].mel) && same_bits(a.samplers[i].si_sdr, b.samplers[i].si_sdr) &&
         a.samplers[i].calls == b.samplers[i].calls;
    compared += 2 * a.samplers[i].mel.size();
  }
  return {ok, fmt(" second run: %zu metrics and the final checkpoint (%zu bytes) %s", compared,
                  a.checkpoint_bytes.size(), ok ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "dwave_acceptance";
  std::set<int> only;
  std::set<int> expected;
  const auto parse_list = [](const char* arg, std::set<int>& into) {
    std::stringstream ss(arg);
    for (std::string tok; std::getline(ss, tok, ',');) into.insert(std::stoi(tok));
  };
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      parse_list(argv[++i], only);
    } else if (a == "--expect-fail" && i + 1 < argc) {
      parse_list(argv[++i], expected);
    } else {
      std::fprintf(stderr, "usage: %s [--work DIR] [--only N,M,...] [--expect-fail N,M,...]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);
  const auto wanted = [&](int n) { return only.empty() || only.contains(n); };

  // ctest hides the output of passing tests, so the lines also go to a file.
  std::ofstream log(work / "report.txt");
  const auto emit = [&](const std::string& line) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    log << line << '\n' << std::flush;
  };
  std::set<int> failed;
  const auto report = [&](int n, const char* title, const Outcome& o) {
    emit(fmt("criterion %d %-28s %s |", n, title, o.pass ? "PASS" : "FAIL") + o.detail);
    if (!o.pass) failed.insert(n);
  };
  const auto guarded = [&](int n, const char* title, const std::function<Outcome()>& f) {
    if (!wanted(n)) return;
    try {
      report(n, title, f());
    } catch (const std::exception& e) {
      report(n, title, {false, std::string(" threw: ") + e.what()});
    }
  };

  guarded(1, "gaussian-oracle sampler", gaussian_oracle_sampler);
  guarded(2, "forward-process moments", forward_moments);
  guarded(3, "gradient audit", gradient_audit);
  guarded(4, "algebraic inverses", algebraic_inverses);
  guarded(5, "exact mixing", exact_mixing);
  guarded(6, "filtering oracle", [&] { return filtering_oracle(work); });

  if (wanted(7) || wanted(8) || wanted(9)) {
    try {
      const auto first = run_toy(work / "toy_run", 2024);
      guarded(7, "toy enhancement", [&] { return toy_enhancement(first); });
      guarded(8, "fast-inference parity", [&] { return fast_inference(first); });
      guarded(9, "determinism", [&] { return determinism(first, run_toy(work / "toy_rerun", 2024)); });
    } catch (const std::exception& e) {
      for (int n : {7, 8, 9}) {
        if (wanted(n)) report(n, "toy run", {false, std::string(" threw: ") + e.what()});
      }
    }
  }
  emit(fmt("%zu criteria failed", failed.size()));
  // Known failures are listed explicitly; any other failure, or a listed one that
  // starts passing, makes the run fail.
  std::set<int> expected_run;
  for (int n : expected) {
    if (wanted(n)) expected_run.insert(n);
  }
  if (!expected_run.empty()) {
    std::string line = "expected to fail:";
    for (int n : expected_run) line += " " + std::to_string(n);
    emit(line);
  }
  return failed == expected_run ? 0 : 1;
}
