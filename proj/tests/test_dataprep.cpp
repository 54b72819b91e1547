#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dwave/dataprep.hpp"
#include "dwave/manifest.hpp"
#include "dwave/toy_corpus.hpp"
#include "dwave/wav.hpp"

using namespace dwave;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dwave_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double rms(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(x.size()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mixing at a target SNR") {
  Rng rng(4);
  auto s = standard_normal(rng, 4000);
  auto n = standard_normal(rng, 4000);
  const double rs = rms(s), rn = rms(n);
  for (double& v : n) v *= rs / rn;
  CHECK(mix_at_snr(s, n, 0.0).interferer_scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mix_at_snr(s, n, 10.0).interferer_scale == doctest::Approx(0.31623).epsilon(1e-5));

  for (double snr : {-15.0, -5.0, 0.0, 5.0, 10.0}) {
    const auto m = mix_at_snr(s, n, snr);
    std::vector<double> scaled(n);
    for (double& v : scaled) v *= m.interferer_scale;
    CHECK(std::abs(measure_snr_db(s, scaled) - snr) < 1e-6);
    for (std::size_t i = 0; i < s.size(); i += 97) CHECK(m.mixed[i] == doctest::Approx(s[i] + scaled[i]));
  }
  CHECK_THROWS(mix_at_snr(std::vector<double>(10, 0.0), n, 0.0));
  CHECK_THROWS(mix_at_snr(s, std::vector<double>(10, 0.0), 0.0));
}

TEST_CASE("short interferers are looped with a crossfade") {
  std::vector<double> clip(800, 1.0);
  const auto looped = loop_to_length(clip, 3000, 160);
  CHECK(looped.size() == 3000);
  for (double v : looped) CHECK(v == doctest::Approx(1.0));
  Rng rng(8);
  const auto s = standard_normal(rng, 3000);
  const auto m = mix_at_snr(s, standard_normal(rng, 700), -5.0);
  CHECK(m.mixed.size() == 3000);
}

TEST_CASE("SNR bands") {
  Rng rng(12);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double s = sample_snr(InterfererKind::Speech, rng);
    CHECK(s >= -15.0);
    CHECK(s <= 5.0);
    sum += s;
    const double z = sample_snr(InterfererKind::Noise, rng);
    CHECK(z >= -10.0);
    CHECK(z <= 10.0);
  }
  CHECK(std::abs(sum / n + 5.0) < 0.3);
  CHECK_THROWS(sample_snr(InterfererKind::None, rng));
}

TEST_CASE("SI-SDR") {
  const std::vector<double> s{1.0, 0.0};
  CHECK(si_sdr(std::vector<double>{1.0, 1.0}, s) == doctest::Approx(0.0).epsilon(1e-12));
  Rng rng(3);
  const auto ref = standard_normal(rng, 1000);
  CHECK(si_sdr(ref, ref) == kSiSdrClamp);
  std::vector<double> twice(ref);
  for (double& v : twice) v *= 2.0;
  CHECK(si_sdr(twice, ref) == kSiSdrClamp);

  auto est = ref;
  const auto noise = standard_normal(rng, 1000);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.3 * noise[i];
  const double base = si_sdr(est, ref);
  for (double k : {0.1, 1.0, 10.0}) {
    std::vector<double> scaled(est);
    for (double& v : scaled) v *= k;
    CHECK(std::abs(si_sdr(scaled, ref) - base) < 1e-6);
  }
  CHECK_THROWS(si_sdr(std::vector<double>{1.0}, s));
}

TEST_CASE("quality estimators") {
  const OraclePairEstimator oracle;
  Rng rng(6);
  const auto clean = standard_normal(rng, 2000);
  auto mixed = clean;
  const auto n = standard_normal(rng, 2000);
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += 0.5 * n[i];
  CHECK(oracle.score(mixed, std::span<const double>(clean)) == si_sdr(mixed, clean));
  CHECK_THROWS(oracle.score(mixed, std::nullopt));

  const EnergyHeuristicEstimator energy;
  std::vector<double> tone(16000), noisy(16000);
  const auto white = standard_normal(rng, 16000);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    tone[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / 16000.0);
    noisy[i] = tone[i] + 0.5 * white[i];
  }
  CHECK(energy.score(tone, std::nullopt) > energy.score(noisy, std::nullopt));
  CHECK(energy.score(tone, std::nullopt) == energy.score(tone, std::nullopt));
  CHECK(make_estimator("oracle")->name() == "oracle");
  CHECK(make_estimator("energy")->name() == "energy");
  CHECK_THROWS(make_estimator("dnsmos"));
}

TEST_CASE("threshold filtering") {
  Manifest m(3);
  const double scores[] = {25.0, 20.0, 24.0};
  for (int i = 0; i < 3; ++i) {
    m[i].id = "u" + std::to_string(i);
    m[i].clean_audio_path = "x.wav";
    m[i].quality_score = scores[i];
    m[i].duration_s = 3600.0;
  }
  const OraclePairEstimator est;
  const auto r = filter_manifest(m, 23.0, est);
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].id == "u0");
  CHECK(r.kept[1].id == "u2");
  CHECK(r.report.total == 3);
  CHECK(r.report.kept_hours == doctest::Approx(2.0));
  CHECK(r.report.total_hours == doctest::Approx(3.0));
  CHECK(filter_manifest(r.kept, 23.0, est).kept.size() == 2);

  const auto none = filter_manifest(m, 30.0, est);
  CHECK(none.kept.empty());
  CHECK(none.report.kept_hours == 0.0);
  CHECK(threshold_preset("av2wav-23") == 23.0);
  CHECK(threshold_preset("av2wav-25") == 25.0);
  CHECK_THROWS(threshold_preset("av2wav-24"));
}

TEST_CASE("manifest round trip and invariants") {
  const auto dir = temp_dir("manifest");
  UtteranceRecord r;
  r.id = "a";
  r.clean_audio_path = "clean/a.wav";
  r.mixed_audio_path = "mixed/a.wav";
  r.feature_paths[ConditionView::AVN] = "f/a.AVN.featbin";
  r.quality_score = 12.5;
  r.interferer_kind = InterfererKind::Noise;
  r.snr_db = -3.25;
  r.duration_s = 1.5;
  UtteranceRecord plain;
  plain.id = "b";
  plain.clean_audio_path = "clean/b.wav";
  write_manifest(dir / "m.jsonl", {r, plain});
  const auto back = read_manifest(dir / "m.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].mixed_audio_path == r.mixed_audio_path);
  CHECK(back[0].feature_paths == r.feature_paths);
  CHECK(back[0].snr_db == r.snr_db);
  CHECK(back[0].interferer_kind == InterfererKind::Noise);
  CHECK(back[1].interferer_kind == InterfererKind::None);
  CHECK(record_to_json_line(back[0]) == record_to_json_line(r));

  UtteranceRecord bad = plain;
  bad.snr_db = 3.0;
  CHECK_THROWS(bad.validate());
  bad = r;
  bad.snr_db.reset();
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(record_from_json_line("{\"id\": \"x\"}"));
  CHECK(resolve_path(dir, "clean/a.wav") == dir / "clean/a.wav");
  CHECK(resolve_path(dir, "/abs/a.wav") == fs::path("/abs/a.wav"));
}

TEST_CASE("wav round trip") {
  const auto dir = temp_dir("wav");
  Waveform w{{0.0, 0.5, -0.5, 0.999, -1.0, 2.0}, 8000};
  write_wav(dir / "a.wav", w);
  const auto r = read_wav(dir / "a.wav");
  CHECK(r.sample_rate == 8000);
  REQUIRE(r.samples.size() == 6);
  CHECK(r.samples[1] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.samples[5] <= 1.0);
  {
    std::ofstream(dir / "bad.wav", std::ios::binary) << "RIFF1234WAVEjunk";
  }
  CHECK_THROWS(read_wav(dir / "bad.wav"));
  CHECK_THROWS(read_wav(dir / "missing.wav"));
}

TEST_CASE("corpus mixing is reproducible and records the SNR band") {
  const auto dir = temp_dir("mixcorpus");
  ToyCorpusConfig c;
  c.num_utterances = 6;
  c.num_heldout = 1;
  c.num_interferers = 2;
  c.min_seconds = 0.5;
  c.max_seconds = 0.8;
  const auto corpus = write_toy_corpus(dir, c);
  const auto clean = read_manifest(corpus.train_manifest);
  const auto speech = read_manifest(corpus.speech_interferers);
  const auto a = mix_corpus(clean, dir, speech, dir, InterfererKind::Speech, 42, dir / "a");
  const auto b = mix_corpus(clean, dir, speech, dir, InterfererKind::Speech, 42, dir / "b");
  REQUIRE(a.failures.empty());
  REQUIRE(a.mixed.size() == clean.size());
  for (std::size_t i = 0; i < a.mixed.size(); ++i) {
    const auto& r = a.mixed[i];
    CHECK(r.interferer_kind == InterfererKind::Speech);
    REQUIRE(r.snr_db.has_value());
    CHECK(*r.snr_db >= -15.0);
    CHECK(*r.snr_db <= 5.0);
    CHECK(slurp(dir / "a" / *r.mixed_audio_path) == slurp(dir / "b" / *b.mixed[i].mixed_audio_path));
    CHECK(fs::exists(resolve_path(dir / "a", r.clean_audio_path)));
  }
  const auto noise = read_manifest(corpus.noise_interferers);
  const auto n = mix_corpus(clean, dir, noise, dir, InterfererKind::Noise, 42, dir / "n");
  for (const auto& r : n.mixed) {
    CHECK(*r.snr_db >= -10.0);
    CHECK(*r.snr_db <= 10.0);
  }
  // No interferer of the requested kind in the pool: every item fails.
  CHECK(mix_corpus(clean, dir, noise, dir, InterfererKind::Speech, 1, dir / "x").failures.size() == clean.size());
}
