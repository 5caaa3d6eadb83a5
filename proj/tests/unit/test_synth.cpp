#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "csiact/experiment.hpp"
#include "csiact/synth.hpp"
#include "support.hpp"

using namespace csiact;
using csiact::testing::error_code_of;
namespace fs = std::filesystem;

namespace {

// Mean over data subcarriers of (amplitude - 1) in the middle fifth of the trace.
double mid_trace_excursion(const CsiSample& s) {
  double sum = 0.0;
  int count = 0;
  for (const auto& t : s.traces) {
    if (synth::role_of(t.index) != synth::SubcarrierRole::Data) continue;
    const auto n = t.amplitudes.size();
    for (std::size_t i = n * 2 / 5; i < n * 3 / 5; ++i) {
      sum += t.amplitudes[i] - 1.0;
      ++count;
    }
  }
  return sum / count;
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(int n, int k) {
  double p = 0.0;
  for (int i = k; i <= n; ++i) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0)) *
                                  std::pow(0.5, n);
  return p;
}

}  // namespace

TEST_CASE("generate_sample shape contract") {
  const auto s = synth::generate_sample({}, ActivityLabel::Sitting, 7);
  validate(s);
  CHECK(s.label == ActivityLabel::Sitting);
  REQUIRE(s.traces.size() == 64);
  const auto len = s.trace_length();
  CHECK(len >= 475);
  CHECK(len <= 525);
  for (int k = 0; k < 64; ++k) {
    CHECK(s.traces[static_cast<std::size_t>(k)].index == k);
    CHECK(s.traces[static_cast<std::size_t>(k)].amplitudes.size() == len);
  }
}

TEST_CASE("trace lengths stay within five percent across many seeds") {
  std::size_t lo = 10000, hi = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto len = synth::generate_sample({}, ActivityLabel::Standing, seed).trace_length();
    lo = std::min(lo, len);
    hi = std::max(hi, len);
  }
  CHECK(lo >= 475);
  CHECK(hi <= 525);
  CHECK(hi > lo);
}

TEST_CASE("generate_sample is deterministic in config seed and sample seed") {
  synth::SynthConfig cfg;
  const auto a = synth::generate_sample(cfg, ActivityLabel::Standing, 3);
  const auto b = synth::generate_sample(cfg, ActivityLabel::Standing, 3);
  CHECK(a.traces == b.traces);
  CHECK(format_sample_csv(a) == format_sample_csv(b));

  CHECK(synth::generate_sample(cfg, ActivityLabel::Standing, 4).traces != a.traces);
  cfg.seed = 43;
  CHECK(synth::generate_sample(cfg, ActivityLabel::Standing, 3).traces != a.traces);
}

TEST_CASE("sitting dips and standing rises on the data subcarriers") {
  constexpr int kPerClass = 20;
  int sitting_negative = 0;
  int standing_positive = 0;
  for (int i = 0; i < kPerClass; ++i) {
    sitting_negative += mid_trace_excursion(synth::generate_sample({}, ActivityLabel::Sitting, 1000 + i)) < 0.0;
    standing_positive += mid_trace_excursion(synth::generate_sample({}, ActivityLabel::Standing, 2000 + i)) > 0.0;
  }
  // Under a no-signal null each sign is a fair coin.
  CHECK(binomial_upper_tail(kPerClass, sitting_negative) < 0.01);
  CHECK(binomial_upper_tail(kPerClass, standing_positive) < 0.01);
}

TEST_CASE("null subcarriers stay below the noise floor and pilots sit at unit level") {
  synth::SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = synth::generate_sample(cfg, seed % 2 ? ActivityLabel::Standing : ActivityLabel::Sitting, seed);
    for (int k : synth::kNullSubcarriers) {
      double sq = 0.0;
      for (double v : s.traces[static_cast<std::size_t>(k)].amplitudes) sq += v * v;
      CHECK(std::sqrt(sq / s.trace_length()) <= cfg.noise_sigma);
    }
    for (int k : synth::kPilotSubcarriers) {
      double mean = 0.0;
      for (double v : s.traces[static_cast<std::size_t>(k)].amplitudes) mean += v;
      mean /= s.trace_length();
      CHECK(mean == Catch::Approx(1.0).margin(0.02));
    }
  }
}

TEST_CASE("subcarrier layout has 12 nulls and 4 pilots") {
  int nulls = 0, pilots = 0, data = 0;
  for (int k = 0; k < 64; ++k) {
    switch (synth::role_of(k)) {
      case synth::SubcarrierRole::Null: ++nulls; break;
      case synth::SubcarrierRole::Pilot: ++pilots; break;
      case synth::SubcarrierRole::Data: ++data; break;
    }
  }
  CHECK(nulls == 12);
  CHECK(pilots == 4);
  CHECK(data == 48);
}

TEST_CASE("excursion profile rises to the peak then settles") {
  synth::MotionSignature sig;
  sig.transition_center = 0.5;
  sig.transition_width = 0.2;
  CHECK(synth::excursion_profile(sig, 0.0) == 0.0);
  CHECK(synth::excursion_profile(sig, 0.4) == 0.0);
  CHECK(synth::excursion_profile(sig, 0.5) == 1.0);
  CHECK(synth::excursion_profile(sig, 1.0) == Catch::Approx(synth::kSettleLevel));
  CHECK(synth::subcarrier_scale(0) == 0.5);
  CHECK(synth::subcarrier_scale(32) == 0.75);
}

TEST_CASE("zero class separation leaves nothing to learn") {
  // Rows of one capture are correlated, so the check scores captures the
  // model has never seen rather than folds of pooled rows.
  synth::SynthConfig cfg;
  cfg.class_separation = 0.0;
  const auto train = assemble_design_matrix(synth::generate_samples(cfg, 30));
  cfg.seed = 4242;
  const auto test = assemble_design_matrix(synth::generate_samples(cfg, 30));
  ClassifierSpec spec;
  spec.kind = ModelKind::Forest;
  spec.forest.n_trees = 25;
  const auto model = fit(spec, train, 42);
  const auto acc = metrics(confusion(test.labels, model.predict(test.rows))).accuracy;
  CHECK(acc >= 0.40);
  CHECK(acc <= 0.60);
}

TEST_CASE("invalid configurations are rejected") {
  auto with = [](auto mutate) {
    synth::SynthConfig cfg;
    mutate(cfg);
    return error_code_of([&] { synth::generate_sample(cfg, ActivityLabel::Sitting, 0); });
  };
  CHECK(with([](auto& c) { c.trace_length = 15; }) == Errc::BadConfig);
  CHECK(with([](auto& c) { c.n_subcarriers = 32; }) == Errc::BadConfig);
  CHECK(with([](auto& c) { c.noise_sigma = -0.1; }) == Errc::BadConfig);
  CHECK(with([](auto& c) { c.motion_amplitude = 0.0; }) == Errc::BadConfig);
  CHECK(with([](auto& c) { c.class_separation = 1.5; }) == Errc::BadConfig);
  CHECK(with([](auto& c) { c.trace_length = 16; }) == std::nullopt);
}

TEST_CASE("generate_dataset writes one file per sample plus a manifest") {
  csiact::testing::TempDir dir;
  const auto manifest = synth::generate_dataset({}, 30, dir / "data");
  CHECK(manifest.files.size() == 60);
  CHECK(fs::exists(manifest.manifest_path));
  CHECK(manifest.files.front().filename() == "sitting_000.csv");
  CHECK(manifest.files.back().filename() == "standing_029.csv");

  const auto samples = load_dataset(dir / "data");
  REQUIRE(samples.size() == 60);
  CHECK(assemble_design_matrix(samples).size() == 3840);

  // Files hold exactly what the in-memory generator produces.
  const auto memory = synth::generate_samples({}, 30);
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(samples[i].traces == memory[i].traces);

  const auto text = csiact::testing::read_text(manifest.manifest_path);
  CHECK(text.find("null_subcarriers=0,1,2,3,4,5,32,59,60,61,62,63\n") != std::string::npos);
  CHECK(text.find("pilot_subcarriers=11,25,39,53\n") != std::string::npos);
  CHECK(text.find("seed=42\n") != std::string::npos);
}

TEST_CASE("generate_dataset with one sample per class") {
  csiact::testing::TempDir dir;
  const auto manifest = synth::generate_dataset({}, 1, dir.path());
  CHECK(manifest.files.size() == 2);
  CHECK(list_dataset(dir.path()).size() == 2);
}

TEST_CASE("generate_dataset reruns are byte identical") {
  csiact::testing::TempDir a, b;
  synth::SynthConfig cfg;
  cfg.seed = 9;
  const auto ma = synth::generate_dataset(cfg, 3, a.path());
  const auto mb = synth::generate_dataset(cfg, 3, b.path());
  CHECK(csiact::testing::read_text(ma.manifest_path) == csiact::testing::read_text(mb.manifest_path));
  for (std::size_t i = 0; i < ma.files.size(); ++i)
    CHECK(csiact::testing::read_text(ma.files[i]) == csiact::testing::read_text(mb.files[i]));
}

TEST_CASE("generate_dataset reports unwritable destinations") {
  csiact::testing::TempDir dir;
  csiact::testing::write_text(dir / "blocker", "not a directory");
  CHECK(error_code_of([&] { synth::generate_dataset({}, 1, dir / "blocker" / "out"); }) == Errc::IoFailure);
  CHECK(error_code_of([&] { synth::generate_dataset({}, 0, dir / "x"); }) == Errc::BadConfig);
}
