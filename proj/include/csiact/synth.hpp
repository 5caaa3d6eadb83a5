#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "csiact/dataset.hpp"
#include "csiact/error.hpp"
#include "csiact/labels.hpp"
#include "csiact/seeding.hpp"

namespace csiact::synth {

/// 64-point OFDM layout: 12 guard/DC nulls and 4 pilots.
inline constexpr std::array<int, 12> kNullSubcarriers = {0, 1, 2, 3, 4, 5, 32, 59, 60, 61, 62, 63};
inline constexpr std::array<int, 4> kPilotSubcarriers = {11, 25, 39, 53};

enum class SubcarrierRole { Null, Pilot, Data };

constexpr SubcarrierRole role_of(int index) noexcept {
  for (int n : kNullSubcarriers)
    if (n == index) return SubcarrierRole::Null;
  for (int p : kPilotSubcarriers)
    if (p == index) return SubcarrierRole::Pilot;
  return SubcarrierRole::Data;
}

struct SynthConfig {
  int n_subcarriers = 64;
  int trace_length = 500;
  double noise_sigma = 0.05;
  double motion_amplitude = 0.5;
  double class_separation = 1.0;
  std::uint64_t seed = 42;
};

inline void validate(const SynthConfig& cfg) {
  if (cfg.n_subcarriers != static_cast<int>(kSubcarrierCount))
    throw Error(Errc::BadConfig, "n_subcarriers must be 64");
  if (cfg.trace_length < 16) throw Error(Errc::BadConfig, "trace_length must be >= 16");
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma))
    throw Error(Errc::BadConfig, "noise_sigma must be >= 0");
  if (!(cfg.motion_amplitude > 0.0) || !std::isfinite(cfg.motion_amplitude))
    throw Error(Errc::BadConfig, "motion_amplitude must be > 0");
  if (!(cfg.class_separation >= 0.0 && cfg.class_separation <= 1.0))
    throw Error(Errc::BadConfig, "class_separation must lie in [0, 1]");
}

enum class Direction { Dip, Rise };

struct MotionSignature {
  ActivityLabel activity = ActivityLabel::Sitting;
  double transition_center = 0.5;  // fraction of trace
  double transition_width = 0.2;   // fraction of trace
  Direction direction = Direction::Dip;
};

constexpr Direction direction_of(ActivityLabel activity) noexcept {
  return activity == ActivityLabel::Sitting ? Direction::Dip : Direction::Rise;
}

inline double smoothstep(double x) noexcept {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

/// Level the amplitude settles at after the posture change, relative to the
/// peak excursion.
inline constexpr double kSettleLevel = 0.35;

/// Unsigned excursion profile in [0, 1] at trace position `pos` (fraction):
/// smooth ramp up to the peak at the transition centre, then a smooth decay
/// to the settle level.
inline double excursion_profile(const MotionSignature& sig, double pos) noexcept {
  const double half = sig.transition_width / 2.0;
  const double start = sig.transition_center - half;
  if (pos <= sig.transition_center) return smoothstep((pos - start) / half);
  return 1.0 - (1.0 - kSettleLevel) * smoothstep((pos - sig.transition_center) / half);
}

/// Per-subcarrier response scale (1 + index/64) * 0.5.
constexpr double subcarrier_scale(int index) noexcept {
  return (1.0 + static_cast<double>(index) / 64.0) * 0.5;
}

inline double quantize(double v) noexcept { return std::round(v * 1e6) / 1e6; }

inline std::uint64_t sample_stream_seed(const SynthConfig& cfg, std::uint64_t sample_seed) noexcept {
  return derive_seed(cfg.seed, sample_seed);
}

/// One synthetic capture. Deterministic in (cfg.seed, sample_seed); the
/// activity only selects the excursion direction.
inline CsiSample generate_sample(const SynthConfig& cfg, ActivityLabel activity,
                                 std::uint64_t sample_seed) {
  validate(cfg);
  std::mt19937_64 rng(sample_stream_seed(cfg, sample_seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const int jitter = cfg.trace_length / 20;
  std::uniform_int_distribution<int> length_dist(cfg.trace_length - jitter, cfg.trace_length + jitter);
  const int length = length_dist(rng);

  MotionSignature sig;
  sig.activity = activity;
  sig.direction = direction_of(activity);
  sig.transition_center = 0.4 + 0.2 * unit(rng);
  sig.transition_width = 0.15 + 0.1 * unit(rng);
  const double sign = sig.direction == Direction::Dip ? -1.0 : 1.0;
  const double excursion = sign * cfg.motion_amplitude * cfg.class_separation;

  std::vector<double> profile(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t)
    profile[static_cast<std::size_t>(t)] = excursion_profile(sig, (t + 0.5) / length);

  CsiSample sample;
  sample.label = activity;
  sample.meta.source_id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(sample_seed);
  sample.meta.capture_duration_s = 10.0;
  sample.traces.resize(kSubcarrierCount);
  for (int k = 0; k < static_cast<int>(kSubcarrierCount); ++k) {
    auto& trace = sample.traces[static_cast<std::size_t>(k)];
    trace.index = k;
    trace.amplitudes.resize(static_cast<std::size_t>(length));

    // Draw nuisance parameters for every subcarrier so the stream layout
    // does not depend on the subcarrier's role.
    const double fade_amp = 0.02 + 0.06 * unit(rng);
    const double fade_cycles = 0.5 + 2.5 * unit(rng);
    const double fade_phase = 2.0 * std::numbers::pi * unit(rng);

    const auto role = role_of(k);
    const double scale = subcarrier_scale(k);
    for (int t = 0; t < length; ++t) {
      const double eps = cfg.noise_sigma * noise(rng);
      double v = 0.0;
      switch (role) {
        case SubcarrierRole::Null:
          v = std::abs(0.5 * eps);
          break;
        case SubcarrierRole::Pilot:
          v = 1.0 + eps;
          break;
        case SubcarrierRole::Data: {
          const double pos = static_cast<double>(t) / length;
          const double baseline =
              1.0 + fade_amp * std::sin(2.0 * std::numbers::pi * fade_cycles * pos + fade_phase);
          v = baseline + excursion * scale * profile[static_cast<std::size_t>(t)] + eps;
          break;
        }
      }
      trace.amplitudes[static_cast<std::size_t>(t)] = quantize(v);
    }
  }
  return sample;
}

struct DatasetManifest {
  std::filesystem::path manifest_path;
  std::vector<std::filesystem::path> files;
  SynthConfig config;
  int n_per_class = 0;
};

inline std::string sample_filename(ActivityLabel activity, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03d.csv", index);
  return std::string(to_string(activity)) + buf;
}

/// Sample seed used for the i-th file of a class in a generated dataset.
constexpr std::uint64_t dataset_sample_seed(ActivityLabel activity, int index, int n_per_class) noexcept {
  return static_cast<std::uint64_t>(index) +
         (activity == ActivityLabel::Standing ? static_cast<std::uint64_t>(n_per_class) : 0u);
}

inline std::string format_manifest(const DatasetManifest& m) {
  auto join = [](const auto& values) {
    std::string s;
    for (auto v : values) s += (s.empty() ? "" : ",") + std::to_string(v);
    return s;
  };
  const auto& c = m.config;
  std::string out;
  out += "n_subcarriers=" + std::to_string(c.n_subcarriers) + "\n";
  out += "trace_length=" + std::to_string(c.trace_length) + "\n";
  out += "noise_sigma=" + format_double(c.noise_sigma) + "\n";
  out += "motion_amplitude=" + format_double(c.motion_amplitude) + "\n";
  out += "class_separation=" + format_double(c.class_separation) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += "n_per_class=" + std::to_string(m.n_per_class) + "\n";
  out += "null_subcarriers=" + join(kNullSubcarriers) + "\n";
  out += "pilot_subcarriers=" + join(kPilotSubcarriers) + "\n";
  out += "centre_frequency_hz=" + format_double(CaptureMeta{}.centre_frequency_hz) + "\n";
  out += "sample_time_s=" + format_double(CaptureMeta{}.sample_time_s) + "\n";
  out += "capture_duration_s=" + format_double(CaptureMeta{}.capture_duration_s) + "\n";
  for (const auto& f : m.files) out += "file=" + f.filename().string() + "\n";
  return out;
}

/// Writes 2 * n_per_class sample CSVs plus manifest.txt into out_dir.
inline DatasetManifest generate_dataset(const SynthConfig& cfg, int n_per_class,
                                        const std::filesystem::path& out_dir) {
  validate(cfg);
  if (n_per_class < 1) throw Error(Errc::BadConfig, "n_per_class must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw Error(Errc::IoFailure, "cannot create " + out_dir.string());

  DatasetManifest manifest;
  manifest.config = cfg;
  manifest.n_per_class = n_per_class;
  for (auto activity : {ActivityLabel::Sitting, ActivityLabel::Standing}) {
    for (int i = 0; i < n_per_class; ++i) {
      auto sample = generate_sample(cfg, activity, dataset_sample_seed(activity, i, n_per_class));
      auto path = out_dir / sample_filename(activity, i);
      write_sample_csv(sample, path);
      manifest.files.push_back(path);
    }
  }
  manifest.manifest_path = out_dir / "manifest.txt";
  std::ofstream out(manifest.manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + manifest.manifest_path.string());
  out << format_manifest(manifest);
  if (!out) throw Error(Errc::IoFailure, "write failed for " + manifest.manifest_path.string());
  return manifest;
}

/// In-memory equivalent of generate_dataset (same seeds, same order).
inline std::vector<CsiSample> generate_samples(const SynthConfig& cfg, int n_per_class) {
  validate(cfg);
  if (n_per_class < 1) throw Error(Errc::BadConfig, "n_per_class must be >= 1");
  std::vector<CsiSample> samples;
  for (auto activity : {ActivityLabel::Sitting, ActivityLabel::Standing})
    for (int i = 0; i < n_per_class; ++i)
      samples.push_back(generate_sample(cfg, activity, dataset_sample_seed(activity, i, n_per_class)));
  return samples;
}

}  // namespace csiact::synth
