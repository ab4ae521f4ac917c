#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "vibrodiag/error.hpp"
#include "vibrodiag/ingest.hpp"
#include "vibrodiag/labels.hpp"
#include "vibrodiag/parallel.hpp"
#include "vibrodiag/random.hpp"

namespace vibrodiag {

/// Synthetic recordings in the lab dataset's format. Amplitudes are in g.
struct SynthConfig {
  double rotation_hz = 30.0;
  double sample_rate_hz = 20000.0;
  double duration_s = 5.0;
  double noise_std = 0.02;
  std::uint64_t seed = 0;
  std::size_t per_class_count = 1;
};

// Fault signature parameters.
namespace synth_signature {
inline constexpr double kBaseAmplitude = 0.05;        // 1x, every class
inline constexpr double kUnbalanceGain = 6.0;         // 1x boost on x and y
inline constexpr double kMisalignAmplitude = 0.2;     // 2x harmonic
inline constexpr double kImpulseRateFactor = 3.5;     // impacts per revolution
inline constexpr double kImpulseAmplitude = 0.5;
inline constexpr double kRingingHz = 2000.0;
inline constexpr double kRingingDecayS = 0.001;
inline constexpr double kAmplitudeJitter = 0.05;      // +-5% per record
inline constexpr double kValueScale = 1e9;           // values kept to 1e-9 g
inline constexpr double kTimeScale = 1e9;            // times kept to 1 ns
}  // namespace synth_signature

inline double synth_highest_component_hz(const SynthConfig& config) {
  return std::max(2.0 * config.rotation_hz, synth_signature::kRingingHz);
}

inline std::size_t synth_sample_count(const SynthConfig& config) {
  return static_cast<std::size_t>(std::llround(config.duration_s * config.sample_rate_hz));
}

inline void validate(const SynthConfig& config) {
  if (!(config.rotation_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "rotation_hz must be positive");
  if (!(config.duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be positive");
  if (!(config.noise_std >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_std must be >= 0");
  if (!(config.sample_rate_hz > 2.0 * synth_highest_component_hz(config)))
    throw Error(ErrorCode::InvalidConfig, "sample_rate_hz must exceed twice the highest component (" +
                                              text::format_double(synth_highest_component_hz(config)) +
                                              " Hz)");
  if (config.sample_rate_hz > 1e8) throw Error(ErrorCode::InvalidConfig, "sample_rate_hz too large");
  if (synth_sample_count(config) < 2) throw Error(ErrorCode::InvalidConfig, "record would have < 2 samples");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Nearest double to round(v * scale) / scale, so the shortest decimal form
// stays short in the written CSV.
inline double quantize(double v, double scale) { return std::round(v * scale) / scale; }

}  // namespace detail

/// One synthetic record. `index` selects the record within its class; the
/// random stream depends on (seed, label, index) only.
///
///   Normal        1x sinusoid, 0.05 g, elliptical orbit on x/y, weaker axial z
///   Unbalance     1x boosted 6x on x and y
///   Misalignment  adds a 0.2 g 2x harmonic on every axis
///   BearingFault  adds decaying 2 kHz ringing bursts at 3.5x the shaft rate
inline VibrationRecord generate(const SynthConfig& config, ConditionLabel label,
                                std::size_t index = 0) {
  validate(config);
  namespace sig = synth_signature;
  // Phases and amplitude jitter depend on (seed, index) only, so records of
  // different classes with the same index differ only by their signature and
  // noise. The noise stream also depends on the label.
  Rng shared(detail::splitmix64(config.seed ^ detail::splitmix64(index)));
  Rng rng(detail::splitmix64(config.seed ^ detail::splitmix64(
                                 (static_cast<std::uint64_t>(to_code(label) + 1) << 48) ^ index)));

  const double phase = shared.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_z = shared.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_2x = shared.uniform(0.0, 2.0 * std::numbers::pi);
  const double jitter = 1.0 + shared.uniform(-sig::kAmplitudeJitter, sig::kAmplitudeJitter);
  const double impulse_offset = shared.uniform(0.0, 1.0);

  const double w = 2.0 * std::numbers::pi * config.rotation_hz;
  double amp_xy = sig::kBaseAmplitude * jitter;
  const double amp_z = 0.5 * sig::kBaseAmplitude * jitter;
  if (label == ConditionLabel::Unbalance) amp_xy *= sig::kUnbalanceGain;
  const double amp_2x = label == ConditionLabel::Misalignment ? sig::kMisalignAmplitude * jitter : 0.0;
  const bool bearing = label == ConditionLabel::BearingFault;
  const double impulse_rate = sig::kImpulseRateFactor * config.rotation_hz;
  const double impulse_period = 1.0 / impulse_rate;
  const double impulse_start = impulse_offset * impulse_period;
  const double ring_w = 2.0 * std::numbers::pi * sig::kRingingHz;

  auto burst = [&](double t) {
    if (t < impulse_start) return 0.0;
    const double since = t - impulse_start;
    const auto m = std::floor(since / impulse_period);
    double v = 0.0;
    // Bursts decay within a few ms; the last few impacts cover it.
    for (int back = 0; back < 4 && m - back >= 0; ++back) {
      const double dt = since - (m - back) * impulse_period;
      v += std::exp(-dt / sig::kRingingDecayS) * std::sin(ring_w * dt);
    }
    return sig::kImpulseAmplitude * jitter * v;
  };

  const std::size_t n = synth_sample_count(config);
  VibrationRecord record;
  record.label = label;
  record.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / config.sample_rate_hz;
    const double theta = w * t + phase;
    double x = amp_xy * std::sin(theta);
    double y = 0.8 * amp_xy * std::cos(theta);
    double z = amp_z * std::sin(theta + phase_z);
    if (amp_2x != 0.0) {
      const double h = amp_2x * std::sin(2.0 * theta + phase_2x);
      x += h;
      y += 0.9 * h;
      z += 0.7 * h;
    }
    if (bearing) {
      const double b = burst(t);
      x += b;
      y += 0.8 * b;
      z += 0.6 * b;
    }
    if (config.noise_std > 0.0) {
      x += rng.normal(0.0, config.noise_std);
      y += rng.normal(0.0, config.noise_std);
      z += rng.normal(0.0, config.noise_std);
    }
    auto& s = record.samples[i];
    s.time = detail::quantize(t, sig::kTimeScale);
    s.x = detail::quantize(x, sig::kValueScale);
    s.y = detail::quantize(y, sig::kValueScale);
    s.z = detail::quantize(z, sig::kValueScale);
  }
  return record;
}

inline std::string synth_file_name(ConditionLabel label, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.csv", std::string(default_dir_name(label)).c_str(), index);
  return buf;
}

/// Writes per_class_count records per condition into the first directory of
/// each condition in `layout`. Returns the written paths in sorted order.
inline std::vector<fs::path> write_synthetic_dataset(const fs::path& root, const SynthConfig& config,
                                                     const DatasetLayout& layout = DatasetLayout::defaults()) {
  validate(config);
  if (config.per_class_count == 0) throw Error(ErrorCode::InvalidConfig, "per_class_count must be >= 1");
  struct Job {
    ConditionLabel label;
    std::size_t index;
    fs::path path;
  };
  std::vector<Job> jobs;
  for (auto label : kAllConditions) {
    const auto& dirs = layout.dirs.at(label);
    fs::create_directories(root / dirs.front());
    for (std::size_t i = 0; i < config.per_class_count; ++i)
      jobs.push_back({label, i, root / dirs.front() / synth_file_name(label, i)});
  }
  parallel_for(jobs.size(), [&](std::size_t j) {
    auto record = generate(config, jobs[j].label, jobs[j].index);
    write_record(jobs[j].path, record);
  });
  std::vector<fs::path> paths;
  for (auto& j : jobs) paths.push_back(j.path);
  std::sort(paths.begin(), paths.end());
  return paths;
}

}  // namespace vibrodiag
