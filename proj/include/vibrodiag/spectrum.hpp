#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vibrodiag/fft.hpp"
#include "vibrodiag/ingest.hpp"
#include "vibrodiag/text.hpp"

namespace vibrodiag {

inline constexpr double kStandardGravity = 9.80665;  // m/s^2 per g

/// One-sided magnitude spectra of the three axes, bins 0..floor(n_time/2).
struct Spectrum {
  std::vector<double> magnitudes_x;
  std::vector<double> magnitudes_y;
  std::vector<double> magnitudes_z;
  double bin_hz = 0.0;
  std::size_t n_time = 0;

  std::size_t bins() const noexcept { return magnitudes_x.size(); }
};

struct SpectrumOptions {
  bool unit_conversion = true;  // g -> m/s^2 before the transform
  bool remove_dc = false;       // subtract the time-domain mean per axis
};

namespace detail {

inline std::vector<double> one_sided_magnitude(std::vector<double> signal,
                                               const FftPlan& plan,
                                               const SpectrumOptions& options) {
  if (options.unit_conversion)
    for (double& v : signal) v *= kStandardGravity;
  if (options.remove_dc) {
    const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) /
                        static_cast<double>(signal.size());
    for (double& v : signal) v -= mean;
  }
  const auto bins = fft(signal, plan);
  std::vector<double> mags(signal.size() / 2 + 1);
  for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(bins[k]);
  return mags;
}

}  // namespace detail

/// FFT magnitude spectrum per axis. Missing rows are dropped first; no window
/// and no 1/N scaling are applied.
inline Spectrum to_spectrum(const VibrationRecord& record,
                            const SpectrumOptions& options = {}) {
  std::vector<double> xs, ys, zs;
  xs.reserve(record.samples.size());
  ys.reserve(record.samples.size());
  zs.reserve(record.samples.size());
  for (const auto& s : record.samples) {
    if (s.missing) continue;
    xs.push_back(s.x);
    ys.push_back(s.y);
    zs.push_back(s.z);
  }
  if (xs.size() < 2)
    throw Error(ErrorCode::TooShort,
                record.source_path + ": fewer than 2 usable rows for the spectrum");

  const FftPlan plan(xs.size());
  Spectrum spec;
  spec.n_time = xs.size();
  spec.bin_hz = record.sample_rate_hz() / static_cast<double>(spec.n_time);
  spec.magnitudes_x = detail::one_sided_magnitude(std::move(xs), plan, options);
  spec.magnitudes_y = detail::one_sided_magnitude(std::move(ys), plan, options);
  spec.magnitudes_z = detail::one_sided_magnitude(std::move(zs), plan, options);
  return spec;
}

/// CSV with columns frequency_hz,mag_x,mag_y,mag_z. A positive max_hz keeps
/// only bins at or below that frequency (plot limit).
inline std::string spectrum_csv(const Spectrum& spec, double max_hz = 0.0) {
  std::string out = "frequency_hz,mag_x,mag_y,mag_z\n";
  for (std::size_t k = 0; k < spec.bins(); ++k) {
    const double f = spec.bin_hz * static_cast<double>(k);
    if (max_hz > 0.0 && f > max_hz) break;
    text::append_double(out, f);
    out += ',';
    text::append_double(out, spec.magnitudes_x[k]);
    out += ',';
    text::append_double(out, spec.magnitudes_y[k]);
    out += ',';
    text::append_double(out, spec.magnitudes_z[k]);
    out += '\n';
  }
  return out;
}

}  // namespace vibrodiag
