#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "vibrodiag/error.hpp"

namespace vibrodiag {

using Complex = std::complex<double>;

namespace detail {

inline void require_finite(std::span<const double> signal) {
  if (signal.empty()) throw Error(ErrorCode::TooShort, "empty signal");
  for (double v : signal)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "signal contains NaN or Inf");
}

// exp(-2*pi*i*t/n) for t in [0, n), each entry from its own cos/sin call.
inline std::vector<Complex> unit_roots(std::size_t n) {
  std::vector<Complex> w(n);
  const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double angle = step * static_cast<double>(t);
    w[t] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

}  // namespace detail

/// Reference DFT by direct O(N^2) summation: X_k = sum_n x_n exp(-2 pi i kn/N).
inline std::vector<Complex> dft_naive(std::span<const double> signal) {
  detail::require_finite(signal);
  const std::size_t n = signal.size();
  const auto w = detail::unit_roots(n);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    std::size_t t = 0;  // k*j mod n
    for (std::size_t j = 0; j < n; ++j) {
      acc += signal[j] * w[t];
      t += k;
      if (t >= n) t -= n;
    }
    out[k] = acc;
  }
  return out;
}

/// Forward complex DFT of a fixed length, unscaled, any length >= 1.
/// Lengths whose prime factors are all small use mixed-radix Cooley-Tukey;
/// anything else goes through Bluestein's chirp-z over a power-of-two plan.
class FftPlan {
 public:
  static constexpr std::size_t kMaxRadix = 61;

  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw Error(ErrorCode::TooShort, "FFT length must be >= 1");
    std::size_t rest = n;
    while (rest % 4 == 0) { factors_.push_back(4); rest /= 4; }
    while (rest % 2 == 0) { factors_.push_back(2); rest /= 2; }
    for (std::size_t p = 3; p <= kMaxRadix && rest > 1; p += 2) {
      while (rest % p == 0) { factors_.push_back(p); rest /= p; }
    }
    if (rest != 1) {
      factors_.clear();
      init_bluestein();
    } else {
      roots_ = detail::unit_roots(n);
    }
  }

  std::size_t size() const noexcept { return n_; }
  bool uses_bluestein() const noexcept { return inner_ != nullptr; }

  /// out must not alias in; both have size() elements.
  void forward(std::span<const Complex> in, std::span<Complex> out) const {
    if (inner_) {
      bluestein(in, out);
    } else if (n_ == 1) {
      out[0] = in[0];
    } else {
      std::vector<Complex> scratch(factors_.empty() ? 0 : max_factor());
      recurse(in.data(), 1, out.data(), n_, 0, scratch);
    }
  }

  std::vector<Complex> forward(std::span<const Complex> in) const {
    std::vector<Complex> out(n_);
    forward(in, out);
    return out;
  }

 private:
  std::size_t max_factor() const {
    std::size_t m = 0;
    for (auto f : factors_) m = std::max(m, f);
    return m;
  }

  // Decimation in time: transform the p interleaved sub-sequences, then
  // combine them with twiddled radix-p butterflies.
  void recurse(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
               std::size_t level, std::vector<Complex>& scratch) const {
    const std::size_t p = factors_[level];
    const std::size_t m = n / p;
    if (m == 1) {
      for (std::size_t j = 0; j < p; ++j) out[j] = in[j * stride];
    } else {
      for (std::size_t j = 0; j < p; ++j)
        recurse(in + j * stride, stride * p, out + j * m, m, level + 1, scratch);
    }
    const std::size_t tw_stride = n_ / n;  // twiddles of an n-point DFT
    const std::size_t unit_p = n_ / p;     // root of unity of order p
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < p; ++j)
        scratch[j] = out[j * m + k] * roots_[(j * k * tw_stride) % n_];
      switch (p) {
        case 2:
          out[k] = scratch[0] + scratch[1];
          out[m + k] = scratch[0] - scratch[1];
          break;
        case 4: {
          const Complex a = scratch[0] + scratch[2];
          const Complex b = scratch[0] - scratch[2];
          const Complex c = scratch[1] + scratch[3];
          const Complex d = scratch[1] - scratch[3];
          const Complex d_rot{d.imag(), -d.real()};  // d * (-i)
          out[k] = a + c;
          out[m + k] = b + d_rot;
          out[2 * m + k] = a - c;
          out[3 * m + k] = b - d_rot;
          break;
        }
        default:
          for (std::size_t q = 0; q < p; ++q) {
            Complex acc = scratch[0];
            std::size_t t = 0;
            for (std::size_t j = 1; j < p; ++j) {
              t += q;
              if (t >= p) t -= p;
              acc += scratch[j] * roots_[t * unit_p];
            }
            out[q * m + k] = acc;
          }
      }
    }
  }

  void init_bluestein() {
    std::size_t m = 1;
    while (m < 2 * n_ - 1) m <<= 1;
    inner_ = std::make_shared<const FftPlan>(m);
    chirp_.resize(n_);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      // exp(-i*pi*k^2/n) with k^2 reduced mod 2n to keep the angle small.
      const std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % two_n;
      const double angle = -std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n_);
      chirp_[k] = {std::cos(angle), std::sin(angle)};
    }
    std::vector<Complex> kernel(m, Complex{});
    kernel[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n_; ++k) {
      kernel[k] = std::conj(chirp_[k]);
      kernel[m - k] = std::conj(chirp_[k]);
    }
    kernel_spectrum_ = inner_->forward(kernel);
  }

  void bluestein(std::span<const Complex> in, std::span<Complex> out) const {
    const std::size_t m = inner_->size();
    std::vector<Complex> a(m, Complex{});
    for (std::size_t k = 0; k < n_; ++k) a[k] = in[k] * chirp_[k];
    std::vector<Complex> spec = inner_->forward(a);
    // Inverse transform via conjugation: ifft(v) = conj(fft(conj(v))) / m.
    for (std::size_t k = 0; k < m; ++k) spec[k] = std::conj(spec[k] * kernel_spectrum_[k]);
    inner_->forward(spec, a);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n_; ++k) out[k] = std::conj(a[k]) * scale * chirp_[k];
  }

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<Complex> roots_;
  std::shared_ptr<const FftPlan> inner_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_spectrum_;
};

/// Unscaled forward DFT of a real signal (all N bins).
inline std::vector<Complex> fft(std::span<const double> signal, const FftPlan& plan) {
  detail::require_finite(signal);
  if (plan.size() != signal.size())
    throw Error(ErrorCode::DimensionMismatch, "FFT plan length differs from signal length");
  std::vector<Complex> in(signal.begin(), signal.end());
  return plan.forward(in);
}

inline std::vector<Complex> fft(std::span<const double> signal) {
  detail::require_finite(signal);
  return fft(signal, FftPlan(signal.size()));
}

}  // namespace vibrodiag
