#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace febsim {

/// Iterative radix-2 complex FFT with precomputed bit-reversal and twiddle
/// tables.  A plan is immutable after construction and safe to share between
/// threads.  Sizes must be powers of two.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  /// In-place forward DFT: X[k] = sum_j x[j] exp(-2 pi i j k / n).
  void forward(std::complex<double>* x) const { transform(x, false); }

  /// In-place inverse DFT including the 1/n scaling.
  void inverse(std::complex<double>* x) const { transform(x, true); }

 private:
  void transform(std::complex<double>* x, bool inverse) const;

  std::size_t n_ = 0;
  std::vector<std::uint32_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2 pi i k / n), k < n/2
};

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

}  // namespace febsim
