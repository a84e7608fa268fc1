#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "febsim/constants.hpp"

namespace febsim {

/// One splitmix64 step: advances `state` and returns a well-mixed 64-bit
/// value.  Used only to derive child seeds, never as the sampling engine.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a master seed and an ordered index path, e.g.
/// {channel, scan_point, trial}.  The derivation is order-sensitive and
/// collision-poor, so sibling streams never overlap and the work scheduler
/// (serial or parallel) cannot change which stream a unit of work consumes.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  for (std::uint64_t p : path) {
    std::uint64_t st = s ^ (p * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL);
    s = splitmix64_next(st);
  }
  return s;
}

/// Deterministic Gaussian/uniform stream: mt19937_64 (output sequence pinned
/// by the C++ standard) plus an explicit Box-Muller transform, so identical
/// seeds reproduce identical samples on every platform and standard library.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate (Box-Muller, pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);  // keep log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * constants::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace febsim
