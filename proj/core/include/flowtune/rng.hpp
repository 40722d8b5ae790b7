#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace flowtune {

/// Mixes a 64-bit state into a well-distributed output (splitmix64 step).
/// Used to derive independent component seeds from a single run seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a sub-seed from (root seed, stream tag). The tag keeps streams for
/// different components (fold split, pipeline fit, learner init, ...) apart.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t s = root ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Hand-rolled rejection sampling so draws are
/// bit-identical across standard libraries (std distributions are not).
inline std::uint64_t bounded_uint(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; two uniforms per call, no cached spare.
inline double normal_real(Rng& rng) {
  double u1 = uniform_real(rng);
  double u2 = uniform_real(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Fisher-Yates shuffle with the portable bounded draw.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_uint(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace flowtune
