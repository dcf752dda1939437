#ifndef IVTEST_RNG_HPP
#define IVTEST_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ivtest {

// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t id) {
  return mix64(seed ^ mix64(id + 0x9e3779b97f4a7c15ULL));
}

// Deterministic random stream. Raw engine output is standardized
// (mt19937_64), and all conversions to doubles are done by hand so results
// are reproducible across compilers and platforms.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on (0,1), 53-bit resolution, never returns 0 or 1
  double next_unit() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-54;
  }

  double next_exponential() { return -std::log(next_unit()); }

  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // Marsaglia polar method
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double r = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * r;
    have_cached_ = true;
    return u * r;
  }

  // index in [0, n)
  std::uint64_t next_index(std::uint64_t n) {
    // rejection-free modulo is fine here: n is tiny relative to 2^64
    return next_u64() % n;
  }

  // Gamma(shape, 1) for shape >= 1 (Marsaglia-Tsang squeeze)
  double next_gamma(double shape) {
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = next_normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = next_unit();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline RngStream substream(std::uint64_t seed, std::uint64_t id) {
  return RngStream(stream_seed(seed, id));
}

// Uniform draw from the (d-1)-simplex via normalized unit-rate exponentials.
inline void uniform_simplex(RngStream& rng, std::size_t d, std::vector<double>& out) {
  out.resize(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = rng.next_exponential();
    total += out[i];
  }
  for (std::size_t i = 0; i < d; ++i) out[i] /= total;
}

}  // namespace ivtest

#endif
