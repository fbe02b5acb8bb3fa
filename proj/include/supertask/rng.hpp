#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace supertask {

/// A probability stored as integer parts-per-million.
///
/// Everything the engine logs or compares against a random draw goes through
/// this type, so the same seed produces the same stream on every platform and
/// configurations survive a JSON round trip bit-exactly.
class Probability {
 public:
  static constexpr std::uint32_t kScale = 1'000'000;

  constexpr Probability() = default;

  static constexpr Probability from_ppm(std::uint32_t ppm) {
    if (ppm > kScale) throw std::invalid_argument("probability above 1");
    Probability p;
    p.ppm_ = ppm;
    return p;
  }

  static Probability from_double(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
    return from_ppm(static_cast<std::uint32_t>(std::llround(p * kScale)));
  }

  constexpr std::uint32_t ppm() const { return ppm_; }
  constexpr double value() const { return static_cast<double>(ppm_) / kScale; }

  friend constexpr auto operator<=>(Probability, Probability) = default;

 private:
  std::uint32_t ppm_ = 0;
};

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of indexes.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (auto part : path) h = splitmix64(h ^ splitmix64(part + 0x632BE59BD9B4E019ULL));
  return h;
}

/// Portable random source. Only the engine bits of std::mt19937_64 are used;
/// the distributions are implemented here because the standard library ones
/// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(Probability p) { return below(Probability::kScale) < p.ppm(); }
  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal (Marsaglia polar method).
  double normal() {
    if (spare_valid_) {
      spare_valid_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    spare_valid_ = true;
    return u * f;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      using std::swap;
      swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool spare_valid_ = false;
};

}  // namespace supertask
