#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ctxguard {

/// Seeded generator with portable derived draws. std::mt19937_64's output
/// sequence is fixed by the standard; the std distributions are not, so the
/// helpers below avoid them.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T> void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
  }

  template <class T> const T &pick(const std::vector<T> &v) {
    return v[static_cast<std::size_t>(below(v.size()))];
  }

  /// Independent child stream.
  Rng fork(std::uint64_t salt) {
    return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

private:
  std::mt19937_64 engine_;
};

} // namespace ctxguard
