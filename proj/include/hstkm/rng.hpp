#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

namespace hstkm {

// Thrown for malformed user input (files, flags, config values).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; full-avalanche mix for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, salt). Used to key
// per-node / per-cell / per-repetition streams so results do not depend
// on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64(seed ^ mix64(salt));
}

// Deterministic random stream. All sampling is hand-rolled on top of the
// raw 64-bit engine output so draws are reproducible across standard
// library implementations. from_entropy() gives a non-reproducible stream
// backed by std::random_device (see dp.hpp for where that matters).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(mix64(seed)) {}

  static RandomStream from_entropy() {
    std::random_device rd;
    RandomStream s((std::uint64_t(rd()) << 32) ^ rd());
    s.entropy_ = std::make_unique<std::random_device>();
    return s;
  }

  bool is_entropy_backed() const { return entropy_ != nullptr; }

  std::uint64_t next_u64() {
    if (entropy_) {
      return (std::uint64_t((*entropy_)()) << 32) ^ (*entropy_)();
    }
    return eng_();
  }

  // Uniform in [0,1), 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::logic_error("RandomStream::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Laplace(0, b) via inverse CDF. u is kept away from the endpoints so
  // the log never sees 0.
  double laplace(double scale) {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    const double v = u - 0.5;
    const double mag = -scale * std::log1p(-2.0 * std::abs(v));
    return v < 0 ? -mag : mag;
  }

  // Standard normal, Box-Muller.
  double gaussian() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 == 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // k distinct values from [0, n), partial Fisher-Yates.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::logic_error("sample_without_replacement: k > n");
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    for (int i = 0; i < k; ++i) {
      std::swap(ids[i], ids[i + int(below(std::uint64_t(n - i)))]);
    }
    ids.resize(k);
    return ids;
  }

 private:
  std::mt19937_64 eng_;
  std::unique_ptr<std::random_device> entropy_;
};

}  // namespace hstkm
