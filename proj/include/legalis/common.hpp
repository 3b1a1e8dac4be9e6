#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace legalis {

inline constexpr const char* kVersion = "legalis 0.1.0";

/// Thrown for malformed inputs (programs, schedules, configs). CLI exit 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown for filesystem / parse failures. CLI exit 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a program exceeds an encoder cap (depth, accesses, ...).
struct CapExceeded : ValidationError {
  std::string which;
  explicit CapExceeded(std::string cap)
      : ValidationError("cap exceeded: " + cap), which(std::move(cap)) {}
};

/// Thrown when an iteration-domain enumeration would exceed the point budget.
struct BudgetExceeded : ValidationError {
  using ValidationError::ValidationError;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives an independent seed from (seed, stream tag). Used so parallel
/// workers get order-free deterministic randomness.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag * 0x9e3779b97f4a7c15ull + 1));
}

inline uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic RNG. std::mt19937_64 is fully specified by the standard;
/// the derived draws below are hand-rolled because the standard library's
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t u64() { return gen_(); }

  /// Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(u64());  // full 64-bit range
    // rejection sampling to avoid modulo bias
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = u64();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  /// Uniform double in [0, 1).
  double uniform_real() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  /// Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u1 = uniform_real();
    double u2 = uniform_real();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Picks an index according to non-negative weights.
  size_t weighted(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double r = uniform_real() * total;
    for (size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r < 0.0) return i;
    }
    return w.size() - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Worker cap: LEGALIS_THREADS if set, else hardware concurrency (clamped).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Callers write
/// results into index-addressed slots, so output never depends on scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

inline int64_t now_nanos() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace legalis
