#pragma once

// Shared primitives: dense square matrices, seeded RNG streams with
// deterministic sub-stream derivation, typed errors, and a slot-based
// parallel loop whose results do not depend on the worker count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <initializer_list>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ising {

using Vec = std::vector<double>;

/// State space would exceed the enumeration cap (no silent fallback).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required model assumption does not hold (e.g. an empirical first
/// moment sits on the boundary of [-1,+1]).
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every importance weight collapsed to zero or non-finite.
class DegenerateWeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dense square matrix, row-major. All model matrices here are N x N with
// N <= ~20, so a flat vector is all that is needed.

class Mat {
 public:
  Mat() = default;
  explicit Mat(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

  int n() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }
  size_t size() const { return a_.size(); }

  bool operator==(const Mat& o) const { return n_ == o.n_ && a_ == o.a_; }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

inline double frobenius_dot(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline double entry_l1(const Mat& m) {
  double s = 0.0;
  for (size_t i = 0; i < m.size(); ++i) s += std::abs(m.data()[i]);
  return s;
}

inline double max_abs(const Mat& m) {
  double s = 0.0;
  for (size_t i = 0; i < m.size(); ++i) s = std::max(s, std::abs(m.data()[i]));
  return s;
}

inline double max_abs(const Vec& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline bool is_symmetric(const Mat& m) {
  for (int i = 0; i < m.n(); ++i)
    for (int j = i + 1; j < m.n(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

inline bool has_zero_diagonal(const Mat& m) {
  for (int i = 0; i < m.n(); ++i)
    if (m(i, i) != 0.0) return false;
  return true;
}

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Seeding. splitmix64 is used to whiten seeds and to derive independent
// sub-streams from (seed, label...) tuples, so every repetition / cell /
// iteration gets its own reproducible stream.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> parts) {
  uint64_t h = splitmix64(base);
  for (uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

inline uint64_t derive_seed(uint64_t base, uint64_t a) { return derive_seed(base, {a}); }
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) { return derive_seed(base, {a, b}); }
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
  return derive_seed(base, {a, b, c});
}

/// mt19937_64 engine with hand-rolled output maps so that draws are
/// bit-stable for a given seed regardless of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  long uniform_int(long n) {
    return static_cast<long>((static_cast<__uint128_t>(eng_()) *
                              static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via the polar method (pair cached).
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cache_ = v * f;
    has_cache_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 eng_;
  bool has_cache_ = false;
  double cache_ = 0.0;
};

// ---------------------------------------------------------------------------
// Task-parallel loop. Tasks are indexed and must write only to their own
// output slot; results are then identical for any worker count, including
// the serial fallback.

inline unsigned default_workers() {
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

inline void parallel_for(long n_tasks, unsigned workers, const std::function<void(long)>& fn) {
  if (n_tasks <= 0) return;
  if (workers <= 1 || n_tasks == 1) {
    for (long i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  const unsigned use = static_cast<unsigned>(std::min<long>(workers, n_tasks));
  std::atomic<long> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(use);
  for (unsigned w = 0; w < use; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ising
