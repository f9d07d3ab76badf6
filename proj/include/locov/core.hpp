#pragma once

// Shared numeric vocabulary: points, convex domains with Euclidean
// projection, seeded random streams and a deterministic parallel loop.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace locov {

/// A point of the parameter space (or of a sample space). Entries must be finite.
using ParamPoint = Eigen::VectorXd;
using Vec = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::string_view what, long expected, long actual);
  long expected() const noexcept { return expected_; }
  long actual() const noexcept { return actual_; }

 private:
  long expected_;
  long actual_;
};

/// Thrown when an enumeration would exceed its cap. Nothing is produced.
class CapExceeded : public Error {
 public:
  CapExceeded(std::string_view what, long double required, std::uint64_t cap);
  long double required() const noexcept { return required_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  long double required_;
  std::uint64_t cap_;
};

struct Tolerances {
  double deterministic_tol = 1e-9;
  double statistical_confidence = 0.95;

  void validate() const;
};

void require(bool condition, std::string_view message);
void require_finite(const Vec& x, std::string_view what);
void require_same_dim(const Vec& x, const Vec& y, std::string_view what);

/// Feasible set Θ. Only the four variants below are supported; each has a
/// closed-form Euclidean projection.
class ConvexDomain {
 public:
  struct Ball {
    Vec center;
    double radius;
  };
  struct Box {
    Vec lower;
    Vec upper;
  };
  /// K blocks of dimension d, each constrained to the origin-centred ball of
  /// radius R. Points are stored block-major: block j is [j*d, (j+1)*d).
  struct ProductOfBalls {
    int blocks;
    int block_dim;
    double radius;
  };
  struct WholeSpace {
    int dim;
  };
  using Variant = std::variant<Ball, Box, ProductOfBalls, WholeSpace>;

  static ConvexDomain ball(Vec center, double radius);
  static ConvexDomain ball(int dim, double radius);
  static ConvexDomain box(Vec lower, Vec upper);
  static ConvexDomain product_of_balls(int blocks, int block_dim, double radius);
  static ConvexDomain whole_space(int dim);

  int dim() const;
  std::string kind() const;
  const Variant& variant() const noexcept { return v_; }

  bool contains(const Vec& x, double tol = 0.0) const;
  Vec project(const Vec& x) const;

  /// Smallest R with Θ ⊆ B_R(0), when Θ is bounded.
  std::optional<double> enclosing_radius() const;

 private:
  explicit ConvexDomain(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Euclidean projection Π_Θ(x).
Vec project(const ConvexDomain& domain, const Vec& x);

/// ‖x − y‖₂.
double distance(const Vec& x, const Vec& y);

/// Two-sided Hoeffding tail min(1, 2 exp(−2 n ε² / w²)) for a mean of n
/// independent variables with range width w.
double hoeffding_tail(long n, double epsilon, double range_width);

/// ⌈x⌉, except that values within 1e-9 (relative) of an integer snap to it.
/// Keeps closed-form counts such as ⌈2·120⌉ from picking up rounding noise.
double snapped_ceil(double x);

// ---------------------------------------------------------------------------
// Random streams

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for an independent stream derived from (seed, stream id). Streams
/// are order-independent, so parallel tasks reproduce serial results.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept;

Rng make_rng(std::uint64_t seed, std::uint64_t stream_id = 0);

double uniform01(Rng& rng);
Vec standard_normal(Rng& rng, int dim);
Vec uniform_in_ball(Rng& rng, int dim, double radius);

/// Uniform draw from a bounded domain. WholeSpace draws from [-1, 1]^d.
Vec uniform_in_domain(Rng& rng, const ConvexDomain& domain);

/// FNV-1a over a byte string; used for config hashes and index digests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) noexcept;

// ---------------------------------------------------------------------------
// Parallel loop

unsigned resolve_threads(unsigned requested) noexcept;

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Work is split
/// into contiguous chunks; callers write results into slot i so output order
/// never depends on scheduling. The first exception thrown is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Mean and variance accumulator (Welford). The mean of identical values is
/// that value exactly.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace locov
