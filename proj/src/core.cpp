#include "locov/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace locov {

namespace {

// Points this close to the boundary count as members, which keeps
// projection idempotent under rounding.
constexpr double kBoundarySlack = 4.0 * std::numeric_limits<double>::epsilon();

Vec shrink_into_ball(const Vec& x, const Vec& center, double radius) {
  const Vec offset = x - center;
  const double norm = offset.norm();
  if (norm <= radius * (1.0 + kBoundarySlack)) return x;
  return center + offset * (radius / norm);
}

}  // namespace

DimensionMismatch::DimensionMismatch(std::string_view what, long expected, long actual)
    : Error(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) +
            ", got " + std::to_string(actual) + ")"),
      expected_(expected),
      actual_(actual) {}

CapExceeded::CapExceeded(std::string_view what, long double required, std::uint64_t cap)
    : Error([&] {
        std::ostringstream os;
        os << what << ": enumeration needs " << static_cast<double>(required)
           << " entries, cap is " << cap;
        return os.str();
      }()),
      required_(required),
      cap_(cap) {}

void Tolerances::validate() const {
  require(deterministic_tol > 0.0, "deterministic_tol must be positive");
  require(statistical_confidence > 0.0 && statistical_confidence < 1.0,
          "statistical_confidence must lie in (0, 1)");
}

void require(bool condition, std::string_view message) {
  if (!condition) throw InvalidArgument(std::string(message));
}

void require_finite(const Vec& x, std::string_view what) {
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

void require_same_dim(const Vec& x, const Vec& y, std::string_view what) {
  if (x.size() != y.size()) throw DimensionMismatch(what, x.size(), y.size());
}

// ---------------------------------------------------------------------------

ConvexDomain ConvexDomain::ball(Vec center, double radius) {
  require(radius > 0.0 && std::isfinite(radius), "ball radius must be positive and finite");
  require_finite(center, "ball center");
  return ConvexDomain(Ball{std::move(center), radius});
}

ConvexDomain ConvexDomain::ball(int dim, double radius) {
  require(dim > 0, "ball dimension must be positive");
  return ball(Vec::Zero(dim), radius);
}

ConvexDomain ConvexDomain::box(Vec lower, Vec upper) {
  require_same_dim(lower, upper, "box bounds");
  require(lower.size() > 0, "box dimension must be positive");
  require_finite(lower, "box lower bound");
  require_finite(upper, "box upper bound");
  require((lower.array() <= upper.array()).all(), "box lower bound exceeds upper bound");
  return ConvexDomain(Box{std::move(lower), std::move(upper)});
}

ConvexDomain ConvexDomain::product_of_balls(int blocks, int block_dim, double radius) {
  require(blocks > 0 && block_dim > 0, "product of balls needs positive block count and dimension");
  require(radius > 0.0 && std::isfinite(radius), "block radius must be positive and finite");
  return ConvexDomain(ProductOfBalls{blocks, block_dim, radius});
}

ConvexDomain ConvexDomain::whole_space(int dim) {
  require(dim > 0, "dimension must be positive");
  return ConvexDomain(WholeSpace{dim});
}

int ConvexDomain::dim() const {
  struct V {
    int operator()(const Ball& b) const { return static_cast<int>(b.center.size()); }
    int operator()(const Box& b) const { return static_cast<int>(b.lower.size()); }
    int operator()(const ProductOfBalls& p) const { return p.blocks * p.block_dim; }
    int operator()(const WholeSpace& w) const { return w.dim; }
  };
  return std::visit(V{}, v_);
}

std::string ConvexDomain::kind() const {
  struct V {
    std::string operator()(const Ball&) const { return "ball"; }
    std::string operator()(const Box&) const { return "box"; }
    std::string operator()(const ProductOfBalls&) const { return "product_of_balls"; }
    std::string operator()(const WholeSpace&) const { return "whole_space"; }
  };
  return std::visit(V{}, v_);
}

bool ConvexDomain::contains(const Vec& x, double tol) const {
  if (x.size() != dim()) return false;
  struct V {
    const Vec& x;
    double tol;
    bool operator()(const Ball& b) const { return (x - b.center).norm() <= b.radius + tol; }
    bool operator()(const Box& b) const {
      return ((x.array() >= b.lower.array() - tol) && (x.array() <= b.upper.array() + tol)).all();
    }
    bool operator()(const ProductOfBalls& p) const {
      for (int j = 0; j < p.blocks; ++j)
        if (x.segment(j * p.block_dim, p.block_dim).norm() > p.radius + tol) return false;
      return true;
    }
    bool operator()(const WholeSpace&) const { return x.allFinite(); }
  };
  return std::visit(V{x, tol}, v_);
}

Vec ConvexDomain::project(const Vec& x) const {
  if (x.size() != dim()) throw DimensionMismatch("project", dim(), x.size());
  struct V {
    const Vec& x;
    Vec operator()(const Ball& b) const { return shrink_into_ball(x, b.center, b.radius); }
    Vec operator()(const Box& b) const { return x.cwiseMax(b.lower).cwiseMin(b.upper); }
    Vec operator()(const ProductOfBalls& p) const {
      Vec out = x;
      const Vec origin = Vec::Zero(p.block_dim);
      for (int j = 0; j < p.blocks; ++j) {
        out.segment(j * p.block_dim, p.block_dim) =
            shrink_into_ball(x.segment(j * p.block_dim, p.block_dim), origin, p.radius);
      }
      return out;
    }
    Vec operator()(const WholeSpace&) const { return x; }
  };
  return std::visit(V{x}, v_);
}

std::optional<double> ConvexDomain::enclosing_radius() const {
  struct V {
    std::optional<double> operator()(const Ball& b) const { return b.center.norm() + b.radius; }
    std::optional<double> operator()(const Box& b) const {
      return b.lower.cwiseAbs().cwiseMax(b.upper.cwiseAbs()).norm();
    }
    std::optional<double> operator()(const ProductOfBalls& p) const {
      return std::sqrt(static_cast<double>(p.blocks)) * p.radius;
    }
    std::optional<double> operator()(const WholeSpace&) const { return std::nullopt; }
  };
  return std::visit(V{}, v_);
}

Vec project(const ConvexDomain& domain, const Vec& x) { return domain.project(x); }

double distance(const Vec& x, const Vec& y) {
  require_same_dim(x, y, "distance");
  return (x - y).norm();
}

double hoeffding_tail(long n, double epsilon, double range_width) {
  require(n >= 1, "hoeffding_tail: n must be at least 1");
  require(epsilon > 0.0, "hoeffding_tail: epsilon must be positive");
  require(range_width > 0.0, "hoeffding_tail: range width must be positive");
  const double ratio = epsilon / range_width;
  return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * ratio * ratio));
}

double snapped_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return std::ceil(x);
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return Rng(stream_seed(seed, stream_id));
}

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec standard_normal(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

Vec uniform_in_ball(Rng& rng, int dim, double radius) {
  Vec direction = standard_normal(rng, dim);
  double norm = direction.norm();
  while (norm == 0.0) {
    direction = standard_normal(rng, dim);
    norm = direction.norm();
  }
  const double r = radius * std::pow(uniform01(rng), 1.0 / dim);
  return direction * (r / norm);
}

Vec uniform_in_domain(Rng& rng, const ConvexDomain& domain) {
  struct V {
    Rng& rng;
    Vec operator()(const ConvexDomain::Ball& b) const {
      return b.center + uniform_in_ball(rng, static_cast<int>(b.center.size()), b.radius);
    }
    Vec operator()(const ConvexDomain::Box& b) const {
      Vec x(b.lower.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = b.lower[i] + (b.upper[i] - b.lower[i]) * uniform01(rng);
      return x;
    }
    Vec operator()(const ConvexDomain::ProductOfBalls& p) const {
      Vec x(p.blocks * p.block_dim);
      for (int j = 0; j < p.blocks; ++j)
        x.segment(j * p.block_dim, p.block_dim) = uniform_in_ball(rng, p.block_dim, p.radius);
      return x;
    }
    Vec operator()(const ConvexDomain::WholeSpace& w) const {
      Vec x(w.dim);
      for (int i = 0; i < w.dim; ++i) x[i] = 2.0 * uniform01(rng) - 1.0;
      return x;
    }
  };
  return std::visit(V{rng}, domain.variant());
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace locov
