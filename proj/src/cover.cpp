#include "locov/cover.hpp"

#include <cstring>
#include <limits>
#include <map>
#include <set>

namespace locov {

std::size_t cover_horizon(double R, double epsilon, double gamma) {
  require(R > 0.0 && std::isfinite(R), "cover_horizon: R must be positive");
  require(epsilon > 0.0, "cover_horizon: epsilon must be positive");
  require(gamma >= 0.0, "cover_horizon: gamma must be nonnegative");
  if (!(gamma < 1.0)) throw InvalidArgument("cover_horizon: gamma must be < 1 (map is not contractive)");
  if (epsilon >= R) return 0;
  if (gamma == 0.0) return 1;
  const double t = snapped_ceil(std::log(R / epsilon) / std::log(1.0 / gamma));
  return t > 0.0 ? static_cast<std::size_t>(t) : 0;
}

std::pair<std::size_t, double> CoverSet::nearest(const Vec& x) const {
  require(!entries.empty(), "cover is empty");
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double sq = (entries[k].point - x).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = k;
    }
  }
  return {best, std::sqrt(best_sq)};
}

namespace {

long double power(long double base, std::size_t exp) {
  long double r = 1.0L;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<double> to_key(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

CoverSet enumerate_compositions(const std::vector<std::size_t>& branches,
                                const std::function<Vec(std::size_t, std::size_t, const Vec&)>& step,
                                const Vec& anchor, std::size_t T, const CoverOptions& options) {
  require(!branches.empty(), "cover enumeration needs at least one sample");
  require(options.cap >= 1, "cover cap must be positive");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> choices;  // (sample, piece), lexicographic
  std::size_t max_pieces = 1;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    require(branches[i] >= 1, "every sample needs at least one branch");
    max_pieces = std::max(max_pieces, branches[i]);
    for (std::size_t p = 0; p < branches[i]; ++p)
      choices.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p));
  }
  const std::size_t b = choices.size();
  const long double required = power(static_cast<long double>(b), T);
  if (required > static_cast<long double>(options.cap)) throw CapExceeded("cover enumeration", required, options.cap);
  const auto total = static_cast<std::size_t>(required);
  const bool record_pieces = max_pieces > 1;

  CoverSet cover;
  cover.epsilon = options.epsilon;
  cover.T = T;
  cover.anchor = anchor;
  cover.n = branches.size();
  cover.max_pieces = max_pieces;
  cover.piecewise = record_pieces;
  cover.entries.resize(total);

  // Split the tree at a prefix depth with enough tasks to keep workers busy.
  const unsigned workers = resolve_threads(options.threads);
  std::size_t depth = 0;
  std::size_t prefixes = 1;
  while (depth < T && prefixes < 8 * static_cast<std::size_t>(workers)) {
    prefixes *= b;
    ++depth;
  }
  const std::size_t suffix_count = total / prefixes;

  auto fill = [&](std::size_t entry, const std::vector<std::size_t>& digits, const Vec& point) {
    CoverEntry& e = cover.entries[entry];
    e.seq.resize(T);
    if (record_pieces) e.pieces.resize(T);
    for (std::size_t s = 0; s < T; ++s) {
      e.seq[s] = choices[digits[s]].first;
      if (record_pieces) e.pieces[s] = choices[digits[s]].second;
    }
    e.deps = e.seq;
    std::sort(e.deps.begin(), e.deps.end());
    e.deps.erase(std::unique(e.deps.begin(), e.deps.end()), e.deps.end());
    e.point = point;
  };

  parallel_for(prefixes, options.threads, [&](std::size_t prefix) {
    std::vector<std::size_t> digits(T, 0);
    std::size_t rest = prefix;
    for (std::size_t s = depth; s-- > 0;) {
      digits[s] = rest % b;
      rest /= b;
    }
    // points[s] = state after s steps
    std::vector<Vec> points(T + 1);
    points[0] = anchor;
    for (std::size_t s = 0; s < depth; ++s)
      points[s + 1] = step(choices[digits[s]].first, choices[digits[s]].second, points[s]);
    for (std::size_t s = depth; s < T; ++s)
      points[s + 1] = step(choices[0].first, choices[0].second, points[s]);

    for (std::size_t k = 0; k < suffix_count; ++k) {
      if (k > 0) {
        // Odometer increment on the suffix digits; recompute from the
        // highest digit that changed.
        std::size_t s = T;
        while (s-- > depth) {
          if (++digits[s] < b) break;
          digits[s] = 0;
        }
        for (std::size_t r = s; r < T; ++r)
          points[r + 1] = step(choices[digits[r]].first, choices[digits[r]].second, points[r]);
      }
      fill(prefix * suffix_count + k, digits, points[T]);
    }
  });

  if (options.deduplicate) {
    std::set<std::vector<double>> seen;
    std::vector<CoverEntry> kept;
    for (auto& e : cover.entries)
      if (seen.insert(to_key(e.point)).second) kept.push_back(std::move(e));
    cover.entries = std::move(kept);
    cover.deduplicated = true;
  }
  return cover;
}

CoverSet enumerate_cover(const UpdateMap& map, const Dataset& dataset, std::size_t T, const CoverOptions& options) {
  require(dataset.size() >= 1, "cover enumeration needs a nonempty dataset");
  const std::vector<std::size_t> branches(dataset.size(), 1);
  auto step = [&](std::size_t i, std::size_t, const Vec& theta) { return sgd_step(map, theta, i, dataset); };
  return enumerate_compositions(branches, step, Vec::Zero(map.dim()), T, options);
}

CoverVerification verify_cover(const CoverSet& cover, const UpdateMap& map, const Dataset& dataset,
                               const VerifyOptions& options) {
  require(options.trials >= 1, "verify_cover: trials must be positive");
  require(options.epsilon > 0.0, "verify_cover: epsilon must be positive");
  require(!cover.entries.empty(), "verify_cover: empty cover");
  require(cover.n == dataset.size(), "verify_cover: cover was built for a different dataset size");
  if (cover.anchor.size() != map.dim()) throw DimensionMismatch("verify_cover", map.dim(), cover.anchor.size());

  std::vector<double> distances(options.trials);
  parallel_for(options.trials, options.threads, [&](std::size_t k) {
    Rng rng = make_rng(options.seed, k);
    const Vec init = options.start_at_anchor ? cover.anchor : uniform_in_domain(rng, map.domain());
    std::uniform_int_distribution<std::size_t> extra(0, options.max_extra_steps);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    const std::size_t t = cover.T + extra(rng);
    std::vector<std::size_t> idx(t);
    for (auto& i : idx) i = pick(rng);
    distances[k] = cover.nearest(run_endpoint(map, init, idx, dataset)).second;
  });

  CoverVerification out;
  out.trials = options.trials;
  out.epsilon = options.epsilon;
  for (double d : distances) {
    out.max_distance = std::max(out.max_distance, d);
    if (d > options.epsilon) ++out.failures;
  }
  out.pass = out.failures == 0;
  return out;
}

// ---------------------------------------------------------------------------

PiecewiseQuadraticApprox PiecewiseQuadraticApprox::from_anchors(const PiecewiseSmoothFunction& f,
                                                                std::vector<Vec> anchors, double beta, double xi,
                                                                double R) {
  require(f.dim > 0 && f.count >= 1, "surrogate needs a function with at least one smooth piece");
  require(static_cast<bool>(f.piece_of) && static_cast<bool>(f.value) && static_cast<bool>(f.gradient),
          "surrogate needs piece evaluators");
  require(!anchors.empty(), "surrogate needs at least one anchor");
  require(beta > 0.0 && std::isfinite(beta), "surrogate curvature must be positive");
  require(xi >= 0.0 && R > 0.0, "surrogate needs xi >= 0 and R > 0");
  PiecewiseQuadraticApprox a;
  a.dim_ = f.dim;
  a.Q_ = f.count;
  a.beta_ = beta;
  a.beta_prime_ = f.beta_prime;
  a.xi_ = xi;
  a.R_ = R;
  a.smooth_piece_of_ = f.piece_of;
  for (const auto& phi : anchors)
    if (phi.size() != f.dim) throw DimensionMismatch("surrogate anchor", f.dim, phi.size());
  a.pieces_.reserve(static_cast<std::size_t>(f.count) * anchors.size());
  for (int q = 0; q < f.count; ++q)
    for (std::size_t p = 0; p < anchors.size(); ++p)
      a.pieces_.push_back({q, p, anchors[p], f.value(q, anchors[p]), f.gradient(q, anchors[p])});
  a.anchors_ = std::move(anchors);
  return a;
}

double PiecewiseQuadraticApprox::piece_bound() const {
  if (xi_ == 0.0) return std::numeric_limits<double>::infinity();
  return Q_ * std::pow(3.0 * (beta_ + beta_prime_) * R_ / xi_, dim_);
}

std::size_t PiecewiseQuadraticApprox::nearest_anchor(const Vec& theta) const {
  if (theta.size() != dim_) throw DimensionMismatch("surrogate", dim_, theta.size());
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < anchors_.size(); ++p) {
    const double sq = (anchors_[p] - theta).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = p;
    }
  }
  return best;
}

std::size_t PiecewiseQuadraticApprox::piece_of(const Vec& theta) const {
  const int q = smooth_piece_of_(theta);
  require(q >= 0 && q < Q_, "smooth piece index out of range");
  return static_cast<std::size_t>(q) * anchors_.size() + nearest_anchor(theta);
}

double PiecewiseQuadraticApprox::piece_value(std::size_t k, const Vec& theta) const {
  require(k < pieces_.size(), "surrogate piece index out of range");
  const auto& pc = pieces_[k];
  const Vec diff = theta - pc.anchor;
  return pc.value + pc.gradient.dot(diff) + 0.5 * beta_ * diff.squaredNorm();
}

Vec PiecewiseQuadraticApprox::piece_gradient(std::size_t k, const Vec& theta) const {
  require(k < pieces_.size(), "surrogate piece index out of range");
  const auto& pc = pieces_[k];
  return pc.gradient + beta_ * (theta - pc.anchor);
}

std::vector<Vec> lattice_anchors(const ConvexDomain& domain, double epsilon, std::uint64_t cap) {
  require(epsilon > 0.0 && std::isfinite(epsilon), "lattice spacing radius must be positive");
  const auto R = domain.enclosing_radius();
  require(R.has_value(), "anchor lattice needs a bounded domain");
  const int d = domain.dim();
  const double h = 2.0 * epsilon / std::sqrt(static_cast<double>(d));
  const double reach = *R + epsilon;
  const long M = static_cast<long>(std::floor(reach / h));
  const long double candidates = power(static_cast<long double>(2 * M + 1), static_cast<std::size_t>(d));
  if (candidates > static_cast<long double>(cap)) throw CapExceeded("anchor lattice", candidates, cap);

  std::vector<Vec> anchors;
  std::set<std::vector<double>> seen;
  std::vector<long> m(d, -M);
  const double slack = 1e-12 * std::max(1.0, reach);
  for (;;) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = h * static_cast<double>(m[i]);
    const Vec proj = domain.project(p);
    if ((proj - p).norm() <= epsilon + slack && seen.insert(to_key(proj)).second) anchors.push_back(proj);
    int i = d - 1;
    while (i >= 0 && ++m[i] > M) m[i--] = -M;
    if (i < 0) break;
  }
  return anchors;
}

PiecewiseQuadraticApprox build_piecewise_approx(const PiecewiseSmoothFunction& f, const ConvexDomain& domain,
                                                double xi, double beta, std::uint64_t cap) {
  require(xi > 0.0 && std::isfinite(xi), "xi must be positive");
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  require(f.beta_prime >= 0.0, "beta_prime must be nonnegative");
  if (f.dim != domain.dim()) throw DimensionMismatch("surrogate domain", f.dim, domain.dim());
  const double spacing = xi / (beta + f.beta_prime);
  return PiecewiseQuadraticApprox::from_anchors(f, lattice_anchors(domain, spacing, cap), beta, xi,
                                                *domain.enclosing_radius());
}

PiecewiseQuadraticApprox build_piecewise_approx(const LossFamily& family, const Sample& z, double xi, double beta,
                                                std::uint64_t cap) {
  family.check_sample(z);
  return build_piecewise_approx(family.pieces(z), family.domain(), xi, beta, cap);
}

std::vector<Vec> grid_points(const ConvexDomain& domain, std::size_t per_axis) {
  require(per_axis >= 2, "grid needs at least two points per axis");
  const auto R = domain.enclosing_radius();
  require(R.has_value(), "grid needs a bounded domain");
  const int d = domain.dim();
  const long double total = power(static_cast<long double>(per_axis), static_cast<std::size_t>(d));
  if (total > static_cast<long double>(kDefaultCoverCap)) throw CapExceeded("grid", total, kDefaultCoverCap);
  const double step = 2.0 * *R / static_cast<double>(per_axis - 1);
  std::vector<Vec> out;
  std::vector<std::size_t> m(d, 0);
  for (;;) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = -*R + step * static_cast<double>(m[i]);
    if (domain.contains(p)) out.push_back(p);
    int i = d - 1;
    while (i >= 0 && ++m[i] == per_axis) m[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

double max_gradient_error(const PiecewiseQuadraticApprox& approx, const PiecewiseSmoothFunction& f,
                          const std::vector<Vec>& points) {
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, (f.grad(p) - approx.gradient(p)).norm());
  return worst;
}

CoverSet enumerate_piecewise_cover(const std::vector<PiecewiseQuadraticApprox>& approx, const ConvexDomain& domain,
                                   bool project, double eta, std::size_t T, const CoverOptions& options) {
  require(!approx.empty(), "piecewise cover needs one surrogate per sample");
  require(eta >= 0.0 && std::isfinite(eta), "step size must be nonnegative");
  std::vector<std::size_t> branches;
  for (const auto& a : approx) {
    if (a.dim() != domain.dim()) throw DimensionMismatch("piecewise cover surrogate", domain.dim(), a.dim());
    branches.push_back(a.piece_count());
  }
  auto step = [&](std::size_t i, std::size_t p, const Vec& theta) -> Vec {
    Vec out = theta - eta * approx[i].piece_gradient(p, theta);
    return project ? domain.project(out) : out;
  };
  return enumerate_compositions(branches, step, Vec::Zero(domain.dim()), T, options);
}

// ---------------------------------------------------------------------------

IFSModel IFSModel::quadratic(std::vector<Vec> centers, double gamma, double R) {
  require(!centers.empty(), "IFS needs at least one map");
  require(gamma > 0.0 && gamma < 1.0, "IFS ratio must lie in (0, 1)");
  require(R > 0.0 && std::isfinite(R), "IFS radius must be positive");
  const auto d = centers.front().size();
  require(d > 0, "IFS centers must have positive dimension");
  for (const auto& c : centers) {
    if (c.size() != d) throw DimensionMismatch("IFS center", d, c.size());
    require_finite(c, "IFS center");
    require(c.norm() <= R * (1.0 + 1e-12), "IFS center outside Ball(0, R)");
  }
  return IFSModel{std::move(centers), gamma, R};
}

Vec IFSModel::apply(std::size_t i, const Vec& theta) const {
  require(i < centers.size(), "IFS map index out of range");
  return gamma * theta + (1.0 - gamma) * centers[i];
}

bool IFSModel::separated() const {
  const double need = 2.0 * gamma * R * (1.0 - 1e-12);
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if ((centers[i] - centers[j]).norm() < need) return false;
  return true;
}

IFSDimension ifs_dimension(const IFSModel& model) {
  require(!model.centers.empty(), "IFS needs at least one map");
  require(model.gamma > 0.0 && model.gamma < 1.0, "IFS ratio must lie in (0, 1)");
  return {std::log(static_cast<double>(model.size())) / std::log(1.0 / model.gamma), model.separated()};
}

std::vector<Vec> sample_attractor(const IFSModel& model, std::size_t count, std::uint64_t seed, std::size_t burn_in) {
  require(count >= 1, "attractor sample size must be positive");
  Rng rng = make_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, model.size() - 1);
  Vec theta = model.centers.front();
  for (std::size_t s = 0; s < burn_in; ++s) theta = model.apply(pick(rng), theta);
  std::vector<Vec> out;
  out.reserve(count);
  out.push_back(theta);
  while (out.size() < count) {
    theta = model.apply(pick(rng), theta);
    out.push_back(theta);
  }
  return out;
}

BoxCount box_counting_dimension(const std::vector<Vec>& points, const std::vector<double>& scales) {
  require(points.size() >= 1000, "box counting needs at least 1000 points");
  require(scales.size() >= 4, "box counting needs at least 4 scales");
  for (double s : scales) require(s > 0.0 && std::isfinite(s), "box scales must be positive");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  require(*hi / *lo >= 100.0, "box scales must span at least two decades");
  const auto d = points.front().size();
  require(d > 0, "points must have positive dimension");
  Vec origin = points.front();
  bool identical = true;
  for (const auto& x : points) {
    if (x.size() != d) throw DimensionMismatch("box counting point", d, x.size());
    require_finite(x, "box counting point");
    origin = origin.cwiseMin(x);
    if (identical && x != points.front()) identical = false;
  }

  BoxCount out;
  out.scales = scales;
  if (identical) {
    out.degenerate = true;
    out.counts.assign(scales.size(), 1);
    out.estimate = 0.0;
    return out;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double s : scales) {
    std::set<std::vector<long long>> boxes;
    std::vector<long long> key(d);
    for (const auto& x : points) {
      for (Eigen::Index i = 0; i < x.size(); ++i)
        key[i] = static_cast<long long>(std::floor((x[i] - origin[i]) / s));
      boxes.insert(key);
    }
    out.counts.push_back(boxes.size());
    const double lx = std::log(1.0 / s);
    const double ly = std::log(static_cast<double>(boxes.size()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(scales.size());
  out.estimate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

}  // namespace locov
