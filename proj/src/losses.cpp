#include "locov/losses.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace locov {

namespace {

constexpr double kSampleSlack = 1e-9;

void require_positive(double v, const char* what) {
  require(v > 0.0 && std::isfinite(v), std::string(what) + " must be positive and finite");
}

std::uint64_t hash_doubles(const Vec& v, std::uint64_t h) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double x = v[i];
    char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof(double));
    h = fnv1a(std::string_view(bytes, sizeof(double)), h);
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Distribution / Dataset

Distribution Distribution::finite_support(std::vector<Sample> atoms, std::vector<double> weights) {
  require(!atoms.empty(), "finite support needs at least one atom");
  if (weights.empty()) weights.assign(atoms.size(), 1.0);
  require(weights.size() == atoms.size(), "finite support: one weight per atom");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), "finite support: weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, "finite support: weights sum to zero");
  for (double& w : weights) w /= total;
  return Distribution(FiniteSupport{std::move(atoms), std::move(weights)});
}

Distribution Distribution::uniform_ball(int dim, double radius) {
  require(dim > 0, "uniform_ball: dimension must be positive");
  require_positive(radius, "uniform_ball radius");
  return Distribution(UniformBall{dim, radius});
}

Distribution Distribution::labeled_uniform_ball(int dim, double radius, int labels) {
  require(dim > 0 && labels > 0, "labeled_uniform_ball: dimension and label count must be positive");
  require_positive(radius, "labeled_uniform_ball radius");
  return Distribution(LabeledUniformBall{dim, radius, labels});
}

std::string Distribution::name() const {
  struct V {
    std::string operator()(const FiniteSupport&) const { return "finite_support"; }
    std::string operator()(const UniformBall&) const { return "uniform_ball"; }
    std::string operator()(const LabeledUniformBall&) const { return "labeled_uniform_ball"; }
  };
  return std::visit(V{}, v_);
}

Sample Distribution::draw(Rng& rng) const {
  struct V {
    Rng& rng;
    Sample operator()(const FiniteSupport& f) const {
      double u = uniform01(rng);
      for (std::size_t i = 0; i + 1 < f.atoms.size(); ++i) {
        if (u < f.weights[i]) return f.atoms[i];
        u -= f.weights[i];
      }
      return f.atoms.back();
    }
    Sample operator()(const UniformBall& b) const { return {uniform_in_ball(rng, b.dim, b.radius), 0.0}; }
    Sample operator()(const LabeledUniformBall& b) const {
      Vec x = uniform_in_ball(rng, b.dim, b.radius);
      const double y = std::floor(uniform01(rng) * b.labels);
      return {std::move(x), y};
    }
  };
  return std::visit(V{rng}, v_);
}

Dataset Dataset::from_samples(std::vector<Sample> samples) {
  require(!samples.empty(), "dataset needs at least one sample");
  Dataset d;
  d.samples = std::move(samples);
  return d;
}

Dataset Dataset::draw(const Distribution& mu, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "dataset size must be at least 1");
  Rng rng = make_rng(seed, 0);
  Dataset d;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) d.samples.push_back(mu.draw(rng));
  d.generator = mu;
  d.seed = seed;
  return d;
}

const Sample& Dataset::at(std::size_t i) const {
  if (i >= samples.size())
    throw InvalidArgument("sample index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(samples.size()) + ")");
  return samples[i];
}

void LossConstants::validate() const {
  auto check = [](const std::optional<double>& v, const char* name, bool strictly) {
    if (!v) return;
    require(std::isfinite(*v), std::string(name) + " must be finite");
    require(strictly ? *v > 0.0 : *v >= 0.0,
            std::string(name) + (strictly ? " must be positive" : " must be nonnegative"));
  };
  check(alpha, "alpha", false);
  check(beta, "beta", true);
  check(beta_prime, "beta_prime", false);
  check(L, "L", false);
  check(B, "B", false);
  check(L_prime, "L_prime", false);
  check(R, "R", true);
  check(R_x, "R_x", true);
  check(lambda, "lambda", false);
  check(zeta, "zeta", true);
  if (K) require(*K >= 1, "K must be a positive integer");
  if (Q) require(*Q >= 1, "Q must be a positive integer");
  if (alpha && beta) require(*alpha <= *beta, "alpha must not exceed beta");
}

// ---------------------------------------------------------------------------
// LossFamily

LossFamily::LossFamily(Spec spec) {
  require(!spec.name.empty(), "loss family needs a name");
  require(static_cast<bool>(spec.value) && static_cast<bool>(spec.gradient),
          "loss family needs value and gradient evaluators");
  spec.constants.validate();
  spec_ = std::make_shared<const Spec>(std::move(spec));
}

double LossFamily::value(const Vec& theta, const Sample& z) const {
  if (theta.size() != dim()) throw DimensionMismatch(name() + " value", dim(), theta.size());
  return spec_->value(theta, z);
}

Vec LossFamily::gradient(const Vec& theta, const Sample& z) const {
  if (theta.size() != dim()) throw DimensionMismatch(name() + " gradient", dim(), theta.size());
  return spec_->gradient(theta, z);
}

void LossFamily::check_sample(const Sample& z) const {
  if (spec_->check_sample) spec_->check_sample(z);
}

PiecewiseSmoothFunction LossFamily::pieces(const Sample& z) const {
  if (!spec_->pieces) throw InvalidArgument(name() + ": no smooth-piece structure declared");
  return spec_->pieces(z);
}

double empirical_risk(const LossFamily& family, const Dataset& data, const Vec& theta) {
  RunningStats stats;
  for (const auto& z : data.samples) stats.add(family.value(theta, z));
  return stats.mean();
}

Vec empirical_gradient(const LossFamily& family, const Dataset& data, const Vec& theta) {
  Vec g = Vec::Zero(theta.size());
  for (const auto& z : data.samples) g += family.gradient(theta, z);
  return g / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// quadratic_centers

LossFamily quadratic_centers(const std::vector<Vec>& centers, double R) {
  require_positive(R, "quadratic_centers R");
  require(!centers.empty(), "quadratic_centers needs at least one center");
  const int d = static_cast<int>(centers.front().size());
  require(d > 0, "quadratic_centers: centers must have positive dimension");
  std::vector<Sample> atoms;
  for (const auto& c : centers) {
    if (c.size() != d) throw DimensionMismatch("quadratic_centers center", d, c.size());
    require_finite(c, "quadratic_centers center");
    require(c.norm() <= R * (1.0 + kSampleSlack), "quadratic_centers: center outside Ball(0, R)");
    atoms.push_back({c, 0.0});
  }

  LossConstants k;
  k.alpha = 1.0;
  k.beta = 1.0;
  k.beta_prime = 1.0;
  // h(θ) = ½‖θ‖² leaves f − h = −θᵀθ* + ½‖θ*‖², which is R-Lipschitz.
  k.L = R;
  k.L_prime = 2.0 * R;
  k.B = 2.0 * R * R;
  k.R = R;

  LossFamily::Spec spec{
      .name = "quadratic_centers",
      .constants = k,
      .sample_space = "centers theta*_z in Ball(0, R) of dimension " + std::to_string(d),
      .domain = ConvexDomain::ball(d, R),
      .project_iterates = true,
      .value = [](const Vec& theta, const Sample& z) { return 0.5 * (theta - z.x).squaredNorm(); },
      .gradient = [](const Vec& theta, const Sample& z) -> Vec { return theta - z.x; },
      .check_sample =
          [d, R](const Sample& z) {
            if (z.x.size() != d) throw DimensionMismatch("quadratic_centers sample", d, z.x.size());
            require(z.x.norm() <= R * (1.0 + kSampleSlack), "quadratic_centers: sample outside Ball(0, R)");
          },
      .pieces =
          [d](const Sample& z) {
            PiecewiseSmoothFunction f;
            f.dim = d;
            f.count = 1;
            f.beta_prime = 1.0;
            const Vec c = z.x;
            f.piece_of = [](const Vec&) { return 0; };
            f.value = [c](int, const Vec& t) { return 0.5 * (t - c).squaredNorm(); };
            f.gradient = [c](int, const Vec& t) -> Vec { return t - c; };
            return f;
          },
      .natural_distribution = Distribution::finite_support(std::move(atoms)),
  };
  return LossFamily(std::move(spec));
}

// ---------------------------------------------------------------------------
// Links

Link zero_link(int K) {
  require(K >= 1, "zero_link: K must be positive");
  Link l;
  l.name = "zero";
  l.K = K;
  l.beta = 0.0;
  l.Q = 1;
  l.lipschitz = 0.0;
  l.range = 0.0;
  l.value = [](const Vec&, double) { return 0.0; };
  l.gradient = [K](const Vec&, double) -> Vec { return Vec::Zero(K); };
  l.piece_of = [](const Vec&, double) { return 0; };
  l.piece_value = [](int, const Vec&, double) { return 0.0; };
  l.piece_gradient = [K](int, const Vec&, double) -> Vec { return Vec::Zero(K); };
  return l;
}

Link least_squares_link() {
  Link l;
  l.name = "least_squares";
  l.K = 1;
  l.beta = 1.0;
  l.Q = 1;
  l.value = [](const Vec& u, double y) { return 0.5 * (u[0] - y) * (u[0] - y); };
  l.gradient = [](const Vec& u, double y) -> Vec { return Vec::Constant(1, u[0] - y); };
  l.piece_of = [](const Vec&, double) { return 0; };
  l.piece_value = [v = l.value](int, const Vec& u, double y) { return v(u, y); };
  l.piece_gradient = [g = l.gradient](int, const Vec& u, double y) { return g(u, y); };
  return l;
}

namespace {

double softplus_hinge(double s) {
  const double a = 1.0 - s;
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

// dρ/ds = −σ(1 − s)
double softplus_hinge_derivative(double s) { return -1.0 / (1.0 + std::exp(s - 1.0)); }

int class_index(double y, int K) {
  const double r = std::round(y);
  require(r == y && r >= 0.0 && r < K, "svm link: label must be a class index in [0, K)");
  return static_cast<int>(r);
}

// Competitor y' attaining max ρ(u_y − u_{y'}), i.e. the largest u_{y'};
// ties go to the lowest index.
int svm_competitor(const Vec& u, int y) {
  int best = -1;
  for (int j = 0; j < u.size(); ++j) {
    if (j == y) continue;
    if (best < 0 || u[j] > u[best]) best = j;
  }
  return best;
}

// Pieces are indexed by the competitor with the label itself skipped.
int competitor_to_piece(int competitor, int y) { return competitor < y ? competitor : competitor - 1; }
int piece_to_competitor(int q, int y) { return q < y ? q : q + 1; }

}  // namespace

Link svm_softplus_link(int K, double R, double R_x) {
  require(K >= 2, "svm link needs at least two classes");
  require_positive(R, "svm link R");
  require_positive(R_x, "svm link R_x");
  Link l;
  l.name = "svm_softplus";
  l.classes = K;
  l.K = K;
  // Hessian of ρ(u_y − u_{y'}) is ρ''·(e_y − e_{y'})(e_y − e_{y'})ᵀ with ρ'' ≤ 1/4.
  l.beta = 0.5;
  l.Q = K - 1;
  l.lipschitz = std::sqrt(2.0);
  const double span = 2.0 * R * R_x;
  l.range = softplus_hinge(-span) - softplus_hinge(span);

  auto piece_value = [K](int q, const Vec& u, double y) {
    const int c = class_index(y, K);
    const int other = piece_to_competitor(q, c);
    return softplus_hinge(u[c] - u[other]);
  };
  auto piece_gradient = [K](int q, const Vec& u, double y) -> Vec {
    const int c = class_index(y, K);
    const int other = piece_to_competitor(q, c);
    const double d = softplus_hinge_derivative(u[c] - u[other]);
    Vec g = Vec::Zero(K);
    g[c] = d;
    g[other] = -d;
    return g;
  };
  auto piece_of = [K](const Vec& u, double y) {
    const int c = class_index(y, K);
    return competitor_to_piece(svm_competitor(u, c), c);
  };
  l.piece_of = piece_of;
  l.piece_value = piece_value;
  l.piece_gradient = piece_gradient;
  l.value = [=](const Vec& u, double y) { return piece_value(piece_of(u, y), u, y); };
  l.gradient = [=](const Vec& u, double y) { return piece_gradient(piece_of(u, y), u, y); };
  return l;
}

// ---------------------------------------------------------------------------
// multi_index

namespace {

Vec link_inputs(const Vec& theta, const Vec& x, int K, int d) {
  Vec u(K);
  for (int j = 0; j < K; ++j) u[j] = block(theta, j, d).dot(x);
  return u;
}

Vec assemble_gradient(const Vec& theta, const Vec& dlink, const Vec& x, double lambda, int K, int d) {
  Vec g(K * d);
  for (int j = 0; j < K; ++j) g.segment(j * d, d) = dlink[j] * x + lambda * block(theta, j, d);
  return g;
}

}  // namespace

LossFamily multi_index(const Link& link, double lambda, double R, double R_x, int K, int d) {
  require(lambda >= 0.0 && std::isfinite(lambda), "multi_index: lambda must be nonnegative");
  require_positive(R, "multi_index R");
  require_positive(R_x, "multi_index R_x");
  require(K >= 1 && d >= 1, "multi_index: K and d must be positive");
  require(link.K == K, "multi_index: link arity must equal K");
  require(static_cast<bool>(link.value) && static_cast<bool>(link.gradient), "multi_index: link evaluators missing");

  LossConstants k;
  k.beta = link.beta > 0.0 ? std::optional<double>(link.beta) : std::nullopt;
  k.lambda = lambda;
  k.R = R;
  k.R_x = R_x;
  k.K = K;
  k.Q = link.Q;
  if (link.range) k.B = *link.range;
  // f − (λ/2)Σ‖θ_j‖² = ℓ(u), and ‖u − u'‖ ≤ R_x‖θ − θ'‖.
  if (link.lipschitz) k.L = *link.lipschitz * R_x;
  if (lambda > 0.0) k.alpha = std::nullopt;

  const Link l = link;
  LossFamily::Spec spec{
      .name = "multi_index",
      .constants = k,
      .sample_space = "pairs (y, x) with ||x|| <= R_x, link " + link.name,
      .domain = ConvexDomain::product_of_balls(K, d, R),
      .project_iterates = true,
      .value =
          [l, lambda, K, d](const Vec& theta, const Sample& z) {
            return l.value(link_inputs(theta, z.x, K, d), z.y) + 0.5 * lambda * theta.squaredNorm();
          },
      .gradient =
          [l, lambda, K, d](const Vec& theta, const Sample& z) {
            const Vec u = link_inputs(theta, z.x, K, d);
            return assemble_gradient(theta, l.gradient(u, z.y), z.x, lambda, K, d);
          },
      .check_sample =
          [d, R_x, classes = link.classes](const Sample& z) {
            if (z.x.size() != d) throw DimensionMismatch("multi_index sample", d, z.x.size());
            if (z.x.norm() > R_x * (1.0 + kSampleSlack))
              throw InvalidArgument("multi_index: sample with ||x|| > R_x");
            if (classes && !(z.y == std::floor(z.y) && z.y >= 0.0 && z.y < *classes))
              throw InvalidArgument("multi_index: label must be a class index in [0, " + std::to_string(*classes) + ")");
          },
      .pieces =
          [l, lambda, K, d](const Sample& z) {
            PiecewiseSmoothFunction f;
            f.dim = K * d;
            f.count = l.Q;
            // Hessian of the piece: XᵀHX + λI with ‖X‖ ≤ ‖x‖.
            f.beta_prime = l.beta * z.x.squaredNorm() + lambda;
            const Sample s = z;
            f.piece_of = [l, s, K, d](const Vec& t) { return l.piece_of(link_inputs(t, s.x, K, d), s.y); };
            f.value = [l, s, lambda, K, d](int q, const Vec& t) {
              return l.piece_value(q, link_inputs(t, s.x, K, d), s.y) + 0.5 * lambda * t.squaredNorm();
            };
            f.gradient = [l, s, lambda, K, d](int q, const Vec& t) {
              return assemble_gradient(t, l.piece_gradient(q, link_inputs(t, s.x, K, d), s.y), s.x,
                                       lambda, K, d);
            };
            return f;
          },
      .natural_distribution = std::nullopt,
  };
  return LossFamily(std::move(spec));
}

// ---------------------------------------------------------------------------
// K-means

SoftKMeansConstants soft_kmeans_constants(int K, double zeta, double R) {
  require(K >= 1, "soft_kmeans: K must be positive");
  require_positive(zeta, "soft_kmeans zeta");
  require_positive(R, "soft_kmeans R");
  const double B = 4.0 * (R + 1.0) * (R + 1.0);
  const double e = std::exp(zeta * B);
  const double Kd = static_cast<double>(K);
  return SoftKMeansConstants{
      .B = B,
      .L = 4.0 * R / std::sqrt(Kd) * e,
      .alpha = 2.0 / Kd / e,
      .beta = 2.0 / Kd * e,
      .beta_prime = 4.0 * zeta * B * e + 4.0 * zeta * B + 2.0,
  };
}

namespace {

void check_cluster_sample(const Sample& z, int d, double R, const char* family) {
  if (z.x.size() != d) throw DimensionMismatch(std::string(family) + " sample", d, z.x.size());
  if (z.x.norm() > R * (1.0 + kSampleSlack))
    throw InvalidArgument(std::string(family) + ": sample outside Ball(0, R)");
}

// Softmax weights w_j ∝ exp(−ζ‖θ_j − z‖²) and log Σ_j exp(−ζ‖θ_j − z‖²).
std::pair<Vec, double> soft_assignments(const Vec& theta, const Vec& z, double zeta, int K, int d) {
  Vec logits(K);
  for (int j = 0; j < K; ++j) logits[j] = -zeta * (block(theta, j, d) - z).squaredNorm();
  const double top = logits.maxCoeff();
  Vec w = (logits.array() - top).exp().matrix();
  const double s = w.sum();
  return {w / s, top + std::log(s)};
}

}  // namespace

LossFamily soft_kmeans(int K, double zeta, double R, int d) {
  require(d >= 1, "soft_kmeans: dimension must be positive");
  const SoftKMeansConstants c = soft_kmeans_constants(K, zeta, R);
  LossConstants k;
  k.alpha = c.alpha;
  k.beta = c.beta;
  k.beta_prime = c.beta_prime;
  k.L = c.L;
  k.L_prime = c.L;
  k.B = c.B;
  k.R = R;
  k.zeta = zeta;
  k.K = K;
  k.Q = 1;

  auto value = [zeta, K, d](const Vec& theta, const Sample& z) {
    return -soft_assignments(theta, z.x, zeta, K, d).second / zeta;
  };
  auto gradient = [zeta, K, d](const Vec& theta, const Sample& z) {
    const Vec w = soft_assignments(theta, z.x, zeta, K, d).first;
    Vec g(K * d);
    for (int j = 0; j < K; ++j) g.segment(j * d, d) = 2.0 * w[j] * (block(theta, j, d) - z.x);
    return g;
  };

  LossFamily::Spec spec{
      .name = "soft_kmeans",
      .constants = k,
      .sample_space = "points z in Ball(0, R) of dimension " + std::to_string(d),
      .domain = ConvexDomain::product_of_balls(K, d, R),
      .project_iterates = false,
      .value = value,
      .gradient = gradient,
      .check_sample = [d, R](const Sample& z) { check_cluster_sample(z, d, R, "soft_kmeans"); },
      .pieces =
          [value, gradient, K, d, bp = c.beta_prime](const Sample& z) {
            PiecewiseSmoothFunction f;
            f.dim = K * d;
            f.count = 1;
            f.beta_prime = bp;
            const Sample s = z;
            f.piece_of = [](const Vec&) { return 0; };
            f.value = [value, s](int, const Vec& t) { return value(t, s); };
            f.gradient = [gradient, s](int, const Vec& t) { return gradient(t, s); };
            return f;
          },
      .natural_distribution = std::nullopt,
  };
  return LossFamily(std::move(spec));
}

TieRule parse_tie_rule(const std::string& name) {
  if (name == "lowest_index") return TieRule::LowestIndex;
  if (name == "random_singleton") return TieRule::RandomSingleton;
  if (name == "full_set") return TieRule::FullSet;
  throw InvalidArgument("unknown tie rule '" + name + "' (expected lowest_index, random_singleton, full_set)");
}

std::string to_string(TieRule rule) {
  switch (rule) {
    case TieRule::LowestIndex: return "lowest_index";
    case TieRule::RandomSingleton: return "random_singleton";
    case TieRule::FullSet: return "full_set";
  }
  return "lowest_index";
}

LossFamily hard_kmeans(int K, double R, int d, TieRule tie_rule) {
  require(K >= 1 && d >= 1, "hard_kmeans: K and d must be positive");
  require_positive(R, "hard_kmeans R");
  LossConstants k;
  k.alpha = 2.0;
  k.beta = 2.0;
  k.beta_prime = 2.0;
  k.L = 4.0 * R;
  k.L_prime = 4.0 * R;
  k.B = 4.0 * R * R;
  k.R = R;
  k.K = K;
  k.Q = K;

  auto distances = [K, d](const Vec& theta, const Vec& z) {
    Vec dist(K);
    for (int j = 0; j < K; ++j) dist[j] = (block(theta, j, d) - z).squaredNorm();
    return dist;
  };

  auto value = [distances](const Vec& theta, const Sample& z) { return distances(theta, z.x).minCoeff(); };
  auto gradient = [distances, tie_rule, K, d](const Vec& theta, const Sample& z) {
    const Vec dist = distances(theta, z.x);
    const double best = dist.minCoeff();
    std::vector<int> tied;
    for (int j = 0; j < K; ++j)
      if (dist[j] == best) tied.push_back(j);
    std::vector<int> selected;
    switch (tie_rule) {
      case TieRule::LowestIndex: selected = {tied.front()}; break;
      case TieRule::FullSet: selected = tied; break;
      case TieRule::RandomSingleton: {
        const std::uint64_t h = splitmix64(hash_doubles(z.x, hash_doubles(theta, 14695981039346656037ULL)));
        selected = {tied[h % tied.size()]};
        break;
      }
    }
    Vec g = Vec::Zero(K * d);
    for (int j : selected) g.segment(j * d, d) = 2.0 * (block(theta, j, d) - z.x);
    return g;
  };

  LossFamily::Spec spec{
      .name = "hard_kmeans",
      .constants = k,
      .sample_space = "points z in Ball(0, R) of dimension " + std::to_string(d) + ", tie rule " +
                      to_string(tie_rule),
      .domain = ConvexDomain::product_of_balls(K, d, R),
      .project_iterates = false,
      .value = value,
      .gradient = gradient,
      .check_sample = [d, R](const Sample& z) { check_cluster_sample(z, d, R, "hard_kmeans"); },
      .pieces =
          [distances, K, d](const Sample& z) {
            PiecewiseSmoothFunction f;
            f.dim = K * d;
            f.count = K;
            f.beta_prime = 2.0;
            const Vec c = z.x;
            f.piece_of = [distances, c](const Vec& t) {
              Eigen::Index j;
              distances(t, c).minCoeff(&j);
              return static_cast<int>(j);
            };
            f.value = [c, d](int q, const Vec& t) { return (block(t, q, d) - c).squaredNorm(); };
            f.gradient = [c, K, d](int q, const Vec& t) {
              Vec g = Vec::Zero(K * d);
              g.segment(q * d, d) = 2.0 * (block(t, q, d) - c);
              return g;
            };
            return f;
          },
      .natural_distribution = std::nullopt,
  };
  return LossFamily(std::move(spec));
}

// ---------------------------------------------------------------------------
// 1-D counterexample

namespace {

int binary_label(const Sample& z) {
  require(z.y == 0.0 || z.y == 1.0, "stability counterexample: sample must be 0 or 1");
  return static_cast<int>(z.y);
}

double left_piece(double x) { return (x - 1.0) * (x - 1.0); }
double right_piece(double x) { return 0.5 + 0.5 * (x - 3.0) * (x - 3.0); }

}  // namespace

LossFamily stability_counterexample_1d() {
  LossConstants k;
  k.alpha = 1.0;
  k.beta = 2.0;
  k.beta_prime = 2.0;
  // |f(x;1) − f(x;0)| peaks at x = 4: 9 − 1.
  k.B = 8.0;
  k.L = 6.0;
  k.L_prime = 6.0;
  k.R = 4.0;
  k.Q = 2;

  // Non-differentiable point x = 2 belongs to the left piece, whose
  // gradient there is 2(2 − 1) = 2.
  auto on_left = [](double x) { return x <= 2.0; };

  LossFamily::Spec spec{
      .name = "stability_counterexample_1d",
      .constants = k,
      .sample_space = "z in {0, 1} (carried in the label)",
      .domain = ConvexDomain::box(Vec::Constant(1, 0.0), Vec::Constant(1, 4.0)),
      .project_iterates = true,
      .value =
          [on_left](const Vec& t, const Sample& z) {
            const double x = t[0];
            if (binary_label(z) == 1) return left_piece(x);
            return on_left(x) ? left_piece(x) : right_piece(x);
          },
      .gradient =
          [on_left](const Vec& t, const Sample& z) -> Vec {
            const double x = t[0];
            if (binary_label(z) == 1 || on_left(x)) return Vec::Constant(1, 2.0 * (x - 1.0));
            return Vec::Constant(1, x - 3.0);
          },
      .check_sample = [](const Sample& z) { binary_label(z); },
      .pieces =
          [on_left](const Sample& z) {
            PiecewiseSmoothFunction f;
            f.dim = 1;
            f.beta_prime = 2.0;
            if (binary_label(z) == 1) {
              f.count = 1;
              f.piece_of = [](const Vec&) { return 0; };
            } else {
              f.count = 2;
              f.piece_of = [on_left](const Vec& t) { return on_left(t[0]) ? 0 : 1; };
            }
            f.value = [](int q, const Vec& t) { return q == 0 ? left_piece(t[0]) : right_piece(t[0]); };
            f.gradient = [](int q, const Vec& t) -> Vec {
              return Vec::Constant(1, q == 0 ? 2.0 * (t[0] - 1.0) : t[0] - 3.0);
            };
            return f;
          },
      .natural_distribution = Distribution::finite_support({Sample{Vec(), 0.0}, Sample{Vec(), 1.0}}),
  };
  return LossFamily(std::move(spec));
}

}  // namespace locov
