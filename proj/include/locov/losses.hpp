#pragma once

// Per-sample loss families f(θ; z) with (auxiliary) gradients and the
// constant record each generalization certificate consumes.

#include "locov/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace locov {

/// One observation z. `x` carries the point (a center θ*_z, a cluster
/// sample, or a feature vector); `y` carries a label where the family uses
/// one (class index for multi-class links, {0,1} for the 1-D counterexample).
struct Sample {
  Vec x;
  double y = 0.0;
};

/// Data distribution μ. Finite-support distributions allow exact population
/// risk by enumeration.
class Distribution {
 public:
  struct FiniteSupport {
    std::vector<Sample> atoms;
    std::vector<double> weights;  // normalized, same length as atoms
  };
  struct UniformBall {
    int dim;
    double radius;
  };
  /// x uniform in the ball of radius `radius`, y uniform over {0..labels-1}.
  struct LabeledUniformBall {
    int dim;
    double radius;
    int labels;
  };
  using Variant = std::variant<FiniteSupport, UniformBall, LabeledUniformBall>;

  static Distribution finite_support(std::vector<Sample> atoms, std::vector<double> weights = {});
  static Distribution uniform_ball(int dim, double radius);
  static Distribution labeled_uniform_ball(int dim, double radius, int labels);

  std::string name() const;
  const Variant& variant() const noexcept { return v_; }
  const FiniteSupport* support() const noexcept { return std::get_if<FiniteSupport>(&v_); }

  Sample draw(Rng& rng) const;

 private:
  explicit Distribution(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

struct Dataset {
  std::vector<Sample> samples;
  std::optional<Distribution> generator;
  std::uint64_t seed = 0;

  static Dataset from_samples(std::vector<Sample> samples);
  /// n i.i.d. draws from μ using the stream (seed, 0).
  static Dataset draw(const Distribution& mu, std::size_t n, std::uint64_t seed);

  std::size_t size() const noexcept { return samples.size(); }
  const Sample& at(std::size_t i) const;
};

/// Constants consumed by the certificates. Unset fields are absent rather
/// than zero.
struct LossConstants {
  std::optional<double> alpha;       // strong convexity
  std::optional<double> beta;        // smoothness
  std::optional<double> beta_prime;  // second-derivative bound
  std::optional<double> L;           // weak-Lipschitz constant
  std::optional<double> B;           // bounded deviation
  std::optional<double> L_prime;     // plain Lipschitz constant
  std::optional<double> R;           // domain radius
  std::optional<double> R_x;         // input radius
  std::optional<double> lambda;      // ℓ2 regularization
  std::optional<double> zeta;        // soft-label sharpness
  std::optional<int> K;
  std::optional<int> Q;

  void validate() const;
};

/// A function of θ that is smooth on each of `count` pieces. `piece_of`
/// selects the active piece; value/gradient evaluate the smooth extension of
/// a given piece (defined on the whole domain).
struct PiecewiseSmoothFunction {
  int dim = 0;
  int count = 1;
  double beta_prime = 0.0;
  std::function<int(const Vec&)> piece_of;
  std::function<double(int, const Vec&)> value;
  std::function<Vec(int, const Vec&)> gradient;

  double operator()(const Vec& theta) const { return value(piece_of(theta), theta); }
  Vec grad(const Vec& theta) const { return gradient(piece_of(theta), theta); }
};

class LossFamily {
 public:
  using ValueFn = std::function<double(const Vec&, const Sample&)>;
  using GradientFn = std::function<Vec(const Vec&, const Sample&)>;
  using SampleCheck = std::function<void(const Sample&)>;
  using PiecesFn = std::function<PiecewiseSmoothFunction(const Sample&)>;

  struct Spec {
    std::string name;
    LossConstants constants;
    std::string sample_space;
    ConvexDomain domain;
    bool project_iterates = true;
    ValueFn value;
    GradientFn gradient;
    SampleCheck check_sample;
    PiecesFn pieces;
    std::optional<Distribution> natural_distribution;
  };

  explicit LossFamily(Spec spec);

  const std::string& name() const noexcept { return spec_->name; }
  const LossConstants& constants() const noexcept { return spec_->constants; }
  const std::string& sample_space() const noexcept { return spec_->sample_space; }
  const ConvexDomain& domain() const noexcept { return spec_->domain; }
  int dim() const { return spec_->domain.dim(); }
  /// Whether SGD on this family projects onto the domain. K-means families
  /// run unprojected.
  bool project_iterates() const noexcept { return spec_->project_iterates; }
  const std::optional<Distribution>& natural_distribution() const noexcept {
    return spec_->natural_distribution;
  }

  double value(const Vec& theta, const Sample& z) const;
  Vec gradient(const Vec& theta, const Sample& z) const;
  void check_sample(const Sample& z) const;

  bool has_pieces() const noexcept { return static_cast<bool>(spec_->pieces); }
  PiecewiseSmoothFunction pieces(const Sample& z) const;

 private:
  std::shared_ptr<const Spec> spec_;
};

// ---------------------------------------------------------------------------
// Families

/// f(θ; z) = ½‖θ − θ*_z‖² over Ball(0, R); sample z carries θ*_z in `x`.
/// The centers define the natural (uniform, finite) sample distribution.
LossFamily quadratic_centers(const std::vector<Vec>& centers, double R);

/// Link ℓ(u_1, …, u_K; y) of a multi-index model with per-piece smoothness.
struct Link {
  std::string name;
  int K = 1;
  double beta = 0.0;  // per-piece smoothness in u
  int Q = 1;          // number of smooth pieces
  std::optional<double> lipschitz;  // ‖∇_u ℓ‖ bound on the bounded domain
  std::optional<double> range;      // sup ℓ − inf ℓ on the bounded domain
  std::optional<int> classes;       // y must be a class index in [0, classes)
  std::function<double(const Vec& u, double y)> value;
  std::function<Vec(const Vec& u, double y)> gradient;
  std::function<int(const Vec& u, double y)> piece_of;
  /// Gradient of the smooth extension of piece q.
  std::function<Vec(int q, const Vec& u, double y)> piece_gradient;
  std::function<double(int q, const Vec& u, double y)> piece_value;
};

Link zero_link(int K);
/// ℓ(u; y) = ½(u − y)², K = 1.
Link least_squares_link();
/// ℓ(u; y) = max_{y'≠y} ρ(u_y − u_{y'}) with the smooth hinge
/// ρ(s) = log(1 + exp(1 − s)). Ties pick the lowest y'.
Link svm_softplus_link(int K, double R, double R_x);

/// f(θ; (y, x)) = ℓ(θ_1ᵀx, …, θ_Kᵀx; y) + Σ_j (λ/2)‖θ_j‖² over
/// ProductOfBalls(K, d, R).
LossFamily multi_index(const Link& link, double lambda, double R, double R_x, int K, int d);

struct SoftKMeansConstants {
  double B, L, alpha, beta, beta_prime;
};
SoftKMeansConstants soft_kmeans_constants(int K, double zeta, double R);

/// f(θ; z) = −(1/ζ) log Σ_j exp(−ζ‖θ_j − z‖²); iterates are not projected.
LossFamily soft_kmeans(int K, double zeta, double R, int d);

enum class TieRule { LowestIndex, RandomSingleton, FullSet };
TieRule parse_tie_rule(const std::string& name);
std::string to_string(TieRule rule);

/// f(θ; z) = min_j ‖θ_j − z‖² with auxiliary gradient 2(θ_j − z) on the
/// selected index set and 0 elsewhere; iterates are not projected.
LossFamily hard_kmeans(int K, double R, int d, TieRule tie_rule = TieRule::LowestIndex);

/// The 1-D family on Θ = [0, 4] with Z = {0, 1}:
/// f(·; 0) = min{(x − 1)², ½ + ½(x − 3)²}, f(·; 1) = (x − 1)², and the
/// auxiliary gradient at x = 2 under z = 0 fixed to 2.
LossFamily stability_counterexample_1d();

/// Empirical risk F̂(θ) = (1/n) Σ f(θ; z_i).
double empirical_risk(const LossFamily& family, const Dataset& data, const Vec& theta);
Vec empirical_gradient(const LossFamily& family, const Dataset& data, const Vec& theta);

/// Block j of a block-major point with block dimension d.
inline auto block(const Vec& theta, int j, int d) { return theta.segment(j * d, d); }

}  // namespace locov
