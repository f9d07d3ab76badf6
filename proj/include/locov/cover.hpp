#pragma once

// Localized covers of SGD's reachable set, their empirical verification,
// piecewise quadratic surrogates and iterated-function-system tooling.

#include "locov/sgd.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace locov {

inline constexpr std::uint64_t kDefaultCoverCap = 10'000'000;

/// Smallest T with γ^T R ≤ ε: max(⌈log(R/ε)/log(1/γ)⌉, 0). For γ = 0 a
/// single step suffices unless ε ≥ R.
std::size_t cover_horizon(double R, double epsilon, double gamma);

struct CoverEntry {
  std::vector<std::uint32_t> seq;     // sample index per step
  std::vector<std::uint32_t> pieces;  // piece index per step (piecewise covers only)
  Vec point;
  std::vector<std::uint32_t> deps;    // distinct samples the point depends on, ascending
};

struct CoverSet {
  double epsilon = 0.0;
  std::size_t T = 0;
  Vec anchor;
  std::size_t n = 0;
  std::size_t max_pieces = 1;  // P
  bool piecewise = false;
  bool deduplicated = false;
  std::vector<CoverEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  /// Index of the entry nearest to x (lowest index on ties) and its distance.
  std::pair<std::size_t, double> nearest(const Vec& x) const;
};

struct CoverOptions {
  std::uint64_t cap = kDefaultCoverCap;
  unsigned threads = 0;
  bool deduplicate = false;
  double epsilon = 0.0;  // recorded radius
};

/// All n^T compositions g_{i_T}∘…∘g_{i_1}(0) in lexicographic order of the
/// index sequence. Throws CapExceeded before doing any work if n^T > cap.
CoverSet enumerate_cover(const UpdateMap& map, const Dataset& dataset, std::size_t T,
                         const CoverOptions& options = {});

/// Generic enumerator: step(i, p, θ) for sample i and branch p < branches[i].
/// Branch sequences are recorded in `pieces` when any sample has more than
/// one branch.
CoverSet enumerate_compositions(const std::vector<std::size_t>& branches,
                                const std::function<Vec(std::size_t, std::size_t, const Vec&)>& step,
                                const Vec& anchor, std::size_t T, const CoverOptions& options);

struct VerifyOptions {
  std::size_t trials = 10'000;
  std::size_t max_extra_steps = 50;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool start_at_anchor = false;  // θ^(0) = 0 instead of a uniform draw
};

struct CoverVerification {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double max_distance = 0.0;  // worst nearest-entry distance
  double epsilon = 0.0;
  bool pass = false;
};

/// Runs random trajectories of length t ∈ [T, T + max_extra_steps] from
/// random starts in the domain and checks every endpoint lies within ε of
/// the cover.
CoverVerification verify_cover(const CoverSet& cover, const UpdateMap& map, const Dataset& dataset,
                               const VerifyOptions& options);

// ---------------------------------------------------------------------------
// Piecewise quadratic surrogate

struct QuadraticPiece {
  int smooth_piece;        // q
  std::size_t anchor_id;   // p
  Vec anchor;              // φ
  double value;            // ℓ_q(φ)
  Vec gradient;            // ∇ℓ_q(φ)
};

/// h(θ) = ℓ_q(φ) + ∇ℓ_q(φ)ᵀ(θ − φ) + (β/2)‖θ − φ‖² on the cell of anchor φ
/// inside smooth piece q. Cells: nearest anchor, lowest index on ties.
class PiecewiseQuadraticApprox {
 public:
  static PiecewiseQuadraticApprox from_anchors(const PiecewiseSmoothFunction& f, std::vector<Vec> anchors,
                                               double beta, double xi, double R);

  int dim() const noexcept { return dim_; }
  double beta() const noexcept { return beta_; }
  double beta_prime() const noexcept { return beta_prime_; }
  double xi() const noexcept { return xi_; }
  double radius() const noexcept { return R_; }
  int smooth_pieces() const noexcept { return Q_; }
  const std::vector<Vec>& anchors() const noexcept { return anchors_; }
  const std::vector<QuadraticPiece>& pieces() const noexcept { return pieces_; }
  std::size_t piece_count() const noexcept { return pieces_.size(); }
  /// Q (3(β + β′)R / ξ)^d.
  double piece_bound() const;

  std::size_t nearest_anchor(const Vec& theta) const;
  std::size_t piece_of(const Vec& theta) const;
  double piece_value(std::size_t k, const Vec& theta) const;
  Vec piece_gradient(std::size_t k, const Vec& theta) const;
  double value(const Vec& theta) const { return piece_value(piece_of(theta), theta); }
  Vec gradient(const Vec& theta) const { return piece_gradient(piece_of(theta), theta); }

 private:
  int dim_ = 0;
  int Q_ = 1;
  double beta_ = 0.0;
  double beta_prime_ = 0.0;
  double xi_ = 0.0;
  double R_ = 0.0;
  std::vector<Vec> anchors_;
  std::vector<QuadraticPiece> pieces_;  // index q * anchors + p
  std::function<int(const Vec&)> smooth_piece_of_;
};

/// Anchors of an ε-net of a bounded domain: the axis-aligned lattice of
/// spacing 2ε/√d through the origin, keeping points within ε of the domain
/// and projecting them onto it (duplicates removed).
std::vector<Vec> lattice_anchors(const ConvexDomain& domain, double epsilon, std::uint64_t cap = kDefaultCoverCap);

/// Surrogate with gradient error at most ξ on the domain, using net spacing
/// ξ/(β + β′).
PiecewiseQuadraticApprox build_piecewise_approx(const PiecewiseSmoothFunction& f, const ConvexDomain& domain,
                                                double xi, double beta, std::uint64_t cap = kDefaultCoverCap);
PiecewiseQuadraticApprox build_piecewise_approx(const LossFamily& family, const Sample& z, double xi,
                                                double beta, std::uint64_t cap = kDefaultCoverCap);

/// Points of a per_axis^d grid over the domain's bounding box that lie in
/// the domain.
std::vector<Vec> grid_points(const ConvexDomain& domain, std::size_t per_axis);

/// max ‖∇f(θ) − ∇h(θ)‖ over the given points.
double max_gradient_error(const PiecewiseQuadraticApprox& approx, const PiecewiseSmoothFunction& f,
                          const std::vector<Vec>& points);

/// Compositions of g_{i,p}(θ) = Π(θ − η∇h_{i,p}(θ)) over every sample i and
/// piece p of that sample's surrogate.
CoverSet enumerate_piecewise_cover(const std::vector<PiecewiseQuadraticApprox>& approx, const ConvexDomain& domain,
                                   bool project, double eta, std::size_t T, const CoverOptions& options = {});

// ---------------------------------------------------------------------------
// Iterated function systems

/// Maps g_i(θ) = γθ + (1 − γ)c_i: the SGD maps of ½‖θ − c_i‖² at step 1 − γ.
struct IFSModel {
  std::vector<Vec> centers;
  double gamma = 0.5;
  double R = 1.0;

  static IFSModel quadratic(std::vector<Vec> centers, double gamma, double R);
  int dim() const { return static_cast<int>(centers.front().size()); }
  std::size_t size() const noexcept { return centers.size(); }
  Vec apply(std::size_t i, const Vec& theta) const;
  /// ‖c_i − c_j‖ ≥ 2γR for all i ≠ j.
  bool separated() const;
};

struct IFSDimension {
  double value = 0.0;
  bool certified = false;  // separation condition held
};

/// log n / log(1/γ).
IFSDimension ifs_dimension(const IFSModel& model);

/// Orbit of random compositions from the fixed point of map 0, after
/// `burn_in` discarded steps.
std::vector<Vec> sample_attractor(const IFSModel& model, std::size_t count, std::uint64_t seed,
                                  std::size_t burn_in = 0);

struct BoxCount {
  double estimate = 0.0;
  bool degenerate = false;  // all points identical
  std::vector<double> scales;
  std::vector<std::size_t> counts;
};

/// Least-squares slope of log N(s) against log(1/s), with the grid anchored
/// at the componentwise minimum of the points.
BoxCount box_counting_dimension(const std::vector<Vec>& points, const std::vector<double>& scales);

}  // namespace locov
