#pragma once

// Closed-form generalization certificates, each split into additive parts.
// All logarithms are natural.

#include <optional>
#include <string>
#include <vector>

namespace locov {

enum class Certificate {
  StronglyConvex,        // contractive SGD, T derived from log(2LRn)
  SingleTrajectory,      // one fixed trajectory
  EarlyStopping,         // t steps, no contraction needed
  Fractal,               // Hausdorff-dimension complexity
  PiecewiseApprox,       // piecewise strongly convex surrogate
  MultiIndex,            // multi-index model
  SoftKMeans,
  HardKMeans,
  PiecewiseContractive,  // generic piecewise contractive optimizer
  MasterCovering,        // any finite cover of the reachable set
  ExpectedGap,           // |E[gap]|
  ExpectedUniformGap,    // E[sup |gap|] over the reachable set
  ExpectedAbsoluteGap,   // E[|gap|] for one trajectory
};

std::string to_string(Certificate c);
Certificate parse_certificate(const std::string& name);
const std::vector<Certificate>& all_certificates();

/// Everything a calculator consumed or derived. Unused fields stay empty.
struct BoundInputs {
  std::optional<double> n, delta, B, L, R, gamma, T, P, Q, K, xi, eta, epsilon, C;
  std::optional<double> cover_cardinality;      // |Φ| when representable
  std::optional<double> log_cover_cardinality;  // log |Φ|
  std::optional<double> R_x, lambda, beta, zeta, d_H, kappa, complexity;
};

struct BoundComponents {
  std::optional<double> sample_dependency_term;
  std::optional<double> concentration_term;
  std::optional<double> covering_slack_term;
  std::optional<double> approximation_term;

  double sum() const;
};

struct BoundCertificate {
  Certificate theorem;
  BoundInputs inputs;
  BoundComponents components;
  double total = 0.0;
  std::vector<std::string> flags;  // edge cases taken (γ = 0, γ = 1 limit, defaulted T, …)

  bool has_flag(const std::string& f) const;
};

/// (BT+1)/n + B√((T log n + log(2/δ))/(2n)), T = max(⌈log(2LRn)/log(1/γ)⌉, 0).
BoundCertificate bound_strongly_convex(long n, double delta, double B, double L, double R, double gamma);

/// (BT+1)/n + B√(log(2/δ)/(2n)).
BoundCertificate bound_single_trajectory(long n, double delta, double B, double T);

/// Bt/n + B√(log(2/δ)/(2n)).
BoundCertificate bound_early(long n, double delta, double B, double t);

/// (BT+1)/n + B√((⌈d_H + log(2LR)/log(1/γ)⌉ log n + log(2/δ))/(2n)).
BoundCertificate bound_fractal(long n, double delta, double B, double L, double R, double gamma, double d_H);

/// BT/n + B√((T log(nP) + log(2/δ))/(2n)) + 2L(γ^T R + ((1−γ^T)/(1−γ))ηξ).
/// T defaults to max(⌈log(3LRn)/log(1/γ)⌉, 0).
BoundCertificate bound_piecewise_approx(long n, double delta, double B, double L, double R, double gamma,
                                        std::optional<double> T, double P, double xi, double eta);

/// Same shape with ξ in place of ηξ.
BoundCertificate bound_piecewise_contractive(long n, double delta, double B, double L, double R, double gamma,
                                             std::optional<double> T, double P, double xi);

struct PartitionSize {
  double kappa;
  double P;
};

/// κ = 1/(12βηK L R_x T n), P = ⌈2R R_x/κ⌉ (P = 1 when T = 0 or β = 0).
PartitionSize multi_index_partition(double beta, double eta, double K, double L, double R, double R_x, double T,
                                    long n);

/// κ = 1/(12(β+β′)η√K L T n), P = ⌈2R/κ⌉ with the soft K-means constants.
PartitionSize soft_kmeans_partition(int K, double zeta, double R, double eta, double T, long n);

/// γ = |1−ηλ|, T = max(⌈log(3LRn)/log(1/γ)⌉, 0), then
/// (BT+1)/n + B√((T log(nP^K Q) + log(2/δ))/(2n)).
BoundCertificate bound_multi_index(long n, double delta, double B, double L, double R, double R_x, int K, int Q,
                                   double beta, double eta, double lambda);

/// Soft K-means: constants from (K, ζ, R), γ = √(1 − 4ηe^{−ζB}/K + 4η²/K²),
/// log factor log(nP^K).
BoundCertificate bound_soft_kmeans(long n, double delta, int K, double R, double zeta, double eta);

/// Soft K-means contraction factor; requires η ∈ (0, K e^{−ζB}).
double soft_kmeans_gamma(int K, double zeta, double R, double eta);

/// Hard K-means: B = 4R², γ = |1−2η|, T = max(⌈log(16√K R² n)/log(1/γ)⌉, 0),
/// (BKT+1)/n + B√((KT log(2n) + log(2/δ))/(2n)).
BoundCertificate bound_hard_kmeans(long n, double delta, int K, double R, double eta);

/// BT/n + B√(log(2|Φ|/δ)/(2n)) + 2Lε.
BoundCertificate bound_master_covering(long n, double delta, double B, double L, double T, double cover_cardinality,
                                       double epsilon);
/// Same, with |Φ| given through its logarithm.
BoundCertificate bound_master_covering_log(long n, double delta, double B, double L, double T,
                                           double log_cover_cardinality, double epsilon);

/// (BT+1)/n, plus CB√(T log n/n) (uniform) or CB√(1/n) (absolute).
BoundCertificate bound_expectation(long n, double B, double T, Certificate variant, double C = 1.0);

/// Horizon used by the strongly convex certificate.
double strongly_convex_horizon(double L, double R, long n, double gamma);

}  // namespace locov
