#pragma once

// Empirical checks: generalization gaps against certificates, the soft
// K-means / Gaussian-mixture EM correspondence, the 1-D stability
// counterexample and Hoeffding's inequality.

#include "locov/bounds.hpp"
#include "locov/sgd.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace locov {

struct PopulationRisk {
  double value = 0.0;
  double standard_error = 0.0;
  bool exact = false;  // enumerated over a finite support
  std::size_t m = 0;   // Monte Carlo draws (0 when exact)
};

inline constexpr std::size_t kDefaultMonteCarlo = 100'000;

/// F(θ) = E f(θ; Z). Exact when μ has finite support unless `force_monte_carlo`.
PopulationRisk population_risk(const LossFamily& family, const Distribution& mu, const Vec& theta,
                               std::size_t m = kDefaultMonteCarlo, std::uint64_t seed = 0,
                               bool force_monte_carlo = false);

struct GapEstimate {
  double empirical_risk = 0.0;
  std::optional<double> population_risk;
  std::optional<double> gap;  // F̂ − F
  double mc_standard_error = 0.0;
  bool exact = false;
  bool population_available = false;
  std::size_t m = 0;
  std::size_t t = 0;
  std::uint64_t seed = 0;
  std::uint64_t indices_digest = 0;
};

/// Gap at the trajectory's endpoint. μ is taken from `mu`, then the dataset's
/// generator, then the family's natural distribution; with none of these only
/// F̂ is reported.
GapEstimate estimate_gap(const LossFamily& family, const Dataset& dataset, const Trajectory& trajectory,
                         std::size_t m, std::uint64_t seed, const std::optional<Distribution>& mu = std::nullopt,
                         bool force_monte_carlo = false);

struct ValidationScenario {
  std::string id = "scenario";
  LossFamily family;
  Distribution mu;
  std::size_t n = 200;
  double eta = 0.5;
  BoundCertificate certificate;
  double certificate_scale = 1.0;  // threshold = total · scale (negative controls use < 1)
  std::size_t resamplings = 500;
  std::size_t trials_per_dataset = 100;
  std::size_t extra_steps = 50;  // t ∈ [T, T + extra_steps]
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ResamplingRow {
  std::size_t resampling = 0;
  double max_abs_gap = 0.0;
  bool violated = false;
};

struct ValidationReport {
  std::string scenario;
  std::size_t resamplings = 0;
  std::size_t violations = 0;
  double certificate_total = 0.0;
  double threshold = 0.0;
  double delta = 0.0;
  double max_abs_gap = 0.0;
  double violation_fraction = 0.0;
  bool pass = false;
  std::vector<ResamplingRow> rows;
};

/// Resamples datasets, runs random trajectories from random starts for
/// t ∈ [T, T + extra_steps], and compares each dataset's worst |gap| with the
/// threshold. PASS iff the violating fraction is at most δ.
ValidationReport validate_bound(const ValidationScenario& scenario);

// ---------------------------------------------------------------------------
// Soft K-means as EM

struct EMStep {
  Eigen::MatrixXd weights;   // n × K, rows sum to 1
  std::vector<Vec> centers;  // updated θ_j
  std::vector<bool> held;    // cluster had no weight and was kept fixed
  bool any_held = false;
};

EMStep em_step(const std::vector<Vec>& theta, const Dataset& dataset, double zeta);

struct EMRun {
  std::vector<Vec> centers;
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

/// Iterates em_step until the largest center move is ≤ tol.
EMRun run_em(std::vector<Vec> theta, const Dataset& dataset, double zeta, std::size_t max_iterations = 10'000,
             double tol = 1e-12);

/// Soft K-means objective (1/n)Σ −(1/ζ) log Σ_j exp(−ζ‖θ_j − z_i‖²) and its gradient.
double soft_kmeans_objective(const std::vector<Vec>& theta, const Dataset& dataset, double zeta);
Vec soft_kmeans_objective_gradient(const std::vector<Vec>& theta, const Dataset& dataset, double zeta);

struct EMEquivalence {
  double log_likelihood = 0.0;     // Gaussian mixture, evaluated from densities
  double objective = 0.0;          // soft K-means objective F̂
  double predicted = 0.0;          // −ζ n F̂ + n log((ζ/π)^{d/2}/K)
  double residual = 0.0;           // relative
  double alternative_residual = 0.0;  // same check for −nK F̂ + log((ζ/π)^{d/2}/K)
  bool pass = false;
};

EMEquivalence verify_em_equivalence(const std::vector<Vec>& theta, const Dataset& dataset, double zeta,
                                    double tol = 1e-8);

// ---------------------------------------------------------------------------
// Stability counterexample

struct StabilityReport {
  double eta = 1.0 / 3.0;
  std::size_t inits = 0;
  std::size_t steps = 0;
  std::size_t n = 0;
  double mean_loss_all_zero = 0.0;      // E f(θ^(t); 1) when every sample is 0
  double mean_loss_one_swapped = 0.0;   // same after swapping the first sample to 1
  double se_all_zero = 0.0;
  double se_one_swapped = 0.0;
  std::size_t to_one = 0;    // all-zero runs ending within 1e-6 of 1
  std::size_t to_three = 0;  // ... of 3
  std::size_t converged_all_zero = 0;
  std::size_t converged_one_swapped = 0;
  std::size_t basin_mismatches = 0;  // all-zero runs not ending at their starting basin's point
  double difference = 0.0;
  bool separated = false;  // difference ≥ 1.5
};

StabilityReport stability_experiment(double eta = 1.0 / 3.0, std::size_t inits = 10'000, std::size_t steps = 200,
                                     std::uint64_t seed = 0, std::size_t n = 10, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Hoeffding

struct HoeffdingCell {
  long n = 0;
  double epsilon = 0.0;
  std::size_t violations = 0;
  std::size_t resamplings = 0;
  double rate = 0.0;
  double bound = 1.0;
  double allowance = 0.0;  // 3σ binomial noise at the bound
  bool ok = false;
};

struct HoeffdingReport {
  double range_width = 0.0;
  double mean = 0.0;
  std::vector<HoeffdingCell> cells;
  bool pass = false;
};

/// Frequency of |mean of n draws of f(θ; Z) − F(θ)| ≥ ε over resamplings,
/// against 2 exp(−2nε²/w²) with w the family's deviation bound B.
HoeffdingReport hoeffding_check(const LossFamily& family, const Distribution& mu, const Vec& theta,
                                const std::vector<long>& n_grid, const std::vector<double>& epsilon_grid,
                                std::size_t resamplings, std::uint64_t seed = 0, unsigned threads = 0);

}  // namespace locov
