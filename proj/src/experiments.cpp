#include "locov/experiments.hpp"

#include <cmath>
#include <numeric>

namespace locov {

namespace {

// Weighted running mean; a constant sequence yields that constant exactly.
class WeightedMean {
 public:
  void add(double x, double w) {
    if (w <= 0.0) return;
    total_ += w;
    mean_ += (w / total_) * (x - mean_);
  }
  double mean() const { return mean_; }

 private:
  double total_ = 0.0;
  double mean_ = 0.0;
};

}  // namespace

PopulationRisk population_risk(const LossFamily& family, const Distribution& mu, const Vec& theta, std::size_t m,
                               std::uint64_t seed, bool force_monte_carlo) {
  PopulationRisk out;
  if (const auto* fs = mu.support(); fs && !force_monte_carlo) {
    WeightedMean acc;
    for (std::size_t k = 0; k < fs->atoms.size(); ++k) acc.add(family.value(theta, fs->atoms[k]), fs->weights[k]);
    out.value = acc.mean();
    out.exact = true;
    return out;
  }
  require(m >= 2, "Monte Carlo population risk needs at least 2 draws");
  Rng rng = make_rng(seed, 1);
  RunningStats stats;
  for (std::size_t k = 0; k < m; ++k) stats.add(family.value(theta, mu.draw(rng)));
  out.value = stats.mean();
  out.standard_error = stats.standard_error();
  out.m = m;
  return out;
}

GapEstimate estimate_gap(const LossFamily& family, const Dataset& dataset, const Trajectory& trajectory,
                         std::size_t m, std::uint64_t seed, const std::optional<Distribution>& mu,
                         bool force_monte_carlo) {
  require(!trajectory.points.empty(), "trajectory has no points");
  const Vec& theta = trajectory.final_point();
  GapEstimate g;
  g.empirical_risk = empirical_risk(family, dataset, theta);
  g.t = trajectory.steps();
  g.seed = seed;
  g.indices_digest = trajectory.indices_digest();

  const Distribution* source = nullptr;
  if (mu) source = &*mu;
  else if (dataset.generator) source = &*dataset.generator;
  else if (family.natural_distribution()) source = &*family.natural_distribution();
  if (!source) return g;

  const PopulationRisk F = population_risk(family, *source, theta, m, seed, force_monte_carlo);
  g.population_available = true;
  g.population_risk = F.value;
  g.gap = g.empirical_risk - F.value;
  g.mc_standard_error = F.standard_error;
  g.exact = F.exact;
  g.m = F.m;
  return g;
}

ValidationReport validate_bound(const ValidationScenario& sc) {
  require(sc.n >= 1 && sc.resamplings >= 1 && sc.trials_per_dataset >= 1, "validation sizes must be positive");
  require(sc.certificate_scale > 0.0, "certificate scale must be positive");
  require(sc.certificate.inputs.T.has_value(), "certificate does not carry a horizon T");
  const double delta = sc.certificate.inputs.delta.value_or(1.0);
  if (sc.certificate.inputs.n) require(*sc.certificate.inputs.n == static_cast<double>(sc.n), "certificate was computed for a different n");
  const auto T = static_cast<std::size_t>(*sc.certificate.inputs.T);

  const auto* support = sc.mu.support();
  const UpdateMap map = UpdateMap::sgd(sc.family, sc.eta);
  const ConvexDomain& domain = sc.family.domain();

  // With finite support F is exact and shared by all resamplings, so the
  // population risk is evaluated once per endpoint.
  ValidationReport report;
  report.scenario = sc.id;
  report.resamplings = sc.resamplings;
  report.certificate_total = sc.certificate.total;
  report.threshold = sc.certificate.total * sc.certificate_scale;
  report.delta = delta;
  report.rows.resize(sc.resamplings);

  parallel_for(sc.resamplings, sc.threads, [&](std::size_t r) {
    const Dataset data = Dataset::draw(sc.mu, sc.n, stream_seed(sc.seed, r));
    for (const auto& z : data.samples) sc.family.check_sample(z);
    Rng rng = make_rng(sc.seed ^ 0x5bd1e995ULL, r);
    std::uniform_int_distribution<std::size_t> extra(0, sc.extra_steps);
    std::uniform_int_distribution<std::size_t> pick(0, sc.n - 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < sc.trials_per_dataset; ++k) {
      const Vec init = uniform_in_domain(rng, domain);
      std::vector<std::size_t> idx(T + extra(rng));
      for (auto& i : idx) i = pick(rng);
      const Vec theta = run_endpoint(map, init, idx, data);
      if (!map.projects() && domain.enclosing_radius() && !domain.contains(theta, 1e-9))
        throw Error("validate_bound: unprojected iterate left the domain");
      const double F = support ? population_risk(sc.family, sc.mu, theta).value
                               : population_risk(sc.family, sc.mu, theta, kDefaultMonteCarlo, stream_seed(sc.seed, r)).value;
      worst = std::max(worst, std::abs(empirical_risk(sc.family, data, theta) - F));
    }
    report.rows[r] = {r, worst, worst > report.threshold};
  });

  for (const auto& row : report.rows) {
    report.max_abs_gap = std::max(report.max_abs_gap, row.max_abs_gap);
    if (row.violated) ++report.violations;
  }
  report.violation_fraction = static_cast<double>(report.violations) / static_cast<double>(report.resamplings);
  report.pass = report.violation_fraction <= delta;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void check_centers(const std::vector<Vec>& theta, const Dataset& dataset) {
  require(!theta.empty(), "need at least one center");
  require(dataset.size() >= 1, "need at least one sample");
  const auto d = theta.front().size();
  for (const auto& c : theta)
    if (c.size() != d) throw DimensionMismatch("center", d, c.size());
  for (const auto& z : dataset.samples)
    if (z.x.size() != d) throw DimensionMismatch("sample", d, z.x.size());
}

// Row i: softmax over j of −ζ‖θ_j − z_i‖², plus the log normalizer.
Eigen::VectorXd soft_row(const std::vector<Vec>& theta, const Vec& z, double zeta, double& log_sum) {
  const auto K = static_cast<Eigen::Index>(theta.size());
  Eigen::VectorXd logits(K);
  for (Eigen::Index j = 0; j < K; ++j) logits[j] = -zeta * (theta[j] - z).squaredNorm();
  const double top = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - top).exp();
  const double s = w.sum();
  log_sum = top + std::log(s);
  return w / s;
}

}  // namespace

EMStep em_step(const std::vector<Vec>& theta, const Dataset& dataset, double zeta) {
  require(zeta > 0.0 && std::isfinite(zeta), "zeta must be positive");
  check_centers(theta, dataset);
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto K = static_cast<Eigen::Index>(theta.size());
  EMStep out;
  out.weights.resize(n, K);
  double unused;
  for (Eigen::Index i = 0; i < n; ++i) out.weights.row(i) = soft_row(theta, dataset.samples[i].x, zeta, unused).transpose();
  out.centers = theta;
  out.held.assign(theta.size(), false);
  for (Eigen::Index j = 0; j < K; ++j) {
    const double mass = out.weights.col(j).sum();
    if (!(mass > 0.0)) {
      out.held[j] = true;
      out.any_held = true;
      continue;
    }
    Vec acc = Vec::Zero(theta.front().size());
    for (Eigen::Index i = 0; i < n; ++i) acc += out.weights(i, j) * dataset.samples[i].x;
    out.centers[j] = acc / mass;
  }
  return out;
}

EMRun run_em(std::vector<Vec> theta, const Dataset& dataset, double zeta, std::size_t max_iterations, double tol) {
  EMRun run;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    EMStep s = em_step(theta, dataset, zeta);
    double change = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) change = std::max(change, (s.centers[j] - theta[j]).norm());
    theta = std::move(s.centers);
    run.iterations = it + 1;
    run.last_change = change;
    if (change <= tol) {
      run.converged = true;
      break;
    }
  }
  run.centers = std::move(theta);
  return run;
}

double soft_kmeans_objective(const std::vector<Vec>& theta, const Dataset& dataset, double zeta) {
  require(zeta > 0.0, "zeta must be positive");
  check_centers(theta, dataset);
  RunningStats stats;
  for (const auto& z : dataset.samples) {
    double log_sum;
    soft_row(theta, z.x, zeta, log_sum);
    stats.add(-log_sum / zeta);
  }
  return stats.mean();
}

Vec soft_kmeans_objective_gradient(const std::vector<Vec>& theta, const Dataset& dataset, double zeta) {
  require(zeta > 0.0, "zeta must be positive");
  check_centers(theta, dataset);
  const auto d = theta.front().size();
  const auto K = theta.size();
  Vec g = Vec::Zero(static_cast<Eigen::Index>(K) * d);
  for (const auto& z : dataset.samples) {
    double log_sum;
    const Eigen::VectorXd w = soft_row(theta, z.x, zeta, log_sum);
    for (std::size_t j = 0; j < K; ++j) g.segment(j * d, d) += 2.0 * w[j] * (theta[j] - z.x);
  }
  return g / static_cast<double>(dataset.size());
}

EMEquivalence verify_em_equivalence(const std::vector<Vec>& theta, const Dataset& dataset, double zeta, double tol) {
  require(zeta > 0.0, "zeta must be positive");
  check_centers(theta, dataset);
  const double d = static_cast<double>(theta.front().size());
  const double K = static_cast<double>(theta.size());
  const double n = static_cast<double>(dataset.size());
  const double variance = 1.0 / (2.0 * zeta);

  // Mixture density with equal weights 1/K and covariance (1/(2ζ)) I.
  double ll = 0.0;
  for (const auto& z : dataset.samples) {
    Eigen::VectorXd log_dens(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j)
      log_dens[j] = -0.5 * d * std::log(2.0 * M_PI * variance) - (z.x - theta[j]).squaredNorm() / (2.0 * variance);
    const double top = log_dens.maxCoeff();
    ll += std::log(1.0 / K) + top + std::log((log_dens.array() - top).exp().sum());
  }

  EMEquivalence out;
  out.log_likelihood = ll;
  out.objective = soft_kmeans_objective(theta, dataset, zeta);
  const double offset = 0.5 * d * std::log(zeta / M_PI) - std::log(K);
  out.predicted = -zeta * n * out.objective + n * offset;
  const double scale = std::max(1.0, std::abs(ll));
  out.residual = std::abs(ll - out.predicted) / scale;
  out.alternative_residual = std::abs(ll - (-n * K * out.objective + offset)) / scale;
  out.pass = out.residual <= tol;
  return out;
}

// ---------------------------------------------------------------------------

StabilityReport stability_experiment(double eta, std::size_t inits, std::size_t steps, std::uint64_t seed,
                                     std::size_t n, unsigned threads) {
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(inits >= 1 && steps >= 1, "inits and steps must be positive");
  require(n >= 2, "the swapped dataset needs at least two samples");
  const LossFamily family = stability_counterexample_1d();
  const UpdateMap map = UpdateMap::sgd(family, eta);
  std::vector<Sample> zeros(n, Sample{Vec(), 0.0});
  std::vector<Sample> swapped = zeros;
  swapped.front().y = 1.0;
  const Dataset all_zero = Dataset::from_samples(zeros);
  const Dataset one_swapped = Dataset::from_samples(swapped);
  const Sample probe{Vec(), 1.0};

  struct Outcome {
    double start, end_zero, end_swapped;
  };
  std::vector<Outcome> outcomes(inits);
  parallel_for(inits, threads, [&](std::size_t k) {
    Rng rng = make_rng(seed, k);
    const Vec init = Vec::Constant(1, 4.0 * uniform01(rng));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(steps);
    for (auto& i : idx) i = pick(rng);
    // Both datasets see the same index sequence.
    outcomes[k] = {init[0], run_endpoint(map, init, idx, all_zero)[0], run_endpoint(map, init, idx, one_swapped)[0]};
  });

  StabilityReport r;
  r.eta = eta;
  r.inits = inits;
  r.steps = steps;
  r.n = n;
  RunningStats zero_stats, swapped_stats;
  for (const auto& o : outcomes) {
    zero_stats.add(family.value(Vec::Constant(1, o.end_zero), probe));
    swapped_stats.add(family.value(Vec::Constant(1, o.end_swapped), probe));
    const bool at_one = std::abs(o.end_zero - 1.0) <= 1e-6;
    const bool at_three = std::abs(o.end_zero - 3.0) <= 1e-6;
    r.to_one += at_one;
    r.to_three += at_three;
    r.converged_all_zero += at_one || at_three;
    r.converged_one_swapped += std::abs(o.end_swapped - 1.0) <= 1e-6;
    const bool expect_one = o.start <= 2.0;
    if ((expect_one && !at_one) || (!expect_one && !at_three)) ++r.basin_mismatches;
  }
  r.mean_loss_all_zero = zero_stats.mean();
  r.mean_loss_one_swapped = swapped_stats.mean();
  r.se_all_zero = zero_stats.standard_error();
  r.se_one_swapped = swapped_stats.standard_error();
  r.difference = r.mean_loss_all_zero - r.mean_loss_one_swapped;
  r.separated = std::abs(r.difference) >= 1.5;
  return r;
}

// ---------------------------------------------------------------------------

HoeffdingReport hoeffding_check(const LossFamily& family, const Distribution& mu, const Vec& theta,
                                const std::vector<long>& n_grid, const std::vector<double>& epsilon_grid,
                                std::size_t resamplings, std::uint64_t seed, unsigned threads) {
  require(!n_grid.empty() && !epsilon_grid.empty(), "Hoeffding grid must not be empty");
  require(resamplings >= 1, "resamplings must be positive");
  require(family.constants().B.has_value() && *family.constants().B > 0.0,
          "Hoeffding check needs a positive deviation bound B");
  for (long n : n_grid) require(n >= 1, "grid sizes must be positive");
  for (double e : epsilon_grid) require(e >= 0.0, "grid epsilons must be nonnegative");

  HoeffdingReport rep;
  rep.range_width = *family.constants().B;
  rep.mean = population_risk(family, mu, theta, 1'000'000, seed).value;

  for (std::size_t a = 0; a < n_grid.size(); ++a) {
    const long n = n_grid[a];
    std::vector<double> deviations(resamplings);
    parallel_for(resamplings, threads, [&](std::size_t r) {
      Rng rng = make_rng(stream_seed(seed, a), r);
      RunningStats s;
      for (long i = 0; i < n; ++i) s.add(family.value(theta, mu.draw(rng)));
      deviations[r] = std::abs(s.mean() - rep.mean);
    });
    for (double eps : epsilon_grid) {
      HoeffdingCell c;
      c.n = n;
      c.epsilon = eps;
      c.resamplings = resamplings;
      for (double dev : deviations) c.violations += dev >= eps;
      c.rate = static_cast<double>(c.violations) / static_cast<double>(resamplings);
      c.bound = eps > 0.0 ? hoeffding_tail(n, eps, rep.range_width) : 1.0;
      c.allowance = 3.0 * std::sqrt(c.bound * (1.0 - c.bound) / static_cast<double>(resamplings));
      c.ok = c.rate <= c.bound + c.allowance;
      rep.cells.push_back(c);
    }
  }
  rep.pass = std::all_of(rep.cells.begin(), rep.cells.end(), [](const HoeffdingCell& c) { return c.ok; });
  return rep;
}

}  // namespace locov
