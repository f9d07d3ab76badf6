// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "locov/bounds.hpp"
#include "locov/cover.hpp"
#include "locov/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace locov;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

Vec s1(double x) { return Vec::Constant(1, x); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- 1 ----------------------------------------------------------------------

Verdict contraction_exactness() {
  const std::vector<Vec> centers = {Vec::Zero(3), Vec::Constant(3, 0.4), Vec::Constant(3, -0.3)};
  const auto family = quadratic_centers(centers, 1.0);
  const Dataset data = Dataset::from_samples({Sample{centers[0]}, Sample{centers[1]}, Sample{centers[2]}});
  double worst = 0.0;
  for (double eta : {0.1, 0.5, 0.9, 1.5}) {
    const auto map = UpdateMap::sgd(family, eta, false);
    const double expected = std::abs(1.0 - eta);
    // Stop before the pair distance has shrunk by 1e3: later ratios are
    // dominated by cancellation, not by the map.
    const auto steps = static_cast<std::size_t>(
        std::min(10.0, std::ceil(3.0 / std::log10(1.0 / expected))));
    for (std::size_t k = 0; k < 100; ++k) {
      Rng rng = make_rng(1, k);
      const Vec a = standard_normal(rng, 3), b = standard_normal(rng, 3);
      std::uniform_int_distribution<std::size_t> pick(0, 2);
      std::vector<std::size_t> idx(steps);
      for (auto& i : idx) i = pick(rng);
      for (double r : coupled_contraction_ratio(map, a, b, idx, data).ratios)
        worst = std::max(worst, std::abs(r - expected));
    }
  }
  return {worst <= 1e-12, fmt("max |ratio - |1-eta|| = %.3g over eta in {0.1,0.5,0.9,1.5}, 100 pairs", worst)};
}

// --- 2 ----------------------------------------------------------------------

Verdict cover_soundness() {
  const int n = 3;
  const double eta = 0.5, L = 1.0, R = 1.0;
  Rng rng = make_rng(2);
  std::vector<Vec> centers;
  for (int i = 0; i < n; ++i) centers.push_back(uniform_in_ball(rng, 2, R));
  const auto family = quadratic_centers(centers, R);
  std::vector<Sample> samples;
  for (const auto& c : centers) samples.push_back({c});
  const Dataset data = Dataset::from_samples(samples);
  const auto map = UpdateMap::sgd(family, eta);
  const double gamma = contraction_factor(1.0, 1.0, eta);
  const double eps = 1.0 / (2.0 * L * n);
  const std::size_t T = cover_horizon(R, eps, gamma);
  CoverOptions opt;
  opt.cap = 1'000'000;
  opt.epsilon = eps;
  const CoverSet cover = enumerate_cover(map, data, T, opt);
  VerifyOptions vo;
  vo.trials = 10'000;
  vo.max_extra_steps = 50;
  vo.epsilon = eps;
  vo.seed = 2;
  const auto v = verify_cover(cover, map, data, vo);
  return {v.pass && v.failures == 0,
          fmt("T=%zu, |cover|=%zu, %zu trials, %zu failures, max distance %.4f vs eps %.4f", T, cover.size(),
              v.trials, v.failures, v.max_distance, eps)};
}

// --- 3 ----------------------------------------------------------------------

Verdict certificate_regression() {
  // Frozen from a 50-digit evaluation of the closed forms.
  const double sc = bound_strongly_convex(100, 0.05, 1.0, 1.0, 1.0, 0.5).total;
  const double st = bound_single_trajectory(1000, 0.05, 1.0, 8.0).total;
  const double T = *bound_hard_kmeans(1000, 0.05, 2, 1.0, 0.25).inputs.T;
  const bool ok = std::abs(sc - 0.5401679738831866) <= 1e-6 && std::abs(st - 0.05194694083467376) <= 1e-6 && T == 15.0;
  return {ok, fmt("strongly convex %.9f (ref 0.540167974), single trajectory %.9f (ref 0.051946941), hard K-means T=%g",
                  sc, st, T)};
}

// --- 4 ----------------------------------------------------------------------

Verdict bound_validity() {
  const auto family = quadratic_centers({s1(-1.0), s1(1.0)}, 1.0);
  const auto& k = family.constants();
  const double eta = 0.5;
  const auto cert = bound_strongly_convex(200, 0.05, *k.B, *k.L, 1.0, contraction_factor(*k.alpha, *k.beta, eta));
  ValidationScenario sc{.id = "strongly_convex",
                        .family = family,
                        .mu = *family.natural_distribution(),
                        .n = 200,
                        .eta = eta,
                        .certificate = cert,
                        .certificate_scale = 1.0,
                        .resamplings = 500,
                        .trials_per_dataset = 100,
                        .extra_steps = 50,
                        .seed = 4,
                        .threads = 0};
  const auto real = validate_bound(sc);
  sc.certificate_scale = 1.0 / 50.0;
  const auto control = validate_bound(sc);
  const bool ok = real.violation_fraction <= 0.05 && control.violation_fraction > 0.05;
  return {ok, fmt("certificate %.4f: violation fraction %.3f (max |gap| %.4f); shrunk /50 control: %.3f",
                  cert.total, real.violation_fraction, real.max_abs_gap, control.violation_fraction)};
}

// --- 5 ----------------------------------------------------------------------

Verdict piecewise_approximation() {
  PiecewiseSmoothFunction f;
  f.dim = 2;
  f.beta_prime = 1.0;
  f.piece_of = [](const Vec&) { return 0; };
  f.value = [](int, const Vec& t) { return std::sin(t[0]) + std::cos(t[1]); };
  f.gradient = [](int, const Vec& t) {
    Vec g(2);
    g << std::cos(t[0]), -std::sin(t[1]);
    return g;
  };
  const auto dom = ConvexDomain::ball(2, 1.0);
  const double xi = 0.5;
  const auto approx = build_piecewise_approx(f, dom, xi, 1.0);
  const auto pts = grid_points(dom, 200);
  const double err = max_gradient_error(approx, f, pts);
  const bool ok = err <= xi && static_cast<double>(approx.piece_count()) <= approx.piece_bound();
  return {ok, fmt("max gradient error %.4f over %zu grid points (xi %.2f); %zu pieces, bound %.0f", err, pts.size(),
                  xi, approx.piece_count(), approx.piece_bound())};
}

// --- 6 ----------------------------------------------------------------------

Verdict em_equivalence() {
  double worst_residual = 0.0, worst_grad = 0.0;
  std::size_t unconverged = 0;
  Rng rng = make_rng(6);
  for (int k = 0; k < 50; ++k) {
    const int K = 1 + static_cast<int>(uniform01(rng) * 4);
    const int d = 1 + static_cast<int>(uniform01(rng) * 3);
    const auto n = static_cast<std::size_t>(K + uniform01(rng) * (100 - K));
    const double zeta = 0.2 + 3.0 * uniform01(rng);
    const Dataset data = Dataset::draw(Distribution::uniform_ball(d, 1.0), n, 600 + k);
    std::vector<Vec> theta;
    for (int j = 0; j < K; ++j) theta.push_back(data.samples[static_cast<std::size_t>(j)].x);
    worst_residual = std::max(worst_residual, verify_em_equivalence(theta, data, zeta).residual);
    const auto run = run_em(theta, data, zeta);
    unconverged += !run.converged;
    worst_grad = std::max(worst_grad, soft_kmeans_objective_gradient(run.centers, data, zeta).norm());
    worst_residual = std::max(worst_residual, verify_em_equivalence(run.centers, data, zeta).residual);
  }
  const bool ok = worst_residual <= 1e-8 && worst_grad <= 1e-6;
  return {ok, fmt("50 instances: max relative residual %.2e, max gradient norm at EM fixed point %.2e (%zu unconverged)",
                  worst_residual, worst_grad, unconverged)};
}

// --- 7 ----------------------------------------------------------------------

Verdict stability_counterexample() {
  const auto r = stability_experiment(1.0 / 3.0, 10'000, 200, 7, 10);
  const bool ok = std::abs(r.mean_loss_all_zero - 2.0) <= 0.05 && std::abs(r.mean_loss_one_swapped) <= 0.05;
  return {ok, fmt("mean f(theta;1): %.4f (all zero, se %.4f), %.4f (one swapped); %zu->1, %zu->3",
                  r.mean_loss_all_zero, r.se_all_zero, r.mean_loss_one_swapped, r.to_one, r.to_three)};
}

// --- 8 ----------------------------------------------------------------------

Verdict ifs_dimension_check() {
  const double gamma = 1.0 / 3.0;
  const auto model = IFSModel::quadratic({s1(-1.0), s1(1.0)}, gamma, 1.0);
  const auto dim = ifs_dimension(model);
  const auto pts = sample_attractor(model, 20'000, 8);
  std::vector<double> scales;
  for (int k = 2; k <= 7; ++k) scales.push_back(2.0 * std::pow(gamma, k));
  const auto box = box_counting_dimension(pts, scales);
  const auto cert = bound_fractal(1000, 0.05, 2.0, 1.0, 1.0, gamma, box.estimate);
  const double target = std::log(2.0) / std::log(3.0);
  const bool ok = dim.certified && std::abs(box.estimate - target) <= 0.05 && std::isfinite(cert.total);
  return {ok, fmt("box-counting %.4f vs log2/log3 %.4f (closed form %.4f, separated=%d); fractal certificate %.4f",
                  box.estimate, target, dim.value, dim.certified ? 1 : 0, cert.total)};
}

// --- 9 ----------------------------------------------------------------------

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

struct Tuple {
  long n;
  double delta, B, L, R, gamma, eta, xi, P, lambda, R_x, beta, zeta, dH;
  int K, Q;
};

Tuple draw(Rng& rng) {
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  Tuple t;
  t.n = 3 + static_cast<long>(u(0, 5000));
  t.delta = u(0.01, 0.5);
  t.B = u(0.1, 5.0);
  t.L = u(0.2, 3.0);
  t.R = u(0.2, 3.0);
  t.gamma = u(0.05, 0.95);
  t.eta = u(0.01, 1.0);
  t.xi = u(0.0, 0.1);
  t.P = std::floor(u(1.0, 50.0));
  t.lambda = u(0.1, 1.0);
  t.R_x = u(0.5, 2.0);
  t.beta = u(0.1, 2.0);
  t.zeta = u(0.01, 0.3);
  t.dH = u(0.0, 2.0);
  t.K = 1 + static_cast<int>(u(0, 4));
  t.Q = 1 + static_cast<int>(u(0, 3));
  return t;
}

// Each calculator as a function of (n, B, δ) with the rest of the tuple fixed.
// `uses_B` is false where B is derived internally.
struct Calc {
  const char* name;
  bool uses_B;
  std::function<BoundCertificate(const Tuple&, long, double, double)> f;
};

std::vector<Calc> calculators() {
  return {
      {"strongly_convex", true,
       [](const Tuple& t, long n, double B, double d) { return bound_strongly_convex(n, d, B, t.L, t.R, t.gamma); }},
      {"single_trajectory", true,
       [](const Tuple&, long n, double B, double d) { return bound_single_trajectory(n, d, B, 8.0); }},
      {"early_stopping", true, [](const Tuple&, long n, double B, double d) { return bound_early(n, d, B, 5.0); }},
      {"fractal", true,
       [](const Tuple& t, long n, double B, double d) { return bound_fractal(n, d, B, t.L, t.R, t.gamma, t.dH); }},
      {"piecewise_approx", true,
       [](const Tuple& t, long n, double B, double d) {
         return bound_piecewise_approx(n, d, B, t.L, t.R, t.gamma, std::nullopt, t.P, t.xi, t.eta);
       }},
      {"piecewise_contractive", true,
       [](const Tuple& t, long n, double B, double d) {
         return bound_piecewise_contractive(n, d, B, t.L, t.R, t.gamma, 12.0, t.P, t.xi);
       }},
      {"multi_index", true,
       [](const Tuple& t, long n, double B, double d) {
         return bound_multi_index(n, d, B, t.L, t.R, t.R_x, t.K, t.Q, t.beta, 1.0 / t.lambda * t.eta, t.lambda);
       }},
      {"soft_kmeans", false,
       [](const Tuple& t, long n, double, double d) {
         const double eta = 0.5 * t.K * std::exp(-t.zeta * 4.0 * (t.R + 1) * (t.R + 1));
         return bound_soft_kmeans(n, d, t.K, t.R, t.zeta, eta);
       }},
      {"hard_kmeans", false,
       [](const Tuple& t, long n, double, double d) { return bound_hard_kmeans(n, d, t.K, t.R, 0.25); }},
      {"master_covering", true,
       [](const Tuple& t, long n, double B, double d) {
         return bound_master_covering(n, d, B, t.L, 4.0, std::pow(static_cast<double>(n), 4.0), 0.01);
       }},
      {"expected_gap", true,
       [](const Tuple&, long n, double B, double) { return bound_expectation(n, B, 6.0, Certificate::ExpectedGap); }},
      {"expected_uniform_gap", true,
       [](const Tuple&, long n, double B, double) {
         return bound_expectation(n, B, 6.0, Certificate::ExpectedUniformGap);
       }},
      {"expected_absolute_gap", true,
       [](const Tuple&, long n, double B, double) {
         return bound_expectation(n, B, 6.0, Certificate::ExpectedAbsoluteGap);
       }},
  };
}

Verdict reduction_suite() {
  Rng rng = make_rng(9);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Tuple t = draw(rng);
    const double T = std::floor(1.0 + 20.0 * uniform01(rng));
    const auto a = bound_piecewise_approx(t.n, t.delta, t.B, t.L, t.R, t.gamma, T, 1.0, 0.0, t.eta);
    const auto c = bound_piecewise_contractive(t.n, t.delta, t.B, t.L, t.R, t.gamma, T, 1.0, 0.0);
    const auto m = bound_master_covering(t.n, t.delta, t.B, t.L, T, std::pow(static_cast<double>(t.n), T),
                                         std::pow(t.gamma, T) * t.R);
    for (double v : {c.total, m.total}) worst = std::max(worst, std::abs(v - a.total) / std::max(1.0, a.total));
  }

  std::size_t checks = 0, violations = 0;
  std::string first_violation;
  auto record = [&](bool ok, const char* calc, const char* what) {
    ++checks;
    if (!ok) {
      if (violations++ == 0) first_violation = std::string(calc) + " " + what;
    }
  };
  const double tol = 1e-12;
  for (const auto& calc : calculators()) {
    for (int k = 0; k < 1000; ++k) {
      const Tuple t = draw(rng);
      const auto base = calc.f(t, t.n, t.B, t.delta);
      record(close(base.total, base.components.sum(), tol), calc.name, "additivity");
      record(std::isfinite(base.total) && base.total >= 0.0, calc.name, "finite and nonnegative");
      const long n2 = t.n + 1 + static_cast<long>(uniform01(rng) * t.n);
      const auto bigger_n = calc.f(t, n2, t.B, t.delta);
      if (bigger_n.inputs.T == base.inputs.T) record(bigger_n.total <= base.total * (1 + tol), calc.name, "n");
      if (calc.uses_B) record(calc.f(t, t.n, 1.5 * t.B, t.delta).total >= base.total * (1 - tol), calc.name, "B");
      record(calc.f(t, t.n, t.B, 0.5 * t.delta).total >= base.total * (1 - tol), calc.name, "delta");
    }
  }
  const bool ok = worst <= 1e-12 && violations == 0;
  return {ok, fmt("reduction chain max relative difference %.2e on 20 tuples; %zu/%zu property checks hold%s%s", worst,
                  checks - violations, checks, violations ? ", first failure: " : "", first_violation.c_str())};
}

// --- 10 ---------------------------------------------------------------------

Verdict hoeffding_sanity() {
  // At θ = 1 the loss takes the values 0 and 2 = B, so the range is tight.
  const auto family = quadratic_centers({s1(-1.0), s1(1.0)}, 1.0);
  const double B = *family.constants().B;
  std::vector<double> eps;
  for (double f : {0.05, 0.1, 0.2, 0.3}) eps.push_back(f * B);
  const auto r = hoeffding_check(family, *family.natural_distribution(), s1(1.0), {10, 50, 100, 500}, eps, 10'000, 10);
  double worst_excess = -1.0;
  for (const auto& c : r.cells) worst_excess = std::max(worst_excess, c.rate - c.bound);
  return {r.pass, fmt("%zu cells, 10^4 resamplings each; max (rate - bound) = %.4f", r.cells.size(), worst_excess)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "contraction exactness", 1.0, contraction_exactness},
      {2, "cover soundness", 60.0, cover_soundness},
      {3, "certificate regression", 1.0, certificate_regression},
      {4, "bound validity", 300.0, bound_validity},
      {5, "piecewise approximation", 30.0, piecewise_approximation},
      {6, "EM equivalence", 30.0, em_equivalence},
      {7, "stability counterexample", 30.0, stability_counterexample},
      {8, "IFS dimension", 60.0, ifs_dimension_check},
      {9, "reduction and consistency", 10.0, reduction_suite},
      {10, "Hoeffding sanity", 60.0, hoeffding_sanity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s  %2d %-28s %8.2fs (budget %gs)  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                v.detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
