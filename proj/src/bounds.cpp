#include "locov/bounds.hpp"

#include "locov/core.hpp"
#include "locov/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace locov {

namespace {

struct Named {
  Certificate c;
  const char* name;
};

constexpr Named kNames[] = {
    {Certificate::StronglyConvex, "strongly_convex"},
    {Certificate::SingleTrajectory, "single_trajectory"},
    {Certificate::EarlyStopping, "early_stopping"},
    {Certificate::Fractal, "fractal"},
    {Certificate::PiecewiseApprox, "piecewise_approx"},
    {Certificate::MultiIndex, "multi_index"},
    {Certificate::SoftKMeans, "soft_kmeans"},
    {Certificate::HardKMeans, "hard_kmeans"},
    {Certificate::PiecewiseContractive, "piecewise_contractive"},
    {Certificate::MasterCovering, "master_covering"},
    {Certificate::ExpectedGap, "expected_gap"},
    {Certificate::ExpectedUniformGap, "expected_uniform_gap"},
    {Certificate::ExpectedAbsoluteGap, "expected_absolute_gap"},
};

void check_n(long n) { require(n >= 1, "n must be at least 1"); }
void check_delta(double delta) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}
void check_nonneg(double v, const char* what) {
  require(v >= 0.0 && std::isfinite(v), std::string(what) + " must be nonnegative and finite");
}
void check_pos(double v, const char* what) {
  require(v > 0.0 && std::isfinite(v), std::string(what) + " must be positive and finite");
}
void check_gamma_open(double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
}

double dn(long n) { return static_cast<double>(n); }

// max(⌈log(c)/log(1/γ)⌉, 0), with γ = 0 collapsing to 0.
double horizon(double c, double gamma) {
  if (gamma == 0.0) return 0.0;
  return std::max(snapped_ceil(std::log(c) / std::log(1.0 / gamma)), 0.0);
}

// Same, given log(1/γ) directly; used where γ is within rounding of 1.
double horizon_log(double c, double log_inv_gamma) {
  return std::max(snapped_ceil(std::log(c) / log_inv_gamma), 0.0);
}

// B√((complexity + log(2/δ))/(2n))
double concentration(double B, double complexity, double delta, long n) {
  return B * std::sqrt((complexity + std::log(2.0 / delta)) / (2.0 * dn(n)));
}

BoundCertificate finish(Certificate c, BoundInputs in, BoundComponents parts, std::vector<std::string> flags = {}) {
  BoundCertificate cert{c, std::move(in), parts, parts.sum(), std::move(flags)};
  require(std::isfinite(cert.total) && cert.total >= 0.0, "certificate total is not a finite nonnegative number");
  return cert;
}

// Σ_{j<T} γ^j, with the γ = 1 limit T.
double geometric_sum(double gamma, double T, std::vector<std::string>& flags) {
  if (gamma == 1.0) {
    flags.push_back("gamma_one_limit");
    return T;
  }
  return (1.0 - std::pow(gamma, T)) / (1.0 - gamma);
}

BoundCertificate piecewise_shape(Certificate which, long n, double delta, double B, double L, double R, double gamma,
                                 std::optional<double> T_in, double P, double xi, std::optional<double> eta) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  check_nonneg(L, "L");
  check_pos(R, "R");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(P >= 1.0 && std::isfinite(P), "P must be at least 1");
  check_nonneg(xi, "xi");
  std::vector<std::string> flags;
  double T;
  if (T_in) {
    require(*T_in >= 0.0 && std::floor(*T_in) == *T_in, "T must be a nonnegative integer");
    T = *T_in;
  } else {
    require(gamma < 1.0, "T must be supplied when gamma = 1");
    T = horizon(3.0 * L * R * dn(n), gamma);
    flags.push_back("T_default");
  }
  if (gamma == 0.0) flags.push_back("gamma_zero_instant_contraction");
  const double step_error = eta ? *eta * xi : xi;
  const double slack = 2.0 * L * (std::pow(gamma, T) * R + geometric_sum(gamma, T, flags) * step_error);

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.L = L;
  in.R = R;
  in.gamma = gamma;
  in.T = T;
  in.P = P;
  in.xi = xi;
  if (eta) in.eta = *eta;
  in.log_cover_cardinality = T * std::log(dn(n) * P);
  in.cover_cardinality = std::pow(dn(n) * P, T);
  if (!std::isfinite(*in.cover_cardinality)) in.cover_cardinality.reset();

  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.concentration_term = concentration(B, *in.log_cover_cardinality, delta, n);
  parts.approximation_term = slack;
  return finish(which, std::move(in), parts, std::move(flags));
}

}  // namespace

std::string to_string(Certificate c) {
  for (const auto& e : kNames)
    if (e.c == c) return e.name;
  return "unknown";
}

Certificate parse_certificate(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (const auto& e : kNames)
    if (lower == e.name) return e.c;
  std::string known;
  for (const auto& e : kNames) known += (known.empty() ? "" : ", ") + std::string(e.name);
  throw InvalidArgument("unknown certificate '" + name + "' (expected one of: " + known + ")");
}

const std::vector<Certificate>& all_certificates() {
  static const std::vector<Certificate> all = [] {
    std::vector<Certificate> v;
    for (const auto& e : kNames) v.push_back(e.c);
    return v;
  }();
  return all;
}

double BoundComponents::sum() const {
  double s = 0.0;
  for (const auto& part : {sample_dependency_term, concentration_term, covering_slack_term, approximation_term})
    if (part) s += *part;
  return s;
}

bool BoundCertificate::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double strongly_convex_horizon(double L, double R, long n, double gamma) {
  check_gamma_open(gamma);
  return horizon(2.0 * L * R * dn(n), gamma);
}

BoundCertificate bound_strongly_convex(long n, double delta, double B, double L, double R, double gamma) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  check_pos(L, "L");
  check_pos(R, "R");
  check_gamma_open(gamma);
  std::vector<std::string> flags;
  if (gamma == 0.0) flags.push_back("gamma_zero_instant_contraction");
  const double T = strongly_convex_horizon(L, R, n, gamma);

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.L = L;
  in.R = R;
  in.gamma = gamma;
  in.T = T;
  in.epsilon = 1.0 / (2.0 * L * dn(n));
  in.log_cover_cardinality = T * std::log(dn(n));
  in.cover_cardinality = std::pow(dn(n), T);
  if (!std::isfinite(*in.cover_cardinality)) in.cover_cardinality.reset();

  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(B, T * std::log(dn(n)), delta, n);
  return finish(Certificate::StronglyConvex, std::move(in), parts, std::move(flags));
}

BoundCertificate bound_single_trajectory(long n, double delta, double B, double T) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  require(T >= 0.0 && std::floor(T) == T, "T must be a nonnegative integer");
  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.T = T;
  in.cover_cardinality = 1.0;
  in.log_cover_cardinality = 0.0;
  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(B, 0.0, delta, n);
  return finish(Certificate::SingleTrajectory, std::move(in), parts);
}

BoundCertificate bound_early(long n, double delta, double B, double t) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  require(t >= 0.0 && std::floor(t) == t, "t must be a nonnegative integer");
  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.T = t;
  in.cover_cardinality = 1.0;
  in.log_cover_cardinality = 0.0;
  BoundComponents parts;
  parts.sample_dependency_term = B * t / dn(n);
  parts.concentration_term = concentration(B, 0.0, delta, n);
  return finish(Certificate::EarlyStopping, std::move(in), parts);
}

BoundCertificate bound_fractal(long n, double delta, double B, double L, double R, double gamma, double d_H) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  check_pos(L, "L");
  check_pos(R, "R");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  check_nonneg(d_H, "d_H");
  const double T = strongly_convex_horizon(L, R, n, gamma);
  const double complexity = std::max(snapped_ceil(d_H + std::log(2.0 * L * R) / std::log(1.0 / gamma)), 0.0);

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.L = L;
  in.R = R;
  in.gamma = gamma;
  in.T = T;
  in.d_H = d_H;
  in.complexity = complexity;
  in.epsilon = 1.0 / (2.0 * L * dn(n));
  in.log_cover_cardinality = complexity * std::log(dn(n));

  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(B, complexity * std::log(dn(n)), delta, n);
  return finish(Certificate::Fractal, std::move(in), parts);
}

BoundCertificate bound_piecewise_approx(long n, double delta, double B, double L, double R, double gamma,
                                        std::optional<double> T, double P, double xi, double eta) {
  check_pos(eta, "eta");
  return piecewise_shape(Certificate::PiecewiseApprox, n, delta, B, L, R, gamma, T, P, xi, eta);
}

BoundCertificate bound_piecewise_contractive(long n, double delta, double B, double L, double R, double gamma,
                                             std::optional<double> T, double P, double xi) {
  return piecewise_shape(Certificate::PiecewiseContractive, n, delta, B, L, R, gamma, T, P, xi, std::nullopt);
}

PartitionSize multi_index_partition(double beta, double eta, double K, double L, double R, double R_x, double T,
                                    long n) {
  check_nonneg(beta, "beta");
  check_pos(eta, "eta");
  check_pos(K, "K");
  check_nonneg(L, "L");
  check_pos(R, "R");
  check_pos(R_x, "R_x");
  check_n(n);
  const double inv_kappa = 12.0 * beta * eta * K * L * R_x * T * dn(n);
  if (inv_kappa <= 0.0) return {std::numeric_limits<double>::infinity(), 1.0};
  return {1.0 / inv_kappa, std::max(1.0, snapped_ceil(2.0 * R * R_x * inv_kappa))};
}

PartitionSize soft_kmeans_partition(int K, double zeta, double R, double eta, double T, long n) {
  const SoftKMeansConstants c = soft_kmeans_constants(K, zeta, R);
  check_pos(eta, "eta");
  check_n(n);
  const double inv_kappa = 12.0 * (c.beta + c.beta_prime) * eta * std::sqrt(static_cast<double>(K)) * c.L * T * dn(n);
  if (inv_kappa <= 0.0) return {std::numeric_limits<double>::infinity(), 1.0};
  return {1.0 / inv_kappa, std::max(1.0, snapped_ceil(2.0 * R * inv_kappa))};
}

BoundCertificate bound_multi_index(long n, double delta, double B, double L, double R, double R_x, int K, int Q,
                                   double beta, double eta, double lambda) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  check_pos(L, "L");
  check_pos(R, "R");
  check_pos(R_x, "R_x");
  require(K >= 1 && Q >= 1, "K and Q must be positive integers");
  check_nonneg(beta, "beta");
  check_pos(lambda, "lambda");
  check_pos(eta, "eta");
  require(eta < 2.0 / lambda, "eta must lie in (0, 2/lambda)");
  std::vector<std::string> flags;
  const double gamma = std::abs(1.0 - eta * lambda);
  if (gamma == 0.0) flags.push_back("gamma_zero_instant_contraction");
  const double T = horizon(3.0 * L * R * dn(n), gamma);
  const PartitionSize part = multi_index_partition(beta, eta, K, L, R, R_x, T, n);
  const double log_card = T * (std::log(dn(n)) + K * std::log(part.P) + std::log(static_cast<double>(Q)));

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.L = L;
  in.R = R;
  in.R_x = R_x;
  in.K = K;
  in.Q = Q;
  in.beta = beta;
  in.eta = eta;
  in.lambda = lambda;
  in.gamma = gamma;
  in.T = T;
  in.kappa = part.kappa;
  in.P = part.P;
  in.log_cover_cardinality = log_card;

  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(B, log_card, delta, n);
  return finish(Certificate::MultiIndex, std::move(in), parts, std::move(flags));
}

double soft_kmeans_gamma(int K, double zeta, double R, double eta) {
  const SoftKMeansConstants c = soft_kmeans_constants(K, zeta, R);
  const double Kd = static_cast<double>(K);
  const double damp = std::exp(-zeta * c.B);
  require(eta > 0.0 && eta < Kd * damp, "eta must lie in (0, K exp(-zeta B))");
  const double radicand = 1.0 - 4.0 * eta * damp / Kd + 4.0 * eta * eta / (Kd * Kd);
  return std::sqrt(std::max(radicand, 0.0));
}

BoundCertificate bound_soft_kmeans(long n, double delta, int K, double R, double zeta, double eta) {
  check_n(n);
  check_delta(delta);
  const SoftKMeansConstants c = soft_kmeans_constants(K, zeta, R);
  const double gamma = soft_kmeans_gamma(K, zeta, R, eta);
  std::vector<std::string> flags;
  if (gamma == 0.0) flags.push_back("gamma_zero_instant_contraction");
  // γ² = 1 − u with u as small as e^{−2ζB}, so log(1/γ) goes through log1p.
  const double Kd = static_cast<double>(K);
  const double u = 4.0 * eta * std::exp(-zeta * c.B) / Kd - 4.0 * eta * eta / (Kd * Kd);
  const double T = gamma == 0.0 ? 0.0 : horizon_log(3.0 * c.L * R * dn(n), -0.5 * std::log1p(-u));
  const PartitionSize part = soft_kmeans_partition(K, zeta, R, eta, T, n);
  const double log_card = T * (std::log(dn(n)) + K * std::log(part.P));

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.K = K;
  in.R = R;
  in.zeta = zeta;
  in.eta = eta;
  in.B = c.B;
  in.L = c.L;
  in.beta = c.beta;
  in.gamma = gamma;
  in.T = T;
  in.kappa = part.kappa;
  in.P = part.P;
  in.log_cover_cardinality = log_card;

  BoundComponents parts;
  parts.sample_dependency_term = c.B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(c.B, log_card, delta, n);
  return finish(Certificate::SoftKMeans, std::move(in), parts, std::move(flags));
}

BoundCertificate bound_hard_kmeans(long n, double delta, int K, double R, double eta) {
  check_n(n);
  check_delta(delta);
  require(K >= 1, "K must be a positive integer");
  check_pos(R, "R");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  std::vector<std::string> flags;
  const double B = 4.0 * R * R;
  const double gamma = std::abs(1.0 - 2.0 * eta);
  if (gamma == 0.0) flags.push_back("gamma_zero_instant_contraction");
  const double Kd = static_cast<double>(K);
  const double T = horizon(16.0 * std::sqrt(Kd) * R * R * dn(n), gamma);
  const double log_card = Kd * T * std::log(2.0 * dn(n));

  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.K = K;
  in.R = R;
  in.eta = eta;
  in.B = B;
  in.L = 4.0 * R;
  in.gamma = gamma;
  in.T = T;
  in.epsilon = 1.0 / (8.0 * R * dn(n));
  in.log_cover_cardinality = log_card;
  in.cover_cardinality = std::pow(2.0 * dn(n), Kd * T);
  if (!std::isfinite(*in.cover_cardinality)) in.cover_cardinality.reset();

  BoundComponents parts;
  parts.sample_dependency_term = B * Kd * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  parts.concentration_term = concentration(B, log_card, delta, n);
  return finish(Certificate::HardKMeans, std::move(in), parts, std::move(flags));
}

BoundCertificate bound_master_covering_log(long n, double delta, double B, double L, double T,
                                           double log_cover_cardinality, double epsilon) {
  check_n(n);
  check_delta(delta);
  check_nonneg(B, "B");
  check_nonneg(L, "L");
  require(T >= 0.0 && std::isfinite(T), "T must be nonnegative");
  check_nonneg(log_cover_cardinality, "log cover cardinality");
  check_nonneg(epsilon, "epsilon");
  BoundInputs in;
  in.n = dn(n);
  in.delta = delta;
  in.B = B;
  in.L = L;
  in.T = T;
  in.epsilon = epsilon;
  in.log_cover_cardinality = log_cover_cardinality;
  const double card = std::exp(log_cover_cardinality);
  if (std::isfinite(card)) in.cover_cardinality = card;
  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.concentration_term = concentration(B, log_cover_cardinality, delta, n);
  parts.covering_slack_term = 2.0 * L * epsilon;
  return finish(Certificate::MasterCovering, std::move(in), parts);
}

BoundCertificate bound_master_covering(long n, double delta, double B, double L, double T, double cover_cardinality,
                                       double epsilon) {
  require(cover_cardinality >= 1.0, "cover cardinality must be at least 1");
  BoundCertificate cert = bound_master_covering_log(n, delta, B, L, T, std::log(cover_cardinality), epsilon);
  cert.inputs.cover_cardinality = cover_cardinality;
  return cert;
}

BoundCertificate bound_expectation(long n, double B, double T, Certificate variant, double C) {
  check_n(n);
  check_nonneg(B, "B");
  require(T >= 0.0 && std::floor(T) == T, "T must be a nonnegative integer");
  check_pos(C, "C");
  BoundInputs in;
  in.n = dn(n);
  in.B = B;
  in.T = T;
  BoundComponents parts;
  parts.sample_dependency_term = B * T / dn(n);
  parts.covering_slack_term = 1.0 / dn(n);
  switch (variant) {
    case Certificate::ExpectedGap: break;
    case Certificate::ExpectedUniformGap:
      in.C = C;
      parts.concentration_term = C * B * std::sqrt(T * std::log(dn(n)) / dn(n));
      break;
    case Certificate::ExpectedAbsoluteGap:
      in.C = C;
      parts.concentration_term = C * B * std::sqrt(1.0 / dn(n));
      break;
    default:
      throw InvalidArgument("bound_expectation: variant must be expected_gap, expected_uniform_gap or "
                            "expected_absolute_gap");
  }
  return finish(variant, std::move(in), parts);
}

}  // namespace locov
