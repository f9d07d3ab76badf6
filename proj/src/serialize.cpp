#include "locov/serialize.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace locov {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <class T>
Json array_of(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(x);
  return a;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// --- descriptor access ------------------------------------------------------

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "required field is missing");
  return *it;
}

double number(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

double number_or(const Json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

int integer(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number_integer()) throw SchemaError(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string text(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

// Library errors raised while building from a descriptor are reported
// against the descriptor itself.
template <class Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
}

}  // namespace

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json to_json(const BoundCertificate& cert) {
  const auto& in = cert.inputs;
  Json inputs = {
      {"n", opt(in.n)},         {"delta", opt(in.delta)},     {"B", opt(in.B)},
      {"L", opt(in.L)},         {"R", opt(in.R)},             {"gamma", opt(in.gamma)},
      {"T", opt(in.T)},         {"P", opt(in.P)},             {"Q", opt(in.Q)},
      {"K", opt(in.K)},         {"xi", opt(in.xi)},           {"eta", opt(in.eta)},
      {"epsilon", opt(in.epsilon)}, {"cover_cardinality", opt(in.cover_cardinality)}, {"C", opt(in.C)},
  };
  const std::pair<const char*, const std::optional<double>*> extras[] = {
      {"log_cover_cardinality", &in.log_cover_cardinality},
      {"R_x", &in.R_x},
      {"lambda", &in.lambda},
      {"beta", &in.beta},
      {"zeta", &in.zeta},
      {"d_H", &in.d_H},
      {"kappa", &in.kappa},
      {"complexity", &in.complexity},
  };
  for (const auto& [name, value] : extras)
    if (*value) inputs[name] = **value;
  const auto& c = cert.components;
  return Json{
      {"theorem", to_string(cert.theorem)},
      {"inputs", inputs},
      {"components",
       {{"sample_dependency_term", opt(c.sample_dependency_term)},
        {"concentration_term", opt(c.concentration_term)},
        {"covering_slack_term", opt(c.covering_slack_term)},
        {"approximation_term", opt(c.approximation_term)}}},
      {"total", cert.total},
      {"flags", array_of(cert.flags)},
  };
}

std::string certificate_csv(const BoundCertificate& cert) {
  const auto& c = cert.components;
  auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  return "theorem,sample_dependency_term,concentration_term,covering_slack_term,approximation_term,total\n" +
         to_string(cert.theorem) + "," + cell(c.sample_dependency_term) + "," + cell(c.concentration_term) + "," +
         cell(c.covering_slack_term) + "," + cell(c.approximation_term) + "," + fmt(cert.total) + "\n";
}

Json to_json(const GapEstimate& g) {
  return Json{
      {"empirical_risk", g.empirical_risk},
      {"population_risk", opt(g.population_risk)},
      {"gap", opt(g.gap)},
      {"mc_standard_error", g.mc_standard_error},
      {"exact", g.exact},
      {"population_available", g.population_available},
      {"m", g.m},
      {"t", g.t},
      {"seed", g.seed},
      {"indices_digest", g.indices_digest},
  };
}

Json to_json(const ValidationReport& r, bool include_rows) {
  Json j{
      {"scenario", r.scenario},
      {"resamplings", r.resamplings},
      {"violations", r.violations},
      {"violation_fraction", r.violation_fraction},
      {"certificate_total", r.certificate_total},
      {"threshold", r.threshold},
      {"delta", r.delta},
      {"max_abs_gap", r.max_abs_gap},
      {"pass", r.pass},
  };
  if (include_rows) {
    Json rows = Json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"resampling", row.resampling}, {"max_abs_gap", row.max_abs_gap}, {"violated", row.violated}});
    j["rows"] = rows;
  }
  return j;
}

std::string validation_csv(const ValidationReport& r) {
  std::string out = "resampling,max_abs_gap,threshold,violated\n";
  for (const auto& row : r.rows)
    out += std::to_string(row.resampling) + "," + fmt(row.max_abs_gap) + "," + fmt(r.threshold) + "," +
           (row.violated ? "1" : "0") + "\n";
  return out;
}

Json to_json(const EMEquivalence& e) {
  return Json{
      {"log_likelihood", e.log_likelihood},
      {"objective", e.objective},
      {"predicted", e.predicted},
      {"residual", e.residual},
      {"alternative_residual", e.alternative_residual},
      {"pass", e.pass},
  };
}

Json to_json(const StabilityReport& r) {
  return Json{
      {"eta", r.eta},
      {"inits", r.inits},
      {"steps", r.steps},
      {"n", r.n},
      {"mean_loss_all_zero", r.mean_loss_all_zero},
      {"mean_loss_one_swapped", r.mean_loss_one_swapped},
      {"se_all_zero", r.se_all_zero},
      {"se_one_swapped", r.se_one_swapped},
      {"to_one", r.to_one},
      {"to_three", r.to_three},
      {"converged_all_zero", r.converged_all_zero},
      {"converged_one_swapped", r.converged_one_swapped},
      {"basin_mismatches", r.basin_mismatches},
      {"difference", r.difference},
      {"separated", r.separated},
  };
}

Json to_json(const HoeffdingReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},
                     {"epsilon", c.epsilon},
                     {"violations", c.violations},
                     {"resamplings", c.resamplings},
                     {"rate", c.rate},
                     {"bound", c.bound},
                     {"allowance", c.allowance},
                     {"ok", c.ok}});
  return Json{{"range_width", r.range_width}, {"mean", r.mean}, {"cells", cells}, {"pass", r.pass}};
}

std::string hoeffding_csv(const HoeffdingReport& r) {
  std::string out = "n,epsilon,violations,resamplings,rate,bound,allowance,ok\n";
  for (const auto& c : r.cells)
    out += std::to_string(c.n) + "," + fmt(c.epsilon) + "," + std::to_string(c.violations) + "," +
           std::to_string(c.resamplings) + "," + fmt(c.rate) + "," + fmt(c.bound) + "," + fmt(c.allowance) + "," +
           (c.ok ? "1" : "0") + "\n";
  return out;
}

Json to_json(const CoverVerification& v) {
  return Json{{"trials", v.trials},
              {"failures", v.failures},
              {"max_distance", v.max_distance},
              {"epsilon", v.epsilon},
              {"pass", v.pass}};
}

Json to_json(const CouplingReport& c) {
  return Json{{"ratios", array_of(c.ratios)},
              {"distances", array_of(c.distances)},
              {"coalesced", c.coalesced},
              {"coalesced_at", c.coalesced_at ? Json(*c.coalesced_at) : Json(nullptr)}};
}

Json to_json(const BoxCount& b) {
  return Json{{"estimate", b.estimate},
              {"degenerate", b.degenerate},
              {"scales", array_of(b.scales)},
              {"counts", array_of(b.counts)}};
}

Json to_json(const CoverEntry& e) {
  Json j{{"seq", array_of(e.seq)}};
  if (!e.pieces.empty()) j["pieces"] = array_of(e.pieces);
  j["point"] = to_json(e.point);
  j["deps"] = array_of(e.deps);
  return j;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  require(!tr.points.empty(), "trajectory has no points");
  const auto d = tr.points.front().size();
  out << "step,index";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t s = 0; s < tr.points.size(); ++s) {
    out << s << ",";
    if (s > 0)
      for (std::size_t b = 0; b < tr.batch_size; ++b)
        out << (b ? ";" : "") << tr.indices[(s - 1) * tr.batch_size + b];
    for (Eigen::Index i = 0; i < d; ++i) out << "," << fmt(tr.points[s][i]);
    out << "\n";
  }
}

void write_cover_jsonl(std::ostream& out, const CoverSet& cover, const Json& meta) {
  Json m = meta.is_object() ? meta : Json::object();
  m["epsilon"] = cover.epsilon;
  m["T"] = cover.T;
  m["n"] = cover.n;
  m["max_pieces"] = cover.max_pieces;
  m["piecewise"] = cover.piecewise;
  m["deduplicated"] = cover.deduplicated;
  m["anchor"] = to_json(cover.anchor);
  m["entries"] = cover.entries.size();
  out << Json{{"meta", m}}.dump() << "\n";
  for (const auto& e : cover.entries) out << to_json(e).dump() << "\n";
}

CoverSet read_cover_jsonl(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "cover stream is empty");
  const Json head = Json::parse(line);
  const Json& m = field(head, "meta", "line 1");
  CoverSet cover;
  cover.epsilon = number(m, "epsilon", "meta");
  cover.T = static_cast<std::size_t>(integer(m, "T", "meta"));
  cover.n = static_cast<std::size_t>(integer(m, "n", "meta"));
  cover.max_pieces = static_cast<std::size_t>(integer(m, "max_pieces", "meta"));
  cover.piecewise = field(m, "piecewise", "meta").get<bool>();
  cover.deduplicated = field(m, "deduplicated", "meta").get<bool>();
  cover.anchor = vec_from_json(field(m, "anchor", "meta"), "meta.anchor");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    const Json j = Json::parse(line);
    CoverEntry e;
    e.seq = field(j, "seq", where).get<std::vector<std::uint32_t>>();
    if (j.contains("pieces")) e.pieces = j["pieces"].get<std::vector<std::uint32_t>>();
    e.point = vec_from_json(field(j, "point", where), where + ".point");
    e.deps = field(j, "deps", where).get<std::vector<std::uint32_t>>();
    cover.entries.push_back(std::move(e));
  }
  return cover;
}

LossFamily family_from_json(const Json& j, const std::string& path) {
  const std::string name = text(j, "name", path);
  return at_path(path, [&]() -> LossFamily {
    if (name == "quadratic_centers") {
      const Json& cs = field(j, "centers", path);
      if (!cs.is_array() || cs.empty()) throw SchemaError(path + ".centers", "expected a nonempty array of points");
      std::vector<Vec> centers;
      for (std::size_t i = 0; i < cs.size(); ++i)
        centers.push_back(vec_from_json(cs[i], path + ".centers[" + std::to_string(i) + "]"));
      return quadratic_centers(centers, number(j, "R", path));
    }
    if (name == "multi_index") {
      const int K = integer(j, "K", path);
      const double R = number(j, "R", path);
      const double R_x = number(j, "R_x", path);
      const std::string link_name = j.contains("link") ? text(j, "link", path) : "zero";
      Link link;
      if (link_name == "zero") link = zero_link(K);
      else if (link_name == "least_squares") link = least_squares_link();
      else if (link_name == "svm_softplus") link = svm_softplus_link(K, R, R_x);
      else throw SchemaError(path + ".link", "unknown link '" + link_name + "' (zero, least_squares, svm_softplus)");
      return multi_index(link, number_or(j, "lambda", path, 0.0), R, R_x, K, integer(j, "d", path));
    }
    if (name == "soft_kmeans")
      return soft_kmeans(integer(j, "K", path), number(j, "zeta", path), number(j, "R", path), integer(j, "d", path));
    if (name == "hard_kmeans") {
      const TieRule rule = j.contains("tie_rule") ? parse_tie_rule(text(j, "tie_rule", path)) : TieRule::LowestIndex;
      return hard_kmeans(integer(j, "K", path), number(j, "R", path), integer(j, "d", path), rule);
    }
    if (name == "stability_1d") return stability_counterexample_1d();
    throw SchemaError(path + ".name", "unknown family '" + name +
                                          "' (quadratic_centers, multi_index, soft_kmeans, hard_kmeans, stability_1d)");
  });
}

Distribution distribution_from_json(const Json& j, const LossFamily& family, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  return at_path(path, [&]() -> Distribution {
    if (kind == "natural") {
      if (!family.natural_distribution())
        throw SchemaError(path + ".kind", "family '" + family.name() + "' has no natural distribution");
      return *family.natural_distribution();
    }
    if (kind == "finite_support") {
      const Json& atoms = field(j, "atoms", path);
      if (!atoms.is_array() || atoms.empty()) throw SchemaError(path + ".atoms", "expected a nonempty array");
      std::vector<Sample> samples;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string where = path + ".atoms[" + std::to_string(i) + "]";
        if (atoms[i].is_array()) {
          samples.push_back({vec_from_json(atoms[i], where), 0.0});
        } else {
          samples.push_back({vec_from_json(field(atoms[i], "x", where), where + ".x"), number_or(atoms[i], "y", where, 0.0)});
        }
      }
      std::vector<double> weights;
      if (j.contains("weights")) {
        const Vec w = vec_from_json(j["weights"], path + ".weights");
        weights.assign(w.data(), w.data() + w.size());
      }
      return Distribution::finite_support(std::move(samples), std::move(weights));
    }
    if (kind == "uniform_ball") return Distribution::uniform_ball(integer(j, "dim", path), number(j, "radius", path));
    if (kind == "labeled_uniform_ball")
      return Distribution::labeled_uniform_ball(integer(j, "dim", path), number(j, "radius", path),
                                                integer(j, "labels", path));
    throw SchemaError(path + ".kind",
                      "unknown distribution '" + kind + "' (natural, finite_support, uniform_ball, labeled_uniform_ball)");
  });
}

}  // namespace locov
