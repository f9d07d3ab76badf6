#include "locov/cli.hpp"

#include "locov/bounds.hpp"
#include "locov/cover.hpp"
#include "locov/experiments.hpp"
#include "locov/serialize.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace locov {

namespace {

constexpr const char* kVersion = "0.1.0";

enum class Kind { Int, Num, Str, NumList, IntList, Flag };

struct FieldSpec {
  const char* key;
  Kind kind;
  const char* help;
};

const std::vector<FieldSpec> kCommonFields = {
    {"seed", Kind::Int, "random seed (default 0)"},
    {"threads", Kind::Int, "worker threads, 0 = hardware concurrency"},
    {"format", Kind::Str, "json | csv | text (default json)"},
    {"output", Kind::Str, "write to this file instead of stdout"},
    {"cap", Kind::Int, "enumeration cap (default $LOCOV_COVER_CAP or 10000000)"},
};

const std::vector<FieldSpec> kFamilyFields = {
    {"family", Kind::Str, "quadratic_centers | multi_index | soft_kmeans | hard_kmeans | stability_1d"},
    {"n", Kind::Int, "number of samples"},
    {"d", Kind::Int, "dimension (per block)"},
    {"R", Kind::Num, "domain radius"},
    {"K", Kind::Int, "blocks / clusters"},
    {"zeta", Kind::Num, "soft-assignment sharpness"},
    {"R_x", Kind::Num, "input radius (multi_index)"},
    {"lambda", Kind::Num, "l2 regularization (multi_index)"},
    {"link", Kind::Str, "zero | least_squares | svm_softplus (multi_index)"},
    {"tie_rule", Kind::Str, "lowest_index | random_singleton | full_set (hard_kmeans)"},
};

std::vector<FieldSpec> with_family(std::vector<FieldSpec> extra) {
  std::vector<FieldSpec> all = kFamilyFields;
  all.insert(all.end(), extra.begin(), extra.end());
  return all;
}

const std::map<std::string, std::vector<FieldSpec>>& command_fields() {
  static const std::map<std::string, std::vector<FieldSpec>> table = {
      {"contract", with_family({{"eta", Kind::Num, "step size"},
                                {"steps", Kind::Int, "coupled steps per pair"},
                                {"pairs", Kind::Int, "random starting pairs"},
                                {"batch_size", Kind::Int, "mini-batch size"},
                                {"unprojected", Kind::Flag, "skip the projection (whole-space dynamics)"}})},
      {"cover", with_family({{"eta", Kind::Num, "step size"},
                             {"T", Kind::Int, "horizon (default from the cover radius)"},
                             {"epsilon", Kind::Num, "cover radius (default 1/(2Ln))"},
                             {"gamma", Kind::Num, "contraction factor when the family has no (alpha, beta)"},
                             {"dedup", Kind::Flag, "drop coincident points"},
                             {"verify", Kind::Int, "random trajectories to check against the cover"},
                             {"extra_steps", Kind::Int, "trajectory length band above T"}})},
      {"approx", {{"function", Kind::Str, "sin_cos | quadratic"},
                  {"d", Kind::Int, "dimension (quadratic only)"},
                  {"xi", Kind::Num, "gradient error target"},
                  {"beta", Kind::Num, "surrogate curvature"},
                  {"R", Kind::Num, "ball radius"},
                  {"grid", Kind::Int, "check grid points per axis"}}},
      {"bound", {{"theorem", Kind::Str, "certificate name"},
                 {"n", Kind::Int, "sample size"},
                 {"delta", Kind::Num, "failure probability"},
                 {"B", Kind::Num, "bounded deviation"},
                 {"L", Kind::Num, "weak Lipschitz constant"},
                 {"R", Kind::Num, "domain radius"},
                 {"gamma", Kind::Num, "contraction factor"},
                 {"T", Kind::Int, "horizon / steps"},
                 {"P", Kind::Num, "pieces per sample"},
                 {"Q", Kind::Int, "smooth pieces of the link"},
                 {"K", Kind::Int, "indices / clusters"},
                 {"xi", Kind::Num, "approximation error"},
                 {"eta", Kind::Num, "step size"},
                 {"epsilon", Kind::Num, "cover radius"},
                 {"cover_cardinality", Kind::Num, "cover size"},
                 {"C", Kind::Num, "absolute constant of the expectation bounds"},
                 {"d_H", Kind::Num, "Hausdorff dimension"},
                 {"R_x", Kind::Num, "input radius"},
                 {"beta", Kind::Num, "link smoothness"},
                 {"lambda", Kind::Num, "l2 regularization"},
                 {"zeta", Kind::Num, "soft-assignment sharpness"}}},
      {"gap", with_family({{"eta", Kind::Num, "step size"},
                           {"steps", Kind::Int, "SGD steps"},
                           {"m", Kind::Int, "Monte Carlo draws"},
                           {"monte_carlo", Kind::Flag, "estimate F by sampling even for finite support"}})},
      {"validate", with_family({{"eta", Kind::Num, "step size"},
                                {"delta", Kind::Num, "failure probability"},
                                {"resamplings", Kind::Int, "datasets drawn"},
                                {"trials", Kind::Int, "trajectories per dataset"},
                                {"extra_steps", Kind::Int, "trajectory length band above T"},
                                {"scale", Kind::Num, "multiply the certificate (negative control < 1)"}})},
      {"kmeans", {{"mode", Kind::Str, "soft | hard"},
                  {"n", Kind::Int, "samples"},
                  {"K", Kind::Int, "clusters"},
                  {"d", Kind::Int, "dimension"},
                  {"R", Kind::Num, "data radius"},
                  {"zeta", Kind::Num, "soft-assignment sharpness"},
                  {"eta", Kind::Num, "step size of the certificate"},
                  {"delta", Kind::Num, "failure probability"},
                  {"steps", Kind::Int, "SGD steps (hard mode)"},
                  {"max_iter", Kind::Int, "EM iterations (soft mode)"}}},
      {"stability", {{"eta", Kind::Num, "step size"},
                     {"inits", Kind::Int, "random initializations"},
                     {"steps", Kind::Int, "SGD steps"},
                     {"n", Kind::Int, "dataset size"}}},
      {"ifs", {{"maps", Kind::Int, "number of maps"},
               {"gamma", Kind::Num, "contraction ratio"},
               {"R", Kind::Num, "domain radius"},
               {"points", Kind::Int, "attractor sample size"},
               {"levels", Kind::Int, "finest box level"},
               {"n", Kind::Int, "sample size for the certificate"},
               {"delta", Kind::Num, "failure probability"},
               {"B", Kind::Num, "bounded deviation (default 2R^2)"},
               {"L", Kind::Num, "weak Lipschitz constant (default R)"}}},
      {"hoeffding", with_family({{"n_grid", Kind::IntList, "sample sizes, comma separated"},
                                 {"eps_fractions", Kind::NumList, "deviations as fractions of B"},
                                 {"resamplings", Kind::Int, "resamplings per grid point"}})},
  };
  return table;
}

// Keys accepted from a config file but with no flag form.
const std::set<std::string> kConfigOnly = {"command", "family", "distribution", "centers", "theta"};

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

// --- typed access to the merged configuration --------------------------------

const Json* find(const Json& c, const std::string& key) {
  auto it = c.find(key);
  return it == c.end() || it->is_null() ? nullptr : &*it;
}

double num(const Json& c, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const Json* v = find(c, key);
  if (!v) {
    if (fallback) return *fallback;
    throw SchemaError(key, "required field is missing");
  }
  if (!v->is_number()) throw SchemaError(key, "expected a number");
  return v->get<double>();
}

std::optional<double> maybe_num(const Json& c, const std::string& key) {
  return find(c, key) ? std::optional<double>(num(c, key)) : std::nullopt;
}

long long integer(const Json& c, const std::string& key, std::optional<long long> fallback = std::nullopt) {
  const Json* v = find(c, key);
  if (!v) {
    if (fallback) return *fallback;
    throw SchemaError(key, "required field is missing");
  }
  if (!v->is_number_integer()) throw SchemaError(key, "expected an integer");
  return v->get<long long>();
}

long long positive(const Json& c, const std::string& key, long long fallback) {
  const long long v = integer(c, key, fallback);
  if (v < 1) throw SchemaError(key, "must be a positive integer");
  return v;
}

std::string str(const Json& c, const std::string& key, std::optional<std::string> fallback = std::nullopt) {
  const Json* v = find(c, key);
  if (!v) {
    if (fallback) return *fallback;
    throw SchemaError(key, "required field is missing");
  }
  if (!v->is_string()) throw SchemaError(key, "expected a string");
  return v->get<std::string>();
}

bool flag(const Json& c, const std::string& key) {
  const Json* v = find(c, key);
  if (!v) return false;
  if (!v->is_boolean()) throw SchemaError(key, "expected true or false");
  return v->get<bool>();
}

template <class T>
std::vector<T> list(const Json& c, const std::string& key, std::vector<T> fallback) {
  const Json* v = find(c, key);
  if (!v) return fallback;
  if (!v->is_array() || v->empty()) throw SchemaError(key, "expected a nonempty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const Json& e = (*v)[i];
    const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
    if (!ok) throw SchemaError(key + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(e.get<T>());
  }
  return out;
}

Json convert(const std::string& key, Kind kind, const std::string& raw) {
  auto parse_num = [&](const std::string& s, bool integral) -> Json {
    std::size_t used = 0;
    try {
      if (integral) {
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
      } else {
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
      }
    } catch (const std::exception&) {
    }
    throw SchemaError(key, "cannot parse '" + s + "' as " + (integral ? "an integer" : "a number"));
  };
  switch (kind) {
    case Kind::Int: return parse_num(raw, true);
    case Kind::Num: return parse_num(raw, false);
    case Kind::Str: return raw;
    case Kind::Flag: return true;
    case Kind::NumList:
    case Kind::IntList: {
      Json arr = Json::array();
      std::stringstream ss(raw);
      std::string part;
      while (std::getline(ss, part, ',')) arr.push_back(parse_num(part, kind == Kind::IntList));
      return arr;
    }
  }
  return raw;
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("config", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    Json j = Json::parse(text);
    if (!j.is_object()) throw SchemaError("config", "top level must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw SchemaError("config", path + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

std::uint64_t default_cap() {
  if (const char* env = std::getenv("LOCOV_COVER_CAP")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
    }
  }
  return kDefaultCoverCap;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// --- shared problem setup --------------------------------------------------------

struct Context {
  Json cfg;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::uint64_t cap = kDefaultCoverCap;
};

struct Problem {
  LossFamily family;
  Distribution mu;
  Dataset data;
};

std::vector<Vec> random_centers(std::size_t count, int d, double R, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xce17e5ULL);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(uniform_in_ball(rng, d, R));
  return out;
}

LossFamily family_of_centers(const std::vector<Vec>& centers, double R) {
  try {
    return quadratic_centers(centers, R);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError("centers", e.what());
  }
}

Certificate certificate_named(const std::string& name) {
  try {
    return parse_certificate(name);
  } catch (const Error& e) {
    throw SchemaError("theorem", e.what());
  }
}

// `centers_are_data`: the dataset is the list of centers itself (cover and
// contraction runs); otherwise n samples are drawn from μ.
Problem make_problem(const Context& ctx, bool centers_are_data, long long default_n) {
  const Json& c = ctx.cfg;
  const long long n = positive(c, "n", default_n);
  std::optional<LossFamily> family;
  std::string name;
  bool data_from_centers = false;

  if (const Json* f = find(c, "family"); f && f->is_object()) {
    family = family_from_json(*f);
    name = family->name();
  } else {
    name = str(c, "family", std::string("quadratic_centers"));
    const int d = static_cast<int>(positive(c, "d", name == "multi_index" ? 2 : 1));
    const double R = num(c, "R", 1.0);
    if (name == "quadratic_centers") {
      std::vector<Vec> centers;
      const Json* spec = find(c, "centers");
      if (spec && spec->is_array()) {
        for (std::size_t i = 0; i < spec->size(); ++i)
          centers.push_back(vec_from_json((*spec)[i], "centers[" + std::to_string(i) + "]"));
      } else if (spec) {
        centers = random_centers(static_cast<std::size_t>(positive(c, "centers", 1)), d, R, ctx.seed);
      } else if (centers_are_data) {
        centers = random_centers(static_cast<std::size_t>(n), d, R, ctx.seed);
        data_from_centers = true;
      } else if (d == 1) {
        centers = {Vec::Constant(1, -R), Vec::Constant(1, R)};
      } else {
        centers = random_centers(4, d, R, ctx.seed);
      }
      family = family_of_centers(centers, R);
    } else {
      Json desc = {{"name", name}};
      for (const char* key : {"K", "zeta", "R_x", "lambda", "link", "tie_rule"})
        if (const Json* v = find(c, key)) desc[key] = *v;
      desc["d"] = d;
      desc["R"] = R;
      if (!desc.contains("K")) desc["K"] = 2;
      if (name == "soft_kmeans" && !desc.contains("zeta")) desc["zeta"] = 1.0;
      if (name == "multi_index" && !desc.contains("R_x")) desc["R_x"] = 1.0;
      family = family_from_json(desc, "family");
    }
  }

  std::optional<Distribution> mu;
  if (const Json* dj = find(c, "distribution")) {
    mu = distribution_from_json(*dj, *family);
  } else if (family->natural_distribution()) {
    mu = *family->natural_distribution();
  } else {
    const auto& k = family->constants();
    const int block = family->dim() / k.K.value_or(1);
    if (family->name() == "multi_index")
      mu = Distribution::labeled_uniform_ball(block, *k.R_x, *k.K >= 2 ? *k.K : 1);
    else
      mu = Distribution::uniform_ball(block, *k.R);
  }

  Dataset data;
  if (data_from_centers && mu->support()) {
    std::vector<Sample> samples;
    for (const auto& atom : mu->support()->atoms) samples.push_back(atom);
    data = Dataset::from_samples(std::move(samples));
    data.generator = *mu;
  } else {
    data = Dataset::draw(*mu, static_cast<std::size_t>(n), ctx.seed);
  }
  for (const auto& z : data.samples) family->check_sample(z);
  return {*family, *mu, std::move(data)};
}

struct Outcome {
  Json result;
  int exit_code = 0;
  std::optional<std::string> csv;
  std::optional<std::string> jsonl;  // replaces the JSON document
  std::optional<std::string> table;  // extra human-readable block
};

// --- commands --------------------------------------------------------------------

Outcome cmd_contract(const Context& ctx) {
  const Json& c = ctx.cfg;
  const Problem p = make_problem(ctx, true, 3);
  const double eta = num(c, "eta", 0.5);
  const auto steps = static_cast<std::size_t>(positive(c, "steps", 100));
  const auto pairs = static_cast<std::size_t>(positive(c, "pairs", 100));
  const auto batch = static_cast<std::size_t>(positive(c, "batch_size", 1));
  const bool unprojected = flag(c, "unprojected");
  const UpdateMap map = UpdateMap::sgd(p.family, eta, unprojected ? std::optional<bool>(false) : std::nullopt);

  std::optional<double> gamma;
  const auto& k = p.family.constants();
  if (k.alpha && k.beta && *k.alpha > 0.0 && eta > 0.0 && eta < 2.0 / *k.beta)
    gamma = contraction_factor(*k.alpha, *k.beta, eta);

  std::vector<CouplingReport> reports(pairs);
  parallel_for(pairs, ctx.threads, [&](std::size_t j) {
    Rng rng = make_rng(ctx.seed, j);
    const Vec a = uniform_in_domain(rng, map.domain());
    Vec b = uniform_in_domain(rng, map.domain());
    while ((a - b).norm() == 0.0) b = uniform_in_domain(rng, map.domain());
    std::uniform_int_distribution<std::size_t> pick(0, p.data.size() - 1);
    std::vector<std::size_t> idx(steps * batch);
    for (auto& i : idx) i = pick(rng);
    reports[j] = coupled_contraction_ratio(map, a, b, idx, p.data, batch);
  });

  // Ratios of pairs closer than 1e-6 of the domain scale carry rounding
  // error above the 1e-9 tolerance and are not checked.
  double worst = 0.0;
  RunningStats mean;
  std::size_t coalesced = 0, checked = 0;
  for (const auto& r : reports) {
    coalesced += r.coalesced;
    for (std::size_t s = 0; s < r.ratios.size(); ++s) {
      if (r.distances[s] < 1e-6 * r.scale) continue;
      worst = std::max(worst, r.ratios[s]);
      mean.add(r.ratios[s]);
      ++checked;
    }
  }
  const bool pass = !gamma || worst <= *gamma + 1e-9;
  Outcome o;
  o.result = {{"family", p.family.name()},
              {"eta", eta},
              {"gamma", gamma ? Json(*gamma) : Json(nullptr)},
              {"max_ratio", worst},
              {"mean_ratio", mean.mean()},
              {"pairs", pairs},
              {"steps", steps},
              {"batch_size", batch},
              {"ratios_checked", checked},
              {"projected", map.projects()},
              {"coalesced_pairs", coalesced},
              {"pass", pass}};
  o.exit_code = pass ? 0 : 1;
  return o;
}

Outcome cmd_cover(const Context& ctx) {
  const Json& c = ctx.cfg;
  const Problem p = make_problem(ctx, true, 3);
  const double eta = num(c, "eta", 0.5);
  const UpdateMap map = UpdateMap::sgd(p.family, eta);
  const auto& k = p.family.constants();
  const double n = static_cast<double>(p.data.size());
  const double L = k.L.value_or(1.0);
  const double epsilon = num(c, "epsilon", 1.0 / (2.0 * L * n));
  std::size_t T;
  std::optional<double> gamma = maybe_num(c, "gamma");
  if (!gamma && k.alpha && k.beta && *k.alpha > 0.0 && eta < 2.0 / *k.beta)
    gamma = contraction_factor(*k.alpha, *k.beta, eta);
  if (find(c, "T")) {
    const long long t = integer(c, "T");
    if (t < 0) throw SchemaError("T", "must be nonnegative");
    T = static_cast<std::size_t>(t);
  } else {
    if (!gamma) throw SchemaError("T", "required when the contraction factor is unknown (give T or gamma)");
    const auto R = map.domain().enclosing_radius();
    if (!R) throw SchemaError("T", "required for an unbounded domain");
    T = cover_horizon(*R, epsilon, *gamma);
  }

  CoverOptions opt;
  opt.cap = ctx.cap;
  opt.threads = ctx.threads;
  opt.deduplicate = flag(c, "dedup");
  opt.epsilon = epsilon;
  const CoverSet cover = enumerate_cover(map, p.data, T, opt);

  Outcome o;
  o.result = {{"family", p.family.name()},
              {"eta", eta},
              {"gamma", gamma ? Json(*gamma) : Json(nullptr)},
              {"epsilon", epsilon},
              {"T", T},
              {"entries", cover.size()}};
  const long long verify = integer(c, "verify", 0);
  if (verify < 0) throw SchemaError("verify", "must be nonnegative");
  if (verify > 0) {
    VerifyOptions vo;
    vo.trials = static_cast<std::size_t>(verify);
    vo.max_extra_steps = static_cast<std::size_t>(integer(c, "extra_steps", 50));
    vo.epsilon = epsilon;
    vo.seed = ctx.seed;
    vo.threads = ctx.threads;
    const CoverVerification v = verify_cover(cover, map, p.data, vo);
    o.result["verification"] = to_json(v);
    o.exit_code = v.pass ? 0 : 1;
  }
  std::ostringstream lines;
  write_cover_jsonl(lines, cover, Json::object());
  o.jsonl = lines.str();
  return o;
}

PiecewiseSmoothFunction named_function(const std::string& name, int d) {
  PiecewiseSmoothFunction f;
  f.count = 1;
  f.piece_of = [](const Vec&) { return 0; };
  if (name == "sin_cos") {
    f.dim = 2;
    f.beta_prime = 1.0;
    f.value = [](int, const Vec& t) { return std::sin(t[0]) + std::cos(t[1]); };
    f.gradient = [](int, const Vec& t) -> Vec {
      Vec g(2);
      g << std::cos(t[0]), -std::sin(t[1]);
      return g;
    };
    return f;
  }
  if (name == "quadratic") {
    f.dim = d;
    f.beta_prime = 1.0;
    f.value = [](int, const Vec& t) { return 0.5 * t.squaredNorm(); };
    f.gradient = [](int, const Vec& t) -> Vec { return t; };
    return f;
  }
  throw SchemaError("function", "unknown function '" + name + "' (sin_cos, quadratic)");
}

Outcome cmd_approx(const Context& ctx) {
  const Json& c = ctx.cfg;
  const std::string name = str(c, "function", std::string("sin_cos"));
  const PiecewiseSmoothFunction f = named_function(name, static_cast<int>(positive(c, "d", 2)));
  const double xi = num(c, "xi", 0.5);
  const double beta = num(c, "beta", 1.0);
  const double R = num(c, "R", 1.0);
  const auto grid = static_cast<std::size_t>(positive(c, "grid", 200));
  const ConvexDomain domain = ConvexDomain::ball(f.dim, R);
  const PiecewiseQuadraticApprox a = build_piecewise_approx(f, domain, xi, beta, ctx.cap);
  const std::vector<Vec> pts = grid_points(domain, grid);
  const double err = max_gradient_error(a, f, pts);
  Outcome o;
  o.result = {{"function", name},
              {"d", f.dim},
              {"xi", xi},
              {"beta", beta},
              {"beta_prime", f.beta_prime},
              {"spacing", xi / (beta + f.beta_prime)},
              {"piece_count", a.piece_count()},
              {"piece_bound", a.piece_bound()},
              {"within_piece_bound", static_cast<double>(a.piece_count()) <= a.piece_bound()},
              {"grid_points", pts.size()},
              {"max_gradient_error", err},
              {"pass", err <= xi}};
  o.exit_code = err <= xi ? 0 : 1;
  return o;
}

BoundCertificate certificate_from(const Json& c) {
  const Certificate which = certificate_named(str(c, "theorem"));
  const long n = static_cast<long>(positive(c, "n", 100));
  auto delta = [&] { return num(c, "delta", 0.05); };
  auto T_opt = [&]() -> std::optional<double> {
    if (!find(c, "T")) return std::nullopt;
    return static_cast<double>(integer(c, "T"));
  };
  switch (which) {
    case Certificate::StronglyConvex:
      return bound_strongly_convex(n, delta(), num(c, "B"), num(c, "L"), num(c, "R"), num(c, "gamma"));
    case Certificate::SingleTrajectory:
      return bound_single_trajectory(n, delta(), num(c, "B"), static_cast<double>(integer(c, "T")));
    case Certificate::EarlyStopping:
      return bound_early(n, delta(), num(c, "B"), static_cast<double>(integer(c, "T")));
    case Certificate::Fractal:
      return bound_fractal(n, delta(), num(c, "B"), num(c, "L"), num(c, "R"), num(c, "gamma"), num(c, "d_H"));
    case Certificate::PiecewiseApprox:
      return bound_piecewise_approx(n, delta(), num(c, "B"), num(c, "L"), num(c, "R"), num(c, "gamma"), T_opt(),
                                    num(c, "P", 1.0), num(c, "xi"), num(c, "eta"));
    case Certificate::PiecewiseContractive:
      return bound_piecewise_contractive(n, delta(), num(c, "B"), num(c, "L"), num(c, "R"), num(c, "gamma"), T_opt(),
                                         num(c, "P", 1.0), num(c, "xi"));
    case Certificate::MultiIndex:
      return bound_multi_index(n, delta(), num(c, "B"), num(c, "L"), num(c, "R"), num(c, "R_x"),
                               static_cast<int>(integer(c, "K")), static_cast<int>(integer(c, "Q", 1)),
                               num(c, "beta"), num(c, "eta"), num(c, "lambda"));
    case Certificate::SoftKMeans:
      return bound_soft_kmeans(n, delta(), static_cast<int>(integer(c, "K")), num(c, "R"), num(c, "zeta"),
                               num(c, "eta"));
    case Certificate::HardKMeans:
      return bound_hard_kmeans(n, delta(), static_cast<int>(integer(c, "K")), num(c, "R"), num(c, "eta"));
    case Certificate::MasterCovering:
      return bound_master_covering(n, delta(), num(c, "B"), num(c, "L"), static_cast<double>(integer(c, "T")),
                                   num(c, "cover_cardinality"), num(c, "epsilon"));
    case Certificate::ExpectedGap:
    case Certificate::ExpectedUniformGap:
    case Certificate::ExpectedAbsoluteGap:
      return bound_expectation(n, num(c, "B"), static_cast<double>(integer(c, "T")), which, num(c, "C", 1.0));
  }
  throw SchemaError("theorem", "unsupported certificate");
}

std::string component_table(const BoundCertificate& cert) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "certificate " << to_string(cert.theorem) << "\n";
  auto row = [&](const char* name, const std::optional<double>& v) {
    os << "  " << std::left << std::setw(24) << name;
    if (v) os << *v;
    else os << "-";
    os << "\n";
  };
  row("sample_dependency_term", cert.components.sample_dependency_term);
  row("concentration_term", cert.components.concentration_term);
  row("covering_slack_term", cert.components.covering_slack_term);
  row("approximation_term", cert.components.approximation_term);
  row("total", cert.total);
  return os.str();
}

Outcome cmd_bound(const Context& ctx) {
  const BoundCertificate cert = certificate_from(ctx.cfg);
  Outcome o;
  o.result = to_json(cert);
  o.csv = certificate_csv(cert);
  o.table = component_table(cert);
  return o;
}

Outcome cmd_gap(const Context& ctx) {
  const Json& c = ctx.cfg;
  const Problem p = make_problem(ctx, false, 100);
  const double eta = num(c, "eta", 0.5);
  const UpdateMap map = UpdateMap::sgd(p.family, eta);
  SGDConfig cfg;
  Rng rng = make_rng(ctx.seed, 3);
  cfg.init = uniform_in_domain(rng, map.domain());
  cfg.steps = static_cast<std::size_t>(integer(c, "steps", 100));
  cfg.index_source = IndexSource::of(Sampling::Uniform);
  cfg.seed = ctx.seed;
  const Trajectory tr = run_trajectory(map, cfg, p.data);
  const GapEstimate g = estimate_gap(p.family, p.data, tr, static_cast<std::size_t>(positive(c, "m", 100000)),
                                     ctx.seed, p.mu, flag(c, "monte_carlo"));
  Outcome o;
  o.result = to_json(g);
  o.result["family"] = p.family.name();
  o.result["endpoint"] = to_json(tr.final_point());
  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  o.csv = csv.str();
  return o;
}

Outcome cmd_validate(const Context& ctx) {
  const Json& c = ctx.cfg;
  const Problem p = make_problem(ctx, false, 200);
  const double eta = num(c, "eta", 0.5);
  const auto& k = p.family.constants();
  if (!(k.alpha && k.beta && k.B && k.L && *k.alpha > 0.0))
    throw SchemaError("family", "family '" + p.family.name() + "' lacks the constants of the strongly convex certificate");
  const double gamma = contraction_factor(*k.alpha, *k.beta, eta);
  const auto R = p.family.domain().enclosing_radius();
  if (!R) throw SchemaError("family", "validation needs a bounded domain");
  const long n = static_cast<long>(p.data.size());
  const BoundCertificate cert = bound_strongly_convex(n, num(c, "delta", 0.05), *k.B, *k.L, *R, gamma);
  ValidationScenario sc{
      .id = "strongly_convex:" + p.family.name(),
      .family = p.family,
      .mu = p.mu,
      .n = static_cast<std::size_t>(n),
      .eta = eta,
      .certificate = cert,
      .certificate_scale = num(c, "scale", 1.0),
      .resamplings = static_cast<std::size_t>(positive(c, "resamplings", 500)),
      .trials_per_dataset = static_cast<std::size_t>(positive(c, "trials", 100)),
      .extra_steps = static_cast<std::size_t>(integer(c, "extra_steps", 50)),
      .seed = ctx.seed,
      .threads = ctx.threads,
  };
  const ValidationReport r = validate_bound(sc);
  Outcome o;
  o.result = to_json(r);
  o.result["certificate"] = to_json(cert);
  o.csv = validation_csv(r);
  o.exit_code = r.pass ? 0 : 1;
  return o;
}

Outcome cmd_kmeans(const Context& ctx) {
  const Json& c = ctx.cfg;
  const std::string mode = str(c, "mode", std::string("soft"));
  const long n = static_cast<long>(positive(c, "n", 100));
  const int K = static_cast<int>(positive(c, "K", 3));
  const int d = static_cast<int>(positive(c, "d", 2));
  const double R = num(c, "R", 1.0);
  const double delta = num(c, "delta", 0.05);
  const Dataset data = Dataset::draw(Distribution::uniform_ball(d, R), static_cast<std::size_t>(n), ctx.seed);
  require(static_cast<long>(K) <= n, "need at least K samples");
  std::vector<Vec> init;
  for (int j = 0; j < K; ++j) init.push_back(data.samples[static_cast<std::size_t>(j)].x);

  Outcome o;
  if (mode == "soft") {
    const double zeta = num(c, "zeta", 1.0);
    const SoftKMeansConstants sk = soft_kmeans_constants(K, zeta, R);
    const double eta = num(c, "eta", 0.5 * K * std::exp(-zeta * sk.B));
    const EMRun run = run_em(init, data, zeta, static_cast<std::size_t>(positive(c, "max_iter", 10000)));
    const double grad = soft_kmeans_objective_gradient(run.centers, data, zeta).norm();
    const EMEquivalence eq0 = verify_em_equivalence(init, data, zeta);
    const EMEquivalence eq = verify_em_equivalence(run.centers, data, zeta);
    const BoundCertificate cert = bound_soft_kmeans(n, delta, K, R, zeta, eta);
    const bool pass = eq0.pass && eq.pass && (!run.converged || grad <= 1e-6);
    o.result = {{"mode", mode},
                {"em", {{"iterations", run.iterations},
                        {"converged", run.converged},
                        {"last_change", run.last_change},
                        {"gradient_norm", grad},
                        {"objective", eq.objective}}},
                {"equivalence_at_init", to_json(eq0)},
                {"equivalence_at_fixed_point", to_json(eq)},
                {"certificate", to_json(cert)},
                {"pass", pass}};
    o.exit_code = pass ? 0 : 1;
  } else if (mode == "hard") {
    const double eta = num(c, "eta", 0.25);
    const LossFamily family = hard_kmeans(K, R, d);
    const UpdateMap map = UpdateMap::sgd(family, eta);
    SGDConfig cfg;
    cfg.init = Vec(K * d);
    for (int j = 0; j < K; ++j) cfg.init.segment(j * d, d) = init[static_cast<std::size_t>(j)];
    cfg.steps = static_cast<std::size_t>(integer(c, "steps", 1000));
    cfg.seed = ctx.seed;
    const Trajectory tr = run_trajectory(map, cfg, data);
    bool inside = true;
    for (const auto& pt : tr.points) inside = inside && family.domain().contains(pt, 1e-9);
    if (!inside) throw Error("hard K-means iterates left Ball(0, R)^K; use eta <= 0.5");
    const BoundCertificate cert = bound_hard_kmeans(n, delta, K, R, eta);
    o.result = {{"mode", mode},
                {"sgd", {{"steps", tr.steps()},
                         {"initial_risk", empirical_risk(family, data, tr.points.front())},
                         {"final_risk", empirical_risk(family, data, tr.final_point())},
                         {"iterates_in_domain", inside}}},
                {"certificate", to_json(cert)},
                {"pass", true}};
  } else {
    throw SchemaError("mode", "expected soft or hard");
  }
  return o;
}

Outcome cmd_stability(const Context& ctx) {
  const Json& c = ctx.cfg;
  const StabilityReport r =
      stability_experiment(num(c, "eta", 1.0 / 3.0), static_cast<std::size_t>(positive(c, "inits", 10000)),
                           static_cast<std::size_t>(positive(c, "steps", 200)), ctx.seed,
                           static_cast<std::size_t>(positive(c, "n", 10)), ctx.threads);
  Outcome o;
  o.result = to_json(r);
  o.exit_code = r.separated ? 0 : 1;
  return o;
}

Outcome cmd_ifs(const Context& ctx) {
  const Json& c = ctx.cfg;
  const auto maps = static_cast<std::size_t>(positive(c, "maps", 2));
  const double gamma = num(c, "gamma", 1.0 / 3.0);
  const double R = num(c, "R", 1.0);
  std::vector<Vec> centers;
  for (std::size_t i = 0; i < maps; ++i)
    centers.push_back(Vec::Constant(1, maps == 1 ? 0.0 : -R + 2.0 * R * static_cast<double>(i) / (maps - 1)));
  const IFSModel model = IFSModel::quadratic(centers, gamma, R);
  const IFSDimension dim = ifs_dimension(model);
  const auto points = sample_attractor(model, static_cast<std::size_t>(positive(c, "points", 20000)), ctx.seed);
  const auto levels = positive(c, "levels", 7);
  if (levels < 5) throw SchemaError("levels", "must be at least 5");
  std::vector<double> scales;
  for (long long k = 2; k <= levels; ++k) scales.push_back(2.0 * R * std::pow(gamma, static_cast<double>(k)));
  const BoxCount box = box_counting_dimension(points, scales);
  const double diff = std::abs(box.estimate - dim.value);
  const BoundCertificate cert = bound_fractal(static_cast<long>(positive(c, "n", 1000)), num(c, "delta", 0.05),
                                              num(c, "B", 2.0 * R * R), num(c, "L", R), R, gamma, dim.value);
  Outcome o;
  o.result = {{"maps", maps},
              {"gamma", gamma},
              {"d_H", dim.value},
              {"certified", dim.certified},
              {"box_counting", to_json(box)},
              {"difference", diff},
              {"certificate", to_json(cert)},
              {"pass", diff <= 0.05}};
  o.exit_code = diff <= 0.05 ? 0 : 1;
  return o;
}

Outcome cmd_hoeffding(const Context& ctx) {
  const Json& c = ctx.cfg;
  const Problem p = make_problem(ctx, false, 100);
  const auto& k = p.family.constants();
  if (!k.B) throw SchemaError("family", "family has no deviation bound B");
  Vec theta = Vec::Zero(p.family.dim());
  if (const Json* t = find(c, "theta")) theta = vec_from_json(*t, "theta");
  if (theta.size() != p.family.dim()) throw SchemaError("theta", "wrong dimension");
  std::vector<double> eps;
  for (double f : list<double>(c, "eps_fractions", {0.05, 0.1, 0.2, 0.3})) eps.push_back(f * *k.B);
  const HoeffdingReport r = hoeffding_check(p.family, p.mu, theta, list<long>(c, "n_grid", {10, 50, 100, 500}), eps,
                                            static_cast<std::size_t>(positive(c, "resamplings", 10000)), ctx.seed,
                                            ctx.threads);
  Outcome o;
  o.result = to_json(r);
  o.csv = hoeffding_csv(r);
  o.exit_code = r.pass ? 0 : 1;
  return o;
}

// --- output ------------------------------------------------------------------------

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"locov: localized covers and generalization certificates for constant-step SGD"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  std::map<std::string, std::string> raw;
  std::vector<std::pair<CLI::Option*, std::pair<std::string, Kind>>> registered;
  for (const auto& f : kCommonFields)
    registered.push_back({app.add_option(flag_name(f.key), raw[f.key], f.help), {f.key, f.kind}});

  std::map<std::string, std::vector<std::pair<CLI::Option*, std::pair<std::string, Kind>>>> per_command;
  for (const auto& [name, fields] : command_fields()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " command");
    for (const auto& f : fields) {
      const std::string key = name + "/" + f.key;
      CLI::Option* o = f.kind == Kind::Flag ? sub->add_flag(flag_name(f.key), f.help)
                                            : sub->add_option(flag_name(f.key), raw[key], f.help);
      per_command[name].push_back({o, {f.key, f.kind}});
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::string command;
  try {
    Json cfg = config_path.empty() ? Json::object() : load_config(config_path);
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    if (const Json* cmd = find(cfg, "command")) {
      if (!cmd->is_string()) throw SchemaError("command", "expected a string");
      const std::string from_file = cmd->get<std::string>();
      if (!command.empty() && command != from_file)
        throw SchemaError("command", "config names '" + from_file + "' but the command line runs '" + command + "'");
      command = from_file;
    }
    if (command.empty()) {
      err << app.help() << "\nlocov: no command given\n";
      return 2;
    }
    if (!command_fields().count(command)) throw SchemaError("command", "unknown command '" + command + "'");

    for (const auto& [opt, spec] : registered)
      if (opt->count() > 0) cfg[spec.first] = convert(spec.first, spec.second, raw[spec.first]);
    for (const auto& [opt, spec] : per_command[command])
      if (opt->count() > 0) cfg[spec.first] = convert(spec.first, spec.second, raw[command + "/" + spec.first]);
    cfg["command"] = command;

    std::set<std::string> allowed(kConfigOnly);
    for (const auto& f : kCommonFields) allowed.insert(f.key);
    for (const auto& f : command_fields().at(command)) allowed.insert(f.key);
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
      if (!allowed.count(it.key())) throw SchemaError(it.key(), "not a field of command '" + command + "'");

    Context ctx;
    ctx.cfg = cfg;
    const long long seed = integer(cfg, "seed", 0);
    if (seed < 0) throw SchemaError("seed", "must be nonnegative");
    ctx.seed = static_cast<std::uint64_t>(seed);
    const long long threads = integer(cfg, "threads", 0);
    if (threads < 0) throw SchemaError("threads", "must be nonnegative");
    ctx.threads = static_cast<unsigned>(threads);
    const long long cap = integer(cfg, "cap", static_cast<long long>(default_cap()));
    if (cap < 1) throw SchemaError("cap", "must be positive");
    ctx.cap = static_cast<std::uint64_t>(cap);
    const std::string format = str(cfg, "format", std::string("json"));
    if (format != "json" && format != "csv" && format != "text")
      throw SchemaError("format", "expected json, csv or text");

    Outcome o;
    if (command == "contract") o = cmd_contract(ctx);
    else if (command == "cover") o = cmd_cover(ctx);
    else if (command == "approx") o = cmd_approx(ctx);
    else if (command == "bound") o = cmd_bound(ctx);
    else if (command == "gap") o = cmd_gap(ctx);
    else if (command == "validate") o = cmd_validate(ctx);
    else if (command == "kmeans") o = cmd_kmeans(ctx);
    else if (command == "stability") o = cmd_stability(ctx);
    else if (command == "ifs") o = cmd_ifs(ctx);
    else o = cmd_hoeffding(ctx);

    Json config_echo = cfg;
    config_echo.erase("output");
    const Json meta = {{"tool", "locov"},
                       {"version", kVersion},
                       {"command", command},
                       {"seed", ctx.seed},
                       {"config_hash", hex(fnv1a(config_echo.dump()))},
                       {"config", config_echo},
                       {"timestamp", timestamp()}};

    std::string text;
    if (o.jsonl) {
      if (format != "json") throw SchemaError("format", "covers are written as JSON lines only");
      // Replace the cover's own meta line with one carrying the run meta.
      const auto first_break = o.jsonl->find('\n');
      Json head = Json::parse(o.jsonl->substr(0, first_break));
      Json merged = meta;
      for (auto it = head["meta"].begin(); it != head["meta"].end(); ++it) merged[it.key()] = it.value();
      merged["result"] = o.result;
      text = Json{{"meta", merged}}.dump() + "\n" + o.jsonl->substr(first_break + 1);
    } else {
      const Json doc = {{"meta", meta}, {"result", o.result}};
      if (format == "json") {
        text = doc.dump(2) + "\n";
      } else if (format == "csv") {
        text = "# locov " + std::string(kVersion) + " command=" + command + " seed=" + std::to_string(ctx.seed) +
               " config_hash=" + meta["config_hash"].get<std::string>() + "\n";
        if (o.csv) {
          text += *o.csv;
        } else {
          std::vector<std::pair<std::string, std::string>> rows;
          flatten(o.result, "", rows);
          text += "key,value\n";
          for (const auto& [k, v] : rows) text += k + "," + v + "\n";
        }
      } else {
        if (o.table) text += *o.table + "\n";
        std::vector<std::pair<std::string, std::string>> rows;
        flatten(doc, "", rows);
        for (const auto& [k, v] : rows) text += k + ": " + v + "\n";
      }
    }

    if (const Json* path = find(cfg, "output")) {
      std::ofstream file(path->get<std::string>(), std::ios::binary);
      if (!file) throw SchemaError("output", "cannot open '" + path->get<std::string>() + "' for writing");
      file << text;
    } else {
      out << text;
    }
    return o.exit_code;
  } catch (const SchemaError& e) {
    err << "locov: schema error: " << e.what() << "\n";
    return 2;
  } catch (const CapExceeded& e) {
    err << "locov: " << e.what() << "; rerun with --cap " << std::fixed << std::setprecision(0)
        << static_cast<double>(e.required()) << " or more\n";
    return 2;
  } catch (const Error& e) {
    err << "locov: " << (command.empty() ? "" : command + ": ") << e.what() << "\n";
    return 2;
  }
}

}  // namespace locov
