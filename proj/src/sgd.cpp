#include "locov/sgd.hpp"

#include <numeric>

namespace locov {

UpdateMap UpdateMap::sgd(LossFamily family, double eta, std::optional<bool> project) {
  require(eta > 0.0 && std::isfinite(eta), "step size must be positive and finite");
  UpdateMap m("sgd:" + family.name(), family.domain());
  m.project_ = project.value_or(family.project_iterates());
  m.eta_ = eta;
  m.family_ = std::move(family);
  return m;
}

UpdateMap UpdateMap::custom(std::string name, ConvexDomain domain, CustomFn g) {
  require(static_cast<bool>(g), "custom update map needs a function");
  UpdateMap m(std::move(name), std::move(domain));
  m.custom_ = std::move(g);
  return m;
}

Vec UpdateMap::raw(const Vec& theta, const Sample& z) const {
  if (custom_) return custom_(theta, z);
  return theta - *eta_ * family_->gradient(theta, z);
}

Vec UpdateMap::apply(const Vec& theta, const Sample& z) const {
  if (theta.size() != dim()) throw DimensionMismatch("update map", dim(), theta.size());
  Vec out = raw(theta, z);
  if (out.size() != dim()) throw DimensionMismatch("update map output", dim(), out.size());
  return project_ ? domain_.project(out) : out;
}

Vec UpdateMap::apply_batch(const Vec& theta, const std::vector<const Sample*>& batch) const {
  require(!batch.empty(), "mini-batch must not be empty");
  if (batch.size() == 1) return apply(theta, *batch.front());
  if (theta.size() != dim()) throw DimensionMismatch("update map", dim(), theta.size());
  Vec sum = Vec::Zero(dim());
  for (const Sample* z : batch) sum += raw(theta, *z);
  Vec out = sum / static_cast<double>(batch.size());
  return project_ ? domain_.project(out) : out;
}

namespace {

void check_index(std::size_t i, const Dataset& dataset) {
  if (i >= dataset.size())
    throw InvalidArgument("sample index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(dataset.size()) + ")");
}

void check_finite_step(const Vec& v) {
  if (!v.allFinite()) throw InvalidArgument("update produced a non-finite point");
}

Vec step_batch(const UpdateMap& map, const Vec& theta, const std::size_t* idx, std::size_t batch,
               const Dataset& dataset) {
  Vec out;
  if (batch == 1) {
    check_index(idx[0], dataset);
    out = map.apply(theta, dataset.samples[idx[0]]);
  } else {
    std::vector<const Sample*> zs;
    zs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      check_index(idx[b], dataset);
      zs.push_back(&dataset.samples[idx[b]]);
    }
    out = map.apply_batch(theta, zs);
  }
  check_finite_step(out);
  return out;
}

}  // namespace

Vec sgd_step(const UpdateMap& map, const Vec& theta, std::size_t sample_index, const Dataset& dataset) {
  return step_batch(map, theta, &sample_index, 1, dataset);
}

Sampling parse_sampling(const std::string& name) {
  if (name == "explicit") return Sampling::Explicit;
  if (name == "uniform") return Sampling::Uniform;
  if (name == "without_replacement") return Sampling::WithoutReplacement;
  if (name == "shuffle") return Sampling::Shuffle;
  throw InvalidArgument("unknown sampling scheme '" + name +
                        "' (expected explicit, uniform, without_replacement, shuffle)");
}

std::string to_string(Sampling s) {
  switch (s) {
    case Sampling::Explicit: return "explicit";
    case Sampling::Uniform: return "uniform";
    case Sampling::WithoutReplacement: return "without_replacement";
    case Sampling::Shuffle: return "shuffle";
  }
  return "uniform";
}

void SGDConfig::validate(std::size_t n) const {
  require(n >= 1, "dataset must not be empty");
  require(batch_size >= 1, "batch size must be at least 1");
  require(init.size() > 0, "initial point is missing");
  require_finite(init, "initial point");
  const auto& src = index_source;
  if (!src.indices.empty() || src.scheme == Sampling::Explicit) {
    require(src.indices.size() == steps * batch_size,
            "explicit index sequence must have steps * batch_size entries");
    for (std::size_t i : src.indices)
      require(i < n, "explicit index " + std::to_string(i) + " out of range [0, " + std::to_string(n) + ")");
  } else if (src.scheme == Sampling::WithoutReplacement) {
    require(steps * batch_size <= n, "sampling without replacement needs steps * batch_size <= n");
  }
}

std::vector<std::size_t> realize_indices(const SGDConfig& config, std::size_t n, std::uint64_t stream_id) {
  config.validate(n);
  const auto& src = config.index_source;
  if (!src.indices.empty() || src.scheme == Sampling::Explicit) return src.indices;
  const std::size_t total = config.steps * config.batch_size;
  std::vector<std::size_t> out;
  out.reserve(total);
  Rng rng = make_rng(config.seed, stream_id);
  switch (src.scheme) {
    case Sampling::Uniform: {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t s = 0; s < total; ++s) out.push_back(pick(rng));
      break;
    }
    case Sampling::WithoutReplacement:
    case Sampling::Shuffle: {
      std::vector<std::size_t> perm(n);
      while (out.size() < total) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n && out.size() < total; ++i) out.push_back(perm[i]);
      }
      break;
    }
    case Sampling::Explicit: break;
  }
  return out;
}

std::uint64_t Trajectory::indices_digest() const {
  std::uint64_t h = fnv1a("");
  for (std::size_t i : indices) {
    const std::uint64_t v = i;
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
  }
  return h;
}

Trajectory run_trajectory(const UpdateMap& map, const SGDConfig& config, const Dataset& dataset,
                          std::uint64_t stream_id) {
  if (config.init.size() != map.dim()) throw DimensionMismatch("initial point", map.dim(), config.init.size());
  Trajectory tr;
  tr.batch_size = config.batch_size;
  tr.indices = realize_indices(config, dataset.size(), stream_id);
  tr.points.reserve(config.steps + 1);
  tr.points.push_back(config.init);
  for (std::size_t s = 0; s < config.steps; ++s)
    tr.points.push_back(
        step_batch(map, tr.points.back(), tr.indices.data() + s * config.batch_size, config.batch_size, dataset));
  return tr;
}

Vec run_endpoint(const UpdateMap& map, const Vec& init, const std::vector<std::size_t>& indices,
                 const Dataset& dataset, std::size_t batch_size) {
  require(batch_size >= 1 && indices.size() % batch_size == 0, "index count must be a multiple of batch size");
  Vec theta = init;
  for (std::size_t s = 0; s < indices.size(); s += batch_size)
    theta = step_batch(map, theta, indices.data() + s, batch_size, dataset);
  return theta;
}

CouplingReport coupled_contraction_ratio(const UpdateMap& map, const Vec& theta_a, const Vec& theta_b,
                                         const std::vector<std::size_t>& indices, const Dataset& dataset,
                                         std::size_t batch_size) {
  require_same_dim(theta_a, theta_b, "coupled points");
  require(batch_size >= 1 && indices.size() % batch_size == 0, "index count must be a multiple of batch size");
  const double scale =
      map.domain().enclosing_radius().value_or(std::max({1.0, theta_a.norm(), theta_b.norm()}));
  const double merge_tol = 1e-14 * scale;
  require((theta_a - theta_b).norm() > merge_tol, "coupled starting points must differ");

  CouplingReport report;
  report.scale = scale;
  Vec a = theta_a;
  Vec b = theta_b;
  for (std::size_t s = 0; s < indices.size(); s += batch_size) {
    if (report.coalesced) {
      report.ratios.push_back(0.0);
      report.distances.push_back(0.0);
      continue;
    }
    const double before = (a - b).norm();
    report.distances.push_back(before);
    a = step_batch(map, a, indices.data() + s, batch_size, dataset);
    b = step_batch(map, b, indices.data() + s, batch_size, dataset);
    const double after = (a - b).norm();
    if (after <= merge_tol) {
      report.coalesced = true;
      report.coalesced_at = s / batch_size;
      report.ratios.push_back(0.0);
    } else {
      report.ratios.push_back(after / before);
    }
  }
  return report;
}

double contraction_factor(double alpha, double beta, double eta) {
  require(alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta),
          "contraction_factor: alpha and beta must be positive");
  require(alpha <= beta, "contraction_factor: alpha must not exceed beta");
  require(eta > 0.0, "contraction_factor: eta must be positive");
  if (eta >= 2.0 / beta)
    throw InvalidArgument("contraction_factor: eta >= 2/beta is not certified contractive");
  const double radicand = 1.0 - 2.0 * alpha * eta + alpha * beta * eta * eta;
  if (radicand < 0.0) {
    require(radicand > -1e-12, "contraction_factor: negative radicand");
    return 0.0;
  }
  return std::sqrt(radicand);
}

}  // namespace locov
