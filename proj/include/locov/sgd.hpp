#pragma once

// Constant-step projected SGD, its synchronous coupling, and the generic
// "one sample per step" update map.

#include "locov/losses.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace locov {

/// θ ↦ g(θ; z). Either a projected gradient step on a loss family, or an
/// arbitrary user map (any iterative stochastic algorithm that touches one
/// sample per update).
class UpdateMap {
 public:
  using CustomFn = std::function<Vec(const Vec&, const Sample&)>;

  /// g(θ; z) = Π(θ − η∇f(θ; z)). Projection follows the family's own
  /// setting unless `project` overrides it.
  static UpdateMap sgd(LossFamily family, double eta, std::optional<bool> project = std::nullopt);
  static UpdateMap custom(std::string name, ConvexDomain domain, CustomFn g);

  const std::string& name() const noexcept { return name_; }
  const ConvexDomain& domain() const noexcept { return domain_; }
  int dim() const { return domain_.dim(); }
  bool projects() const noexcept { return project_; }
  /// Step size, or nullopt for custom maps.
  std::optional<double> eta() const noexcept { return eta_; }
  const LossFamily* family() const noexcept { return family_ ? &*family_ : nullptr; }

  Vec apply(const Vec& theta, const Sample& z) const;
  /// Mini-batch step: the average of the single-sample maps before
  /// projection, then one projection.
  Vec apply_batch(const Vec& theta, const std::vector<const Sample*>& batch) const;

 private:
  UpdateMap(std::string name, ConvexDomain domain) : name_(std::move(name)), domain_(std::move(domain)) {}

  Vec raw(const Vec& theta, const Sample& z) const;

  std::string name_;
  ConvexDomain domain_;
  bool project_ = false;
  std::optional<double> eta_;
  std::optional<LossFamily> family_;
  CustomFn custom_;
};

/// One update with sample z_i. Rejects out-of-range indices and non-finite
/// results.
Vec sgd_step(const UpdateMap& map, const Vec& theta, std::size_t sample_index, const Dataset& dataset);

enum class Sampling { Explicit, Uniform, WithoutReplacement, Shuffle };
Sampling parse_sampling(const std::string& name);
std::string to_string(Sampling s);

/// Where step indices come from. A non-empty explicit sequence is used
/// verbatim whatever the scheme label says.
struct IndexSource {
  Sampling scheme = Sampling::Uniform;
  std::vector<std::size_t> indices;

  static IndexSource explicit_sequence(std::vector<std::size_t> indices) {
    return {Sampling::Explicit, std::move(indices)};
  }
  static IndexSource of(Sampling scheme) { return {scheme, {}}; }
};

struct SGDConfig {
  Vec init;
  std::size_t steps = 0;
  IndexSource index_source;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
};

/// The flat index sequence (steps × batch_size entries) a config realizes on
/// a dataset of size n, drawn from the stream (seed, stream_id).
std::vector<std::size_t> realize_indices(const SGDConfig& config, std::size_t n, std::uint64_t stream_id = 0);

struct Trajectory {
  std::vector<Vec> points;           // θ^(0), …, θ^(t)
  std::vector<std::size_t> indices;  // step s uses indices[s*batch_size, (s+1)*batch_size)
  std::size_t batch_size = 1;

  std::size_t steps() const noexcept { return points.empty() ? 0 : points.size() - 1; }
  const Vec& final_point() const { return points.back(); }
  /// FNV-1a digest of the realized indices.
  std::uint64_t indices_digest() const;
};

Trajectory run_trajectory(const UpdateMap& map, const SGDConfig& config, const Dataset& dataset,
                          std::uint64_t stream_id = 0);

/// Endpoint only; avoids storing the path.
Vec run_endpoint(const UpdateMap& map, const Vec& init, const std::vector<std::size_t>& indices,
                 const Dataset& dataset, std::size_t batch_size = 1);

struct CouplingReport {
  std::vector<double> ratios;     // one per step
  std::vector<double> distances;  // ‖θ_a − θ_b‖ before each step
  double scale = 1.0;             // reference length of the merge tolerance
  bool coalesced = false;
  std::optional<std::size_t> coalesced_at;  // first step whose output pair agreed
};

/// Runs two copies in lockstep on the same indices and records
/// ‖g(θ_a) − g(θ_b)‖ / ‖θ_a − θ_b‖ per step. Once the pair agrees to within
/// 1e-14·scale the remaining ratios are 0 and the report is flagged.
CouplingReport coupled_contraction_ratio(const UpdateMap& map, const Vec& theta_a, const Vec& theta_b,
                                         const std::vector<std::size_t>& indices, const Dataset& dataset,
                                         std::size_t batch_size = 1);

/// γ = √(1 − 2αη + αβη²) for 0 < η < 2/β and 0 < α ≤ β.
double contraction_factor(double alpha, double beta, double eta);

}  // namespace locov
