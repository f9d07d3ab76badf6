#pragma once

// JSON / JSONL / CSV forms of the library's results, and loss families and
// distributions built from JSON descriptors.

#include "locov/cover.hpp"
#include "locov/experiments.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace locov {

using Json = nlohmann::ordered_json;

/// A descriptor that does not match the expected shape. `field` is the JSON
/// path of the offending value.
class SchemaError : public InvalidArgument {
 public:
  SchemaError(std::string field, const std::string& message)
      : InvalidArgument("field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

Json to_json(const Vec& v);
Json to_json(const BoundCertificate& cert);
Json to_json(const GapEstimate& g);
Json to_json(const ValidationReport& r, bool include_rows = true);
Json to_json(const EMEquivalence& e);
Json to_json(const StabilityReport& r);
Json to_json(const HoeffdingReport& r);
Json to_json(const CoverVerification& v);
Json to_json(const CouplingReport& c);
Json to_json(const BoxCount& b);
Json to_json(const CoverEntry& e);

std::string validation_csv(const ValidationReport& r);
std::string hoeffding_csv(const HoeffdingReport& r);
std::string certificate_csv(const BoundCertificate& cert);

/// Columns step,index,x0..x{d-1}. Step 0 has an empty index; mini-batch
/// indices are joined with ';'.
void write_trajectory_csv(std::ostream& out, const Trajectory& tr);

/// First line {"meta": …}, then one entry per line in canonical order.
void write_cover_jsonl(std::ostream& out, const CoverSet& cover, const Json& meta = Json::object());
CoverSet read_cover_jsonl(std::istream& in);

/// {"name": "quadratic_centers", "centers": [[…]], "R": 1} and similar for
/// multi_index, soft_kmeans, hard_kmeans and stability_1d.
LossFamily family_from_json(const Json& descriptor, const std::string& path = "family");

/// {"kind": "finite_support" | "uniform_ball" | "labeled_uniform_ball" | "natural", …}.
/// "natural" takes the family's own distribution.
Distribution distribution_from_json(const Json& descriptor, const LossFamily& family,
                                    const std::string& path = "distribution");

Vec vec_from_json(const Json& j, const std::string& path);

}  // namespace locov
