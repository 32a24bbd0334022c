#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rqo/join_graph.hpp"
#include "rqo/kernel_density.hpp"
#include "rqo/rng.hpp"

namespace rqo {

// Subquery pattern of 1-3 tables used as the unit of error profiling.
// Canonical string form: "tables|edges|selections" with comma-separated,
// sorted elements; edges as "a-b" with a < b.
struct QueryletId {
  std::vector<std::string> tables;
  std::vector<std::pair<std::string, std::string>> join_edges;
  std::vector<std::string> selection_tables;

  std::string canonical() const;
  static QueryletId parse(const std::string& text);
  static QueryletId make(std::vector<std::string> tables,
                         std::vector<std::pair<std::string, std::string>> edges,
                         std::vector<std::string> selections);

  void validate() const;
  auto operator<=>(const QueryletId&) const = default;
};

struct Observation {
  QueryletId querylet;
  double estimated = 0.0;
  double actual = 0.0;
};

// Raw (estimated selectivity, log-relative error) pairs for one querylet,
// where the error is ln(estimated / actual).
struct ErrorProfile {
  QueryletId querylet;
  std::vector<std::pair<double, double>> samples;  // (estimated, eps)
};

// Ingests observations into per-querylet profiles. Observations with a
// nonpositive estimated or actual selectivity are rejected and counted.
class ProfileStore {
 public:
  void ingest(const Observation& obs);

  const std::map<QueryletId, ErrorProfile>& profiles() const { return profiles_; }
  std::uint64_t rejected() const { return rejected_; }
  std::set<QueryletId> querylet_ids() const;

  std::string to_json_text() const;
  static ProfileStore from_json_text(const std::string& text);

 private:
  std::map<QueryletId, ErrorProfile> profiles_;
  std::uint64_t rejected_ = 0;
};

// Low/high bucketized error model for one selectivity dimension. The bucket
// is picked by comparing the estimate against the cutoff (the median of the
// observed estimated selectivities).
struct ErrorModel {
  int dimension_id = -1;
  double cutoff = 0.0;
  KernelDensity low;
  KernelDensity high;

  const KernelDensity& pick(double estimate) const {
    return estimate <= cutoff ? low : high;
  }
};

// Factorized conditional distribution of true selectivities given the
// estimate vector. Frozen dimensions (not in active_dims) stay at the anchor.
struct JointErrorDistribution {
  std::vector<ErrorModel> models;  // one per dimension
  SelectivityVector anchor;
  std::vector<int> active_dims;  // sorted ascending, nonempty

  bool is_active(int dim) const;
  JointErrorDistribution restricted(std::vector<int> dims) const;
  JointErrorDistribution reanchored(SelectivityVector new_anchor) const;
};

// For each dimension of the graph, the querylets whose profiles feed its
// error model: the single-table querylet for a local-selection dimension; the
// most specific available two-table querylet for a join dimension with a
// selection on either side; all matching three-table querylets (one flagged
// neighbor) when neither side has a selection. Empty list when nothing
// matches.
std::map<int, std::vector<QueryletId>> match_querylets(
    const JoinGraph& graph, const std::set<QueryletId>& available_profiles);

// Merges the given profiles and fits the low/high model. With no samples at
// all, returns the non-informative fallback (single center 0, bandwidth 2).
ErrorModel build_model(int dim, const std::vector<ErrorProfile>& profiles);

// Density of Eq-style factorized pdf at s, in log-error coordinates; frozen
// dimensions must match the anchor exactly and contribute factor 1.
double joint_pdf(const JointErrorDistribution& dist, const SelectivityVector& s);

// Draws eps per active dimension and maps s_i = clamp(anchor_i * e^{-eps}).
SelectivityVector sample_true_selectivities(const JointErrorDistribution& dist,
                                            Rng& rng);

// Analytic per-dimension expectation of the true selectivity under the model,
// evaluated at the given estimate vector; frozen dimensions pass through.
SelectivityVector recenter(const JointErrorDistribution& dist,
                           const SelectivityVector& s_hat);

}  // namespace rqo
