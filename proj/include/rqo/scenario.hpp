#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rqo/join_graph.hpp"
#include "rqo/penalty.hpp"
#include "rqo/rng.hpp"

namespace rqo {

// True-selectivity generator for one dimension.
struct GeneratorSpec {
  enum class Family { kConstant, kLogUniform, kBeta };
  Family family = Family::kConstant;
  double value = 0.1;  // constant
  double lo = 1e-4, hi = 0.1;  // loguniform
  double a = 2.0, b = 2.0;  // beta

  double sample(Rng& rng) const;
  static GeneratorSpec constant(double v);
};

// Selectivity estimator behavior for one dimension: estimate =
// actual * bias * exp(N(0, noise_sd^2)).
struct EstimatorSpec {
  double bias = 1.0;
  double noise_sd = 0.0;
};

// Named database instance with scaled cardinalities/selectivities relative to
// the scenario's base truth.
struct InstanceSpec {
  std::string name;
  std::map<std::string, double> cardinality_scale;  // table -> factor
  std::map<int, double> selectivity_scale;          // dim -> factor
  std::map<int, double> selectivity_override;       // dim -> absolute value
};

struct QuerySpec {
  std::string name;
  SelectivityVector s_hat;
};

struct PqoSpec {
  std::string anchor_query;
  int instance_count = 1000;
  std::vector<GeneratorSpec> instance_distribution;  // per dim, draws s_hat'
};

struct Scenario {
  std::string name;
  JoinGraph graph;
  SelectivityVector base_true;          // current instance's true selectivities
  std::vector<GeneratorSpec> true_gen;  // per dim
  std::vector<EstimatorSpec> estimator; // per dim
  PenaltySpec penalty;
  std::vector<QuerySpec> queries;
  std::vector<InstanceSpec> instances;
  std::optional<PqoSpec> pqo;

  void validate() const;
  const QuerySpec& query(const std::string& name) const;  // empty name = first

  std::string to_json_text() const;
  static Scenario from_json_text(const std::string& text);
};

}  // namespace rqo
