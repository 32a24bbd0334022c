#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rqo/pqo.hpp"
#include "rqo/scenario.hpp"
#include "rqo/sensitivity.hpp"

namespace rqo {

// Plain counter snapshot for reports.
struct CallCounts {
  std::uint64_t opt_calls = 0;
  std::uint64_t cost_calls = 0;
};
CallCounts snapshot(const CallCounters& c);

// Per-querylet observation synthesis: actuals from the per-dimension true
// generators, estimates distorted by the per-dimension estimator model.
std::vector<Observation> generate_observations(const Scenario& scenario,
                                               int n_per_querylet, Rng& rng);

// The querylets each dimension's observations are generated for (the ideal
// match set of the graph).
std::map<int, std::vector<QueryletId>> profiling_querylets(const JoinGraph& graph);

// Profiles -> per-dimension models -> full-dimensional distribution at s_hat.
JointErrorDistribution build_distribution(const JoinGraph& graph,
                                          const ProfileStore& store,
                                          const SelectivityVector& s_hat);

struct PipelineOptions {
  std::string query;            // empty = first query in the scenario
  std::uint64_t samples = 100;  // S
  int observations = 200;       // per querylet, when no store is supplied
  int k_max = 6;
  int threads = 1;
  std::optional<PenaltySpec> penalty_override;
  std::optional<std::string> profile_store_text;  // pre-built store
};

struct PipelineResult {
  std::string query_name;
  SelectivityVector s_hat;
  ProfileStore store;
  JointErrorDistribution dist;

  Plan traditional;
  double traditional_cost_at_anchor = 0.0;
  ConvergedSensitivity sensitivity;

  CandidatePool pool;
  SampleCache cache;
  std::vector<EvaluatedCandidate> evaluated;  // ranked
  RobustChoice choice;

  SelectivityVector recentered;
  Plan recentered_plan;

  double traditional_ep = 0.0;
  double robust_ep = 0.0;
  double recentered_ep = 0.0;

  CallCounts profile_counts, sensitivity_counts, pool_counts, evaluate_counts,
      baseline_counts;
};

PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& opt,
                            std::uint64_t seed);

// Expected penalty of an arbitrary plan over an existing cache (one Cost call
// per entry).
double penalty_on_cache(const JoinGraph& graph, const Plan& plan,
                        const SampleCache& cache, const PenaltySpec& spec,
                        CallCounters* counters = nullptr);

struct InstanceRow {
  std::string instance;
  std::vector<double> plan_costs;  // aligned with InstanceTable::plan_labels
  double optimal_cost = 0.0;       // the instance's own optimum
};

struct InstanceTable {
  std::vector<std::string> plan_labels;
  std::vector<std::string> plan_fingerprints;
  std::vector<InstanceRow> rows;  // "base" first, then declared instances
};

InstanceTable simulate_instances(const Scenario& scenario,
                                 const std::vector<std::pair<std::string, Plan>>& plans,
                                 CallCounters* counters = nullptr);

struct PqoOptions {
  std::uint64_t samples = 100;
  int observations = 200;
  int k_max = 6;
  int threads = 1;
  int kl_samples = 10000;
  std::optional<int> instance_count;      // overrides the scenario
  bool compare_traditional = true;
  std::optional<std::string> queries_jsonl;  // explicit s_hat' list
  std::optional<std::string> profile_store_text;
};

struct PqoQueryLog {
  int index = 0;
  SelectivityVector s_hat_prime;
  double kl = 0.0;
  double threshold = 0.0;
  bool reused = false;
  std::string fallback_reason;
  std::string chosen_fingerprint;
  double mean_weight = 0.0;
  std::uint64_t reuse_opt_calls = 0;  // always 0; asserted in tests
  std::optional<double> chosen_ep;       // reweighted, reuse only
  std::optional<double> traditional_ep;  // reweighted, reuse only
};

struct PqoResult {
  AnchorEntry anchor;
  std::vector<PqoQueryLog> log;
  double reuse_fraction = 0.0;
  std::optional<double> mean_chosen_ep;       // over reused queries
  std::optional<double> mean_traditional_ep;  // over reused queries
  CallCounts registration_counts, reuse_counts, comparison_counts;
};

PqoResult run_pqo_workload(const Scenario& scenario, const PqoOptions& opt,
                           std::uint64_t seed);

// Deterministic line-oriented rendering of a report body.
std::string render_report_text(const nlohmann::ordered_json& body);

// Stable digest of the inputs that define a run.
std::string inputs_digest(const std::string& scenario_text,
                          const std::string& options_text, std::uint64_t seed);

}  // namespace rqo
