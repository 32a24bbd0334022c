#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rqo/error_profiling.hpp"
#include "rqo/penalty.hpp"
#include "rqo/plan.hpp"
#include "rqo/plan_space.hpp"
#include "rqo/rng.hpp"

namespace rqo {

// Triples cached while sampling: the drawn selectivities, the optimal plan's
// fingerprint there, and its cost.
struct CacheEntry {
  SelectivityVector s;
  std::string opt_plan_fingerprint;
  double opt_cost = 0.0;
};

struct SampleCache {
  std::vector<CacheEntry> entries;
  SelectivityVector anchor;
  std::vector<int> active_dims;
};

struct Candidate {
  Plan plan;
  std::uint64_t occurrences = 0;  // samples at which this plan was optimal
  double cost_at_anchor = 0.0;
};

// Unique optimal plans observed while sampling, keyed by fingerprint.
struct CandidatePool {
  std::map<std::string, Candidate> plans;
};

struct EvaluatedCandidate {
  std::string fingerprint;
  double expected_penalty = 0.0;
  double cost_at_anchor = 0.0;
  std::vector<double> per_sample_costs;  // aligned with the cache entries
};

struct RobustChoice {
  Plan plan;
  double expected_penalty = 0.0;
  std::vector<EvaluatedCandidate> per_candidate;
};

// Draws S samples from the (restricted) distribution, calls Opt once per
// sample (exactly S Opt calls), caches the triples, and registers unique
// plans. `force_include`, when given, joins the pool even if never sampled.
std::pair<CandidatePool, SampleCache> build_pool(const JoinGraph& graph,
                                                 const JointErrorDistribution& dist,
                                                 std::uint64_t S, Rng& rng,
                                                 CallCounters* counters = nullptr,
                                                 const Plan* force_include = nullptr);

// Expected penalty of every candidate over the cached samples: exactly
// |pool| * |cache| Cost calls and zero Opt calls.
std::vector<EvaluatedCandidate> evaluate_pool(const JoinGraph& graph,
                                              const CandidatePool& pool,
                                              const SampleCache& cache,
                                              const PenaltySpec& spec,
                                              CallCounters* counters = nullptr,
                                              int threads = 1);

// Ascending by (expected penalty, cost at anchor, fingerprint).
std::vector<EvaluatedCandidate> rank_candidates(std::vector<EvaluatedCandidate> evaluated);

RobustChoice choose_robust(const CandidatePool& pool,
                           const std::vector<EvaluatedCandidate>& evaluated);

std::vector<EvaluatedCandidate> top_candidates(
    const std::vector<EvaluatedCandidate>& evaluated, std::size_t n = 3);

}  // namespace rqo
