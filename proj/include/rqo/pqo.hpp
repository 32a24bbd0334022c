#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqo/error_profiling.hpp"
#include "rqo/penalty.hpp"
#include "rqo/robust_select.hpp"
#include "rqo/sensitivity.hpp"

namespace rqo {

struct AnchorCandidate {
  Plan plan;
  double expected_penalty = 0.0;
  double cost_at_anchor = 0.0;
  // Candidate's cost at every cached sample; kept so the reuse path needs no
  // Opt or Cost calls.
  std::vector<double> per_sample_costs;
};

// Fully analyzed query instance: full-dimensional error distribution,
// sensitive dimensions, sample cache, and the top robust candidates.
struct AnchorEntry {
  std::string template_id;
  SelectivityVector s_hat;
  JointErrorDistribution dist;      // all dimensions active
  std::vector<int> sensitive_dims;  // descending score order
  SampleCache cache;
  std::vector<AnchorCandidate> candidates;  // ascending expected penalty, <= 3
  SensitivityScores sensitivity;
  bool sensitivity_converged = false;
};

struct PQODecision {
  enum class Outcome { kReuse, kFallback };
  Outcome outcome = Outcome::kFallback;
  double kl = 0.0;
  double threshold = 0.0;
  std::string chosen_fingerprint;  // set on reuse
  std::vector<std::pair<std::string, double>> reweighted;  // per candidate
  double mean_weight = 0.0;
  std::string fallback_reason;  // "kl_exceeds_threshold" | "degenerate_weights"
};

// Monte-Carlo KL(from || to) over all dimensions, factorized per dimension in
// log-error coordinates; per-dimension terms are floored at 0.
double kl_divergence(const JointErrorDistribution& from,
                     const JointErrorDistribution& to, int samples, Rng& rng);

// Maximum divergence under which S cached samples still give acceptable
// reweighted estimates: ln(S).
double reuse_threshold(std::uint64_t cached_samples);

inline bool reuse_allowed(double kl, double threshold) { return kl < threshold; }

// KL test followed by importance-sampling reweighting of the cached
// candidates. The reuse path performs no Opt or Cost calls.
PQODecision select_for_query(const AnchorEntry& anchor,
                             const SelectivityVector& s_hat_prime,
                             const PenaltySpec& spec, Rng& rng,
                             int kl_samples = 10000,
                             CallCounters* counters = nullptr);

// Full anchor construction: Sobol sensitivity with auto-convergence on the
// traditional plan, pool build over the sensitive subspace, candidate
// evaluation, and top-3 retention.
AnchorEntry register_anchor(const std::string& template_id, const JoinGraph& graph,
                            const SelectivityVector& s_hat,
                            const JointErrorDistribution& dist,
                            const PenaltySpec& spec, std::uint64_t S, Rng& rng,
                            CallCounters* counters = nullptr, int k_max = 6,
                            int threads = 1);

}  // namespace rqo
