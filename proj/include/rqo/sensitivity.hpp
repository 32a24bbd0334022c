#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rqo/error_profiling.hpp"
#include "rqo/join_graph.hpp"
#include "rqo/penalty.hpp"
#include "rqo/plan.hpp"
#include "rqo/plan_space.hpp"
#include "rqo/rng.hpp"

namespace rqo {

enum class SensitivityMethod { kLocal, kMorris, kSobol };

const char* sensitivity_method_name(SensitivityMethod m);
SensitivityMethod parse_sensitivity_method(const std::string& name);

struct SensitivityScores {
  SensitivityMethod method = SensitivityMethod::kSobol;
  std::vector<double> per_dim;                      // d entries
  std::optional<std::vector<double>> total_order;   // Sobol only
  std::uint64_t sample_count = 0;                   // K
  std::optional<double> total_variance;             // Sobol Var[Y]
  std::uint64_t objective_evals = 0;
};

struct SensitiveDimensionSet {
  std::vector<int> dims;       // descending score, ties by lower id
  std::vector<double> scores;  // matching values
};

// Thread-safe pure function of a point in the input space.
using ObjectiveFn = std::function<double(const std::vector<double>&)>;

// Sampled input space for the analyzers. Production code builds one from a
// JointErrorDistribution; tests may inject synthetic spaces (any box).
struct SampleSpace {
  int dims = 0;
  std::vector<int> active_dims;  // sorted ascending
  std::vector<double> anchor;    // reference point; Morris steps are 0.05*anchor[i]
  std::function<std::vector<double>(Rng&)> draw;
  bool unit_box = true;  // coordinates live in (0,1] and steps clamp there
};

SampleSpace make_sample_space(const JointErrorDistribution& dist);

// h(s) = penalty(spec, Cost(plan, s), Opt(s).cost). One Opt and one Cost call
// per evaluation, tracked in `counters`. The graph must outlive the objective.
ObjectiveFn make_penalty_objective(const JoinGraph& graph, Plan plan,
                                   PenaltySpec spec, CallCounters* counters);

// Mean objective over n draws that vary only `dim` (others stay at the
// anchor). Throws if dim is frozen.
double local_sensitivity(const ObjectiveFn& fn, const JointErrorDistribution& dist,
                         int dim, int n, Rng& rng);

// One-at-a-time local scores for every active dimension, n draws each.
SensitivityScores local_scores(const ObjectiveFn& fn,
                               const JointErrorDistribution& dist, int n, Rng& rng,
                               int threads = 1);

// Elementary-effects screening: K seeds, one random path each, mean |EE| per
// dimension. Exactly K*(active+1) objective evaluations.
SensitivityScores morris(const ObjectiveFn& fn, const SampleSpace& space,
                         std::uint64_t K, Rng& rng, int threads = 1);

// Variance decomposition with first- and total-order indices from K base
// sample pairs. Exactly K*(active+2) objective evaluations.
SensitivityScores sobol(const ObjectiveFn& fn, const SampleSpace& space,
                        std::uint64_t K, Rng& rng, int threads = 1);

// Descending-score prefix covering 0.8 of the total score, capped at k_max;
// degenerates to {dim 0} when every score is zero.
SensitiveDimensionSet select_sensitive(const SensitivityScores& scores, int k_max);

struct ConvergedSensitivity {
  SensitivityScores scores;
  SensitiveDimensionSet set;
  bool converged = false;
};

// Doubles K until the selected dimension set repeats on two consecutive
// rounds, starting at K=8 (Sobol) or K=10 (Morris), capped at K=2^14.
ConvergedSensitivity run_until_converged(SensitivityMethod method,
                                         const ObjectiveFn& fn,
                                         const SampleSpace& space, int k_max,
                                         Rng& rng, int threads = 1);

}  // namespace rqo
