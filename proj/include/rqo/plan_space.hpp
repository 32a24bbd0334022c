#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "rqo/join_graph.hpp"
#include "rqo/plan.hpp"

namespace rqo {

// Counts calls to the two optimizer primitives. Increments are atomic so
// instrumented evaluations may run on any schedule.
struct CallCounters {
  std::atomic<std::uint64_t> opt_calls{0};
  std::atomic<std::uint64_t> cost_calls{0};

  void reset() {
    opt_calls.store(0);
    cost_calls.store(0);
  }
};

// Output rows of joining the tables in `table_mask` under selectivities `s`:
// product of base cardinalities, local-selection factors, and the factors of
// every join edge internal to the set. Throws on an empty or disconnected set.
double cardinality(const JoinGraph& graph, std::uint32_t table_mask,
                   const SelectivityVector& s);

// Deterministic recursive plan cost. Leaf cost is the base cardinality; an
// inner node with child output rows N_L, N_R and own output N_out adds
//   HASH:        2*N_L + N_R + N_out
//   NESTED_LOOP: N_L + 0.01*N_L*N_R + N_out
// on top of its children's costs.
double cost(const JoinGraph& graph, const Plan& plan, const SelectivityVector& s,
            CallCounters* counters = nullptr);

struct OptResult {
  Plan plan;
  double cost = 0.0;
};

// Minimum-cost plan over all connected binary join trees and both join
// algorithms per node (dynamic programming over connected table subsets).
// Ties break toward the lexicographically smallest fingerprint. At most 14
// tables; beyond that throws "plan space too large".
OptResult optimize(const JoinGraph& graph, const SelectivityVector& s,
                   CallCounters* counters = nullptr);

// Every valid plan, deduplicated by fingerprint, sorted by fingerprint.
// At most 7 tables.
std::vector<Plan> enumerate_all_plans(const JoinGraph& graph);

}  // namespace rqo
