#include "rqo/plan_space.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <stdexcept>

namespace rqo {

namespace {

// Shared by cost() and the optimizer DP so both produce bit-identical values.
double join_extra_cost(JoinAlgo algo, double n_left, double n_right, double n_out) {
  if (algo == JoinAlgo::kHash) return 2.0 * n_left + n_right + n_out;
  return n_left + 0.01 * n_left * n_right + n_out;
}

bool cross_edge_exists(const JoinGraph& graph, std::uint32_t a, std::uint32_t b) {
  for (const auto& e : graph.edges) {
    std::uint32_t lm = 1u << e.left;
    std::uint32_t rm = 1u << e.right;
    if (((a & lm) && (b & rm)) || ((a & rm) && (b & lm))) return true;
  }
  return false;
}

}  // namespace

double cardinality(const JoinGraph& graph, std::uint32_t table_mask,
                   const SelectivityVector& s) {
  if (table_mask == 0) throw std::invalid_argument("empty table set");
  if (table_mask & ~graph.full_mask()) {
    throw std::invalid_argument("table set out of range");
  }
  if (!graph.connected(table_mask)) {
    throw std::invalid_argument("disconnected intermediate");
  }
  double rows = 1.0;
  for (int t = 0; t < graph.table_count(); ++t) {
    if (!(table_mask & (1u << t))) continue;
    rows *= graph.tables[t].base_cardinality;
    if (graph.tables[t].local_selection_dim) {
      rows *= s[*graph.tables[t].local_selection_dim];
    }
  }
  for (const auto& e : graph.edges) {
    if ((table_mask & (1u << e.left)) && (table_mask & (1u << e.right))) {
      rows *= s[e.dim];
    }
  }
  return rows;
}

namespace {

struct CostedNode {
  double cost;
  double rows;
};

CostedNode cost_node(const JoinGraph& graph, const PlanNode& n,
                     const SelectivityVector& s, std::uint32_t* mask_out) {
  if (n.is_leaf()) {
    std::uint32_t mask = 1u << n.table;
    *mask_out = mask;
    return {graph.tables[n.table].base_cardinality, cardinality(graph, mask, s)};
  }
  std::uint32_t ml = 0, mr = 0;
  CostedNode left = cost_node(graph, *n.left, s, &ml);
  CostedNode right = cost_node(graph, *n.right, s, &mr);
  std::uint32_t mask = ml | mr;
  *mask_out = mask;
  double n_out = cardinality(graph, mask, s);
  double c = left.cost + right.cost + join_extra_cost(n.algo, left.rows, right.rows, n_out);
  return {c, n_out};
}

}  // namespace

double cost(const JoinGraph& graph, const Plan& plan, const SelectivityVector& s,
            CallCounters* counters) {
  if (counters) counters->cost_calls.fetch_add(1, std::memory_order_relaxed);
  validate_selectivities(graph, s);
  validate_plan(graph, plan);
  std::uint32_t mask = 0;
  return cost_node(graph, plan.root(), s, &mask).cost;
}

OptResult optimize(const JoinGraph& graph, const SelectivityVector& s,
                   CallCounters* counters) {
  if (counters) counters->opt_calls.fetch_add(1, std::memory_order_relaxed);
  if (graph.table_count() > 14) throw std::invalid_argument("plan space too large");
  validate_selectivities(graph, s);

  int n = graph.table_count();
  std::uint32_t full = graph.full_mask();

  struct Entry {
    Plan plan;
    double cost = 0.0;
    double rows = 0.0;
    bool valid = false;
  };
  std::vector<Entry> dp(full + 1);

  for (int t = 0; t < n; ++t) {
    std::uint32_t m = 1u << t;
    dp[m].plan = Plan::leaf(graph, t);
    dp[m].cost = graph.tables[t].base_cardinality;
    dp[m].rows = cardinality(graph, m, s);
    dp[m].valid = true;
  }

  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    if (std::popcount(mask) < 2 || !graph.connected(mask)) continue;
    double n_out = cardinality(graph, mask, s);
    Entry best;
    for (std::uint32_t sub = (mask - 1) & mask; sub; sub = (sub - 1) & mask) {
      std::uint32_t rest = mask ^ sub;
      const Entry& l = dp[sub];
      const Entry& r = dp[rest];
      if (!l.valid || !r.valid) continue;
      if (!cross_edge_exists(graph, sub, rest)) continue;
      for (JoinAlgo algo : {JoinAlgo::kHash, JoinAlgo::kNestedLoop}) {
        double c = l.cost + r.cost + join_extra_cost(algo, l.rows, r.rows, n_out);
        if (best.valid && c > best.cost) continue;
        if (best.valid && c == best.cost) {
          std::string fp = "(" + l.plan.fingerprint() + " " + join_algo_token(algo) +
                           " " + r.plan.fingerprint() + ")";
          if (fp >= best.plan.fingerprint()) continue;
        }
        best.plan = Plan::join(l.plan, r.plan, algo);
        best.cost = c;
        best.rows = n_out;
        best.valid = true;
      }
    }
    dp[mask] = std::move(best);
  }

  if (!dp[full].valid) throw std::invalid_argument("join graph is disconnected");
  return {dp[full].plan, dp[full].cost};
}

std::vector<Plan> enumerate_all_plans(const JoinGraph& graph) {
  if (graph.table_count() > 7) throw std::invalid_argument("too many tables to enumerate");
  graph.validate();

  std::uint32_t full = graph.full_mask();
  std::vector<std::vector<Plan>> memo(full + 1);

  for (int t = 0; t < graph.table_count(); ++t) {
    memo[1u << t].push_back(Plan::leaf(graph, t));
  }

  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    if (std::popcount(mask) < 2 || !graph.connected(mask)) continue;
    std::map<std::string, Plan> plans;
    for (std::uint32_t sub = (mask - 1) & mask; sub; sub = (sub - 1) & mask) {
      std::uint32_t rest = mask ^ sub;
      if (memo[sub].empty() || memo[rest].empty()) continue;
      if (!cross_edge_exists(graph, sub, rest)) continue;
      for (const Plan& l : memo[sub]) {
        for (const Plan& r : memo[rest]) {
          for (JoinAlgo algo : {JoinAlgo::kHash, JoinAlgo::kNestedLoop}) {
            Plan p = Plan::join(l, r, algo);
            plans.emplace(p.fingerprint(), std::move(p));
          }
        }
      }
    }
    memo[mask].reserve(plans.size());
    for (auto& [fp, p] : plans) memo[mask].push_back(std::move(p));
  }

  return memo[full];
}

}  // namespace rqo
