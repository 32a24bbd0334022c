#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rqo/join_graph.hpp"

namespace rqo {

enum class JoinAlgo { kHash, kNestedLoop };

const char* join_algo_token(JoinAlgo a);  // "HJ" / "NLJ"

// Immutable binary join tree node. Leaves carry a table index; inner nodes a
// join algorithm. Left/right order is significant (the cost model is
// asymmetric), so no commutativity normalization is applied.
struct PlanNode {
  int table = -1;
  JoinAlgo algo = JoinAlgo::kHash;
  std::shared_ptr<const PlanNode> left;
  std::shared_ptr<const PlanNode> right;

  bool is_leaf() const { return table >= 0; }
};

// Value-semantic plan handle. Fingerprint is the canonical pre-order
// serialization; fingerprint equality is structural equality.
class Plan {
 public:
  Plan() = default;

  static Plan leaf(const JoinGraph& graph, int table);
  static Plan join(Plan left, Plan right, JoinAlgo algo);

  bool empty() const { return root_ == nullptr; }
  const PlanNode& root() const { return *root_; }
  const std::string& fingerprint() const { return fingerprint_; }

  // Bitmask of the tables appearing as leaves.
  std::uint32_t table_mask() const;

  bool operator==(const Plan& o) const { return fingerprint_ == o.fingerprint_; }

 private:
  std::shared_ptr<const PlanNode> root_;
  std::string fingerprint_;
};

// Parses the fingerprint grammar: leaf := table name;
// inner := "(" plan " " algo " " plan ")" with algo in {HJ, NLJ}.
Plan parse_plan(const JoinGraph& graph, const std::string& fingerprint);

// Throws std::invalid_argument unless leaves are a permutation of all tables
// and every inner node joins edge-connected subtrees.
void validate_plan(const JoinGraph& graph, const Plan& plan);

// Indented multi-line rendering for reports.
std::string render_plan_tree(const JoinGraph& graph, const Plan& plan);

}  // namespace rqo
