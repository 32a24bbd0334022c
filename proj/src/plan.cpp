#include "rqo/plan.hpp"

#include <functional>
#include <stdexcept>

namespace rqo {

const char* join_algo_token(JoinAlgo a) {
  return a == JoinAlgo::kHash ? "HJ" : "NLJ";
}

namespace {

std::string node_fingerprint(const JoinGraph& graph, const PlanNode& n) {
  if (n.is_leaf()) return graph.tables[n.table].name;
  return "(" + node_fingerprint(graph, *n.left) + " " + join_algo_token(n.algo) +
         " " + node_fingerprint(graph, *n.right) + ")";
}

}  // namespace

Plan Plan::leaf(const JoinGraph& graph, int table) {
  if (table < 0 || table >= graph.table_count()) {
    throw std::invalid_argument("leaf table index out of range");
  }
  auto node = std::make_shared<PlanNode>();
  node->table = table;
  Plan p;
  p.root_ = std::move(node);
  p.fingerprint_ = graph.tables[table].name;
  return p;
}

Plan Plan::join(Plan left, Plan right, JoinAlgo algo) {
  if (left.empty() || right.empty()) throw std::invalid_argument("joining empty plan");
  auto node = std::make_shared<PlanNode>();
  node->algo = algo;
  node->left = left.root_;
  node->right = right.root_;
  Plan p;
  p.fingerprint_ = "(" + left.fingerprint_ + " " + join_algo_token(algo) + " " +
                   right.fingerprint_ + ")";
  p.root_ = std::move(node);
  return p;
}

std::uint32_t Plan::table_mask() const {
  std::function<std::uint32_t(const PlanNode&)> walk = [&](const PlanNode& n) -> std::uint32_t {
    if (n.is_leaf()) return 1u << n.table;
    return walk(*n.left) | walk(*n.right);
  };
  return root_ ? walk(*root_) : 0u;
}

namespace {

struct Parser {
  const JoinGraph& graph;
  const std::string& text;
  std::size_t pos = 0;

  void skip_spaces() {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  }

  std::string token() {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ' ' && text[pos] != '(' && text[pos] != ')') {
      ++pos;
    }
    return text.substr(start, pos - start);
  }

  Plan parse() {
    skip_spaces();
    if (pos >= text.size()) throw std::invalid_argument("unexpected end of plan string");
    if (text[pos] == '(') {
      ++pos;
      Plan left = parse();
      skip_spaces();
      std::string algo = token();
      JoinAlgo a;
      if (algo == "HJ") {
        a = JoinAlgo::kHash;
      } else if (algo == "NLJ") {
        a = JoinAlgo::kNestedLoop;
      } else {
        throw std::invalid_argument("unknown join algorithm token: " + algo);
      }
      Plan right = parse();
      skip_spaces();
      if (pos >= text.size() || text[pos] != ')') {
        throw std::invalid_argument("expected ')' in plan string");
      }
      ++pos;
      return Plan::join(std::move(left), std::move(right), a);
    }
    std::string name = token();
    int t = graph.table_index(name);
    if (t < 0) throw std::invalid_argument("unknown table in plan string: " + name);
    return Plan::leaf(graph, t);
  }
};

}  // namespace

Plan parse_plan(const JoinGraph& graph, const std::string& fingerprint) {
  Parser p{graph, fingerprint};
  Plan plan = p.parse();
  p.skip_spaces();
  if (p.pos != fingerprint.size()) {
    throw std::invalid_argument("trailing characters in plan string");
  }
  if (plan.fingerprint() != fingerprint) {
    throw std::invalid_argument("plan string is not canonical");
  }
  return plan;
}

namespace {

bool masks_joined(const JoinGraph& graph, std::uint32_t a, std::uint32_t b) {
  for (const auto& e : graph.edges) {
    std::uint32_t lm = 1u << e.left;
    std::uint32_t rm = 1u << e.right;
    if (((a & lm) && (b & rm)) || ((a & rm) && (b & lm))) return true;
  }
  return false;
}

std::uint32_t check_node(const JoinGraph& graph, const PlanNode& n) {
  if (n.is_leaf()) {
    if (n.table >= graph.table_count()) {
      throw std::invalid_argument("invalid plan: leaf table out of range");
    }
    return 1u << n.table;
  }
  std::uint32_t lm = check_node(graph, *n.left);
  std::uint32_t rm = check_node(graph, *n.right);
  if (lm & rm) throw std::invalid_argument("invalid plan: table appears twice");
  if (!masks_joined(graph, lm, rm)) {
    throw std::invalid_argument("invalid plan: cross product between subtrees");
  }
  return lm | rm;
}

}  // namespace

void validate_plan(const JoinGraph& graph, const Plan& plan) {
  if (plan.empty()) throw std::invalid_argument("invalid plan: empty");
  std::uint32_t mask = check_node(graph, plan.root());
  if (mask != graph.full_mask()) {
    throw std::invalid_argument("invalid plan: does not cover all tables");
  }
}

std::string render_plan_tree(const JoinGraph& graph, const Plan& plan) {
  std::string out;
  std::function<void(const PlanNode&, int)> walk = [&](const PlanNode& n, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    if (n.is_leaf()) {
      out += graph.tables[n.table].name;
      out += '\n';
      return;
    }
    out += join_algo_token(n.algo);
    out += '\n';
    walk(*n.left, depth + 1);
    walk(*n.right, depth + 1);
  };
  walk(plan.root(), 0);
  return out;
}

}  // namespace rqo
