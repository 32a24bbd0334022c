#include "rqo/join_graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rqo {

namespace {

bool valid_table_name(const std::string& name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

}  // namespace

int JoinGraph::dim_count() const {
  int d = 0;
  for (const auto& t : tables) {
    if (t.local_selection_dim) d = std::max(d, *t.local_selection_dim + 1);
  }
  for (const auto& e : edges) d = std::max(d, e.dim + 1);
  return d;
}

int JoinGraph::table_index(const std::string& name) const {
  for (int i = 0; i < table_count(); ++i) {
    if (tables[i].name == name) return i;
  }
  return -1;
}

bool JoinGraph::connected(std::uint32_t mask) const {
  if (mask == 0) return false;
  std::uint32_t reached = mask & (mask ^ (mask - 1));  // lowest set bit
  for (;;) {
    std::uint32_t next = reached;
    for (const auto& e : edges) {
      std::uint32_t lm = 1u << e.left;
      std::uint32_t rm = 1u << e.right;
      if ((mask & lm) && (mask & rm)) {
        if (next & lm) next |= rm;
        if (next & rm) next |= lm;
      }
    }
    if (next == reached) break;
    reached = next;
  }
  return reached == mask;
}

void JoinGraph::validate() const {
  if (tables.empty()) throw std::invalid_argument("graph has no tables");
  if (table_count() > 31) throw std::invalid_argument("too many tables");

  std::set<std::string> names;
  for (const auto& t : tables) {
    if (!valid_table_name(t.name)) {
      throw std::invalid_argument("invalid table name: '" + t.name + "'");
    }
    if (!names.insert(t.name).second) {
      throw std::invalid_argument("duplicate table name: " + t.name);
    }
    if (!(t.base_cardinality > 0.0) || !std::isfinite(t.base_cardinality)) {
      throw std::invalid_argument("base cardinality must be positive: " + t.name);
    }
  }

  std::set<std::pair<int, int>> pairs;
  std::set<int> dims;
  for (const auto& t : tables) {
    if (t.local_selection_dim && !dims.insert(*t.local_selection_dim).second) {
      throw std::invalid_argument("dimension id reused: " + t.name);
    }
  }
  for (const auto& e : edges) {
    if (e.left < 0 || e.left >= table_count() || e.right < 0 ||
        e.right >= table_count() || e.left == e.right) {
      throw std::invalid_argument("join edge references invalid tables");
    }
    auto p = std::minmax(e.left, e.right);
    if (!pairs.insert({p.first, p.second}).second) {
      throw std::invalid_argument("more than one join edge for a table pair");
    }
    if (!dims.insert(e.dim).second) {
      throw std::invalid_argument("dimension id reused on a join edge");
    }
  }

  int d = dim_count();
  if (static_cast<int>(dims.size()) != d) {
    throw std::invalid_argument("dimension ids are not contiguous");
  }
  for (int i = 0; i < d; ++i) {
    if (!dims.count(i)) throw std::invalid_argument("dimension ids are not contiguous");
  }

  if (!connected(full_mask())) throw std::invalid_argument("join graph is disconnected");
}

void validate_selectivities(const JoinGraph& graph, const SelectivityVector& s) {
  if (static_cast<int>(s.size()) != graph.dim_count()) {
    throw std::invalid_argument("selectivity vector has wrong dimension count");
  }
  for (double v : s.values) {
    if (!(v > 0.0) || v > 1.0 || !std::isfinite(v)) {
      throw std::invalid_argument("selectivity out of (0,1]");
    }
  }
}

}  // namespace rqo
