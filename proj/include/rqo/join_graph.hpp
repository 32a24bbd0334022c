#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rqo {

struct TableDef {
  std::string name;
  double base_cardinality = 0.0;
  // Dimension id of this table's local selection, if it has one.
  std::optional<int> local_selection_dim;
};

struct JoinEdge {
  int left = -1;
  int right = -1;
  int dim = -1;
};

// Join query template: tables, join edges, and the selectivity dimension
// layout. Dimension ids form a contiguous range 0..d-1 covering every
// local-selection dim and every join-edge dim exactly once.
struct JoinGraph {
  std::vector<TableDef> tables;
  std::vector<JoinEdge> edges;

  int table_count() const { return static_cast<int>(tables.size()); }
  int dim_count() const;
  std::uint32_t full_mask() const {
    return table_count() >= 32 ? 0u : (1u << table_count()) - 1u;
  }

  int table_index(const std::string& name) const;
  bool table_has_selection(int t) const {
    return tables[t].local_selection_dim.has_value();
  }

  // True if the tables in `mask` form a connected subgraph.
  bool connected(std::uint32_t mask) const;

  // Throws std::invalid_argument when a structural invariant is violated.
  void validate() const;
};

// Point in (0,1]^d: per-dimension selectivities for one query template.
struct SelectivityVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const SelectivityVector&) const = default;
};

// Length matches the graph's dimension count, every entry in (0, 1].
void validate_selectivities(const JoinGraph& graph, const SelectivityVector& s);

}  // namespace rqo
