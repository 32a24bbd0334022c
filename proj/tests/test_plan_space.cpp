#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "rqo/plan_space.hpp"
#include "rqo/rng.hpp"

using namespace rqo;

namespace {

JoinGraph single_table(double card, std::optional<int> sel_dim = std::nullopt) {
  JoinGraph g;
  g.tables.push_back({"A", card, sel_dim});
  return g;
}

// A(1000) -- B(500), join dim 0, no local selections.
JoinGraph two_table() {
  JoinGraph g;
  g.tables.push_back({"A", 1000.0, std::nullopt});
  g.tables.push_back({"B", 500.0, std::nullopt});
  g.edges.push_back({0, 1, 0});
  return g;
}

// Chain A -- B -- C with join dims 0 and 1.
JoinGraph three_chain(double ca = 1000.0, double cb = 500.0, double cc = 2000.0) {
  JoinGraph g;
  g.tables.push_back({"A", ca, std::nullopt});
  g.tables.push_back({"B", cb, std::nullopt});
  g.tables.push_back({"C", cc, std::nullopt});
  g.edges.push_back({0, 1, 0});
  g.edges.push_back({1, 2, 1});
  return g;
}

JoinGraph random_graph(Rng& rng, int n_tables) {
  JoinGraph g;
  for (int i = 0; i < n_tables; ++i) {
    std::string name(1, static_cast<char>('A' + i));
    g.tables.push_back({name, std::floor(10.0 + rng.uniform() * 100000.0), std::nullopt});
  }
  int dim = 0;
  // random spanning tree, then a few extra edges
  for (int i = 1; i < n_tables; ++i) {
    int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(i)));
    g.edges.push_back({j, i, dim++});
  }
  std::set<std::pair<int, int>> have;
  for (const auto& e : g.edges) have.insert(std::minmax(e.left, e.right));
  for (int a = 0; a < n_tables; ++a) {
    for (int b = a + 1; b < n_tables; ++b) {
      if (have.count({a, b})) continue;
      if (rng.uniform() < 0.3) {
        g.edges.push_back({a, b, dim++});
        have.insert({a, b});
      }
    }
  }
  // sprinkle local selections
  for (int i = 0; i < n_tables; ++i) {
    if (rng.uniform() < 0.4) g.tables[i].local_selection_dim = dim++;
  }
  g.validate();
  return g;
}

SelectivityVector random_selectivities(Rng& rng, const JoinGraph& g) {
  SelectivityVector s;
  for (int i = 0; i < g.dim_count(); ++i) {
    s.values.push_back(std::exp(std::log(1e-5) * rng.uniform()));
  }
  return s;
}

}  // namespace

TEST_CASE("cardinality products") {
  JoinGraph g1 = single_table(1000.0);
  SelectivityVector none{{}};
  CHECK(cardinality(g1, 1u, none) == doctest::Approx(1000.0));

  JoinGraph g2 = single_table(1000.0, 0);
  SelectivityVector s{{0.1}};
  CHECK(cardinality(g2, 1u, s) == doctest::Approx(100.0));

  JoinGraph g3 = two_table();
  SelectivityVector sj{{0.001}};
  CHECK(cardinality(g3, 0b11u, sj) == doctest::Approx(500.0));
}

TEST_CASE("cardinality rejects bad table sets") {
  JoinGraph g = three_chain();
  SelectivityVector s{{0.001, 0.001}};
  CHECK_THROWS_WITH_AS(cardinality(g, 0b101u, s), "disconnected intermediate",
                       std::invalid_argument);
  CHECK_THROWS_AS(cardinality(g, 0u, s), std::invalid_argument);
}

TEST_CASE("cost of fixed plans") {
  JoinGraph g1 = single_table(1000.0);
  SelectivityVector none{{}};
  CHECK(cost(g1, Plan::leaf(g1, 0), none) == 1000.0);

  JoinGraph g = two_table();
  SelectivityVector s{{0.001}};
  Plan hash = Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 1), JoinAlgo::kHash);
  Plan nl = Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 1), JoinAlgo::kNestedLoop);
  CHECK(cost(g, hash, s) == 4500.0);
  CHECK(cost(g, nl, s) == 8000.0);
}

TEST_CASE("cost rejects invalid plans") {
  JoinGraph g = two_table();
  SelectivityVector s{{0.001}};
  CHECK_THROWS_AS(cost(g, Plan::leaf(g, 0), s), std::invalid_argument);
  Plan twice = Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 0), JoinAlgo::kHash);
  CHECK_THROWS_AS(cost(g, twice, s), std::invalid_argument);
}

TEST_CASE("plan fingerprints round-trip and equal structure") {
  JoinGraph g = three_chain();
  Plan p = Plan::join(Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 1), JoinAlgo::kHash),
                      Plan::leaf(g, 2), JoinAlgo::kNestedLoop);
  CHECK(p.fingerprint() == "((A HJ B) NLJ C)");
  Plan back = parse_plan(g, p.fingerprint());
  CHECK(back == p);
  CHECK_THROWS_AS(parse_plan(g, "(A HJ X)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_plan(g, "(A XX B)"), std::invalid_argument);
}

TEST_CASE("enumerate_all_plans counts") {
  JoinGraph g1 = single_table(10.0);
  CHECK(enumerate_all_plans(g1).size() == 1);

  JoinGraph g2 = two_table();
  CHECK(enumerate_all_plans(g2).size() == 4);

  // 3-chain: ordered decompositions (A|BC),(BC|A),(AB|C),(C|AB), each with
  // every subplan combination and both algorithms.
  JoinGraph g3 = three_chain();
  auto plans = enumerate_all_plans(g3);
  CHECK(plans.size() == 32);
  CHECK(std::is_sorted(plans.begin(), plans.end(), [](const Plan& a, const Plan& b) {
    return a.fingerprint() < b.fingerprint();
  }));
}

TEST_CASE("optimize matches brute force on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_index(5));
    JoinGraph g = random_graph(rng, n);
    auto all = enumerate_all_plans(g);
    for (int rep = 0; rep < 5; ++rep) {
      SelectivityVector s = random_selectivities(rng, g);
      OptResult opt = optimize(g, s);
      CHECK(cost(g, opt.plan, s) == opt.cost);
      double best = opt.cost;
      for (const Plan& p : all) {
        CHECK(cost(g, p, s) >= best);
      }
      bool found = std::any_of(all.begin(), all.end(), [&](const Plan& p) {
        return p.fingerprint() == opt.plan.fingerprint();
      });
      CHECK(found);
    }
  }
}

TEST_CASE("optimize flips join order with selectivity") {
  JoinGraph g = three_chain();
  SelectivityVector cheap_ab{{0.0001, 0.01}};
  SelectivityVector costly_ab{{0.1, 0.0001}};
  OptResult a = optimize(g, cheap_ab);
  OptResult b = optimize(g, costly_ab);
  CHECK(a.plan.fingerprint() != b.plan.fingerprint());
}

TEST_CASE("optimize is deterministic") {
  Rng rng(11);
  JoinGraph g = random_graph(rng, 4);
  SelectivityVector s = random_selectivities(rng, g);
  OptResult first = optimize(g, s);
  for (int i = 0; i < 5; ++i) {
    OptResult again = optimize(g, s);
    CHECK(again.plan.fingerprint() == first.plan.fingerprint());
    CHECK(again.cost == first.cost);
  }
}

TEST_CASE("optimize rejects oversized graphs") {
  Rng rng(3);
  JoinGraph g;
  for (int i = 0; i < 15; ++i) {
    g.tables.push_back({std::string(1, static_cast<char>('a' + i)), 100.0, std::nullopt});
    if (i) g.edges.push_back({i - 1, i, i - 1});
  }
  SelectivityVector s;
  s.values.assign(14, 0.5);
  CHECK_THROWS_WITH_AS(optimize(g, s), "plan space too large", std::invalid_argument);
}

TEST_CASE("cost is monotone in each join selectivity for a fixed plan") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    JoinGraph g = random_graph(rng, 3 + static_cast<int>(rng.uniform_index(2)));
    auto all = enumerate_all_plans(g);
    const Plan& p = all[rng.uniform_index(all.size())];
    SelectivityVector s = random_selectivities(rng, g);
    for (int dim = 0; dim < g.dim_count(); ++dim) {
      SelectivityVector lo = s, hi = s;
      lo[dim] = 0.5 * s[dim];
      hi[dim] = std::min(1.0, 2.0 * s[dim]);
      CHECK(cost(g, p, lo) <= cost(g, p, s));
      CHECK(cost(g, p, s) <= cost(g, p, hi));
    }
  }
}

TEST_CASE("every plan pays for the same root output rows") {
  Rng rng(23);
  JoinGraph g = random_graph(rng, 4);
  SelectivityVector s = random_selectivities(rng, g);
  double full = cardinality(g, g.full_mask(), s);
  double leaf_total = 0.0;
  for (const auto& t : g.tables) leaf_total += t.base_cardinality;
  for (const Plan& p : enumerate_all_plans(g)) {
    // root N_out plus all leaf scans are a lower bound on any plan's cost
    CHECK(cost(g, p, s) >= full + leaf_total);
  }
}

TEST_CASE("every enumerated plan's fingerprint parses back to itself") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    JoinGraph g = random_graph(rng, 2 + static_cast<int>(rng.uniform_index(3)));
    for (const Plan& p : enumerate_all_plans(g)) {
      Plan back = parse_plan(g, p.fingerprint());
      CHECK(back == p);
      validate_plan(g, back);
    }
  }
}

TEST_CASE("call counters count one per entry point") {
  JoinGraph g = two_table();
  SelectivityVector s{{0.001}};
  CallCounters counters;
  optimize(g, s, &counters);
  CHECK(counters.opt_calls.load() == 1);
  CHECK(counters.cost_calls.load() == 0);
  Plan p = Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 1), JoinAlgo::kHash);
  cost(g, p, s, &counters);
  cost(g, p, s, &counters);
  CHECK(counters.cost_calls.load() == 2);
}
