#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>

#include "rqo/plan_space.hpp"
#include "rqo/sensitivity.hpp"

using namespace rqo;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CountedObjective {
  ObjectiveFn fn;
  std::shared_ptr<std::atomic<std::uint64_t>> count =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  ObjectiveFn counted() const {
    auto c = count;
    auto f = fn;
    return [c, f](const std::vector<double>& x) {
      c->fetch_add(1, std::memory_order_relaxed);
      return f(x);
    };
  }
};

SampleSpace unit_space(int dims, std::vector<int> active, std::vector<double> anchor) {
  SampleSpace space;
  space.dims = dims;
  space.active_dims = std::move(active);
  space.anchor = std::move(anchor);
  space.unit_box = true;
  int d = dims;
  auto anchor_copy = space.anchor;
  auto act = space.active_dims;
  space.draw = [d, anchor_copy, act](Rng& rng) {
    std::vector<double> x = anchor_copy;
    for (int dim : act) x[dim] = 1e-6 + (1.0 - 2e-6) * rng.uniform();
    (void)d;
    return x;
  };
  return space;
}

SampleSpace ishigami_space() {
  SampleSpace space;
  space.dims = 3;
  space.active_dims = {0, 1, 2};
  space.anchor = {0.0, 0.0, 0.0};
  space.unit_box = false;
  space.draw = [](Rng& rng) {
    std::vector<double> x(3);
    for (auto& v : x) v = -kPi + 2.0 * kPi * rng.uniform();
    return x;
  };
  return space;
}

double ishigami(const std::vector<double>& x, double a = 7.0, double b = 0.1) {
  return std::sin(x[0]) + a * std::sin(x[1]) * std::sin(x[1]) +
         b * x[2] * x[2] * x[2] * x[2] * std::sin(x[0]);
}

// two-table graph whose optimum never changes with the local selection dim
JoinGraph stable_graph() {
  JoinGraph g;
  g.tables.push_back({"A", 100.0, 0});
  g.tables.push_back({"B", 10000.0, std::nullopt});
  g.edges.push_back({0, 1, 1});
  return g;
}

JointErrorDistribution degenerate_dist(SelectivityVector anchor,
                                       std::vector<int> active,
                                       double center = 0.0, double bw = 1e-3) {
  KernelDensity kd({center}, bw);
  JointErrorDistribution dist;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    dist.models.push_back(ErrorModel{static_cast<int>(i), 0.5, kd, kd});
  }
  dist.anchor = std::move(anchor);
  dist.active_dims = std::move(active);
  return dist;
}

}  // namespace

TEST_CASE("penalty objective is zero at the anchor for the anchor's own plan") {
  JoinGraph g = stable_graph();
  SelectivityVector s_hat{{0.3, 1e-4}};
  CallCounters counters;
  OptResult opt = optimize(g, s_hat, &counters);
  ObjectiveFn h = make_penalty_objective(g, opt.plan, PenaltySpec{}, &counters);
  CHECK(h(s_hat.values) == 0.0);
  // one Opt (manual) + one per evaluation
  CHECK(counters.opt_calls.load() == 2);
  CHECK(counters.cost_calls.load() == 1);
}

TEST_CASE("penalty objective is positive for a forced bad plan") {
  JoinGraph g;
  g.tables.push_back({"A", 1e6, std::nullopt});
  g.tables.push_back({"B", 1e3, std::nullopt});
  g.edges.push_back({0, 1, 0});
  SelectivityVector s{{0.001}};
  Plan bad = Plan::join(Plan::leaf(g, 0), Plan::leaf(g, 1), JoinAlgo::kNestedLoop);
  ObjectiveFn h = make_penalty_objective(g, bad, PenaltySpec{}, nullptr);
  CHECK(h(s.values) > 0.0);

  PenaltySpec prob{PenaltyVariant::kProbability, 1.2};
  ObjectiveFn hp = make_penalty_objective(g, bad, prob, nullptr);
  CHECK(hp(s.values) == 1.0);
}

TEST_CASE("local sensitivity: stable dimension scores zero") {
  JoinGraph g = stable_graph();
  SelectivityVector s_hat{{0.3, 1e-4}};
  // the optimum is NLJ(A,B) across dim 0's entire support; verify by force
  auto all = enumerate_all_plans(g);
  for (double s0 : {1e-6, 0.01, 0.2, 0.5, 0.99}) {
    SelectivityVector s{{s0, 1e-4}};
    OptResult opt = optimize(g, s);
    CHECK(opt.plan.fingerprint() == "(A NLJ B)");
    (void)all;
  }

  OptResult opt = optimize(g, s_hat);
  ObjectiveFn h = make_penalty_objective(g, opt.plan, PenaltySpec{}, nullptr);
  JointErrorDistribution dist = degenerate_dist(s_hat, {0}, 0.0, 1.5);
  Rng rng(3);
  CHECK(local_sensitivity(h, dist, 0, 200, rng) == 0.0);

  Rng r1(9), r2(9);
  CHECK(local_sensitivity(h, dist, 0, 50, r1) == local_sensitivity(h, dist, 0, 50, r2));
  CHECK_THROWS_AS(local_sensitivity(h, dist, 1, 10, rng), std::invalid_argument);
}

TEST_CASE("morris: constant objective scores zero everywhere") {
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  ObjectiveFn h = [](const std::vector<double>&) { return 42.0; };
  Rng rng(1);
  SensitivityScores scores = morris(h, space, 16, rng);
  CHECK(scores.per_dim == std::vector<double>{0.0, 0.0});
}

TEST_CASE("morris: linear objective recovers coefficient magnitudes exactly") {
  const double a = 3.5, b = -2.0;
  CountedObjective counted{[a, b](const std::vector<double>& x) {
    return a * x[0] + b * x[1] + 0.7;
  }};
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.4});
  Rng rng(11);
  const std::uint64_t K = 25;
  SensitivityScores scores = morris(counted.counted(), space, K, rng);
  CHECK(scores.per_dim[0] == doctest::Approx(std::abs(a)).epsilon(1e-9));
  CHECK(scores.per_dim[1] == doctest::Approx(std::abs(b)).epsilon(1e-9));
  CHECK(counted.count->load() == K * 3);
  CHECK(scores.objective_evals == K * 3);
}

TEST_CASE("morris: frozen dimensions score zero and cost no evaluations") {
  CountedObjective counted{[](const std::vector<double>& x) { return x[0] * x[0]; }};
  SampleSpace space = unit_space(3, {0}, {0.5, 0.5, 0.5});
  Rng rng(2);
  SensitivityScores scores = morris(counted.counted(), space, 10, rng);
  CHECK(scores.per_dim[1] == 0.0);
  CHECK(scores.per_dim[2] == 0.0);
  CHECK(counted.count->load() == 10 * 2);
}

TEST_CASE("morris: per-seed elementary effects of a linear objective are constant") {
  const double a = 1.25;
  SampleSpace space = unit_space(1, {0}, {0.9});  // anchor near 1 forces down-steps
  ObjectiveFn h = [a](const std::vector<double>& x) { return a * x[0]; };
  Rng rng(5);
  SensitivityScores s1 = morris(h, space, 40, rng);
  CHECK(s1.per_dim[0] == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("sobol: single-factor objective attributes all variance to it") {
  CountedObjective counted{[](const std::vector<double>& x) { return x[0]; }};
  SampleSpace space = unit_space(3, {0, 1, 2}, {0.5, 0.5, 0.5});
  Rng rng(21);
  const std::uint64_t K = 4096;
  SensitivityScores scores = sobol(counted.counted(), space, K, rng);
  CHECK(counted.count->load() == K * 5);
  CHECK(scores.per_dim[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(scores.per_dim[1] == doctest::Approx(0.0).epsilon(0.05));
  CHECK(scores.per_dim[2] == doctest::Approx(0.0).epsilon(0.05));
}

TEST_CASE("sobol: additive objective splits variance evenly") {
  ObjectiveFn h = [](const std::vector<double>& x) { return x[0] + x[1]; };
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  Rng rng(33);
  SensitivityScores scores = sobol(h, space, 4096, rng);
  CHECK(scores.per_dim[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(scores.per_dim[1] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(scores.per_dim[0] - 0.5) < 0.05);
  CHECK(std::abs(scores.per_dim[1] - 0.5) < 0.05);
}

TEST_CASE("sobol: ishigami matches the analytic indices") {
  const double a = 7.0, b = 0.1;
  const double pi4 = kPi * kPi * kPi * kPi;
  const double pi8 = pi4 * pi4;
  const double v1 = 0.5 * (1.0 + b * pi4 / 5.0) * (1.0 + b * pi4 / 5.0);
  const double v2 = a * a / 8.0;
  const double vt3 = 8.0 * b * b * pi8 / 225.0;
  const double v = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi8 / 18.0 + 0.5;

  ObjectiveFn h = [a, b](const std::vector<double>& x) { return ishigami(x, a, b); };
  Rng rng(20240604);
  SensitivityScores scores = sobol(h, ishigami_space(), 1u << 14, rng);

  CHECK(scores.per_dim[0] == doctest::Approx(v1 / v).epsilon(0.15));
  CHECK(std::abs(scores.per_dim[0] - v1 / v) < 0.05);
  CHECK(std::abs(scores.per_dim[1] - v2 / v) < 0.05);
  CHECK(std::abs(scores.per_dim[2] - 0.0) < 0.05);
  REQUIRE(scores.total_order.has_value());
  CHECK(std::abs((*scores.total_order)[0] - (v1 + vt3) / v) < 0.05);
  CHECK(std::abs((*scores.total_order)[1] - v2 / v) < 0.05);
  CHECK(std::abs((*scores.total_order)[2] - vt3 / v) < 0.05);

  // first-order never materially exceeds total-order
  for (int i = 0; i < 3; ++i) {
    CHECK(scores.per_dim[i] <= (*scores.total_order)[i] + 0.05);
  }
}

TEST_CASE("sobol: constant objective yields all-zero indices") {
  ObjectiveFn h = [](const std::vector<double>&) { return 3.0; };
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  Rng rng(8);
  SensitivityScores scores = sobol(h, space, 64, rng);
  CHECK(scores.per_dim == std::vector<double>{0.0, 0.0});
  CHECK(*scores.total_variance < 1e-12);
}

TEST_CASE("sensitivity scores are deterministic given a seed") {
  ObjectiveFn h = [](const std::vector<double>& x) { return x[0] * x[0] + 0.3 * x[1]; };
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  Rng r1(123), r2(123);
  SensitivityScores s1 = sobol(h, space, 256, r1);
  SensitivityScores s2 = sobol(h, space, 256, r2);
  CHECK(s1.per_dim == s2.per_dim);
  CHECK(*s1.total_order == *s2.total_order);

  Rng r3(123), r4(123);
  SensitivityScores m1 = morris(h, space, 32, r3);
  SensitivityScores m2 = morris(h, space, 32, r4);
  CHECK(m1.per_dim == m2.per_dim);
}

TEST_CASE("thread count does not change sensitivity results") {
  ObjectiveFn h = [](const std::vector<double>& x) {
    return std::sin(7.0 * x[0]) + x[1] * x[1];
  };
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  Rng r1(99), r2(99), r3(99), r4(99);
  SensitivityScores one = sobol(h, space, 512, r1, 1);
  SensitivityScores four = sobol(h, space, 512, r2, 4);
  CHECK(one.per_dim == four.per_dim);
  CHECK(*one.total_order == *four.total_order);
  SensitivityScores m_one = morris(h, space, 64, r3, 1);
  SensitivityScores m_four = morris(h, space, 64, r4, 4);
  CHECK(m_one.per_dim == m_four.per_dim);
}

TEST_CASE("select_sensitive covers the spec rules") {
  SensitivityScores scores;
  scores.per_dim = {0.9, 0.05, 0.05};
  SensitiveDimensionSet set = select_sensitive(scores, 6);
  CHECK(set.dims == std::vector<int>{0});

  scores.per_dim.assign(10, 0.1);
  set = select_sensitive(scores, 3);
  CHECK(set.dims == std::vector<int>{0, 1, 2});

  scores.per_dim.assign(4, 0.0);
  set = select_sensitive(scores, 6);
  CHECK(set.dims == std::vector<int>{0});

  scores.per_dim = {0.1, 0.5, 0.4};
  set = select_sensitive(scores, 6);
  CHECK(set.dims == std::vector<int>{1, 2});
  CHECK(set.scores == std::vector<double>{0.5, 0.4});
}

TEST_CASE("run_until_converged stabilizes and reports K") {
  // dominated by dim 1
  ObjectiveFn h = [](const std::vector<double>& x) { return 10.0 * x[1] + 0.01 * x[0]; };
  SampleSpace space = unit_space(2, {0, 1}, {0.5, 0.5});
  Rng rng(7);
  ConvergedSensitivity conv =
      run_until_converged(SensitivityMethod::kSobol, h, space, 6, rng);
  CHECK(conv.converged);
  CHECK(conv.set.dims.front() == 1);
  CHECK(conv.scores.sample_count >= 16);

  // single dimension: the set cannot change, so it converges immediately
  SampleSpace one = unit_space(1, {0}, {0.5});
  ObjectiveFn h1 = [](const std::vector<double>& x) { return x[0]; };
  Rng rng2(7);
  ConvergedSensitivity conv1 =
      run_until_converged(SensitivityMethod::kMorris, h1, one, 6, rng2);
  CHECK(conv1.converged);
  CHECK(conv1.set.dims == std::vector<int>{0});
  CHECK(conv1.scores.sample_count == 20);
}

TEST_CASE("run_until_converged caps K at 2^14") {
  // alternating noise tends to keep flipping the selected set; cap applies
  auto noisy = [](const std::vector<double>& x) {
    return std::sin(1000.0 * x[0]) + std::sin(999.0 * x[1]) + std::sin(998.0 * x[2]);
  };
  SampleSpace space = unit_space(3, {0, 1, 2}, {0.5, 0.5, 0.5});
  Rng rng(13);
  ConvergedSensitivity conv = run_until_converged(
      SensitivityMethod::kSobol, ObjectiveFn(noisy), space, 1, rng);
  CHECK(conv.scores.sample_count <= (1u << 14));
  if (!conv.converged) {
    CHECK(conv.scores.sample_count == (1u << 14));
  }
}
