#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rqo/penalty.hpp"
#include "rqo/rng.hpp"

using namespace rqo;

namespace {

PenaltySpec threshold(double tau = 1.2) { return {PenaltyVariant::kThreshold, tau}; }

std::vector<CostedSample> make_samples(std::initializer_list<std::pair<double, double>> pairs) {
  std::vector<CostedSample> out;
  for (auto [plan_cost, opt_cost] : pairs) {
    out.push_back({SelectivityVector{}, opt_cost, plan_cost});
  }
  return out;
}

}  // namespace

TEST_CASE("threshold penalty case split") {
  CHECK(penalty(threshold(), 200.0, 100.0) == 0.0);
  CHECK(penalty(threshold(), 300.0, 100.0) == 200.0);
  CHECK(penalty(threshold(), 220.0, 100.0) == 0.0);  // boundary inclusive
  CHECK(penalty(threshold(0.0), 100.0, 100.0) == 0.0);
}

TEST_CASE("probability and ratio variants") {
  PenaltySpec prob{PenaltyVariant::kProbability, 1.2};
  CHECK(penalty(prob, 300.0, 100.0) == 1.0);
  CHECK(penalty(prob, 200.0, 100.0) == 0.0);

  PenaltySpec ratio{PenaltyVariant::kCostRatio, 0.0};
  CHECK(penalty(ratio, 300.0, 100.0) == 3.0);
  CHECK_THROWS_AS(penalty(ratio, 300.0, 0.0), std::invalid_argument);

  PenaltySpec diff{PenaltyVariant::kCostDifference, 0.0};
  CHECK(penalty(diff, 300.0, 100.0) == 200.0);
  CHECK(penalty(diff, 100.0, 300.0) == 0.0);  // floored for inexact hosts
}

TEST_CASE("variance penalty is rejected at the scalar level") {
  PenaltySpec var{PenaltyVariant::kVariance, 0.0};
  CHECK_THROWS_AS(penalty(var, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("expected_penalty means and variance") {
  CHECK(expected_penalty(threshold(), make_samples({{300, 100}, {200, 100}})) == 100.0);
  CHECK(expected_penalty(threshold(), make_samples({{300, 100}, {300, 100}})) == 200.0);

  PenaltySpec var{PenaltyVariant::kVariance, 0.0};
  CHECK(expected_penalty(var, make_samples({{100, 100}, {110, 100}})) ==
        doctest::Approx(25.0));
  CHECK_THROWS_AS(expected_penalty(threshold(), {}), std::invalid_argument);
}

TEST_CASE("randomized triples satisfy the threshold case split") {
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    double opt = std::exp(rng.uniform() * 10.0);
    double plan = opt * (1.0 + 3.0 * rng.uniform());
    double tau = 2.0 * rng.uniform();
    double p = penalty(threshold(tau), plan, opt);
    if (plan <= (1.0 + tau) * opt) {
      CHECK(p == 0.0);
    } else {
      CHECK(p == plan - opt);
    }
    CHECK(p >= 0.0);
  }
}

TEST_CASE("penalty is monotone in plan cost for every variant") {
  Rng rng(17);
  for (auto variant : {PenaltyVariant::kThreshold, PenaltyVariant::kProbability,
                       PenaltyVariant::kCostDifference, PenaltyVariant::kCostRatio}) {
    PenaltySpec spec{variant, 1.2};
    for (int i = 0; i < 2000; ++i) {
      double opt = 1.0 + std::exp(rng.uniform() * 8.0);
      double c1 = opt * (0.5 + 4.0 * rng.uniform());
      double c2 = c1 * (1.0 + rng.uniform());
      CHECK(penalty(spec, c1, opt) <= penalty(spec, c2, opt));
    }
  }
}

TEST_CASE("probability expectation stays within [0,1]") {
  Rng rng(29);
  PenaltySpec prob{PenaltyVariant::kProbability, 1.2};
  std::vector<CostedSample> samples;
  for (int i = 0; i < 500; ++i) {
    double opt = 1.0 + rng.uniform() * 100.0;
    samples.push_back({SelectivityVector{}, opt, opt * (1.0 + 4.0 * rng.uniform())});
  }
  double ep = expected_penalty(prob, samples);
  CHECK(ep >= 0.0);
  CHECK(ep <= 1.0);
}

TEST_CASE("variance matches two-pass computation") {
  Rng rng(31);
  std::vector<CostedSample> samples;
  for (int i = 0; i < 1000; ++i) {
    double opt = 1.0 + rng.uniform() * 50.0;
    samples.push_back({SelectivityVector{}, opt, opt + rng.uniform() * 20.0});
  }
  PenaltySpec var{PenaltyVariant::kVariance, 0.0};
  double got = expected_penalty(var, samples);

  double m = 0.0;
  for (const auto& s : samples) m += s.plan_cost - s.opt_cost;
  m /= static_cast<double>(samples.size());
  double v = 0.0;
  for (const auto& s : samples) {
    double d = s.plan_cost - s.opt_cost - m;
    v += d * d;
  }
  v /= static_cast<double>(samples.size());
  CHECK(got == doctest::Approx(v).epsilon(1e-9));
  CHECK(got >= 0.0);
}

TEST_CASE("uniform cost rescaling preserves the argmin") {
  Rng rng(37);
  for (auto variant : {PenaltyVariant::kThreshold, PenaltyVariant::kProbability,
                       PenaltyVariant::kCostDifference, PenaltyVariant::kCostRatio,
                       PenaltyVariant::kVariance}) {
    PenaltySpec spec{variant, 1.2};
    // three synthetic candidates sharing opt costs
    std::vector<std::vector<CostedSample>> candidates(3);
    for (int k = 0; k < 200; ++k) {
      double opt = 1.0 + rng.uniform() * 100.0;
      for (int c = 0; c < 3; ++c) {
        candidates[c].push_back(
            {SelectivityVector{}, opt, opt * (1.0 + rng.uniform() * (c + 1))});
      }
    }
    auto argmin = [&](double lambda) {
      int best = -1;
      double best_ep = 0.0;
      for (int c = 0; c < 3; ++c) {
        auto scaled = candidates[c];
        for (auto& s : scaled) {
          s.plan_cost *= lambda;
          s.opt_cost *= lambda;
        }
        double ep = expected_penalty(spec, scaled);
        if (best < 0 || ep < best_ep) {
          best = c;
          best_ep = ep;
        }
      }
      return best;
    };
    CHECK(argmin(1.0) == argmin(7.5));
  }
}
