#pragma once

#include <string>
#include <vector>

#include "rqo/join_graph.hpp"

namespace rqo {

enum class PenaltyVariant {
  kThreshold,       // 0 within tolerance, else cost difference
  kProbability,     // indicator of exceeding the tolerance
  kCostDifference,  // plan cost minus optimal cost, floored at 0
  kCostRatio,       // plan cost over optimal cost
  kVariance,        // variance of the extra cost; expected-penalty level only
};

struct PenaltySpec {
  PenaltyVariant variant = PenaltyVariant::kThreshold;
  double tau = 1.2;

  static PenaltySpec parse(const std::string& variant, double tau);
  std::string variant_name() const;
};

struct CostedSample {
  SelectivityVector s;
  double opt_cost = 0.0;
  double plan_cost = 0.0;
};

// Scalar penalty of one (plan cost, optimal cost) pair. kVariance is a
// distribution-level construct and is rejected here.
double penalty(const PenaltySpec& spec, double plan_cost, double opt_cost);

// Mean penalty over the samples; kVariance computes
// E[(plan-opt)^2] - E[plan-opt]^2, floored at 0.
double expected_penalty(const PenaltySpec& spec,
                        const std::vector<CostedSample>& samples);

// Importance-weighted variant: (1/n) sum w_i * penalty_i with unnormalized
// weights; kVariance uses the weighted moments the same way.
double expected_penalty_weighted(const PenaltySpec& spec,
                                 const std::vector<CostedSample>& samples,
                                 const std::vector<double>& weights);

}  // namespace rqo
