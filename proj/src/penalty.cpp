#include "rqo/penalty.hpp"

#include <algorithm>
#include <stdexcept>

#include "rqo/util.hpp"

namespace rqo {

PenaltySpec PenaltySpec::parse(const std::string& variant, double tau) {
  PenaltySpec spec;
  if (variant == "threshold") {
    spec.variant = PenaltyVariant::kThreshold;
  } else if (variant == "probability") {
    spec.variant = PenaltyVariant::kProbability;
  } else if (variant == "cost_difference") {
    spec.variant = PenaltyVariant::kCostDifference;
  } else if (variant == "cost_ratio") {
    spec.variant = PenaltyVariant::kCostRatio;
  } else if (variant == "variance") {
    spec.variant = PenaltyVariant::kVariance;
  } else {
    throw std::invalid_argument("unknown penalty variant: " + variant);
  }
  if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  spec.tau = tau;
  return spec;
}

std::string PenaltySpec::variant_name() const {
  switch (variant) {
    case PenaltyVariant::kThreshold: return "threshold";
    case PenaltyVariant::kProbability: return "probability";
    case PenaltyVariant::kCostDifference: return "cost_difference";
    case PenaltyVariant::kCostRatio: return "cost_ratio";
    case PenaltyVariant::kVariance: return "variance";
  }
  return "?";
}

double penalty(const PenaltySpec& spec, double plan_cost, double opt_cost) {
  switch (spec.variant) {
    case PenaltyVariant::kThreshold:
      return plan_cost <= (1.0 + spec.tau) * opt_cost ? 0.0 : plan_cost - opt_cost;
    case PenaltyVariant::kProbability:
      return plan_cost > (1.0 + spec.tau) * opt_cost ? 1.0 : 0.0;
    case PenaltyVariant::kCostDifference:
      return std::max(plan_cost - opt_cost, 0.0);
    case PenaltyVariant::kCostRatio:
      if (!(opt_cost > 0.0)) throw std::invalid_argument("cost_ratio needs opt_cost > 0");
      return plan_cost / opt_cost;
    case PenaltyVariant::kVariance:
      throw std::invalid_argument("variance penalty requires two-pass estimator");
  }
  throw std::logic_error("unhandled penalty variant");
}

double expected_penalty(const PenaltySpec& spec,
                        const std::vector<CostedSample>& samples) {
  std::vector<double> ones(samples.size(), 1.0);
  return expected_penalty_weighted(spec, samples, ones);
}

double expected_penalty_weighted(const PenaltySpec& spec,
                                 const std::vector<CostedSample>& samples,
                                 const std::vector<double>& weights) {
  if (samples.empty()) throw std::invalid_argument("expected_penalty of no samples");
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("weights do not match samples");
  }
  std::size_t n = samples.size();
  if (spec.variant == PenaltyVariant::kVariance) {
    std::vector<double> first(n), second(n);
    for (std::size_t i = 0; i < n; ++i) {
      double delta = samples[i].plan_cost - samples[i].opt_cost;
      first[i] = weights[i] * delta;
      second[i] = weights[i] * delta * delta;
    }
    double m1 = pairwise_sum(first) / static_cast<double>(n);
    double m2 = pairwise_sum(second) / static_cast<double>(n);
    return std::max(m2 - m1 * m1, 0.0);
  }
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms[i] = weights[i] * penalty(spec, samples[i].plan_cost, samples[i].opt_cost);
  }
  return pairwise_sum(terms) / static_cast<double>(n);
}

}  // namespace rqo
