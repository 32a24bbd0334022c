#include "rqo/pqo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rqo/util.hpp"

namespace rqo {

double kl_divergence(const JointErrorDistribution& from,
                     const JointErrorDistribution& to, int samples, Rng& rng) {
  if (from.anchor.size() != to.anchor.size()) {
    throw std::invalid_argument("kl_divergence dimension mismatch");
  }
  if (samples < 1) throw std::invalid_argument("kl_divergence needs samples >= 1");

  double kl = 0.0;
  std::vector<double> terms(static_cast<std::size_t>(samples));
  for (std::size_t i = 0; i < from.anchor.size(); ++i) {
    const KernelDensity& g = from.models[i].pick(from.anchor[i]);
    const KernelDensity& g_to = to.models[i].pick(to.anchor[i]);
    // Same true selectivity expressed in each anchor's log-error coordinate.
    double shift = std::log(to.anchor[i] / from.anchor[i]);
    for (int m = 0; m < samples; ++m) {
      double eps = g.sample(rng);
      terms[static_cast<std::size_t>(m)] = g.log_pdf(eps) - g_to.log_pdf(eps + shift);
    }
    kl += std::max(mean(terms), 0.0);
  }
  return kl;
}

double reuse_threshold(std::uint64_t cached_samples) {
  if (cached_samples < 1) throw std::invalid_argument("reuse_threshold needs S >= 1");
  return std::log(static_cast<double>(cached_samples));
}

PQODecision select_for_query(const AnchorEntry& anchor,
                             const SelectivityVector& s_hat_prime,
                             const PenaltySpec& spec, Rng& rng, int kl_samples,
                             CallCounters* counters) {
  (void)counters;  // the reuse path issues no Opt or Cost calls
  if (s_hat_prime.size() != anchor.s_hat.size()) {
    throw std::invalid_argument("query has wrong dimension count");
  }

  PQODecision decision;
  decision.threshold = reuse_threshold(anchor.cache.entries.size());

  JointErrorDistribution dist_prime = anchor.dist.reanchored(s_hat_prime);
  decision.kl = kl_divergence(anchor.dist, dist_prime, kl_samples, rng);
  if (!reuse_allowed(decision.kl, decision.threshold)) {
    decision.outcome = PQODecision::Outcome::kFallback;
    decision.fallback_reason = "kl_exceeds_threshold";
    return decision;
  }

  // Weights live in the sensitive subspace only: frozen coordinates of the
  // cached samples sit at the anchor, so the numerator keeps them there and
  // swaps in the new estimates on the active dimensions.
  std::vector<int> sens = anchor.sensitive_dims;
  std::sort(sens.begin(), sens.end());
  JointErrorDistribution denom = anchor.dist.restricted(sens);
  SelectivityVector hybrid = anchor.s_hat;
  for (int dim : sens) hybrid[dim] = s_hat_prime[dim];
  JointErrorDistribution numer = denom.reanchored(hybrid);

  std::size_t n = anchor.cache.entries.size();
  std::vector<double> weights(n);
  for (std::size_t k = 0; k < n; ++k) {
    const SelectivityVector& s_star = anchor.cache.entries[k].s;
    weights[k] = joint_pdf(numer, s_star) / joint_pdf(denom, s_star);
  }
  decision.mean_weight = mean(weights);
  if (!(decision.mean_weight > 0.0)) {
    decision.outcome = PQODecision::Outcome::kFallback;
    decision.fallback_reason = "degenerate_weights";
    return decision;
  }

  std::vector<EvaluatedCandidate> reweighted;
  for (const AnchorCandidate& cand : anchor.candidates) {
    std::vector<CostedSample> samples(n);
    for (std::size_t k = 0; k < n; ++k) {
      samples[k] = {anchor.cache.entries[k].s, anchor.cache.entries[k].opt_cost,
                    cand.per_sample_costs[k]};
    }
    EvaluatedCandidate ev;
    ev.fingerprint = cand.plan.fingerprint();
    ev.expected_penalty = expected_penalty_weighted(spec, samples, weights);
    ev.cost_at_anchor = cand.cost_at_anchor;
    reweighted.push_back(std::move(ev));
  }
  reweighted = rank_candidates(std::move(reweighted));

  decision.outcome = PQODecision::Outcome::kReuse;
  decision.chosen_fingerprint = reweighted.front().fingerprint;
  for (const auto& ev : reweighted) {
    decision.reweighted.emplace_back(ev.fingerprint, ev.expected_penalty);
  }
  return decision;
}

AnchorEntry register_anchor(const std::string& template_id, const JoinGraph& graph,
                            const SelectivityVector& s_hat,
                            const JointErrorDistribution& dist,
                            const PenaltySpec& spec, std::uint64_t S, Rng& rng,
                            CallCounters* counters, int k_max, int threads) {
  validate_selectivities(graph, s_hat);

  OptResult traditional = optimize(graph, s_hat, counters);

  ObjectiveFn objective = make_penalty_objective(graph, traditional.plan, spec, counters);
  SampleSpace space = make_sample_space(dist);
  ConvergedSensitivity sens =
      run_until_converged(SensitivityMethod::kSobol, objective, space, k_max, rng, threads);

  std::vector<int> sens_dims_sorted = sens.set.dims;
  std::sort(sens_dims_sorted.begin(), sens_dims_sorted.end());
  JointErrorDistribution restricted = dist.restricted(sens_dims_sorted);

  auto [pool, cache] = build_pool(graph, restricted, S, rng, counters, &traditional.plan);
  std::vector<EvaluatedCandidate> evaluated =
      evaluate_pool(graph, pool, cache, spec, counters, threads);
  std::vector<EvaluatedCandidate> top = top_candidates(evaluated, 3);

  AnchorEntry entry;
  entry.template_id = template_id;
  entry.s_hat = s_hat;
  entry.dist = dist;
  entry.sensitive_dims = sens.set.dims;
  entry.cache = std::move(cache);
  for (const EvaluatedCandidate& ev : top) {
    AnchorCandidate cand;
    cand.plan = pool.plans.at(ev.fingerprint).plan;
    cand.expected_penalty = ev.expected_penalty;
    cand.cost_at_anchor = ev.cost_at_anchor;
    cand.per_sample_costs = ev.per_sample_costs;
    entry.candidates.push_back(std::move(cand));
  }
  entry.sensitivity = sens.scores;
  entry.sensitivity_converged = sens.converged;
  return entry;
}

}  // namespace rqo
