#include "rqo/robust_select.hpp"

#include <algorithm>
#include <stdexcept>

#include "rqo/parallel.hpp"

namespace rqo {

std::pair<CandidatePool, SampleCache> build_pool(const JoinGraph& graph,
                                                 const JointErrorDistribution& dist,
                                                 std::uint64_t S, Rng& rng,
                                                 CallCounters* counters,
                                                 const Plan* force_include) {
  if (S < 1) throw std::invalid_argument("build_pool needs S >= 1");
  if (dist.active_dims.empty()) {
    throw std::invalid_argument("build_pool needs at least one active dimension");
  }

  CandidatePool pool;
  SampleCache cache;
  cache.anchor = dist.anchor;
  cache.active_dims = dist.active_dims;
  cache.entries.reserve(S);

  for (std::uint64_t i = 0; i < S; ++i) {
    SelectivityVector s = sample_true_selectivities(dist, rng);
    OptResult opt = optimize(graph, s, counters);
    cache.entries.push_back({s, opt.plan.fingerprint(), opt.cost});
    auto [it, inserted] = pool.plans.try_emplace(opt.plan.fingerprint());
    if (inserted) it->second.plan = opt.plan;
    ++it->second.occurrences;
  }

  if (force_include) {
    pool.plans.try_emplace(force_include->fingerprint(), Candidate{*force_include, 0, 0.0});
  }

  for (auto& [fp, cand] : pool.plans) {
    cand.cost_at_anchor = cost(graph, cand.plan, dist.anchor, counters);
  }
  return {std::move(pool), std::move(cache)};
}

std::vector<EvaluatedCandidate> evaluate_pool(const JoinGraph& graph,
                                              const CandidatePool& pool,
                                              const SampleCache& cache,
                                              const PenaltySpec& spec,
                                              CallCounters* counters, int threads) {
  if (cache.entries.empty()) throw std::invalid_argument("evaluate_pool needs a nonempty cache");

  std::vector<const Candidate*> candidates;
  std::vector<std::string> fingerprints;
  for (const auto& [fp, cand] : pool.plans) {
    candidates.push_back(&cand);
    fingerprints.push_back(fp);
  }

  std::size_t n_cand = candidates.size();
  std::size_t n_samples = cache.entries.size();
  std::vector<double> costs(n_cand * n_samples);
  parallel_for(costs.size(), threads, [&](std::size_t idx) {
    std::size_t c = idx / n_samples;
    std::size_t k = idx % n_samples;
    costs[idx] = cost(graph, candidates[c]->plan, cache.entries[k].s, counters);
  });

  std::vector<EvaluatedCandidate> out(n_cand);
  for (std::size_t c = 0; c < n_cand; ++c) {
    std::vector<CostedSample> samples(n_samples);
    std::vector<double> per_sample(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
      per_sample[k] = costs[c * n_samples + k];
      samples[k] = {cache.entries[k].s, cache.entries[k].opt_cost, per_sample[k]};
    }
    out[c].fingerprint = fingerprints[c];
    out[c].expected_penalty = expected_penalty(spec, samples);
    out[c].cost_at_anchor = candidates[c]->cost_at_anchor;
    out[c].per_sample_costs = std::move(per_sample);
  }
  return out;
}

namespace {

bool candidate_less(const EvaluatedCandidate& a, const EvaluatedCandidate& b) {
  if (a.expected_penalty != b.expected_penalty) {
    return a.expected_penalty < b.expected_penalty;
  }
  if (a.cost_at_anchor != b.cost_at_anchor) return a.cost_at_anchor < b.cost_at_anchor;
  return a.fingerprint < b.fingerprint;
}

}  // namespace

std::vector<EvaluatedCandidate> rank_candidates(std::vector<EvaluatedCandidate> evaluated) {
  std::sort(evaluated.begin(), evaluated.end(), candidate_less);
  return evaluated;
}

RobustChoice choose_robust(const CandidatePool& pool,
                           const std::vector<EvaluatedCandidate>& evaluated) {
  if (evaluated.empty()) throw std::invalid_argument("choose_robust of empty candidate list");
  std::vector<EvaluatedCandidate> ranked = rank_candidates(evaluated);
  RobustChoice choice;
  choice.plan = pool.plans.at(ranked.front().fingerprint).plan;
  choice.expected_penalty = ranked.front().expected_penalty;
  choice.per_candidate = std::move(ranked);
  return choice;
}

std::vector<EvaluatedCandidate> top_candidates(
    const std::vector<EvaluatedCandidate>& evaluated, std::size_t n) {
  if (n < 1) throw std::invalid_argument("top_candidates needs n >= 1");
  std::vector<EvaluatedCandidate> ranked = rank_candidates(evaluated);
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

}  // namespace rqo
