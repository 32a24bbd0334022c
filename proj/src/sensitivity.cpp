#include "rqo/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rqo/parallel.hpp"
#include "rqo/util.hpp"

namespace rqo {

const char* sensitivity_method_name(SensitivityMethod m) {
  switch (m) {
    case SensitivityMethod::kLocal: return "local";
    case SensitivityMethod::kMorris: return "morris";
    case SensitivityMethod::kSobol: return "sobol";
  }
  return "?";
}

SensitivityMethod parse_sensitivity_method(const std::string& name) {
  if (name == "local") return SensitivityMethod::kLocal;
  if (name == "morris") return SensitivityMethod::kMorris;
  if (name == "sobol") return SensitivityMethod::kSobol;
  throw std::invalid_argument("unknown sensitivity method: " + name);
}

SampleSpace make_sample_space(const JointErrorDistribution& dist) {
  SampleSpace space;
  space.dims = static_cast<int>(dist.anchor.size());
  space.active_dims = dist.active_dims;
  space.anchor = dist.anchor.values;
  space.unit_box = true;
  space.draw = [dist](Rng& rng) { return sample_true_selectivities(dist, rng).values; };
  return space;
}

ObjectiveFn make_penalty_objective(const JoinGraph& graph, Plan plan,
                                   PenaltySpec spec, CallCounters* counters) {
  const JoinGraph* g = &graph;
  return [g, plan, spec, counters](const std::vector<double>& point) {
    SelectivityVector s{point};
    OptResult opt = optimize(*g, s, counters);
    double plan_cost = cost(*g, plan, s, counters);
    return penalty(spec, plan_cost, opt.cost);
  };
}

double local_sensitivity(const ObjectiveFn& fn, const JointErrorDistribution& dist,
                         int dim, int n, Rng& rng) {
  if (!dist.is_active(dim)) throw std::invalid_argument("dimension is frozen");
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  std::vector<double> values(static_cast<std::size_t>(n));
  const KernelDensity& g = dist.models[dim].pick(dist.anchor[dim]);
  std::vector<double> point = dist.anchor.values;
  for (int i = 0; i < n; ++i) {
    double eps = g.sample(rng);
    point[dim] = clamp_selectivity(dist.anchor[dim] * std::exp(-eps));
    values[static_cast<std::size_t>(i)] = fn(point);
  }
  return mean(values);
}

SensitivityScores local_scores(const ObjectiveFn& fn,
                               const JointErrorDistribution& dist, int n, Rng& rng,
                               int threads) {
  SensitivityScores scores;
  scores.method = SensitivityMethod::kLocal;
  scores.per_dim.assign(dist.anchor.size(), 0.0);
  scores.sample_count = static_cast<std::uint64_t>(n);

  // Points are generated sequentially per dimension, evaluated in parallel.
  struct Job {
    int dim;
    std::vector<double> point;
  };
  std::vector<Job> jobs;
  for (int dim : dist.active_dims) {
    const KernelDensity& g = dist.models[dim].pick(dist.anchor[dim]);
    for (int i = 0; i < n; ++i) {
      std::vector<double> point = dist.anchor.values;
      double eps = g.sample(rng);
      point[dim] = clamp_selectivity(dist.anchor[dim] * std::exp(-eps));
      jobs.push_back({dim, std::move(point)});
    }
  }
  std::vector<double> values(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) { values[i] = fn(jobs[i].point); });
  scores.objective_evals = jobs.size();

  std::size_t offset = 0;
  for (int dim : dist.active_dims) {
    scores.per_dim[dim] = mean(std::span<const double>(values).subspan(offset, n));
    offset += static_cast<std::size_t>(n);
  }
  return scores;
}

SensitivityScores morris(const ObjectiveFn& fn, const SampleSpace& space,
                         std::uint64_t K, Rng& rng, int threads) {
  if (K < 1) throw std::invalid_argument("morris needs K >= 1");
  const auto& active = space.active_dims;
  std::size_t da = active.size();
  std::size_t points_per_path = da + 1;

  // Pre-generate all path points; evaluation order then cannot matter.
  std::vector<std::vector<double>> points;
  points.reserve(K * points_per_path);
  struct Step {
    int dim;
    double delta;   // signed step actually taken
  };
  std::vector<std::vector<Step>> paths(K);
  for (std::uint64_t j = 0; j < K; ++j) {
    std::vector<double> x = space.draw(rng);
    std::vector<std::size_t> order = rng.permutation(da);
    points.push_back(x);
    for (std::size_t k = 0; k < da; ++k) {
      int dim = active[order[k]];
      double delta = 0.05 * space.anchor[static_cast<std::size_t>(dim)];
      double step = delta;
      if (space.unit_box && x[static_cast<std::size_t>(dim)] + delta > 1.0) {
        step = -delta;
      }
      x[static_cast<std::size_t>(dim)] += step;
      paths[j].push_back({dim, step});
      points.push_back(x);
    }
  }

  std::vector<double> values(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { values[i] = fn(points[i]); });

  std::vector<std::vector<double>> abs_effects(space.dims);
  for (std::uint64_t j = 0; j < K; ++j) {
    std::size_t base = j * points_per_path;
    for (std::size_t k = 0; k < da; ++k) {
      const Step& st = paths[j][k];
      double ee = (values[base + k + 1] - values[base + k]) / st.delta;
      abs_effects[st.dim].push_back(std::abs(ee));
    }
  }

  SensitivityScores scores;
  scores.method = SensitivityMethod::kMorris;
  scores.per_dim.assign(space.dims, 0.0);
  scores.sample_count = K;
  scores.objective_evals = points.size();
  for (int dim : active) {
    scores.per_dim[dim] = mean(abs_effects[dim]);
  }
  return scores;
}

SensitivityScores sobol(const ObjectiveFn& fn, const SampleSpace& space,
                        std::uint64_t K, Rng& rng, int threads) {
  if (K < 2) throw std::invalid_argument("sobol needs K >= 2");
  const auto& active = space.active_dims;
  std::size_t da = active.size();

  std::vector<std::vector<double>> a(K), b(K);
  for (std::uint64_t j = 0; j < K; ++j) a[j] = space.draw(rng);
  for (std::uint64_t j = 0; j < K; ++j) b[j] = space.draw(rng);

  // Evaluation grid in fixed order: A, B, then A with one column from B.
  std::vector<std::vector<double>> points;
  points.reserve(K * (da + 2));
  for (std::uint64_t j = 0; j < K; ++j) points.push_back(a[j]);
  for (std::uint64_t j = 0; j < K; ++j) points.push_back(b[j]);
  for (std::size_t i = 0; i < da; ++i) {
    std::size_t dim = static_cast<std::size_t>(active[i]);
    for (std::uint64_t j = 0; j < K; ++j) {
      std::vector<double> ab = a[j];
      ab[dim] = b[j][dim];
      points.push_back(std::move(ab));
    }
  }

  std::vector<double> values(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { values[i] = fn(points[i]); });

  std::span<const double> ya(values.data(), K);
  std::span<const double> yb(values.data() + K, K);
  std::vector<double> pooled(values.begin(), values.begin() + 2 * K);
  double var_y = population_variance(pooled);

  SensitivityScores scores;
  scores.method = SensitivityMethod::kSobol;
  scores.per_dim.assign(space.dims, 0.0);
  scores.total_order = std::vector<double>(space.dims, 0.0);
  scores.sample_count = K;
  scores.total_variance = var_y;
  scores.objective_evals = points.size();
  if (var_y < 1e-12) return scores;

  std::vector<double> first_terms(K), total_terms(K);
  for (std::size_t i = 0; i < da; ++i) {
    std::span<const double> yab(values.data() + (2 + i) * K, K);
    for (std::uint64_t j = 0; j < K; ++j) {
      double diff = yab[j] - ya[j];
      first_terms[j] = yb[j] * diff;
      total_terms[j] = diff * diff;
    }
    double v_first = pairwise_sum(first_terms) / static_cast<double>(K);
    double v_total = pairwise_sum(total_terms) / (2.0 * static_cast<double>(K));
    scores.per_dim[active[i]] = std::clamp(v_first / var_y, 0.0, 1.0);
    (*scores.total_order)[active[i]] = std::clamp(v_total / var_y, 0.0, 1.0);
  }
  return scores;
}

SensitiveDimensionSet select_sensitive(const SensitivityScores& scores, int k_max) {
  if (k_max < 1) throw std::invalid_argument("k_max must be positive");
  std::vector<int> order(scores.per_dim.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (scores.per_dim[x] != scores.per_dim[y]) {
      return scores.per_dim[x] > scores.per_dim[y];
    }
    return x < y;
  });

  double total = pairwise_sum(scores.per_dim);
  SensitiveDimensionSet set;
  if (total <= 0.0) {
    set.dims = {0};
    set.scores = {scores.per_dim.empty() ? 0.0 : scores.per_dim[0]};
    return set;
  }
  double cumulative = 0.0;
  for (int dim : order) {
    set.dims.push_back(dim);
    set.scores.push_back(scores.per_dim[dim]);
    cumulative += scores.per_dim[dim];
    if (cumulative >= 0.8 * total || static_cast<int>(set.dims.size()) >= k_max) break;
  }
  return set;
}

ConvergedSensitivity run_until_converged(SensitivityMethod method,
                                         const ObjectiveFn& fn,
                                         const SampleSpace& space, int k_max,
                                         Rng& rng, int threads) {
  constexpr std::uint64_t kCap = 1u << 14;
  std::uint64_t K = method == SensitivityMethod::kSobol ? 8 : 10;

  ConvergedSensitivity result;
  std::vector<int> prev_set;
  bool have_prev = false;
  for (;;) {
    result.scores = method == SensitivityMethod::kSobol
                        ? sobol(fn, space, K, rng, threads)
                        : morris(fn, space, K, rng, threads);
    result.set = select_sensitive(result.scores, k_max);
    std::vector<int> as_set = result.set.dims;
    std::sort(as_set.begin(), as_set.end());
    if (have_prev && as_set == prev_set) {
      result.converged = true;
      return result;
    }
    prev_set = std::move(as_set);
    have_prev = true;
    if (K * 2 > kCap) {
      result.converged = false;
      return result;
    }
    K *= 2;
  }
}

}  // namespace rqo
