#include "rqo/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "rqo/serialize.hpp"
#include "rqo/util.hpp"

namespace rqo {

CallCounts snapshot(const CallCounters& c) {
  return {c.opt_calls.load(), c.cost_calls.load()};
}

namespace {

CallCounts delta(const CallCounts& before, const CallCounters& now) {
  return {now.opt_calls.load() - before.opt_calls,
          now.cost_calls.load() - before.cost_calls};
}

}  // namespace

std::map<int, std::vector<QueryletId>> profiling_querylets(const JoinGraph& graph) {
  // The ideal profile store contains every querylet the matcher can use;
  // generating against that set makes match_querylets recover it exactly.
  std::set<QueryletId> universe;
  for (const auto& t : graph.tables) {
    if (t.local_selection_dim) {
      universe.insert(QueryletId::make({t.name}, {}, {t.name}));
    }
  }
  for (const auto& e : graph.edges) {
    const std::string& rn = graph.tables[e.left].name;
    const std::string& sn = graph.tables[e.right].name;
    std::vector<std::string> flags;
    if (graph.table_has_selection(e.left)) flags.push_back(rn);
    if (graph.table_has_selection(e.right)) flags.push_back(sn);
    if (!flags.empty()) {
      universe.insert(QueryletId::make({rn, sn}, {{rn, sn}}, std::move(flags)));
      continue;
    }
    for (int x = 0; x < graph.table_count(); ++x) {
      if (x == e.left || x == e.right || !graph.table_has_selection(x)) continue;
      bool adjacent = false;
      for (const auto& e2 : graph.edges) {
        if ((e2.left == x && (e2.right == e.left || e2.right == e.right)) ||
            (e2.right == x && (e2.left == e.left || e2.left == e.right))) {
          adjacent = true;
          break;
        }
      }
      if (!adjacent) continue;
      const std::string& xn = graph.tables[x].name;
      std::vector<std::pair<std::string, std::string>> edges;
      for (const auto& e2 : graph.edges) {
        bool l_in = e2.left == x || e2.left == e.left || e2.left == e.right;
        bool r_in = e2.right == x || e2.right == e.left || e2.right == e.right;
        if (l_in && r_in) {
          edges.emplace_back(graph.tables[e2.left].name, graph.tables[e2.right].name);
        }
      }
      universe.insert(QueryletId::make({xn, rn, sn}, std::move(edges), {xn}));
    }
  }
  return match_querylets(graph, universe);
}

std::vector<Observation> generate_observations(const Scenario& scenario,
                                               int n_per_querylet, Rng& rng) {
  if (n_per_querylet < 1) throw std::invalid_argument("need n >= 1 observations");
  scenario.validate();
  auto by_dim = profiling_querylets(scenario.graph);

  std::vector<Observation> out;
  for (const auto& [dim, querylets] : by_dim) {
    const GeneratorSpec& gen = scenario.true_gen[static_cast<std::size_t>(dim)];
    const EstimatorSpec& est = scenario.estimator[static_cast<std::size_t>(dim)];
    for (const QueryletId& q : querylets) {
      for (int i = 0; i < n_per_querylet; ++i) {
        double actual = gen.sample(rng);
        double noise = est.noise_sd > 0.0 ? rng.normal(0.0, est.noise_sd) : 0.0;
        double estimated = clamp_selectivity(actual * est.bias * std::exp(noise));
        out.push_back({q, estimated, actual});
      }
    }
  }
  return out;
}

JointErrorDistribution build_distribution(const JoinGraph& graph,
                                          const ProfileStore& store,
                                          const SelectivityVector& s_hat) {
  validate_selectivities(graph, s_hat);
  auto matched = match_querylets(graph, store.querylet_ids());

  JointErrorDistribution dist;
  dist.anchor = s_hat;
  int d = graph.dim_count();
  for (int dim = 0; dim < d; ++dim) {
    std::vector<ErrorProfile> profiles;
    for (const QueryletId& q : matched[dim]) {
      auto it = store.profiles().find(q);
      if (it != store.profiles().end()) profiles.push_back(it->second);
    }
    dist.models.push_back(build_model(dim, profiles));
    dist.active_dims.push_back(dim);
  }
  return dist;
}

double penalty_on_cache(const JoinGraph& graph, const Plan& plan,
                        const SampleCache& cache, const PenaltySpec& spec,
                        CallCounters* counters) {
  std::vector<CostedSample> samples;
  samples.reserve(cache.entries.size());
  for (const auto& e : cache.entries) {
    samples.push_back({e.s, e.opt_cost, cost(graph, plan, e.s, counters)});
  }
  return expected_penalty(spec, samples);
}

namespace {

// Failures bubble up tagged with the pipeline stage they came from.
template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(name) + ": " + e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const Scenario& scenario, const PipelineOptions& opt,
                            std::uint64_t seed) {
  scenario.validate();
  const QuerySpec& query = scenario.query(opt.query);
  PenaltySpec spec = opt.penalty_override.value_or(scenario.penalty);

  Rng rng(seed);
  CallCounters counters;
  PipelineResult result;
  result.query_name = query.name;
  result.s_hat = query.s_hat;

  CallCounts mark = snapshot(counters);
  stage("error_profiling", [&] {
    if (opt.profile_store_text) {
      result.store = ProfileStore::from_json_text(*opt.profile_store_text);
    } else {
      for (const Observation& obs :
           generate_observations(scenario, opt.observations, rng)) {
        result.store.ingest(obs);
      }
    }
    result.dist = build_distribution(scenario.graph, result.store, query.s_hat);
  });
  result.profile_counts = delta(mark, counters);

  mark = snapshot(counters);
  OptResult traditional =
      stage("plan_space", [&] { return optimize(scenario.graph, query.s_hat, &counters); });
  result.traditional = traditional.plan;
  result.traditional_cost_at_anchor = traditional.cost;
  ObjectiveFn objective =
      make_penalty_objective(scenario.graph, traditional.plan, spec, &counters);
  SampleSpace space = make_sample_space(result.dist);
  result.sensitivity = stage("sensitivity", [&] {
    return run_until_converged(SensitivityMethod::kSobol, objective, space, opt.k_max,
                               rng, opt.threads);
  });
  result.sensitivity_counts = delta(mark, counters);

  std::vector<int> sens_dims = result.sensitivity.set.dims;
  std::sort(sens_dims.begin(), sens_dims.end());
  JointErrorDistribution restricted = result.dist.restricted(sens_dims);

  mark = snapshot(counters);
  stage("robust_select", [&] {
    auto [pool, cache] = build_pool(scenario.graph, restricted, opt.samples, rng,
                                    &counters, &traditional.plan);
    result.pool = std::move(pool);
    result.cache = std::move(cache);
  });
  result.pool_counts = delta(mark, counters);

  mark = snapshot(counters);
  stage("robust_select", [&] {
    result.evaluated = rank_candidates(evaluate_pool(scenario.graph, result.pool,
                                                     result.cache, spec, &counters,
                                                     opt.threads));
    result.choice = choose_robust(result.pool, result.evaluated);
  });
  result.evaluate_counts = delta(mark, counters);

  mark = snapshot(counters);
  stage("baselines", [&] {
    result.recentered = recenter(result.dist, query.s_hat);
    OptResult rec = optimize(scenario.graph, result.recentered, &counters);
    result.recentered_plan = rec.plan;
    result.robust_ep = result.choice.expected_penalty;
    for (const auto& ev : result.evaluated) {
      if (ev.fingerprint == result.traditional.fingerprint()) {
        result.traditional_ep = ev.expected_penalty;
      }
    }
    result.recentered_ep = penalty_on_cache(scenario.graph, result.recentered_plan,
                                            result.cache, spec, &counters);
  });
  result.baseline_counts = delta(mark, counters);

  return result;
}

namespace {

struct InstanceRealization {
  JoinGraph graph;
  SelectivityVector s_true;
};

InstanceRealization realize_instance(const Scenario& scenario, const InstanceSpec& inst) {
  InstanceRealization r;
  r.graph = scenario.graph;
  r.s_true = scenario.base_true;
  for (auto& t : r.graph.tables) {
    auto it = inst.cardinality_scale.find(t.name);
    if (it != inst.cardinality_scale.end()) t.base_cardinality *= it->second;
  }
  for (const auto& [dim, factor] : inst.selectivity_scale) {
    r.s_true[dim] = clamp_selectivity(r.s_true[dim] * factor);
  }
  for (const auto& [dim, v] : inst.selectivity_override) {
    r.s_true[dim] = v;
  }
  return r;
}

}  // namespace

InstanceTable simulate_instances(const Scenario& scenario,
                                 const std::vector<std::pair<std::string, Plan>>& plans,
                                 CallCounters* counters) {
  scenario.validate();
  InstanceTable table;
  for (const auto& [label, plan] : plans) {
    table.plan_labels.push_back(label);
    table.plan_fingerprints.push_back(plan.fingerprint());
  }

  std::vector<std::pair<std::string, InstanceRealization>> realized;
  realized.emplace_back("base", InstanceRealization{scenario.graph, scenario.base_true});
  for (const auto& inst : scenario.instances) {
    realized.emplace_back(inst.name, realize_instance(scenario, inst));
  }

  for (const auto& [name, real] : realized) {
    InstanceRow row;
    row.instance = name;
    for (const auto& [label, plan] : plans) {
      row.plan_costs.push_back(cost(real.graph, plan, real.s_true, counters));
    }
    row.optimal_cost = optimize(real.graph, real.s_true, counters).cost;
    table.rows.push_back(std::move(row));
  }
  return table;
}

PqoResult run_pqo_workload(const Scenario& scenario, const PqoOptions& opt,
                           std::uint64_t seed) {
  scenario.validate();
  if (!scenario.pqo && !opt.queries_jsonl) {
    throw std::invalid_argument("scenario has no pqo section and no query list given");
  }
  const std::string anchor_query_name =
      scenario.pqo ? scenario.pqo->anchor_query : std::string();
  const QuerySpec& anchor_query = scenario.query(anchor_query_name);

  Rng rng(seed);
  CallCounters registration;
  PqoResult result;

  ProfileStore store;
  if (opt.profile_store_text) {
    store = ProfileStore::from_json_text(*opt.profile_store_text);
  } else {
    for (const Observation& obs : generate_observations(scenario, opt.observations, rng)) {
      store.ingest(obs);
    }
  }
  JointErrorDistribution dist =
      build_distribution(scenario.graph, store, anchor_query.s_hat);

  result.anchor = register_anchor(scenario.name, scenario.graph, anchor_query.s_hat,
                                  dist, scenario.penalty, opt.samples, rng,
                                  &registration, opt.k_max, opt.threads);
  result.registration_counts = snapshot(registration);

  // Evaluation workload: explicit list, or drawn from the scenario.
  std::vector<SelectivityVector> workload;
  if (opt.queries_jsonl) {
    std::istringstream in(*opt.queries_jsonl);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      SelectivityVector s;
      s.values = j.at("s_hat").get<std::vector<double>>();
      validate_selectivities(scenario.graph, s);
      workload.push_back(std::move(s));
    }
  } else {
    int count = opt.instance_count.value_or(scenario.pqo->instance_count);
    for (int i = 0; i < count; ++i) {
      SelectivityVector s;
      for (const auto& gen : scenario.pqo->instance_distribution) {
        s.values.push_back(gen.sample(rng));
      }
      workload.push_back(std::move(s));
    }
  }

  CallCounters reuse_counters;
  CallCounters comparison;
  std::uint64_t reused = 0;
  std::vector<double> chosen_eps, traditional_eps;
  int index = 0;
  for (const SelectivityVector& s_prime : workload) {
    CallCounts before = snapshot(reuse_counters);
    PQODecision decision = select_for_query(result.anchor, s_prime, scenario.penalty,
                                            rng, opt.kl_samples, &reuse_counters);
    CallCounts reuse_delta = delta(before, reuse_counters);

    PqoQueryLog log;
    log.index = index++;
    log.s_hat_prime = s_prime;
    log.kl = decision.kl;
    log.threshold = decision.threshold;
    log.reused = decision.outcome == PQODecision::Outcome::kReuse;
    log.fallback_reason = decision.fallback_reason;
    log.chosen_fingerprint = decision.chosen_fingerprint;
    log.mean_weight = decision.mean_weight;
    log.reuse_opt_calls = reuse_delta.opt_calls;

    if (log.reused) {
      ++reused;
      log.chosen_ep = decision.reweighted.front().second;
      if (opt.compare_traditional) {
        // Baseline column: what the traditional optimizer would pick at the
        // new estimates, reweighted over the same cache.
        OptResult trad = optimize(scenario.graph, s_prime, &comparison);
        double trad_ep = 0.0;
        bool found = false;
        for (const auto& [fp, ep] : decision.reweighted) {
          if (fp == trad.plan.fingerprint()) {
            trad_ep = ep;
            found = true;
            break;
          }
        }
        if (!found) {
          std::vector<CostedSample> samples;
          std::size_t n = result.anchor.cache.entries.size();
          samples.reserve(n);
          std::vector<double> weights(n);
          std::vector<int> sens = result.anchor.sensitive_dims;
          std::sort(sens.begin(), sens.end());
          JointErrorDistribution denom = result.anchor.dist.restricted(sens);
          SelectivityVector hybrid = result.anchor.s_hat;
          for (int dim : sens) hybrid[dim] = s_prime[dim];
          JointErrorDistribution numer = denom.reanchored(hybrid);
          for (std::size_t k = 0; k < n; ++k) {
            const CacheEntry& e = result.anchor.cache.entries[k];
            weights[k] = joint_pdf(numer, e.s) / joint_pdf(denom, e.s);
            samples.push_back({e.s, e.opt_cost, cost(scenario.graph, trad.plan, e.s, &comparison)});
          }
          trad_ep = expected_penalty_weighted(scenario.penalty, samples, weights);
        }
        log.traditional_ep = trad_ep;
        chosen_eps.push_back(*log.chosen_ep);
        traditional_eps.push_back(trad_ep);
      }
    }
    result.log.push_back(std::move(log));
  }

  result.reuse_fraction =
      workload.empty() ? 0.0
                       : static_cast<double>(reused) / static_cast<double>(workload.size());
  if (!chosen_eps.empty()) {
    result.mean_chosen_ep = mean(chosen_eps);
    result.mean_traditional_ep = mean(traditional_eps);
  }
  result.reuse_counts = snapshot(reuse_counters);
  result.comparison_counts = snapshot(comparison);
  return result;
}

std::string render_report_text(const nlohmann::ordered_json& body) {
  std::string out;
  std::function<void(const nlohmann::ordered_json&, const std::string&)> walk =
      [&](const nlohmann::ordered_json& node, const std::string& path) {
        if (node.is_object()) {
          for (const auto& [key, value] : node.items()) {
            walk(value, path.empty() ? key : path + "." + key);
          }
          return;
        }
        if (node.is_array()) {
          bool scalars = std::all_of(node.begin(), node.end(), [](const auto& v) {
            return v.is_number() || v.is_string() || v.is_boolean();
          });
          if (scalars) {
            out += path + " =";
            for (const auto& v : node) {
              out += ' ';
              if (v.is_number_float()) {
                out += fmt_double(v.template get<double>());
              } else if (v.is_number_integer()) {
                out += std::to_string(v.template get<long long>());
              } else if (v.is_number_unsigned()) {
                out += std::to_string(v.template get<unsigned long long>());
              } else if (v.is_boolean()) {
                out += v.template get<bool>() ? "true" : "false";
              } else {
                out += v.template get<std::string>();
              }
            }
            out += '\n';
            return;
          }
          std::size_t i = 0;
          for (const auto& v : node) {
            walk(v, path + "." + std::to_string(i++));
          }
          return;
        }
        if (node.is_string()) {
          std::string s = node.get<std::string>();
          if (s.find('\n') != std::string::npos) {
            out += path + ":\n";
            std::istringstream in(s);
            std::string line;
            while (std::getline(in, line)) out += "  " + line + "\n";
          } else {
            out += path + " = " + s + "\n";
          }
          return;
        }
        if (node.is_number_float()) {
          out += path + " = " + fmt_double(node.get<double>()) + "\n";
        } else if (node.is_number_integer()) {
          out += path + " = " + std::to_string(node.get<long long>()) + "\n";
        } else if (node.is_number_unsigned()) {
          out += path + " = " + std::to_string(node.get<unsigned long long>()) + "\n";
        } else if (node.is_boolean()) {
          out += path + std::string(" = ") + (node.get<bool>() ? "true" : "false") + "\n";
        } else if (node.is_null()) {
          out += path + " = null\n";
        }
      };
  walk(body, "");
  return out;
}

std::string inputs_digest(const std::string& scenario_text,
                          const std::string& options_text, std::uint64_t seed) {
  std::uint64_t h = fnv1a64(scenario_text);
  h = fnv1a64(options_text, h);
  h = fnv1a64(std::to_string(seed), h);
  return to_hex(h);
}

}  // namespace rqo
