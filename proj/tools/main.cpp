// Command-line workbench: scenario-driven profiling, sensitivity analysis,
// robust plan selection, cross-instance verification, and PQO simulation.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rqo/serialize.hpp"
#include "rqo/util.hpp"
#include "rqo/workbench.hpp"

namespace {

using nlohmann::ordered_json;

int log_level() {
  const char* env = std::getenv("PARQO_LOG");
  if (!env) return 0;
  std::string v(env);
  if (v == "debug") return 2;
  if (v == "info" || v == "1") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[rqo] " << msg << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
}

struct GlobalOpts {
  std::string scenario_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format = "text";
  int threads = 1;
};

void emit_report(const GlobalOpts& g, const ordered_json& body, double wall_ms) {
  std::string rendered = g.format == "json" ? body.dump(2) + "\n"
                                            : rqo::render_report_text(body);
  if (!g.out_path.empty()) {
    write_file(g.out_path, rendered);
  } else {
    std::cout << rendered;
  }
  log_info("wall_ms=" + rqo::fmt_double(wall_ms));
}

ordered_json counts_json(const rqo::CallCounts& c) {
  ordered_json j;
  j["opt_calls"] = c.opt_calls;
  j["cost_calls"] = c.cost_calls;
  return j;
}

ordered_json header_json(const std::string& command, const GlobalOpts& g,
                         const std::string& scenario_text,
                         const std::string& options_text) {
  ordered_json j;
  j["command"] = command;
  j["digest"] = rqo::inputs_digest(scenario_text, options_text, g.seed);
  j["seed"] = g.seed;
  return j;
}

ordered_json sensitivity_json(const rqo::ConvergedSensitivity& sens) {
  ordered_json j;
  j["method"] = rqo::sensitivity_method_name(sens.scores.method);
  j["K"] = sens.scores.sample_count;
  j["converged"] = sens.converged;
  j["objective_evals"] = sens.scores.objective_evals;
  j["scores"] = sens.scores.per_dim;
  if (sens.scores.total_order) j["total_order"] = *sens.scores.total_order;
  if (sens.scores.total_variance) j["total_variance"] = *sens.scores.total_variance;
  j["sensitive_dims"] = sens.set.dims;
  j["sensitive_scores"] = sens.set.scores;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust query-plan selection workbench"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--scenario", g.scenario_path, "scenario JSON file")->required();
  app.add_option("--seed", g.seed, "random seed")->default_val(0);
  app.add_option("--out", g.out_path, "write the report here instead of stdout");
  app.add_option("--format", g.format, "report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->default_val("text");
  app.add_option("--threads", g.threads, "worker threads for objective evaluation")
      ->default_val(1);

  // profile
  auto* profile = app.add_subcommand("profile", "observations -> profile store");
  std::string profile_in, obs_out;
  int generate_n = 0;
  profile->add_option("--in", profile_in, "observation JSONL file to ingest");
  profile->add_option("--generate", generate_n,
                      "synthesize N observations per querylet from the scenario");
  profile->add_option("--obs-out", obs_out, "also write generated observations here");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "sensitivity report");
  std::string method = "sobol";
  std::uint64_t k_param = 64;
  bool auto_converge = false;
  int k_max_dims = 6;
  int analyze_obs = 200;
  std::string analyze_query, profiles_path;
  analyze->add_option("--method", method, "local|morris|sobol")
      ->check(CLI::IsMember({"local", "morris", "sobol"}));
  analyze->add_option("--k", k_param, "sample count K")->default_val(64);
  analyze->add_flag("--auto-converge", auto_converge, "double K until the set stabilizes");
  analyze->add_option("--k-max-dims", k_max_dims, "max sensitive dimensions")->default_val(6);
  analyze->add_option("--observations", analyze_obs, "observations per querylet")
      ->default_val(200);
  analyze->add_option("--query", analyze_query, "query name (default: first)");
  analyze->add_option("--profiles", profiles_path, "profile store JSON file");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "robust plan selection report");
  std::uint64_t samples = 100;
  int plan_obs = 200;
  int plan_kmax = 6;
  std::string plan_query, plan_penalty, anchors_out, plan_profiles;
  double plan_tau = -1.0;
  plan_cmd->add_option("--samples", samples, "pool sample count S")->default_val(100);
  plan_cmd->add_option("--observations", plan_obs, "observations per querylet")
      ->default_val(200);
  plan_cmd->add_option("--k-max-dims", plan_kmax, "max sensitive dimensions")->default_val(6);
  plan_cmd->add_option("--query", plan_query, "query name (default: first)");
  plan_cmd->add_option("--penalty", plan_penalty,
                       "penalty variant override (threshold|probability|cost_difference|"
                       "cost_ratio|variance)");
  plan_cmd->add_option("--tau", plan_tau, "tolerance override");
  plan_cmd->add_option("--anchors-out", anchors_out, "write the anchor cache JSONL here");
  plan_cmd->add_option("--profiles", plan_profiles, "profile store JSON file");

  // instances
  auto* instances_cmd = app.add_subcommand("instances", "cross-instance cost table");
  std::uint64_t inst_samples = 100;
  int inst_obs = 200;
  int inst_kmax = 6;
  std::string inst_query, inst_profiles;
  instances_cmd->add_option("--samples", inst_samples, "pool sample count S")->default_val(100);
  instances_cmd->add_option("--observations", inst_obs, "observations per querylet")
      ->default_val(200);
  instances_cmd->add_option("--k-max-dims", inst_kmax, "max sensitive dimensions")
      ->default_val(6);
  instances_cmd->add_option("--query", inst_query, "query name (default: first)");
  instances_cmd->add_option("--profiles", inst_profiles, "profile store JSON file");

  // pqo
  auto* pqo_cmd = app.add_subcommand("pqo", "anchor registration + workload simulation");
  std::string anchors_path, queries_path, pqo_profiles;
  std::uint64_t pqo_samples = 100;
  int pqo_obs = 200;
  int pqo_kmax = 6;
  int kl_samples = 10000;
  int pqo_instances = -1;
  bool no_compare = false;
  pqo_cmd->add_option("--anchors", anchors_path, "anchor cache JSONL output path");
  pqo_cmd->add_option("--queries", queries_path, "evaluation query JSONL ({\"s_hat\": [...]})");
  pqo_cmd->add_option("--samples", pqo_samples, "pool sample count S")->default_val(100);
  pqo_cmd->add_option("--observations", pqo_obs, "observations per querylet")->default_val(200);
  pqo_cmd->add_option("--k-max-dims", pqo_kmax, "max sensitive dimensions")->default_val(6);
  pqo_cmd->add_option("--kl-samples", kl_samples, "Monte-Carlo samples per KL test")
      ->default_val(10000);
  pqo_cmd->add_option("--instances", pqo_instances, "evaluation workload size override");
  pqo_cmd->add_flag("--no-compare", no_compare, "skip the traditional-plan comparison column");
  pqo_cmd->add_option("--profiles", pqo_profiles, "profile store JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto started = std::chrono::steady_clock::now();
    std::string scenario_text = read_file(g.scenario_path);
    rqo::Scenario scenario = rqo::Scenario::from_json_text(scenario_text);
    auto wall = [&] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                       started)
          .count();
    };

    if (*profile) {
      std::string options = "profile;generate=" + std::to_string(generate_n) +
                            ";in=" + profile_in;
      rqo::ProfileStore store;
      std::uint64_t generated = 0, ingested = 0;
      if (!profile_in.empty()) {
        for (const auto& obs : rqo::observations_from_jsonl(read_file(profile_in))) {
          store.ingest(obs);
          ++ingested;
        }
      }
      if (generate_n > 0) {
        rqo::Rng rng(g.seed);
        auto obs = rqo::generate_observations(scenario, generate_n, rng);
        generated = obs.size();
        if (!obs_out.empty()) write_file(obs_out, rqo::observations_to_jsonl(obs));
        for (const auto& o : obs) store.ingest(o);
      }
      if (generate_n <= 0 && profile_in.empty()) {
        throw std::invalid_argument("profile needs --in and/or --generate");
      }
      std::string store_text = store.to_json_text();
      ordered_json body = header_json("profile", g, scenario_text, options);
      body["observations_ingested"] = ingested;
      body["observations_generated"] = generated;
      body["profiles"] = store.profiles().size();
      body["rejected"] = store.rejected();
      ordered_json querylets = ordered_json::array();
      for (const auto& [id, prof] : store.profiles()) {
        ordered_json jq;
        jq["querylet"] = id.canonical();
        jq["samples"] = prof.samples.size();
        querylets.push_back(std::move(jq));
      }
      body["querylets"] = std::move(querylets);
      if (!g.out_path.empty()) {
        write_file(g.out_path, store_text);
        g.out_path.clear();  // report goes to stdout; store went to --out
      }
      emit_report(g, body, wall());
      return 0;
    }

    if (*analyze) {
      std::string options = "analyze;method=" + method + ";k=" + std::to_string(k_param) +
                            ";auto=" + std::to_string(auto_converge) +
                            ";kmax=" + std::to_string(k_max_dims) +
                            ";obs=" + std::to_string(analyze_obs) + ";query=" + analyze_query;
      rqo::Rng rng(g.seed);
      rqo::ProfileStore store;
      if (!profiles_path.empty()) {
        store = rqo::ProfileStore::from_json_text(read_file(profiles_path));
      } else {
        for (const auto& o : rqo::generate_observations(scenario, analyze_obs, rng)) {
          store.ingest(o);
        }
      }
      const rqo::QuerySpec& query = scenario.query(analyze_query);
      rqo::JointErrorDistribution dist =
          rqo::build_distribution(scenario.graph, store, query.s_hat);

      rqo::CallCounters counters;
      rqo::OptResult traditional = rqo::optimize(scenario.graph, query.s_hat, &counters);
      rqo::ObjectiveFn objective = rqo::make_penalty_objective(
          scenario.graph, traditional.plan, scenario.penalty, &counters);
      rqo::SampleSpace space = rqo::make_sample_space(dist);

      rqo::ConvergedSensitivity sens;
      rqo::SensitivityMethod m = rqo::parse_sensitivity_method(method);
      if (m == rqo::SensitivityMethod::kLocal) {
        sens.scores = rqo::local_scores(objective, dist, static_cast<int>(k_param), rng,
                                        g.threads);
        sens.set = rqo::select_sensitive(sens.scores, k_max_dims);
        sens.converged = true;
      } else if (auto_converge) {
        sens = rqo::run_until_converged(m, objective, space, k_max_dims, rng, g.threads);
      } else {
        sens.scores = m == rqo::SensitivityMethod::kSobol
                          ? rqo::sobol(objective, space, k_param, rng, g.threads)
                          : rqo::morris(objective, space, k_param, rng, g.threads);
        sens.set = rqo::select_sensitive(sens.scores, k_max_dims);
        sens.converged = true;
      }

      ordered_json body = header_json("analyze", g, scenario_text, options);
      body["query"] = query.name;
      body["s_hat"] = query.s_hat.values;
      body["dims"] = scenario.graph.dim_count();
      body["traditional_plan"] = traditional.plan.fingerprint();
      body["sensitivity"] = sensitivity_json(sens);
      body["counters"] = counts_json(rqo::snapshot(counters));
      emit_report(g, body, wall());
      return 0;
    }

    if (*plan_cmd) {
      std::string options = "plan;samples=" + std::to_string(samples) +
                            ";obs=" + std::to_string(plan_obs) +
                            ";kmax=" + std::to_string(plan_kmax) + ";query=" + plan_query +
                            ";penalty=" + plan_penalty + ";tau=" + rqo::fmt_double(plan_tau);
      rqo::PipelineOptions opt;
      opt.query = plan_query;
      opt.samples = samples;
      opt.observations = plan_obs;
      opt.k_max = plan_kmax;
      opt.threads = g.threads;
      if (!plan_penalty.empty() || plan_tau >= 0.0) {
        std::string variant =
            plan_penalty.empty() ? scenario.penalty.variant_name() : plan_penalty;
        double tau = plan_tau >= 0.0 ? plan_tau : scenario.penalty.tau;
        opt.penalty_override = rqo::PenaltySpec::parse(variant, tau);
      }
      if (!plan_profiles.empty()) opt.profile_store_text = read_file(plan_profiles);

      rqo::PipelineResult r = rqo::run_pipeline(scenario, opt, g.seed);

      if (!anchors_out.empty()) {
        rqo::AnchorEntry entry;
        entry.template_id = scenario.name;
        entry.s_hat = r.s_hat;
        entry.dist = r.dist;
        entry.sensitive_dims = r.sensitivity.set.dims;
        entry.cache = r.cache;
        for (const auto& ev : rqo::top_candidates(r.evaluated, 3)) {
          rqo::AnchorCandidate cand;
          cand.plan = r.pool.plans.at(ev.fingerprint).plan;
          cand.expected_penalty = ev.expected_penalty;
          cand.cost_at_anchor = ev.cost_at_anchor;
          cand.per_sample_costs = ev.per_sample_costs;
          entry.candidates.push_back(std::move(cand));
        }
        write_file(anchors_out, rqo::anchor_to_jsonl(scenario.graph, entry));
      }

      ordered_json body = header_json("plan", g, scenario_text, options);
      body["query"] = r.query_name;
      body["s_hat"] = r.s_hat.values;
      body["penalty"] = opt.penalty_override.value_or(scenario.penalty).variant_name();
      body["tau"] = opt.penalty_override.value_or(scenario.penalty).tau;
      body["profiles"] = r.store.profiles().size();
      body["sensitivity"] = sensitivity_json(r.sensitivity);
      body["pool_samples"] = r.cache.entries.size();
      body["unique_plans"] = r.pool.plans.size();
      ordered_json cands = ordered_json::array();
      for (const auto& ev : r.evaluated) {
        ordered_json jc;
        jc["fingerprint"] = ev.fingerprint;
        jc["expected_penalty"] = ev.expected_penalty;
        jc["cost_at_anchor"] = ev.cost_at_anchor;
        jc["occurrences"] = r.pool.plans.at(ev.fingerprint).occurrences;
        cands.push_back(std::move(jc));
      }
      body["candidates"] = std::move(cands);
      body["traditional"] = ordered_json{{"fingerprint", r.traditional.fingerprint()},
                                         {"expected_penalty", r.traditional_ep},
                                         {"cost_at_anchor", r.traditional_cost_at_anchor}};
      body["recentered"] = ordered_json{{"fingerprint", r.recentered_plan.fingerprint()},
                                        {"expected_penalty", r.recentered_ep},
                                        {"s", r.recentered.values}};
      body["robust"] = ordered_json{{"fingerprint", r.choice.plan.fingerprint()},
                                    {"expected_penalty", r.robust_ep},
                                    {"tree", rqo::render_plan_tree(scenario.graph, r.choice.plan)}};
      body["counters"] =
          ordered_json{{"profile", counts_json(r.profile_counts)},
                       {"sensitivity", counts_json(r.sensitivity_counts)},
                       {"pool", counts_json(r.pool_counts)},
                       {"evaluate", counts_json(r.evaluate_counts)},
                       {"baselines", counts_json(r.baseline_counts)}};
      emit_report(g, body, wall());
      return 0;
    }

    if (*instances_cmd) {
      std::string options = "instances;samples=" + std::to_string(inst_samples) +
                            ";obs=" + std::to_string(inst_obs) +
                            ";kmax=" + std::to_string(inst_kmax) + ";query=" + inst_query;
      rqo::PipelineOptions opt;
      opt.query = inst_query;
      opt.samples = inst_samples;
      opt.observations = inst_obs;
      opt.k_max = inst_kmax;
      opt.threads = g.threads;
      if (!inst_profiles.empty()) opt.profile_store_text = read_file(inst_profiles);
      rqo::PipelineResult r = rqo::run_pipeline(scenario, opt, g.seed);

      std::vector<std::pair<std::string, rqo::Plan>> plans = {
          {"traditional", r.traditional},
          {"robust", r.choice.plan},
          {"recentered", r.recentered_plan}};
      rqo::CallCounters counters;
      rqo::InstanceTable table = rqo::simulate_instances(scenario, plans, &counters);

      ordered_json body = header_json("instances", g, scenario_text, options);
      body["query"] = r.query_name;
      body["plan_labels"] = table.plan_labels;
      body["plan_fingerprints"] = table.plan_fingerprints;
      ordered_json rows = ordered_json::array();
      for (const auto& row : table.rows) {
        ordered_json jr;
        jr["instance"] = row.instance;
        jr["plan_costs"] = row.plan_costs;
        jr["optimal_cost"] = row.optimal_cost;
        ordered_json ratios = ordered_json::array();
        for (double c : row.plan_costs) ratios.push_back(c / row.optimal_cost);
        jr["cost_ratios"] = std::move(ratios);
        rows.push_back(std::move(jr));
      }
      body["rows"] = std::move(rows);
      body["counters"] = counts_json(rqo::snapshot(counters));
      emit_report(g, body, wall());
      return 0;
    }

    if (*pqo_cmd) {
      std::string options = "pqo;samples=" + std::to_string(pqo_samples) +
                            ";obs=" + std::to_string(pqo_obs) +
                            ";kmax=" + std::to_string(pqo_kmax) +
                            ";kl=" + std::to_string(kl_samples) +
                            ";instances=" + std::to_string(pqo_instances) +
                            ";queries=" + queries_path +
                            ";compare=" + std::to_string(!no_compare);
      rqo::PqoOptions opt;
      opt.samples = pqo_samples;
      opt.observations = pqo_obs;
      opt.k_max = pqo_kmax;
      opt.threads = g.threads;
      opt.kl_samples = kl_samples;
      if (pqo_instances >= 0) opt.instance_count = pqo_instances;
      opt.compare_traditional = !no_compare;
      if (!queries_path.empty()) opt.queries_jsonl = read_file(queries_path);
      if (!pqo_profiles.empty()) opt.profile_store_text = read_file(pqo_profiles);

      rqo::PqoResult r = rqo::run_pqo_workload(scenario, opt, g.seed);
      if (!anchors_path.empty()) {
        write_file(anchors_path, rqo::anchor_to_jsonl(scenario.graph, r.anchor));
      }

      ordered_json body = header_json("pqo", g, scenario_text, options);
      body["template_id"] = r.anchor.template_id;
      body["anchor_s_hat"] = r.anchor.s_hat.values;
      body["sensitive_dims"] = r.anchor.sensitive_dims;
      body["cached_samples"] = r.anchor.cache.entries.size();
      body["threshold"] = rqo::reuse_threshold(r.anchor.cache.entries.size());
      ordered_json cands = ordered_json::array();
      for (const auto& c : r.anchor.candidates) {
        cands.push_back(ordered_json{{"fingerprint", c.plan.fingerprint()},
                                     {"expected_penalty", c.expected_penalty}});
      }
      body["candidates"] = std::move(cands);
      ordered_json decisions = ordered_json::array();
      for (const auto& log : r.log) {
        ordered_json jd;
        jd["index"] = log.index;
        jd["s_hat_prime"] = log.s_hat_prime.values;
        jd["kl"] = log.kl;
        jd["threshold"] = log.threshold;
        jd["outcome"] = log.reused ? "reuse" : "fallback";
        if (!log.reused) jd["fallback_reason"] = log.fallback_reason;
        if (log.reused) {
          jd["chosen"] = log.chosen_fingerprint;
          jd["mean_weight"] = log.mean_weight;
          jd["reuse_opt_calls"] = log.reuse_opt_calls;
          if (log.chosen_ep) jd["chosen_expected_penalty"] = *log.chosen_ep;
          if (log.traditional_ep) jd["traditional_expected_penalty"] = *log.traditional_ep;
        }
        decisions.push_back(std::move(jd));
      }
      body["decisions"] = std::move(decisions);
      body["reuse_fraction"] = r.reuse_fraction;
      if (r.mean_chosen_ep) {
        body["mean_chosen_expected_penalty"] = *r.mean_chosen_ep;
        body["mean_traditional_expected_penalty"] = *r.mean_traditional_ep;
      }
      body["counters"] = ordered_json{{"registration", counts_json(r.registration_counts)},
                                      {"reuse_path", counts_json(r.reuse_counts)},
                                      {"comparison", counts_json(r.comparison_counts)}};
      emit_report(g, body, wall());
      return 0;
    }

    throw std::logic_error("no subcommand dispatched");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
