// pyrqo: python bindings over the core operations. Scenario-shaped inputs
// come in as JSON strings; structured results go back as python objects.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "rqo/pqo.hpp"
#include "rqo/serialize.hpp"
#include "rqo/workbench.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

rqo::Scenario load_scenario(const std::string& text) {
  return rqo::Scenario::from_json_text(text);
}

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

rqo::SelectivityVector vec(std::vector<double> values) {
  return rqo::SelectivityVector{std::move(values)};
}

json counts_json(const rqo::CallCounts& c) {
  return json{{"opt_calls", c.opt_calls}, {"cost_calls", c.cost_calls}};
}

}  // namespace

PYBIND11_MODULE(pyrqo, m) {
  m.doc() = "robust query-plan selection core";

  m.def(
      "optimize",
      [](const std::string& scenario, std::vector<double> s) {
        rqo::Scenario sc = load_scenario(scenario);
        rqo::OptResult r = rqo::optimize(sc.graph, vec(std::move(s)));
        return py::make_tuple(r.plan.fingerprint(), r.cost);
      },
      py::arg("scenario_json"), py::arg("selectivities"),
      "Optimal plan fingerprint and cost for the given selectivities.");

  m.def(
      "plan_cost",
      [](const std::string& scenario, const std::string& fingerprint,
         std::vector<double> s) {
        rqo::Scenario sc = load_scenario(scenario);
        rqo::Plan plan = rqo::parse_plan(sc.graph, fingerprint);
        return rqo::cost(sc.graph, plan, vec(std::move(s)));
      },
      py::arg("scenario_json"), py::arg("fingerprint"), py::arg("selectivities"));

  m.def(
      "enumerate_plans",
      [](const std::string& scenario) {
        rqo::Scenario sc = load_scenario(scenario);
        std::vector<std::string> fps;
        for (const rqo::Plan& p : rqo::enumerate_all_plans(sc.graph)) {
          fps.push_back(p.fingerprint());
        }
        return fps;
      },
      py::arg("scenario_json"));

  m.def(
      "penalty",
      [](const std::string& variant, double tau, double plan_cost, double opt_cost) {
        return rqo::penalty(rqo::PenaltySpec::parse(variant, tau), plan_cost, opt_cost);
      },
      py::arg("variant"), py::arg("tau"), py::arg("plan_cost"), py::arg("opt_cost"));

  m.def(
      "expected_penalty",
      [](const std::string& variant, double tau,
         std::vector<std::pair<double, double>> costs) {
        std::vector<rqo::CostedSample> samples;
        samples.reserve(costs.size());
        for (auto [plan_cost, opt_cost] : costs) {
          samples.push_back({rqo::SelectivityVector{}, opt_cost, plan_cost});
        }
        return rqo::expected_penalty(rqo::PenaltySpec::parse(variant, tau), samples);
      },
      py::arg("variant"), py::arg("tau"), py::arg("plan_and_opt_costs"));

  m.def("reuse_threshold", &rqo::reuse_threshold, py::arg("cached_samples"));

  m.def(
      "generate_observations",
      [](const std::string& scenario, int n, std::uint64_t seed) {
        rqo::Scenario sc = load_scenario(scenario);
        rqo::Rng rng(seed);
        return rqo::observations_to_jsonl(rqo::generate_observations(sc, n, rng));
      },
      py::arg("scenario_json"), py::arg("n_per_querylet"), py::arg("seed"));

  m.def(
      "run_pipeline",
      [](const std::string& scenario, std::uint64_t seed, std::uint64_t samples,
         int observations, const std::string& query, int threads) {
        rqo::Scenario sc = load_scenario(scenario);
        rqo::PipelineOptions opt;
        opt.samples = samples;
        opt.observations = observations;
        opt.query = query;
        opt.threads = threads;
        rqo::PipelineResult r = rqo::run_pipeline(sc, opt, seed);
        json out;
        out["query"] = r.query_name;
        out["s_hat"] = r.s_hat.values;
        out["sensitive_dims"] = r.sensitivity.set.dims;
        out["sensitivity_scores"] = r.sensitivity.scores.per_dim;
        out["sensitivity_K"] = r.sensitivity.scores.sample_count;
        out["converged"] = r.sensitivity.converged;
        out["unique_plans"] = r.pool.plans.size();
        out["traditional"] = {{"fingerprint", r.traditional.fingerprint()},
                              {"expected_penalty", r.traditional_ep}};
        out["robust"] = {{"fingerprint", r.choice.plan.fingerprint()},
                         {"expected_penalty", r.robust_ep}};
        out["recentered"] = {{"fingerprint", r.recentered_plan.fingerprint()},
                             {"expected_penalty", r.recentered_ep},
                             {"s", r.recentered.values}};
        out["counters"] = {{"pool", counts_json(r.pool_counts)},
                           {"evaluate", counts_json(r.evaluate_counts)},
                           {"sensitivity", counts_json(r.sensitivity_counts)}};
        return to_py(out);
      },
      py::arg("scenario_json"), py::arg("seed"), py::arg("samples") = 100,
      py::arg("observations") = 200, py::arg("query") = std::string(),
      py::arg("threads") = 1);

  m.def(
      "run_pqo",
      [](const std::string& scenario, std::uint64_t seed, std::uint64_t samples,
         int observations, int kl_samples, int instances) {
        rqo::Scenario sc = load_scenario(scenario);
        rqo::PqoOptions opt;
        opt.samples = samples;
        opt.observations = observations;
        opt.kl_samples = kl_samples;
        if (instances >= 0) opt.instance_count = instances;
        rqo::PqoResult r = rqo::run_pqo_workload(sc, opt, seed);
        json out;
        out["template_id"] = r.anchor.template_id;
        out["sensitive_dims"] = r.anchor.sensitive_dims;
        out["reuse_fraction"] = r.reuse_fraction;
        out["threshold"] = rqo::reuse_threshold(r.anchor.cache.entries.size());
        json decisions = json::array();
        for (const auto& log : r.log) {
          json d;
          d["kl"] = log.kl;
          d["reused"] = log.reused;
          d["chosen"] = log.chosen_fingerprint;
          d["reuse_opt_calls"] = log.reuse_opt_calls;
          decisions.push_back(std::move(d));
        }
        out["decisions"] = std::move(decisions);
        out["reuse_path"] = counts_json(r.reuse_counts);
        return to_py(out);
      },
      py::arg("scenario_json"), py::arg("seed"), py::arg("samples") = 100,
      py::arg("observations") = 200, py::arg("kl_samples") = 2000,
      py::arg("instances") = -1);

  m.attr("__version__") = "0.1.0";
}
