#include "rqo/serialize.hpp"

#include <sstream>
#include <stdexcept>

namespace rqo {

using nlohmann::json;

json kernel_density_to_json(const KernelDensity& kd) {
  json j;
  j["centers"] = kd.centers();
  j["bandwidth"] = kd.bandwidth();
  return j;
}

KernelDensity kernel_density_from_json(const json& j) {
  return KernelDensity(j.at("centers").get<std::vector<double>>(),
                       j.at("bandwidth").get<double>());
}

json error_model_to_json(const ErrorModel& m) {
  json j;
  j["dim"] = m.dimension_id;
  j["cutoff"] = m.cutoff;
  j["low"] = kernel_density_to_json(m.low);
  j["high"] = kernel_density_to_json(m.high);
  return j;
}

ErrorModel error_model_from_json(const json& j) {
  ErrorModel m;
  m.dimension_id = j.at("dim").get<int>();
  m.cutoff = j.at("cutoff").get<double>();
  m.low = kernel_density_from_json(j.at("low"));
  m.high = kernel_density_from_json(j.at("high"));
  return m;
}

json distribution_to_json(const JointErrorDistribution& dist) {
  json j;
  json models = json::array();
  for (const auto& m : dist.models) models.push_back(error_model_to_json(m));
  j["models"] = std::move(models);
  j["anchor"] = dist.anchor.values;
  j["active_dims"] = dist.active_dims;
  return j;
}

JointErrorDistribution distribution_from_json(const json& j) {
  JointErrorDistribution dist;
  for (const auto& jm : j.at("models")) dist.models.push_back(error_model_from_json(jm));
  dist.anchor.values = j.at("anchor").get<std::vector<double>>();
  dist.active_dims = j.at("active_dims").get<std::vector<int>>();
  return dist;
}

json cache_to_json(const SampleCache& cache) {
  json j;
  j["anchor"] = cache.anchor.values;
  j["active_dims"] = cache.active_dims;
  json entries = json::array();
  for (const auto& e : cache.entries) {
    json je;
    je["s"] = e.s.values;
    je["plan"] = e.opt_plan_fingerprint;
    je["cost"] = e.opt_cost;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j;
}

SampleCache cache_from_json(const json& j) {
  SampleCache cache;
  cache.anchor.values = j.at("anchor").get<std::vector<double>>();
  cache.active_dims = j.at("active_dims").get<std::vector<int>>();
  for (const auto& je : j.at("entries")) {
    CacheEntry e;
    e.s.values = je.at("s").get<std::vector<double>>();
    e.opt_plan_fingerprint = je.at("plan").get<std::string>();
    e.opt_cost = je.at("cost").get<double>();
    cache.entries.push_back(std::move(e));
  }
  return cache;
}

std::string anchor_to_jsonl(const JoinGraph& graph, const AnchorEntry& entry) {
  (void)graph;
  json j;
  j["version"] = 1;
  j["template_id"] = entry.template_id;
  j["s_hat"] = entry.s_hat.values;
  j["sensitive_dims"] = entry.sensitive_dims;
  j["cache_entries"] = cache_to_json(entry.cache);
  json cands = json::array();
  for (const auto& c : entry.candidates) {
    json jc;
    jc["plan"] = c.plan.fingerprint();
    jc["expected_penalty"] = c.expected_penalty;
    jc["cost_at_anchor"] = c.cost_at_anchor;
    jc["per_sample_costs"] = c.per_sample_costs;
    cands.push_back(std::move(jc));
  }
  j["candidates"] = std::move(cands);
  j["error_models"] = distribution_to_json(entry.dist);
  return j.dump() + "\n";
}

AnchorEntry anchor_from_jsonl(const JoinGraph& graph, const std::string& line) {
  json j = json::parse(line);
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported anchor version");
  }
  AnchorEntry entry;
  entry.template_id = j.at("template_id").get<std::string>();
  entry.s_hat.values = j.at("s_hat").get<std::vector<double>>();
  entry.sensitive_dims = j.at("sensitive_dims").get<std::vector<int>>();
  entry.cache = cache_from_json(j.at("cache_entries"));
  for (const auto& jc : j.at("candidates")) {
    AnchorCandidate c;
    c.plan = parse_plan(graph, jc.at("plan").get<std::string>());
    c.expected_penalty = jc.at("expected_penalty").get<double>();
    c.cost_at_anchor = jc.at("cost_at_anchor").get<double>();
    c.per_sample_costs = jc.at("per_sample_costs").get<std::vector<double>>();
    entry.candidates.push_back(std::move(c));
  }
  entry.dist = distribution_from_json(j.at("error_models"));
  return entry;
}

std::string observation_to_json_line(const Observation& obs) {
  json j;
  j["querylet"] = obs.querylet.canonical();
  j["estimated"] = obs.estimated;
  j["actual"] = obs.actual;
  return j.dump();
}

Observation observation_from_json_line(const std::string& line) {
  json j = json::parse(line);
  Observation obs;
  obs.querylet = QueryletId::parse(j.at("querylet").get<std::string>());
  obs.estimated = j.at("estimated").get<double>();
  obs.actual = j.at("actual").get<double>();
  return obs;
}

std::string observations_to_jsonl(const std::vector<Observation>& obs) {
  std::string out;
  for (const auto& o : obs) {
    out += observation_to_json_line(o);
    out += '\n';
  }
  return out;
}

std::vector<Observation> observations_from_jsonl(const std::string& text) {
  std::vector<Observation> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(observation_from_json_line(line));
  }
  return out;
}

}  // namespace rqo
