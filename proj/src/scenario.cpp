#include "rqo/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "rqo/util.hpp"

namespace rqo {

using nlohmann::json;

double GeneratorSpec::sample(Rng& rng) const {
  switch (family) {
    case Family::kConstant:
      return value;
    case Family::kLogUniform: {
      double u = rng.uniform();
      return clamp_selectivity(std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))));
    }
    case Family::kBeta:
      return clamp_selectivity(rng.beta(a, b));
  }
  throw std::logic_error("unhandled generator family");
}

GeneratorSpec GeneratorSpec::constant(double v) {
  GeneratorSpec g;
  g.family = Family::kConstant;
  g.value = v;
  return g;
}

namespace {

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec g;
  std::string family = j.at("family").get<std::string>();
  if (family == "constant") {
    g.family = GeneratorSpec::Family::kConstant;
    g.value = j.at("value").get<double>();
    if (!(g.value > 0.0) || g.value > 1.0) {
      throw std::invalid_argument("constant generator value must be in (0,1]");
    }
  } else if (family == "loguniform") {
    g.family = GeneratorSpec::Family::kLogUniform;
    g.lo = j.at("lo").get<double>();
    g.hi = j.at("hi").get<double>();
    if (!(g.lo > 0.0) || g.hi > 1.0 || g.lo > g.hi) {
      throw std::invalid_argument("loguniform generator needs 0 < lo <= hi <= 1");
    }
  } else if (family == "beta") {
    g.family = GeneratorSpec::Family::kBeta;
    g.a = j.at("a").get<double>();
    g.b = j.at("b").get<double>();
    if (!(g.a > 0.0) || !(g.b > 0.0)) {
      throw std::invalid_argument("beta generator needs positive shape parameters");
    }
  } else {
    throw std::invalid_argument("unknown generator family: " + family);
  }
  return g;
}

json generator_to_json(const GeneratorSpec& g) {
  json j;
  switch (g.family) {
    case GeneratorSpec::Family::kConstant:
      j["family"] = "constant";
      j["value"] = g.value;
      break;
    case GeneratorSpec::Family::kLogUniform:
      j["family"] = "loguniform";
      j["lo"] = g.lo;
      j["hi"] = g.hi;
      break;
    case GeneratorSpec::Family::kBeta:
      j["family"] = "beta";
      j["a"] = g.a;
      j["b"] = g.b;
      break;
  }
  return j;
}

}  // namespace

void Scenario::validate() const {
  graph.validate();
  int d = graph.dim_count();
  validate_selectivities(graph, base_true);
  if (static_cast<int>(true_gen.size()) != d) {
    throw std::invalid_argument("true_selectivity must cover every dimension");
  }
  if (static_cast<int>(estimator.size()) != d) {
    throw std::invalid_argument("estimator must cover every dimension");
  }
  for (const auto& e : estimator) {
    if (!(e.bias > 0.0)) throw std::invalid_argument("estimator bias must be positive");
    if (e.noise_sd < 0.0) throw std::invalid_argument("estimator noise_sd must be >= 0");
  }
  if (queries.empty()) throw std::invalid_argument("scenario needs at least one query");
  for (const auto& q : queries) {
    if (q.name.empty()) throw std::invalid_argument("query needs a name");
    validate_selectivities(graph, q.s_hat);
  }
  for (const auto& inst : instances) {
    if (inst.name.empty()) throw std::invalid_argument("instance needs a name");
    for (const auto& [table, factor] : inst.cardinality_scale) {
      if (graph.table_index(table) < 0) {
        throw std::invalid_argument("instance scales unknown table: " + table);
      }
      if (!(factor > 0.0)) throw std::invalid_argument("cardinality scale must be positive");
    }
    for (const auto& [dim, factor] : inst.selectivity_scale) {
      if (dim < 0 || dim >= d) throw std::invalid_argument("instance scales unknown dim");
      if (!(factor > 0.0)) throw std::invalid_argument("selectivity scale must be positive");
    }
    for (const auto& [dim, v] : inst.selectivity_override) {
      if (dim < 0 || dim >= d) throw std::invalid_argument("instance overrides unknown dim");
      if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("selectivity override out of (0,1]");
    }
  }
  if (pqo) {
    query(pqo->anchor_query);
    if (pqo->instance_count < 1) throw std::invalid_argument("pqo instance_count must be >= 1");
    if (static_cast<int>(pqo->instance_distribution.size()) != d) {
      throw std::invalid_argument("pqo instance_distribution must cover every dimension");
    }
  }
}

const QuerySpec& Scenario::query(const std::string& name) const {
  if (name.empty()) return queries.front();
  for (const auto& q : queries) {
    if (q.name == name) return q;
  }
  throw std::invalid_argument("unknown query: " + name);
}

std::string Scenario::to_json_text() const {
  json doc;
  doc["version"] = 1;
  doc["name"] = name;

  json tables = json::array();
  for (const auto& t : graph.tables) {
    json jt;
    jt["name"] = t.name;
    jt["cardinality"] = t.base_cardinality;
    if (t.local_selection_dim) jt["local_selection_dim"] = *t.local_selection_dim;
    tables.push_back(std::move(jt));
  }
  doc["tables"] = std::move(tables);

  json edges = json::array();
  for (const auto& e : graph.edges) {
    json je;
    je["left"] = graph.tables[e.left].name;
    je["right"] = graph.tables[e.right].name;
    je["dim"] = e.dim;
    edges.push_back(std::move(je));
  }
  doc["join_edges"] = std::move(edges);

  doc["base_true"] = base_true.values;
  json gens = json::array();
  for (const auto& g : true_gen) gens.push_back(generator_to_json(g));
  doc["true_selectivity"] = std::move(gens);

  json ests = json::array();
  for (const auto& e : estimator) {
    ests.push_back(json{{"bias", e.bias}, {"noise_sd", e.noise_sd}});
  }
  doc["estimator"] = std::move(ests);

  doc["penalty"] = json{{"variant", penalty.variant_name()}, {"tau", penalty.tau}};

  json qs = json::array();
  for (const auto& q : queries) {
    qs.push_back(json{{"name", q.name}, {"s_hat", q.s_hat.values}});
  }
  doc["queries"] = std::move(qs);

  json insts = json::array();
  for (const auto& inst : instances) {
    json ji;
    ji["name"] = inst.name;
    if (!inst.cardinality_scale.empty()) {
      json cs;
      for (const auto& [k, v] : inst.cardinality_scale) cs[k] = v;
      ji["cardinality_scale"] = std::move(cs);
    }
    if (!inst.selectivity_scale.empty()) {
      json ss;
      for (const auto& [k, v] : inst.selectivity_scale) ss[std::to_string(k)] = v;
      ji["selectivity_scale"] = std::move(ss);
    }
    if (!inst.selectivity_override.empty()) {
      json so;
      for (const auto& [k, v] : inst.selectivity_override) so[std::to_string(k)] = v;
      ji["selectivity_override"] = std::move(so);
    }
    insts.push_back(std::move(ji));
  }
  doc["instances"] = std::move(insts);

  if (pqo) {
    json jp;
    jp["anchor_query"] = pqo->anchor_query;
    jp["instance_count"] = pqo->instance_count;
    json dist = json::array();
    for (const auto& g : pqo->instance_distribution) dist.push_back(generator_to_json(g));
    jp["instance_distribution"] = std::move(dist);
    doc["pqo"] = std::move(jp);
  }

  return doc.dump(2) + "\n";
}

Scenario Scenario::from_json_text(const std::string& text) {
  json doc = json::parse(text);
  if (!doc.contains("version") || doc["version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported scenario version");
  }
  Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));

  for (const auto& jt : doc.at("tables")) {
    TableDef t;
    t.name = jt.at("name").get<std::string>();
    t.base_cardinality = jt.at("cardinality").get<double>();
    if (jt.contains("local_selection_dim")) {
      t.local_selection_dim = jt["local_selection_dim"].get<int>();
    }
    sc.graph.tables.push_back(std::move(t));
  }
  for (const auto& je : doc.at("join_edges")) {
    JoinEdge e;
    e.left = sc.graph.table_index(je.at("left").get<std::string>());
    e.right = sc.graph.table_index(je.at("right").get<std::string>());
    if (e.left < 0 || e.right < 0) {
      throw std::invalid_argument("join edge references unknown table");
    }
    e.dim = je.at("dim").get<int>();
    sc.graph.edges.push_back(e);
  }

  sc.base_true.values = doc.at("base_true").get<std::vector<double>>();
  for (const auto& jg : doc.at("true_selectivity")) {
    sc.true_gen.push_back(generator_from_json(jg));
  }
  for (const auto& je : doc.at("estimator")) {
    EstimatorSpec e;
    e.bias = je.at("bias").get<double>();
    e.noise_sd = je.at("noise_sd").get<double>();
    sc.estimator.push_back(e);
  }
  sc.penalty = PenaltySpec::parse(doc.at("penalty").at("variant").get<std::string>(),
                                  doc.at("penalty").value("tau", 1.2));
  for (const auto& jq : doc.at("queries")) {
    QuerySpec q;
    q.name = jq.at("name").get<std::string>();
    q.s_hat.values = jq.at("s_hat").get<std::vector<double>>();
    sc.queries.push_back(std::move(q));
  }
  if (doc.contains("instances")) {
    for (const auto& ji : doc["instances"]) {
      InstanceSpec inst;
      inst.name = ji.at("name").get<std::string>();
      if (ji.contains("cardinality_scale")) {
        for (const auto& [k, v] : ji["cardinality_scale"].items()) {
          inst.cardinality_scale[k] = v.get<double>();
        }
      }
      if (ji.contains("selectivity_scale")) {
        for (const auto& [k, v] : ji["selectivity_scale"].items()) {
          inst.selectivity_scale[std::stoi(k)] = v.get<double>();
        }
      }
      if (ji.contains("selectivity_override")) {
        for (const auto& [k, v] : ji["selectivity_override"].items()) {
          inst.selectivity_override[std::stoi(k)] = v.get<double>();
        }
      }
      sc.instances.push_back(std::move(inst));
    }
  }
  if (doc.contains("pqo")) {
    PqoSpec p;
    p.anchor_query = doc["pqo"].at("anchor_query").get<std::string>();
    p.instance_count = doc["pqo"].value("instance_count", 1000);
    for (const auto& jg : doc["pqo"].at("instance_distribution")) {
      p.instance_distribution.push_back(generator_from_json(jg));
    }
    sc.pqo = std::move(p);
  }

  sc.validate();
  return sc;
}

}  // namespace rqo
