#include "rqo/error_profiling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rqo/util.hpp"

namespace rqo {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string QueryletId::canonical() const {
  std::vector<std::string> edge_strs;
  edge_strs.reserve(join_edges.size());
  for (const auto& [a, b] : join_edges) edge_strs.push_back(a + "-" + b);
  return join(tables, ',') + "|" + join(edge_strs, ',') + "|" +
         join(selection_tables, ',');
}

QueryletId QueryletId::parse(const std::string& text) {
  auto parts = split(text, '|');
  if (parts.size() != 3) throw std::invalid_argument("bad querylet string: " + text);
  QueryletId q;
  if (!parts[0].empty()) q.tables = split(parts[0], ',');
  if (!parts[1].empty()) {
    for (const std::string& e : split(parts[1], ',')) {
      auto ends = split(e, '-');
      if (ends.size() != 2) throw std::invalid_argument("bad querylet edge: " + e);
      q.join_edges.emplace_back(ends[0], ends[1]);
    }
  }
  if (!parts[2].empty()) q.selection_tables = split(parts[2], ',');
  q.validate();
  return q;
}

QueryletId QueryletId::make(std::vector<std::string> tables,
                            std::vector<std::pair<std::string, std::string>> edges,
                            std::vector<std::string> selections) {
  QueryletId q;
  q.tables = std::move(tables);
  std::sort(q.tables.begin(), q.tables.end());
  for (auto& [a, b] : edges) {
    if (b < a) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  q.join_edges = std::move(edges);
  q.selection_tables = std::move(selections);
  std::sort(q.selection_tables.begin(), q.selection_tables.end());
  q.validate();
  return q;
}

void QueryletId::validate() const {
  if (tables.empty() || tables.size() > 3) {
    throw std::invalid_argument("querylet must have 1-3 tables");
  }
  if (!std::is_sorted(tables.begin(), tables.end()) ||
      std::adjacent_find(tables.begin(), tables.end()) != tables.end()) {
    throw std::invalid_argument("querylet tables must be sorted and unique");
  }
  for (const std::string& s : selection_tables) {
    if (!std::binary_search(tables.begin(), tables.end(), s)) {
      throw std::invalid_argument("selection table not in querylet: " + s);
    }
  }
  for (const auto& [a, b] : join_edges) {
    if (a >= b) throw std::invalid_argument("querylet edge endpoints must be ordered");
    if (!std::binary_search(tables.begin(), tables.end(), a) ||
        !std::binary_search(tables.begin(), tables.end(), b)) {
      throw std::invalid_argument("querylet edge references unknown table");
    }
  }
  if (tables.size() > 1) {
    // connectivity over the edge pattern
    std::vector<std::string> reached{tables[0]};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [a, b] : join_edges) {
        bool has_a = std::find(reached.begin(), reached.end(), a) != reached.end();
        bool has_b = std::find(reached.begin(), reached.end(), b) != reached.end();
        if (has_a != has_b) {
          reached.push_back(has_a ? b : a);
          grew = true;
        }
      }
    }
    if (reached.size() != tables.size()) {
      throw std::invalid_argument("querylet join pattern is disconnected");
    }
  }
}

void ProfileStore::ingest(const Observation& obs) {
  if (!(obs.estimated > 0.0) || !(obs.actual > 0.0) ||
      !std::isfinite(obs.estimated) || !std::isfinite(obs.actual)) {
    ++rejected_;
    return;
  }
  ErrorProfile& prof = profiles_[obs.querylet];
  prof.querylet = obs.querylet;
  prof.samples.emplace_back(obs.estimated, std::log(obs.estimated / obs.actual));
}

std::set<QueryletId> ProfileStore::querylet_ids() const {
  std::set<QueryletId> ids;
  for (const auto& [id, _] : profiles_) ids.insert(id);
  return ids;
}

std::string ProfileStore::to_json_text() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["rejected"] = rejected_;
  nlohmann::json profs = nlohmann::json::array();
  for (const auto& [id, prof] : profiles_) {
    nlohmann::json p;
    p["querylet"] = id.canonical();
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& [est, eps] : prof.samples) {
      samples.push_back(nlohmann::json::array({est, eps}));
    }
    p["samples"] = std::move(samples);
    profs.push_back(std::move(p));
  }
  doc["profiles"] = std::move(profs);
  return doc.dump(2) + "\n";
}

ProfileStore ProfileStore::from_json_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.contains("version") || doc["version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported profile store version");
  }
  ProfileStore store;
  store.rejected_ = doc.value("rejected", std::uint64_t{0});
  for (const auto& p : doc.at("profiles")) {
    QueryletId id = QueryletId::parse(p.at("querylet").get<std::string>());
    ErrorProfile prof;
    prof.querylet = id;
    for (const auto& s : p.at("samples")) {
      prof.samples.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    }
    store.profiles_[id] = std::move(prof);
  }
  return store;
}

namespace {

QueryletId single_table_querylet(const std::string& table) {
  return QueryletId::make({table}, {}, {table});
}

}  // namespace

std::map<int, std::vector<QueryletId>> match_querylets(
    const JoinGraph& graph, const std::set<QueryletId>& available_profiles) {
  graph.validate();
  std::map<int, std::vector<QueryletId>> result;
  for (int d = 0; d < graph.dim_count(); ++d) result[d] = {};

  for (const auto& t : graph.tables) {
    if (t.local_selection_dim) {
      result[*t.local_selection_dim] = {single_table_querylet(t.name)};
    }
  }

  for (const auto& e : graph.edges) {
    const std::string& rn = graph.tables[e.left].name;
    const std::string& sn = graph.tables[e.right].name;
    bool r_sel = graph.table_has_selection(e.left);
    bool s_sel = graph.table_has_selection(e.right);

    if (r_sel || s_sel) {
      // Most specific two-table querylet whose selection flags are a subset
      // of the query's flags on these tables.
      std::vector<QueryletId> candidates;
      std::vector<std::vector<std::string>> flag_sets = {{}};
      if (r_sel) flag_sets.push_back({rn});
      if (s_sel) flag_sets.push_back({sn});
      if (r_sel && s_sel) flag_sets.push_back({rn, sn});
      for (auto& flags : flag_sets) {
        QueryletId q = QueryletId::make({rn, sn}, {{rn, sn}}, std::move(flags));
        if (available_profiles.count(q)) candidates.push_back(std::move(q));
      }
      if (!candidates.empty()) {
        std::sort(candidates.begin(), candidates.end(),
                  [](const QueryletId& a, const QueryletId& b) {
                    if (a.selection_tables.size() != b.selection_tables.size()) {
                      return a.selection_tables.size() > b.selection_tables.size();
                    }
                    return a.canonical() < b.canonical();
                  });
        result[e.dim] = {candidates.front()};
      }
      continue;
    }

    // Neither side has a selection: three-table querylets with one flagged
    // neighbor joined to either side; all matches merge into one model.
    std::vector<QueryletId> matches;
    for (int x = 0; x < graph.table_count(); ++x) {
      if (x == e.left || x == e.right) continue;
      if (!graph.table_has_selection(x)) continue;
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
      QueryletId q = QueryletId::make({xn, rn, sn}, std::move(edges), {xn});
      if (available_profiles.count(q)) matches.push_back(std::move(q));
    }
    std::sort(matches.begin(), matches.end());
    result[e.dim] = std::move(matches);
  }

  return result;
}

ErrorModel build_model(int dim, const std::vector<ErrorProfile>& profiles) {
  std::vector<std::pair<double, double>> samples;
  for (const auto& p : profiles) {
    samples.insert(samples.end(), p.samples.begin(), p.samples.end());
  }

  ErrorModel model;
  model.dimension_id = dim;
  if (samples.empty()) {
    // Non-informative cold-start model.
    KernelDensity wide({0.0}, 2.0);
    model.cutoff = 0.0;
    model.low = wide;
    model.high = wide;
    return model;
  }

  std::vector<double> estimates;
  estimates.reserve(samples.size());
  for (const auto& [est, _] : samples) estimates.push_back(est);
  model.cutoff = quantile(estimates, 0.5);

  std::vector<double> low_eps, high_eps, all_eps;
  all_eps.reserve(samples.size());
  for (const auto& [est, eps] : samples) {
    all_eps.push_back(eps);
    (est <= model.cutoff ? low_eps : high_eps).push_back(eps);
  }
  if (low_eps.empty() || high_eps.empty()) {
    KernelDensity shared = fit_kernel_density(all_eps);
    model.low = shared;
    model.high = shared;
  } else {
    model.low = fit_kernel_density(low_eps);
    model.high = fit_kernel_density(high_eps);
  }
  return model;
}

bool JointErrorDistribution::is_active(int dim) const {
  return std::binary_search(active_dims.begin(), active_dims.end(), dim);
}

JointErrorDistribution JointErrorDistribution::restricted(std::vector<int> dims) const {
  if (dims.empty()) throw std::invalid_argument("restriction needs at least one dimension");
  std::sort(dims.begin(), dims.end());
  for (int d : dims) {
    if (d < 0 || d >= static_cast<int>(models.size())) {
      throw std::invalid_argument("restriction references unknown dimension");
    }
  }
  JointErrorDistribution out = *this;
  out.active_dims = std::move(dims);
  return out;
}

JointErrorDistribution JointErrorDistribution::reanchored(SelectivityVector new_anchor) const {
  if (new_anchor.size() != anchor.size()) {
    throw std::invalid_argument("reanchor dimension mismatch");
  }
  JointErrorDistribution out = *this;
  out.anchor = std::move(new_anchor);
  return out;
}

double joint_pdf(const JointErrorDistribution& dist, const SelectivityVector& s) {
  if (s.size() != dist.anchor.size()) {
    throw std::invalid_argument("joint_pdf dimension mismatch");
  }
  double density = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    int dim = static_cast<int>(i);
    if (!dist.is_active(dim)) {
      if (s[i] != dist.anchor[i]) {
        throw std::invalid_argument("frozen-dim mismatch");
      }
      continue;
    }
    if (!(s[i] > 0.0)) throw std::invalid_argument("selectivity must be positive");
    double eps = std::log(dist.anchor[i] / s[i]);
    density *= dist.models[i].pick(dist.anchor[i]).pdf(eps);
  }
  return density;
}

SelectivityVector sample_true_selectivities(const JointErrorDistribution& dist,
                                            Rng& rng) {
  SelectivityVector s = dist.anchor;
  for (int dim : dist.active_dims) {
    double eps = dist.models[dim].pick(dist.anchor[dim]).sample(rng);
    s[dim] = clamp_selectivity(dist.anchor[dim] * std::exp(-eps));
  }
  return s;
}

SelectivityVector recenter(const JointErrorDistribution& dist,
                           const SelectivityVector& s_hat) {
  if (s_hat.size() != dist.anchor.size()) {
    throw std::invalid_argument("recenter dimension mismatch");
  }
  SelectivityVector out = s_hat;
  for (int dim : dist.active_dims) {
    double expectation = s_hat[dim] * dist.models[dim].pick(s_hat[dim]).mean_exp_neg();
    out[dim] = clamp_selectivity(expectation);
  }
  return out;
}

}  // namespace rqo
