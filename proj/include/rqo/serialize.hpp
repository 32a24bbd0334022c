#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rqo/error_profiling.hpp"
#include "rqo/pqo.hpp"
#include "rqo/robust_select.hpp"

namespace rqo {

// JSON forms used by the persisted stores. Keys are emitted sorted, so a
// write -> read -> write cycle is byte-identical.

nlohmann::json kernel_density_to_json(const KernelDensity& kd);
KernelDensity kernel_density_from_json(const nlohmann::json& j);

nlohmann::json error_model_to_json(const ErrorModel& m);
ErrorModel error_model_from_json(const nlohmann::json& j);

nlohmann::json distribution_to_json(const JointErrorDistribution& dist);
JointErrorDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json cache_to_json(const SampleCache& cache);
SampleCache cache_from_json(const nlohmann::json& j);

// One line per anchor ("\n"-terminated compact JSON document).
std::string anchor_to_jsonl(const JoinGraph& graph, const AnchorEntry& entry);
AnchorEntry anchor_from_jsonl(const JoinGraph& graph, const std::string& line);

std::string observation_to_json_line(const Observation& obs);
Observation observation_from_json_line(const std::string& line);

std::string observations_to_jsonl(const std::vector<Observation>& obs);
std::vector<Observation> observations_from_jsonl(const std::string& text);

}  // namespace rqo
