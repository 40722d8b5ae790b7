#pragma once

#include <json.hpp>

#include "flowtune/nmad.hpp"
#include "flowtune/pipeline.hpp"
#include "flowtune/twostage.hpp"

namespace flowtune {

using Json = nlohmann::json;

// Declarative space document: {"dims": [{"name","kind","values"}...],
// "conditions": [{"child","parent","allowed"}...]}.
Json space_to_json(const ConfigSpace& space);
ConfigSpace space_from_json(const Json& j);

// Configurations serialize as {"dim-name": value} with inactive dims absent.
Json config_to_json(const ConfigSpace& space, const Configuration& config);
Configuration config_from_json(const ConfigSpace& space, const Json& j);

Json prototype_to_json(const PipelinePrototype& proto);
PrototypePtr prototype_from_json(const Json& j);

/// One self-contained trace line: eval index, phase, clock, both configs,
/// loss (null when infinite) and accuracy.
Json trace_entry_to_json(const TraceEntry& e, const ConfigSpace& pipeline_space,
                         const ConfigSpace& algo_space);

Json run_report_to_json(const RunReport& report, const ConfigSpace& pipeline_space,
                        const ConfigSpace& algo_space);

/// NMAD fixture document: a numeric space plus per-algorithm optimal points.
OptimalSet optimal_set_from_json(const Json& j);
OptimalSet load_optimal_set(const std::string& path);

Json nmad_report_to_json(const NmadReport& report, const ConfigSpace& space);
std::string render_nmad_table(const NmadReport& report, const ConfigSpace& space);

std::string format_point(const ConfigSpace& space, const Configuration& config);

}  // namespace flowtune
