#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "selmopf/acopf.hpp"
#include "selmopf/pipeline.hpp"

namespace selmopf {

/// Subcommands generate, train, predict, evaluate and compare. Returns 0 on
/// success, 2 on usage errors and 1 on domain errors; a domain error is also
/// printed to stderr as {"error", "module", "message"} JSON.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

/// Config-file pipeline settings: reinforcement_layers must be >= 1.
PipelineConfig pipeline_config_from_file(const nlohmann::json& j, PipelineConfig base = {});
OpfConfig opf_config_from_json(const nlohmann::json& j, OpfConfig base = {});

}  // namespace selmopf
