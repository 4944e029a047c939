#pragma once

#include <json.hpp>

#include "duquant/calib.hpp"
#include "duquant/permute.hpp"
#include "duquant/pipeline.hpp"

// JSON shapes shared by the CLI and the bundle manifest.
//
// Error report:
//   {"config": {...}, "stages": [{"name", "act_max_abs", "weight_max_abs"}, ...],
//    "metrics": {"fp_reference_norm", "quant_relative_error",
//                "act_quant_relative_error", "weight_quant_relative_error",
//                "act_max_abs_before", "act_max_abs_after",
//                "weight_max_abs_before", "weight_max_abs_after",
//                "block_variance_before", "block_variance_after"}}
namespace duquant::report {

using nlohmann::json;

json to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const json& j);

json metrics_json(const ErrorReport& r);
json stages_json(const ErrorReport& r);
json to_json(const ErrorReport& r, const PipelineConfig& cfg);

// {"S": report, "R1": report, ...} in sweep order.
json to_json(const std::vector<AblationEntry>& sweep, const PipelineConfig& cfg);

json to_json(const Permutation& p);
Permutation permutation_from_json(const json& j);

json to_json(const OutlierProfile& p);
json to_json(const OutlierClassification& c);

const char* axis_name(Axis a);
const char* perm_mode_name(PermMode m);
const char* rotation_kind_name(RotationKind k);

}  // namespace duquant::report
