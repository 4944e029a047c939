#include "duquant/report.hpp"

#include "duquant/error.hpp"

namespace duquant::report {
namespace {

json quant_json(const QuantConfig& q) {
  return {{"bits", q.bits}, {"clip_ratio", q.clip_ratio}, {"axis", axis_name(q.axis)}};
}

QuantConfig quant_from_json(const json& j) {
  QuantConfig q;
  q.bits = j.at("bits").get<int>();
  q.clip_ratio = j.at("clip_ratio").get<double>();
  const auto axis = j.at("axis").get<std::string>();
  if (axis == "rows") {
    q.axis = Axis::Rows;
  } else if (axis == "cols") {
    q.axis = Axis::Cols;
  } else {
    throw FormatError("axis", "expected rows or cols, got " + axis);
  }
  return q;
}

}  // namespace

const char* axis_name(Axis a) { return a == Axis::Rows ? "rows" : "cols"; }
const char* perm_mode_name(PermMode m) { return m == PermMode::Zigzag ? "zigzag" : "random"; }
const char* rotation_kind_name(RotationKind k) { return k == RotationKind::Greedy ? "greedy" : "hadamard"; }

json to_json(const PipelineConfig& cfg) {
  return {
      {"alpha", cfg.alpha},
      {"block_size", cfg.rotation.block_size},
      {"steps", cfg.rotation.steps},
      {"seed", cfg.rotation.seed},
      {"flags",
       {{"smooth", cfg.stages.smooth}, {"r1", cfg.stages.r1}, {"perm", cfg.stages.perm}, {"r2", cfg.stages.r2}}},
      {"perm_mode", perm_mode_name(cfg.perm_mode)},
      {"rotation_kind", rotation_kind_name(cfg.rotation_kind)},
      {"act_quant", quant_json(cfg.act_quant)},
      {"weight_quant", quant_json(cfg.weight_quant)},
      {"weight_clip_grid", cfg.weight_clip_grid},
  };
}

PipelineConfig config_from_json(const json& j) {
  try {
    PipelineConfig cfg;
    cfg.alpha = j.at("alpha").get<double>();
    cfg.rotation.block_size = j.at("block_size").get<std::size_t>();
    cfg.rotation.steps = j.at("steps").get<std::size_t>();
    cfg.rotation.seed = j.at("seed").get<std::uint64_t>();
    const auto& f = j.at("flags");
    cfg.stages = {f.at("smooth").get<bool>(), f.at("r1").get<bool>(), f.at("perm").get<bool>(),
                  f.at("r2").get<bool>()};
    cfg.perm_mode = j.at("perm_mode").get<std::string>() == "random" ? PermMode::Random : PermMode::Zigzag;
    cfg.rotation_kind =
        j.at("rotation_kind").get<std::string>() == "hadamard" ? RotationKind::Hadamard : RotationKind::Greedy;
    cfg.act_quant = quant_from_json(j.at("act_quant"));
    cfg.weight_quant = quant_from_json(j.at("weight_quant"));
    cfg.weight_clip_grid = j.value("weight_clip_grid", std::size_t{0});
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError("config", e.what());
  }
}

json metrics_json(const ErrorReport& r) {
  return {
      {"fp_reference_norm", r.fp_reference_norm},
      {"quant_relative_error", r.quant_relative_error},
      {"act_quant_relative_error", r.act_quant_relative_error},
      {"weight_quant_relative_error", r.weight_quant_relative_error},
      {"act_max_abs_before", r.act_max_abs_before},
      {"act_max_abs_after", r.act_max_abs_after},
      {"weight_max_abs_before", r.weight_max_abs_before},
      {"weight_max_abs_after", r.weight_max_abs_after},
      {"block_variance_before", r.block_variance_before},
      {"block_variance_after", r.block_variance_after},
  };
}

json stages_json(const ErrorReport& r) {
  json s = json::array();
  for (const auto& t : r.stages) {
    s.push_back({{"name", t.name}, {"act_max_abs", t.act_max_abs}, {"weight_max_abs", t.weight_max_abs}});
  }
  return s;
}

json to_json(const ErrorReport& r, const PipelineConfig& cfg) {
  return {{"config", to_json(cfg)}, {"stages", stages_json(r)}, {"metrics", metrics_json(r)}};
}

json to_json(const std::vector<AblationEntry>& sweep, const PipelineConfig& cfg) {
  json out = json::object();
  for (const auto& e : sweep) {
    PipelineConfig c = cfg;
    c.stages = e.stages;
    out[e.mask] = to_json(e.report, c);
  }
  return out;
}

json to_json(const Permutation& p) { return json(p.order); }

Permutation permutation_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("permutation", "expected an integer array");
  Permutation p;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw FormatError("permutation", "entries must be non-negative integers");
    p.order.push_back(v.get<std::size_t>());
  }
  if (!p.is_bijection()) throw FormatError("permutation", "not a bijection");
  return p;
}

json to_json(const OutlierProfile& p) {
  return {{"num_samples", p.num_samples}, {"col_absmax", p.col_absmax}};
}

json to_json(const OutlierClassification& c) {
  json pos = json::array();
  for (const auto& [i, j] : c.massive_positions) pos.push_back({i, j});
  return {{"normal_channels", c.normal_channels}, {"massive_positions", pos}};
}

}  // namespace duquant::report
