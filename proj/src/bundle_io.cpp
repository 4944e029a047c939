#include "duquant/bundle_io.hpp"

#include <fstream>

#include "duquant/error.hpp"
#include "duquant/npy.hpp"
#include "duquant/report.hpp"

namespace duquant {
namespace fs = std::filesystem;
using report::json;

namespace {

json rotation_json(const std::optional<BlockDiagonalRotation>& r) {
  if (!r) return nullptr;
  return {{"num_blocks", r->num_blocks}, {"source_block", r->source_block}};
}

std::optional<BlockDiagonalRotation> load_rotation(const fs::path& file, const json& meta) {
  if (meta.is_null()) return std::nullopt;
  BlockDiagonalRotation r;
  r.block.m = npy::read_matrix(file);
  if (r.block.m.rows() != r.block.m.cols()) throw FormatError("shape", file.string() + " is not square");
  r.num_blocks = meta.at("num_blocks").get<std::size_t>();
  r.source_block = meta.at("source_block").get<std::size_t>();
  return r;
}

}  // namespace

void save_bundle(const fs::path& dir, const TransformBundle& b, const PipelineConfig& cfg) {
  b.check_consistent();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json m;
  m["alpha"] = cfg.alpha;
  m["block_size"] = b.block_size;
  m["seed"] = cfg.rotation.seed;
  m["dim"] = b.dim;
  m["flags"] = {{"smooth", b.smoothing.has_value()},
                {"r1", b.r1.has_value()},
                {"perm", b.perm.has_value()},
                {"r2", b.r2.has_value()}};
  m["permutation"] = b.perm ? report::to_json(*b.perm) : json(nullptr);
  m["r1"] = rotation_json(b.r1);
  m["r2"] = rotation_json(b.r2);
  m["config"] = report::to_json(cfg);

  if (b.smoothing) npy::write_vector(dir / "smoothing.npy", b.smoothing->scales);
  if (b.r1) npy::write_matrix(dir / "r1.npy", b.r1->block.m);
  if (b.r2) npy::write_matrix(dir / "r2.npy", b.r2->block.m);
  if (b.perm) {
    std::vector<std::int64_t> order(b.perm->order.begin(), b.perm->order.end());
    npy::write_index_vector(dir / "perm.npy", order);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << m.dump(2) << "\n";
}

LoadedBundle load_bundle(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot read " + (dir / "manifest.json").string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FormatError("manifest", e.what());
  }
  LoadedBundle out;
  auto& b = out.bundle;
  try {
    out.config = report::config_from_json(m.at("config"));
    b.block_size = m.at("block_size").get<std::size_t>();
    b.dim = m.at("dim").get<std::size_t>();
    const auto& f = m.at("flags");
    if (f.at("smooth").get<bool>()) {
      b.smoothing = SmoothingScale{npy::read_vector(dir / "smoothing.npy"), m.at("alpha").get<double>()};
    }
    b.r1 = load_rotation(dir / "r1.npy", m.at("r1"));
    b.r2 = load_rotation(dir / "r2.npy", m.at("r2"));
    if (f.at("perm").get<bool>()) b.perm = report::permutation_from_json(m.at("permutation"));
  } catch (const json::exception& e) {
    throw FormatError("manifest", e.what());
  }
  try {
    b.check_consistent();
  } catch (const ShapeError& e) {
    throw FormatError("manifest", e.what());
  }
  return out;
}

}  // namespace duquant
