#pragma once

#include <filesystem>

#include "duquant/pipeline.hpp"

namespace duquant {

// Directory layout:
//   manifest.json   alpha, block_size, seed, flags, permutation order, dims
//   smoothing.npy   1-D scales        (when smoothing is present)
//   r1.npy, r2.npy  shared rotation block, block_size x block_size
//   perm.npy        1-D int64 order
void save_bundle(const std::filesystem::path& dir, const TransformBundle& b, const PipelineConfig& cfg);

struct LoadedBundle {
  TransformBundle bundle;
  PipelineConfig config;
};

LoadedBundle load_bundle(const std::filesystem::path& dir);

}  // namespace duquant
