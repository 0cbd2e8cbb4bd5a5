// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "datn/gru.hpp"
#include "datn/tensor.hpp"

namespace datn {

enum class RegionStage { kRaw, kContext };

/// C region vectors of width D, held as a D x C matrix: column i is region i,
/// regions in row-major order of the source grid.
struct RegionGrid {
  Tensor features;
  std::size_t height = 0;
  std::size_t width = 0;
  RegionStage stage = RegionStage::kRaw;

  std::size_t count() const { return height * width; }
  std::size_t feature_width() const { return features.dim(0); }
};

/// Flattens a channel-first [D, H, W] feature map into H*W regions.
RegionGrid flatten_grid(const Tensor& feature_map);

/// Context-aware regions: forward scan over regions 1..C plus backward scan
/// C..1, both from zero state, hidden states summed per region. Hidden width
/// must equal D.
RegionGrid bidirectional_encode(const RegionGrid& raw, const GruParams& forward,
                                const GruParams& backward);

/// Hidden states of a single scan (reverse = scan C..1), aligned by region.
Tensor directional_scan(const RegionGrid& raw, const GruParams& params, bool reverse);

}  // namespace datn
