// SPDX-License-Identifier: Apache-2.0
#include "datn/regions.hpp"

#include <stdexcept>
#include <vector>

#include "datn/ops.hpp"

namespace datn {

RegionGrid flatten_grid(const Tensor& feature_map) {
  if (feature_map.rank() != 3) {
    throw std::invalid_argument("flatten_grid: expected [D,H,W], got " +
                                shape_str(feature_map.shape()));
  }
  RegionGrid g;
  g.height = feature_map.dim(1);
  g.width = feature_map.dim(2);
  g.features = ops::reshape(feature_map, {feature_map.dim(0), g.height * g.width});
  g.stage = RegionStage::kRaw;
  return g;
}

Tensor directional_scan(const RegionGrid& raw, const GruParams& params, bool reverse) {
  const std::size_t c = raw.count();
  if (params.input != raw.feature_width()) {
    throw std::invalid_argument("bidirectional_encode: GRU input width " +
                                std::to_string(params.input) + " vs region width " +
                                std::to_string(raw.feature_width()));
  }
  std::vector<Tensor> states(c);
  Tensor h = Tensor::zeros({params.hidden});
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t i = reverse ? c - 1 - k : k;
    h = gru_cell(ops::column(raw.features, i), h, params);
    states[i] = h;
  }
  return ops::stack_columns(states);
}

RegionGrid bidirectional_encode(const RegionGrid& raw, const GruParams& forward,
                                const GruParams& backward) {
  const std::size_t d = raw.feature_width();
  if (forward.hidden != d || backward.hidden != d) {
    throw std::invalid_argument("bidirectional_encode: hidden widths must equal D=" +
                                std::to_string(d));
  }
  RegionGrid out;
  out.height = raw.height;
  out.width = raw.width;
  out.stage = RegionStage::kContext;
  out.features =
      ops::add(directional_scan(raw, forward, false), directional_scan(raw, backward, true));
  return out;
}

}  // namespace datn
