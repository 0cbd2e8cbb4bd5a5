// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "datn/concepts.hpp"
#include "datn/regions.hpp"
#include "datn/world.hpp"

namespace datn {

/// Frozen per-image inputs to the task heads.
struct ImageFeatures {
  RegionGrid raw;        // v_l, D x C
  Tensor concept_probs;  // v_I, length c
  Tensor concept_set;    // v_c, c x c
};

Tensor scene_tensor(const Scene& scene, std::size_t canvas);

/// Runs the (trained, frozen) concept predictor once; no history recorded.
ImageFeatures extract_features(const ConceptPredictor& predictor, const Scene& scene,
                               double threshold);
std::vector<ImageFeatures> extract_features(const ConceptPredictor& predictor,
                                            const std::vector<Sample>& samples,
                                            double threshold);

}  // namespace datn
