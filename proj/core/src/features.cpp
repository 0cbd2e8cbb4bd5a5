// SPDX-License-Identifier: Apache-2.0
#include "datn/features.hpp"

#include "datn/ops.hpp"

namespace datn {

Tensor scene_tensor(const Scene& scene, std::size_t canvas) {
  return Tensor::from({3, canvas, canvas}, canvas_chw(scene.canvas, canvas));
}

ImageFeatures extract_features(const ConceptPredictor& predictor, const Scene& scene,
                               double threshold) {
  NoGradGuard no_grad;
  const auto image = scene_tensor(scene, predictor.dims.canvas);
  const auto fmap = predictor.feature_map(image);
  ImageFeatures f;
  f.raw = flatten_grid(fmap);
  f.concept_probs = ops::sigmoid(ops::linear(
      predictor.dense_w, ops::reshape(fmap, {fmap.numel()}), predictor.dense_b));
  f.concept_set = concept_set(f.concept_probs, threshold);
  return f;
}

std::vector<ImageFeatures> extract_features(const ConceptPredictor& predictor,
                                            const std::vector<Sample>& samples,
                                            double threshold) {
  std::vector<ImageFeatures> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(extract_features(predictor, s.scene, threshold));
  return out;
}

}  // namespace datn
