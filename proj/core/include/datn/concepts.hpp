// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "datn/rng.hpp"
#include "datn/tensor.hpp"

namespace datn {

struct ConceptPredictorDims {
  std::size_t canvas = 16;         // input is [3, canvas, canvas]
  std::size_t hidden_channels = 16;
  std::size_t features = 32;       // D, channels of the final feature map
  std::size_t concepts = 24;       // c

  std::size_t grid() const { return canvas / 4; }
  void validate() const;
};

/// Multi-label concept classifier: two conv(3x3)+tanh+avgpool(2) stages and a
/// dense layer to c sigmoid outputs.
///
/// The second stage's [D, H, W] output doubles as the local feature map that
/// the region encoder flattens.
struct ConceptPredictor {
  ConceptPredictorDims dims;
  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  Tensor dense_w, dense_b;

  static ConceptPredictor init(const ConceptPredictorDims& dims, Rng& rng);
  ParamList params(const std::string& prefix = "concept.") const;

  Tensor feature_map(const Tensor& image) const;  // [D, H, W]
  Tensor logits(const Tensor& image) const;       // [c]
  Tensor predict(const Tensor& image) const;      // v_I in (0,1)^c
};

/// L_M = -(1/N) sum_i sum_j [y log v + (1-y) log(1-v)]; normalised by N only.
Tensor multilabel_loss(const std::vector<Tensor>& probs, const std::vector<Tensor>& labels);
/// Same loss evaluated from logits (stable for saturated outputs).
Tensor multilabel_loss_logits(const std::vector<Tensor>& logits,
                              const std::vector<Tensor>& labels);

/// c x c matrix whose column i is e_i when v_I[i] >= threshold, else zero.
Tensor concept_set(const Tensor& probs, double threshold);

}  // namespace datn
