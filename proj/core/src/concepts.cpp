// SPDX-License-Identifier: Apache-2.0
#include "datn/concepts.hpp"

#include <stdexcept>

#include "datn/ops.hpp"

namespace datn {

void ConceptPredictorDims::validate() const {
  if (canvas == 0 || canvas % 4 != 0) {
    throw std::invalid_argument("concept predictor: canvas " + std::to_string(canvas) +
                                " must be a positive multiple of 4");
  }
  if (hidden_channels == 0 || features == 0 || concepts == 0) {
    throw std::invalid_argument("concept predictor: widths must be positive");
  }
}

ConceptPredictor ConceptPredictor::init(const ConceptPredictorDims& dims, Rng& rng) {
  dims.validate();
  ConceptPredictor m;
  m.dims = dims;
  const std::size_t c1 = dims.hidden_channels, d = dims.features;
  m.conv1_w = glorot({c1, 3, 3, 3}, 3 * 9, c1 * 9, rng);
  m.conv1_b = zero_param({c1});
  m.conv2_w = glorot({d, c1, 3, 3}, c1 * 9, d * 9, rng);
  m.conv2_b = zero_param({d});
  const std::size_t flat = d * dims.grid() * dims.grid();
  m.dense_w = glorot(dims.concepts, flat, rng);
  m.dense_b = zero_param({dims.concepts});
  return m;
}

ParamList ConceptPredictor::params(const std::string& prefix) const {
  return {{prefix + "conv1_w", conv1_w}, {prefix + "conv1_b", conv1_b},
          {prefix + "conv2_w", conv2_w}, {prefix + "conv2_b", conv2_b},
          {prefix + "dense_w", dense_w}, {prefix + "dense_b", dense_b}};
}

Tensor ConceptPredictor::feature_map(const Tensor& image) const {
  const Shape expected{3, dims.canvas, dims.canvas};
  if (image.shape() != expected) {
    throw std::invalid_argument("concept predictor: image shape " + shape_str(image.shape()) +
                                " does not match " + shape_str(expected));
  }
  auto x = ops::avg_pool2(ops::tanh(ops::conv2d(image, conv1_w, conv1_b, 1)));
  return ops::avg_pool2(ops::tanh(ops::conv2d(x, conv2_w, conv2_b, 1)));
}

Tensor ConceptPredictor::logits(const Tensor& image) const {
  auto f = feature_map(image);
  return ops::linear(dense_w, ops::reshape(f, {f.numel()}), dense_b);
}

Tensor ConceptPredictor::predict(const Tensor& image) const { return ops::sigmoid(logits(image)); }

namespace {

template <class LossFn>
Tensor batch_mean(const std::vector<Tensor>& outputs, const std::vector<Tensor>& labels,
                  LossFn loss) {
  if (outputs.empty() || outputs.size() != labels.size()) {
    throw std::invalid_argument("multilabel_loss: need equal, non-empty batches (got " +
                                std::to_string(outputs.size()) + " outputs, " +
                                std::to_string(labels.size()) + " labels)");
  }
  Tensor total;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (double y : labels[i].data()) {
      if (y != 0.0 && y != 1.0) throw std::invalid_argument("multilabel_loss: labels must be 0/1");
    }
    auto l = loss(outputs[i], labels[i]);
    total = total.defined() ? ops::add(total, l) : l;
  }
  return ops::affine(total, 1.0 / static_cast<double>(outputs.size()), 0.0);
}

}  // namespace

Tensor multilabel_loss(const std::vector<Tensor>& probs, const std::vector<Tensor>& labels) {
  return batch_mean(probs, labels, [](const Tensor& p, const Tensor& y) {
    return ops::binary_cross_entropy(p, y);
  });
}

Tensor multilabel_loss_logits(const std::vector<Tensor>& logits,
                              const std::vector<Tensor>& labels) {
  return batch_mean(logits, labels, [](const Tensor& z, const Tensor& y) {
    return ops::binary_cross_entropy_logits(z, y);
  });
}

Tensor concept_set(const Tensor& probs, double threshold) {
  if (probs.rank() != 1) {
    throw std::invalid_argument("concept_set: expected a vector, got " + shape_str(probs.shape()));
  }
  const std::size_t c = probs.dim(0);
  std::vector<double> m(c * c, 0.0);
  const auto v = probs.data();
  for (std::size_t i = 0; i < c; ++i) {
    if (v[i] >= threshold) m[i * c + i] = 1.0;
  }
  return Tensor::from({c, c}, std::move(m));
}

}  // namespace datn
