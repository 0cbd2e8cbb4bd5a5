// SPDX-License-Identifier: Apache-2.0
#include "datn/semantic_attention.hpp"

#include <stdexcept>

#include "datn/ops.hpp"

namespace datn {

SemanticAttentionParams SemanticAttentionParams::init(std::size_t region_width,
                                                      std::size_t concepts, std::size_t d,
                                                      std::size_t d_prime, Rng& rng) {
  SemanticAttentionParams p;
  p.w_l = glorot(d, region_width, rng);
  p.b_l = zero_param({d});
  p.w_c = glorot(d, concepts, rng);
  p.b_c = zero_param({d});
  p.w_c_prime = glorot(d_prime, concepts, rng);
  p.b_c_prime = zero_param({d_prime});
  p.w_l_prime = glorot(d_prime, region_width, rng);
  p.b_l_prime = zero_param({d_prime});
  return p;
}

SemanticAttentionParams SemanticAttentionParams::zeros(std::size_t region_width,
                                                       std::size_t concepts, std::size_t d,
                                                       std::size_t d_prime) {
  SemanticAttentionParams p;
  p.w_l = zero_param({d, region_width});
  p.b_l = zero_param({d});
  p.w_c = zero_param({d, concepts});
  p.b_c = zero_param({d});
  p.w_c_prime = zero_param({d_prime, concepts});
  p.b_c_prime = zero_param({d_prime});
  p.w_l_prime = zero_param({d_prime, region_width});
  p.b_l_prime = zero_param({d_prime});
  return p;
}

ParamList SemanticAttentionParams::params(const std::string& prefix) const {
  return {{prefix + "w_l", w_l},
          {prefix + "b_l", b_l},
          {prefix + "w_c", w_c},
          {prefix + "b_c", b_c},
          {prefix + "w_c_prime", w_c_prime},
          {prefix + "b_c_prime", b_c_prime},
          {prefix + "w_l_prime", w_l_prime},
          {prefix + "b_l_prime", b_l_prime}};
}

SimilarityMatrices similarity_matrices(const Tensor& regions, const Tensor& concept_set,
                                       const SemanticAttentionParams& p) {
  if (regions.rank() != 2 || concept_set.rank() != 2 ||
      concept_set.dim(0) != concept_set.dim(1)) {
    throw std::invalid_argument("similarity_matrices: regions " + shape_str(regions.shape()) +
                                ", concept set " + shape_str(concept_set.shape()));
  }
  using namespace ops;
  auto region_proj = add_columns(matmul(p.w_l, regions), p.b_l);           // d x C
  auto concept_proj = add_columns(matmul(p.w_c, concept_set), p.b_c);      // d x c
  auto concept_proj2 = add_columns(matmul(p.w_c_prime, concept_set), p.b_c_prime);  // d' x c
  auto region_proj2 = add_columns(matmul(p.w_l_prime, regions), p.b_l_prime);       // d' x C
  return {matmul(transpose(region_proj), concept_proj),
          matmul(transpose(concept_proj2), region_proj2)};
}

Tensor attention_weights(const Tensor& scores, MaxPoolNormalization norm) {
  if (scores.rank() != 2) {
    throw std::invalid_argument("attention_weights: expected a matrix, got " +
                                shape_str(scores.shape()));
  }
  auto row_max = ops::max_axis(scores, 1);
  if (norm == MaxPoolNormalization::kSoftmax) return ops::softmax(row_max);
  return ops::exp(ops::sub(row_max, ops::sum_axis(scores, 1)));
}

AttendedPair attended_representations(const Tensor& region_weights, const Tensor& regions,
                                      const Tensor& concept_weights, const Tensor& concept_set) {
  if (region_weights.rank() != 1 || regions.rank() != 2 ||
      region_weights.dim(0) != regions.dim(1)) {
    throw std::invalid_argument("attended_representations: weights " +
                                shape_str(region_weights.shape()) + " vs regions " +
                                shape_str(regions.shape()));
  }
  if (concept_weights.rank() != 1 || concept_set.rank() != 2 ||
      concept_weights.dim(0) != concept_set.dim(1)) {
    throw std::invalid_argument("attended_representations: weights " +
                                shape_str(concept_weights.shape()) + " vs concepts " +
                                shape_str(concept_set.shape()));
  }
  return {ops::matmul(regions, region_weights), ops::matmul(concept_set, concept_weights)};
}

Tensor fuse(const Tensor& attended_regions, const Tensor& attended_concepts) {
  return ops::concat({attended_regions, attended_concepts});
}

SemanticAttentionOutput semantic_attention(const Tensor& regions, const Tensor& concept_set,
                                           const SemanticAttentionParams& p,
                                           MaxPoolNormalization norm) {
  SemanticAttentionOutput out;
  out.similarity = similarity_matrices(regions, concept_set, p);
  out.region_weights = attention_weights(out.similarity.region_concept, norm);
  out.concept_weights = attention_weights(out.similarity.concept_region, norm);
  out.attended =
      attended_representations(out.region_weights, regions, out.concept_weights, concept_set);
  out.fused = fuse(out.attended.regions, out.attended.concepts);
  return out;
}

}  // namespace datn
