// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "datn/rng.hpp"
#include "datn/tensor.hpp"

namespace datn {

/// Projections of regions (width D) and concept columns (width c) into the
/// two similarity spaces of width d and d'.
struct SemanticAttentionParams {
  Tensor w_l, b_l;              // d x D, d
  Tensor w_c, b_c;              // d x c, d
  Tensor w_c_prime, b_c_prime;  // d' x c, d'
  Tensor w_l_prime, b_l_prime;  // d' x D, d'

  static SemanticAttentionParams init(std::size_t region_width, std::size_t concepts,
                                      std::size_t d, std::size_t d_prime, Rng& rng);
  static SemanticAttentionParams zeros(std::size_t region_width, std::size_t concepts,
                                       std::size_t d, std::size_t d_prime);
  ParamList params(const std::string& prefix) const;
};

struct SimilarityMatrices {
  Tensor region_concept;  // P,  C x c
  Tensor concept_region;  // P', c x C
};

/// P  = (W_l V (+) b_l)^T (W_c v_c (+) b_c)
/// P' = (W'_c v_c (+) b'_c)^T (W'_l V (+) b'_l)
/// where (+) adds the bias to every column and V is the D x C region matrix.
SimilarityMatrices similarity_matrices(const Tensor& regions, const Tensor& concept_set,
                                       const SemanticAttentionParams& p);

enum class MaxPoolNormalization {
  kSoftmax,    // exp(max_j S_ij) / sum_k exp(max_j S_kj)
  kAsPrinted,  // exp(max_j S_ij) / exp(sum_k S_ik); does not sum to one
};

/// Row-max pooled attention over the rows of a score matrix.
Tensor attention_weights(const Tensor& scores,
                         MaxPoolNormalization norm = MaxPoolNormalization::kSoftmax);

struct AttendedPair {
  Tensor regions;   // v^_l = sum_i a^l_i V_i, length D
  Tensor concepts;  // v^_c = sum_i a^c_i v_c,i, length c
};
AttendedPair attended_representations(const Tensor& region_weights, const Tensor& regions,
                                      const Tensor& concept_weights, const Tensor& concept_set);

/// [v^_l ; v^_c], length D + c.
Tensor fuse(const Tensor& attended_regions, const Tensor& attended_concepts);

struct SemanticAttentionOutput {
  SimilarityMatrices similarity;
  Tensor region_weights;   // a^l, length C
  Tensor concept_weights;  // a^c, length c
  AttendedPair attended;
  Tensor fused;            // v'_I
};

SemanticAttentionOutput semantic_attention(
    const Tensor& regions, const Tensor& concept_set, const SemanticAttentionParams& p,
    MaxPoolNormalization norm = MaxPoolNormalization::kSoftmax);

}  // namespace datn
