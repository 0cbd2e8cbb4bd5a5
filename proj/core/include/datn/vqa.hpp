// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "datn/features.hpp"
#include "datn/gru.hpp"
#include "datn/semantic_attention.hpp"

namespace datn {

enum class VqaVariant {
  kNoneAtt,            // pooled image feature + question vector
  kQuestionAttention,  // question-guided attention only
  kSemanticAttention,  // semantic-guided attention only
  kFull,
};

std::string to_string(VqaVariant v);
VqaVariant parse_vqa_variant(const std::string& text);

struct VqaDims {
  std::size_t regions = 16;       // C
  std::size_t region_width = 32;  // D
  std::size_t concepts = 24;      // c
  std::size_t similarity = 32;    // d = d'
  std::size_t question = 32;      // q, question GRU width and word embedding width
  std::size_t joint = 32;         // h', multimodal attention space
  std::size_t answers = 16;       // A
  std::size_t vocab = 0;          // N_0
};

struct VqaModel {
  VqaVariant variant = VqaVariant::kFull;
  VqaDims dims;
  MaxPoolNormalization semantic_norm = MaxPoolNormalization::kSoftmax;

  GruParams encoder_forward, encoder_backward;
  SemanticAttentionParams semantic;
  Tensor embedding;       // N_0 x q
  GruParams question_gru;  // q -> q
  Tensor w_q, w_l;        // h' x q, h' x D
  Tensor w, u, b;         // joint layer: A x image width, A x question width, A

  static VqaModel init(VqaVariant variant, const VqaDims& dims, Rng& rng);
  ParamList params() const;

  bool uses_bigru() const { return variant != VqaVariant::kNoneAtt; }
  bool uses_semantic() const {
    return variant == VqaVariant::kSemanticAttention || variant == VqaVariant::kFull;
  }
  bool uses_question_attention() const {
    return variant == VqaVariant::kQuestionAttention || variant == VqaVariant::kFull;
  }
  std::size_t image_input_width() const;     // columns of W (0 if unused)
  std::size_t question_input_width() const;  // columns of U
};

/// Final hidden state of the question GRU over embedded tokens, zero start.
Tensor encode_question(const VqaModel& m, const std::vector<int>& tokens);

struct QuestionAttention {
  Tensor weights;        // a_i
  Tensor attended;       // v_lq, length D
  Tensor joint_input;    // v'_lq = [v_q ; v_lq]
};
/// a_i = softmax_i( sigmoid(<W_q v_q, W_l v'_li>) ).
QuestionAttention question_attention(const Tensor& question, const Tensor& regions,
                                     const VqaModel& m);

struct AnswerOutput {
  Tensor logits;  // u = tanh(W x_img + U x_q + b)
  Tensor probs;   // P_a = softmax(u)
};
/// Either input may be undefined when the variant has no such pathway.
AnswerOutput answer_distribution(const Tensor& image_input, const Tensor& question_input,
                                 const VqaModel& m);

struct VqaForward {
  Tensor question;             // v_q
  Tensor region_weights;       // question-guided a (if used)
  std::optional<SemanticAttentionOutput> semantic;
  AnswerOutput answer;
  std::size_t predicted = 0;
};
VqaForward vqa_forward(const VqaModel& m, const ImageFeatures& f,
                       const std::vector<int>& question);

/// L_A = -(1/N) sum_i log P_a^(i)[gold_i].
Tensor vqa_loss(const VqaModel& m, const std::vector<const ImageFeatures*>& features,
                const std::vector<const std::vector<int>*>& questions,
                const std::vector<int>& answers);

}  // namespace datn
