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

enum class CaptionVariant {
  kNoneAtt,       // mean-pooled raw regions, no attention networks
  kWordAttention,  // word-guided attention only
  kWordSemantic,   // both attentions, gate fixed open
  kFull,           // both attentions and the learned gate
};

std::string to_string(CaptionVariant v);
CaptionVariant parse_caption_variant(const std::string& text);

struct CaptionDims {
  std::size_t regions = 16;       // C
  std::size_t region_width = 32;  // D
  std::size_t concepts = 24;      // c
  std::size_t similarity = 32;    // d = d'
  std::size_t hidden = 64;        // h, also the word embedding width
  std::size_t vocab = 0;          // N_0
};

/// Caption generator parameters. Only the members used by `variant` are
/// allocated and reported by params().
struct CaptionModel {
  CaptionVariant variant = CaptionVariant::kFull;
  CaptionDims dims;
  MaxPoolNormalization semantic_norm = MaxPoolNormalization::kSoftmax;

  GruParams encoder_forward, encoder_backward;
  SemanticAttentionParams semantic;
  Tensor embedding;      // N_0 x h; token id selects a row
  Tensor w_a, u_a, b_a;  // D; C x h; C
  Tensor w_g, b_g;       // h; 1
  GruParams decoder;     // input [s_t ; z_t ; v'_t]
  Tensor w_o, b_o;       // N_0 x h; N_0

  // Overrides g_t with a constant (the WSA variant pins it to 1).
  std::optional<double> gate_override;

  static CaptionModel init(CaptionVariant variant, const CaptionDims& dims, Rng& rng);
  ParamList params() const;

  bool uses_bigru() const { return variant != CaptionVariant::kNoneAtt; }
  bool uses_semantic() const {
    return variant == CaptionVariant::kWordSemantic || variant == CaptionVariant::kFull;
  }
  bool uses_gate() const { return variant == CaptionVariant::kFull; }
  std::size_t decoder_input_width() const;
};

/// Per-image quantities that do not change across decode steps.
struct CaptionContext {
  Tensor regions;        // v'_l (D x C); raw v_l for None-Att
  Tensor region_scores;  // (w_a^T v'_l)^T, length C
  Tensor global;         // mean-pooled raw regions (None-Att)
  std::optional<SemanticAttentionOutput> semantic;
};

CaptionContext encode_image(const CaptionModel& m, const ImageFeatures& f);

Tensor embed_word(const CaptionModel& m, int token);

struct WordAttention {
  Tensor weights;  // a_t, length C
  Tensor context;  // z^_t, length D
};
/// a~_t = tanh[(w_a^T V)^T + U_a h_{t-1} + b_a], a_t = softmax(a~_t), z^_t = V a_t.
WordAttention word_attention(const Tensor& regions, const Tensor& h_prev, const CaptionModel& m);
WordAttention word_attention(const CaptionContext& ctx, const Tensor& h_prev,
                             const CaptionModel& m);

struct GateOutput {
  Tensor gate;   // g_t, one element
  Tensor gated;  // v'_t = g_t v'_I
};
/// g_t = sigmoid(w_g^T h_{t-1} + b_g).
GateOutput context_gate(const Tensor& h_prev, const Tensor& fused, const CaptionModel& m);

struct DecodeOutput {
  Tensor hidden;  // h_t
  Tensor logits;  // W_o h_t + b_o
  Tensor probs;   // p_{t+1}
};
/// h_t = GRU([s_t ; z^_t ; v'_t], h_{t-1}); p = softmax(W_o h_t + b_o).
/// `visual` is z^_t (or the pooled feature for None-Att); `semantic` is v'_t
/// and must be undefined for variants without the semantic path.
DecodeOutput decode_step(const CaptionModel& m, const Tensor& word, const Tensor& visual,
                         const Tensor& semantic, const Tensor& h_prev);

struct StepOutput {
  DecodeOutput decode;
  Tensor attention;  // a_t (undefined for None-Att)
  Tensor gate;       // g_t (undefined unless the semantic path is active)
};
StepOutput caption_step(const CaptionModel& m, const CaptionContext& ctx, int token,
                        const Tensor& h_prev);

/// Sum over t of -log p_t(w_t) under teacher forcing.
Tensor caption_nll(const CaptionModel& m, const ImageFeatures& f, const std::vector<int>& caption);
/// L_C = -(1/N) sum_i sum_t log p_t(w_t^(i)).
Tensor caption_loss(const CaptionModel& m, const std::vector<const ImageFeatures*>& features,
                    const std::vector<const std::vector<int>*>& captions);

struct DecodeTraceStep {
  int token = 0;
  std::vector<double> attention;  // a_t
  double gate = 0.0;
  double log_prob = 0.0;
};

struct GenerateResult {
  std::vector<int> tokens;  // emitted tokens, ending with <end> if produced
  std::vector<DecodeTraceStep> trace;
  double log_prob = 0.0;
};

/// Greedy decoding when beam_width == 1, beam search otherwise. Emits at most
/// max_len tokens; ties resolve to the lower token id.
GenerateResult generate(const CaptionModel& m, const ImageFeatures& f, std::size_t beam_width,
                        std::size_t max_len);
GenerateResult generate_greedy(const CaptionModel& m, const ImageFeatures& f,
                               std::size_t max_len);

}  // namespace datn
