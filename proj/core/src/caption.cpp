// SPDX-License-Identifier: Apache-2.0
#include "datn/caption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "datn/ops.hpp"
#include "datn/vocab.hpp"

namespace datn {

std::string to_string(CaptionVariant v) {
  switch (v) {
    case CaptionVariant::kNoneAtt: return "none_att";
    case CaptionVariant::kWordAttention: return "wa";
    case CaptionVariant::kWordSemantic: return "wsa";
    case CaptionVariant::kFull: return "full";
  }
  return "?";
}

CaptionVariant parse_caption_variant(const std::string& text) {
  if (text == "none_att") return CaptionVariant::kNoneAtt;
  if (text == "wa") return CaptionVariant::kWordAttention;
  if (text == "wsa") return CaptionVariant::kWordSemantic;
  if (text == "full") return CaptionVariant::kFull;
  throw std::invalid_argument("unknown caption ablation '" + text +
                              "' (expected none_att, wa, wsa, full)");
}

std::size_t CaptionModel::decoder_input_width() const {
  std::size_t w = dims.hidden + dims.region_width;
  if (uses_semantic()) w += dims.region_width + dims.concepts;
  return w;
}

CaptionModel CaptionModel::init(CaptionVariant variant, const CaptionDims& dims, Rng& rng) {
  if (dims.vocab < 4) throw std::invalid_argument("caption model: vocabulary too small");
  CaptionModel m;
  m.variant = variant;
  m.dims = dims;
  const std::size_t D = dims.region_width, C = dims.regions, h = dims.hidden;
  if (m.uses_bigru()) {
    m.encoder_forward = GruParams::init(D, D, rng);
    m.encoder_backward = GruParams::init(D, D, rng);
    m.w_a = glorot({D}, D, 1, rng);
    m.u_a = glorot(C, h, rng);
    m.b_a = zero_param({C});
  }
  if (m.uses_semantic()) {
    m.semantic = SemanticAttentionParams::init(D, dims.concepts, dims.similarity,
                                               dims.similarity, rng);
  }
  if (m.uses_gate()) {
    m.w_g = glorot({h}, h, 1, rng);
    m.b_g = zero_param({1});
  }
  m.embedding = glorot(dims.vocab, h, rng);
  m.decoder = GruParams::init(m.decoder_input_width(), h, rng);
  m.w_o = glorot(dims.vocab, h, rng);
  m.b_o = zero_param({dims.vocab});
  return m;
}

ParamList CaptionModel::params() const {
  ParamList out;
  auto append = [&out](ParamList more) {
    for (auto& p : more) out.push_back(std::move(p));
  };
  if (uses_bigru()) {
    append(encoder_forward.params("caption.encoder_fwd."));
    append(encoder_backward.params("caption.encoder_bwd."));
  }
  if (uses_semantic()) append(semantic.params("caption.semantic."));
  out.push_back({"caption.embedding", embedding});
  if (uses_bigru()) {
    out.push_back({"caption.w_a", w_a});
    out.push_back({"caption.u_a", u_a});
    out.push_back({"caption.b_a", b_a});
  }
  if (uses_gate()) {
    out.push_back({"caption.w_g", w_g});
    out.push_back({"caption.b_g", b_g});
  }
  append(decoder.params("caption.decoder."));
  out.push_back({"caption.w_o", w_o});
  out.push_back({"caption.b_o", b_o});
  return out;
}

CaptionContext encode_image(const CaptionModel& m, const ImageFeatures& f) {
  if (f.raw.count() != m.dims.regions || f.raw.feature_width() != m.dims.region_width) {
    throw std::invalid_argument("caption model: region grid " + shape_str(f.raw.features.shape()) +
                                " does not match D=" + std::to_string(m.dims.region_width) +
                                ", C=" + std::to_string(m.dims.regions));
  }
  CaptionContext ctx;
  if (!m.uses_bigru()) {
    ctx.regions = f.raw.features;
    ctx.global = ops::mean_axis(f.raw.features, 1);
    return ctx;
  }
  ctx.regions = bidirectional_encode(f.raw, m.encoder_forward, m.encoder_backward).features;
  ctx.region_scores = ops::matmul(ops::transpose(ctx.regions), m.w_a);
  if (m.uses_semantic()) {
    ctx.semantic = semantic_attention(ctx.regions, f.concept_set, m.semantic, m.semantic_norm);
  }
  return ctx;
}

Tensor embed_word(const CaptionModel& m, int token) {
  if (token < 0 || static_cast<std::size_t>(token) >= m.dims.vocab) {
    throw std::invalid_argument("embed_word: token id " + std::to_string(token) +
                                " out of range for vocabulary of " + std::to_string(m.dims.vocab));
  }
  return ops::row(m.embedding, static_cast<std::size_t>(token));
}

WordAttention word_attention(const Tensor& regions, const Tensor& h_prev, const CaptionModel& m) {
  CaptionContext ctx;
  ctx.regions = regions;
  ctx.region_scores = ops::matmul(ops::transpose(regions), m.w_a);
  return word_attention(ctx, h_prev, m);
}

WordAttention word_attention(const CaptionContext& ctx, const Tensor& h_prev,
                             const CaptionModel& m) {
  auto scores = ops::tanh(ops::add(ctx.region_scores, ops::linear(m.u_a, h_prev, m.b_a)));
  WordAttention out;
  out.weights = ops::softmax(scores);
  out.context = ops::matmul(ctx.regions, out.weights);
  return out;
}

GateOutput context_gate(const Tensor& h_prev, const Tensor& fused, const CaptionModel& m) {
  GateOutput out;
  out.gate = ops::sigmoid(ops::linear(ops::reshape(m.w_g, {1, m.w_g.numel()}), h_prev, m.b_g));
  out.gated = ops::scale_by(fused, out.gate);
  return out;
}

DecodeOutput decode_step(const CaptionModel& m, const Tensor& word, const Tensor& visual,
                         const Tensor& semantic, const Tensor& h_prev) {
  if (semantic.defined() != m.uses_semantic()) {
    throw std::invalid_argument("decode_step: semantic input presence does not match variant " +
                                to_string(m.variant));
  }
  auto input = semantic.defined() ? ops::concat({word, visual, semantic})
                                  : ops::concat({word, visual});
  DecodeOutput out;
  out.hidden = gru_cell(input, h_prev, m.decoder);
  out.logits = ops::linear(m.w_o, out.hidden, m.b_o);
  out.probs = ops::softmax(out.logits);
  return out;
}

StepOutput caption_step(const CaptionModel& m, const CaptionContext& ctx, int token,
                        const Tensor& h_prev) {
  StepOutput out;
  auto word = embed_word(m, token);
  if (!m.uses_bigru()) {
    out.decode = decode_step(m, word, ctx.global, Tensor(), h_prev);
    return out;
  }
  auto att = word_attention(ctx, h_prev, m);
  out.attention = att.weights;
  Tensor semantic;
  if (m.uses_semantic()) {
    std::optional<double> forced = m.gate_override;
    if (m.variant == CaptionVariant::kWordSemantic) forced = 1.0;
    if (forced) {
      out.gate = Tensor::scalar(*forced);
      semantic = ops::scale_by(ctx.semantic->fused, out.gate);
    } else {
      auto g = context_gate(h_prev, ctx.semantic->fused, m);
      out.gate = g.gate;
      semantic = g.gated;
    }
  }
  out.decode = decode_step(m, word, att.context, semantic, h_prev);
  return out;
}

Tensor caption_nll(const CaptionModel& m, const ImageFeatures& f, const std::vector<int>& caption) {
  if (caption.size() < 2) {
    throw std::invalid_argument("caption_loss: empty caption (need <start> and at least one target)");
  }
  const auto ctx = encode_image(m, f);
  Tensor h = Tensor::zeros({m.dims.hidden});
  Tensor total;
  for (std::size_t t = 0; t + 1 < caption.size(); ++t) {
    auto step = caption_step(m, ctx, caption[t], h);
    h = step.decode.hidden;
    auto target = caption[t + 1];
    if (target < 0 || static_cast<std::size_t>(target) >= m.dims.vocab) {
      throw std::invalid_argument("caption_loss: target id out of range");
    }
    auto l = ops::cross_entropy(step.decode.logits, static_cast<std::size_t>(target));
    total = total.defined() ? ops::add(total, l) : l;
  }
  return total;
}

Tensor caption_loss(const CaptionModel& m, const std::vector<const ImageFeatures*>& features,
                    const std::vector<const std::vector<int>*>& captions) {
  if (features.empty() || features.size() != captions.size()) {
    throw std::invalid_argument("caption_loss: need equal, non-empty batches");
  }
  Tensor total;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto l = caption_nll(m, *features[i], *captions[i]);
    total = total.defined() ? ops::add(total, l) : l;
  }
  return ops::affine(total, 1.0 / static_cast<double>(features.size()), 0.0);
}

namespace {

std::vector<double> log_softmax(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<DecodeTraceStep> trace;
  double log_prob = 0.0;
  Tensor hidden;
  bool finished = false;
};

DecodeTraceStep trace_step(const StepOutput& s, int token, double lp) {
  DecodeTraceStep t;
  t.token = token;
  t.log_prob = lp;
  if (s.attention.defined()) {
    const auto a = s.attention.data();
    t.attention.assign(a.begin(), a.end());
  }
  t.gate = s.gate.defined() ? s.gate.item() : 0.0;
  return t;
}

}  // namespace

GenerateResult generate_greedy(const CaptionModel& m, const ImageFeatures& f,
                               std::size_t max_len) {
  NoGradGuard no_grad;
  const auto ctx = encode_image(m, f);
  GenerateResult out;
  Tensor h = Tensor::zeros({m.dims.hidden});
  int token = kStartId;
  while (out.tokens.size() < max_len) {
    auto step = caption_step(m, ctx, token, h);
    h = step.decode.hidden;
    const auto lp = log_softmax(step.decode.logits.data());
    const auto best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    out.tokens.push_back(best);
    out.trace.push_back(trace_step(step, best, lp[static_cast<std::size_t>(best)]));
    out.log_prob += lp[static_cast<std::size_t>(best)];
    token = best;
    if (token == kEndId) break;
  }
  return out;
}

GenerateResult generate(const CaptionModel& m, const ImageFeatures& f, std::size_t beam_width,
                        std::size_t max_len) {
  if (beam_width == 0) throw std::invalid_argument("generate: beam width must be >= 1");
  if (beam_width == 1) return generate_greedy(m, f, max_len);
  NoGradGuard no_grad;
  const auto ctx = encode_image(m, f);

  std::vector<Hypothesis> alive(1);
  alive[0].hidden = Tensor::zeros({m.dims.hidden});
  std::vector<Hypothesis> finished;

  struct Candidate {
    double score;
    std::size_t parent;
    int token;
  };
  for (std::size_t len = 0; len < max_len && !alive.empty(); ++len) {
    std::vector<Candidate> candidates;
    std::vector<StepOutput> steps;
    std::vector<std::vector<double>> lps;
    for (std::size_t b = 0; b < alive.size(); ++b) {
      const int prev = alive[b].tokens.empty() ? kStartId : alive[b].tokens.back();
      steps.push_back(caption_step(m, ctx, prev, alive[b].hidden));
      lps.push_back(log_softmax(steps.back().decode.logits.data()));
      for (std::size_t v = 0; v < lps.back().size(); ++v) {
        candidates.push_back({alive[b].log_prob + lps.back()[v], b, static_cast<int>(v)});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    std::vector<Hypothesis> next;
    const std::size_t want = beam_width - finished.size();
    std::size_t picked = 0;
    for (const auto& c : candidates) {
      if (picked++ >= want) break;
      Hypothesis h = alive[c.parent];
      h.tokens.push_back(c.token);
      h.trace.push_back(trace_step(steps[c.parent], c.token,
                                   lps[c.parent][static_cast<std::size_t>(c.token)]));
      h.log_prob = c.score;
      h.hidden = steps[c.parent].decode.hidden;
      if (c.token == kEndId) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    if (finished.size() >= beam_width) break;
  }
  for (auto& h : alive) finished.push_back(std::move(h));
  const auto best = std::max_element(
      finished.begin(), finished.end(),
      [](const Hypothesis& a, const Hypothesis& b) { return a.log_prob < b.log_prob; });
  GenerateResult out;
  out.tokens = best->tokens;
  out.trace = best->trace;
  out.log_prob = best->log_prob;
  return out;
}

}  // namespace datn
