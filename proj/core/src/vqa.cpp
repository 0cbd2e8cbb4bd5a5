// SPDX-License-Identifier: Apache-2.0
#include "datn/vqa.hpp"

#include <algorithm>
#include <stdexcept>

#include "datn/ops.hpp"

namespace datn {

std::string to_string(VqaVariant v) {
  switch (v) {
    case VqaVariant::kNoneAtt: return "none_att";
    case VqaVariant::kQuestionAttention: return "qa";
    case VqaVariant::kSemanticAttention: return "sa";
    case VqaVariant::kFull: return "full";
  }
  return "?";
}

VqaVariant parse_vqa_variant(const std::string& text) {
  if (text == "none_att") return VqaVariant::kNoneAtt;
  if (text == "qa") return VqaVariant::kQuestionAttention;
  if (text == "sa") return VqaVariant::kSemanticAttention;
  if (text == "full") return VqaVariant::kFull;
  throw std::invalid_argument("unknown vqa ablation '" + text +
                              "' (expected none_att, qa, sa, full)");
}

std::size_t VqaModel::image_input_width() const {
  switch (variant) {
    case VqaVariant::kNoneAtt: return dims.region_width;
    case VqaVariant::kQuestionAttention: return 0;
    case VqaVariant::kSemanticAttention:
    case VqaVariant::kFull: return dims.region_width + dims.concepts;
  }
  return 0;
}

std::size_t VqaModel::question_input_width() const {
  return uses_question_attention() ? dims.question + dims.region_width : dims.question;
}

VqaModel VqaModel::init(VqaVariant variant, const VqaDims& dims, Rng& rng) {
  if (dims.answers < 2) throw std::invalid_argument("vqa model: need at least two answer classes");
  if (dims.vocab < 4) throw std::invalid_argument("vqa model: vocabulary too small");
  VqaModel m;
  m.variant = variant;
  m.dims = dims;
  const std::size_t D = dims.region_width;
  if (m.uses_bigru()) {
    m.encoder_forward = GruParams::init(D, D, rng);
    m.encoder_backward = GruParams::init(D, D, rng);
  }
  if (m.uses_semantic()) {
    m.semantic = SemanticAttentionParams::init(D, dims.concepts, dims.similarity,
                                               dims.similarity, rng);
  }
  m.embedding = glorot(dims.vocab, dims.question, rng);
  m.question_gru = GruParams::init(dims.question, dims.question, rng);
  if (m.uses_question_attention()) {
    m.w_q = glorot(dims.joint, dims.question, rng);
    m.w_l = glorot(dims.joint, D, rng);
  }
  if (m.image_input_width() > 0) m.w = glorot(dims.answers, m.image_input_width(), rng);
  m.u = glorot(dims.answers, m.question_input_width(), rng);
  m.b = zero_param({dims.answers});
  return m;
}

ParamList VqaModel::params() const {
  ParamList out;
  auto append = [&out](ParamList more) {
    for (auto& p : more) out.push_back(std::move(p));
  };
  if (uses_bigru()) {
    append(encoder_forward.params("vqa.encoder_fwd."));
    append(encoder_backward.params("vqa.encoder_bwd."));
  }
  if (uses_semantic()) append(semantic.params("vqa.semantic."));
  out.push_back({"vqa.embedding", embedding});
  append(question_gru.params("vqa.question_gru."));
  if (uses_question_attention()) {
    out.push_back({"vqa.w_q", w_q});
    out.push_back({"vqa.w_l", w_l});
  }
  if (image_input_width() > 0) out.push_back({"vqa.w", w});
  out.push_back({"vqa.u", u});
  out.push_back({"vqa.b", b});
  return out;
}

Tensor encode_question(const VqaModel& m, const std::vector<int>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("encode_question: empty question");
  Tensor h = Tensor::zeros({m.dims.question});
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= m.dims.vocab) {
      throw std::invalid_argument("encode_question: token id " + std::to_string(t) +
                                  " out of range");
    }
    h = gru_cell(ops::row(m.embedding, static_cast<std::size_t>(t)), h, m.question_gru);
  }
  return h;
}

QuestionAttention question_attention(const Tensor& question, const Tensor& regions,
                                     const VqaModel& m) {
  using namespace ops;
  auto q_proj = matmul(m.w_q, question);        // h'
  auto r_proj = matmul(m.w_l, regions);         // h' x C
  auto scores = sigmoid(matmul(transpose(r_proj), q_proj));  // C
  QuestionAttention out;
  out.weights = softmax(scores);
  out.attended = matmul(regions, out.weights);
  out.joint_input = concat({question, out.attended});
  return out;
}

AnswerOutput answer_distribution(const Tensor& image_input, const Tensor& question_input,
                                 const VqaModel& m) {
  Tensor pre;
  if (image_input.defined()) {
    if (!m.w.defined()) throw std::invalid_argument("answer_distribution: variant has no image path");
    pre = ops::linear(m.w, image_input, m.b);
  }
  if (question_input.defined()) {
    auto qpart = ops::matmul(m.u, question_input);
    pre = pre.defined() ? ops::add(pre, qpart) : ops::add(qpart, m.b);
  }
  if (!pre.defined()) throw std::invalid_argument("answer_distribution: no inputs");
  AnswerOutput out;
  out.logits = ops::tanh(pre);
  out.probs = ops::softmax(out.logits);
  return out;
}

VqaForward vqa_forward(const VqaModel& m, const ImageFeatures& f,
                       const std::vector<int>& question) {
  if (f.raw.count() != m.dims.regions || f.raw.feature_width() != m.dims.region_width) {
    throw std::invalid_argument("vqa model: region grid " + shape_str(f.raw.features.shape()) +
                                " does not match model dims");
  }
  VqaForward out;
  out.question = encode_question(m, question);
  Tensor image_input, question_input = out.question;
  if (!m.uses_bigru()) {
    image_input = ops::mean_axis(f.raw.features, 1);
  } else {
    const auto regions =
        bidirectional_encode(f.raw, m.encoder_forward, m.encoder_backward).features;
    if (m.uses_semantic()) {
      out.semantic = semantic_attention(regions, f.concept_set, m.semantic, m.semantic_norm);
      image_input = out.semantic->fused;
    }
    if (m.uses_question_attention()) {
      auto qa = question_attention(out.question, regions, m);
      out.region_weights = qa.weights;
      question_input = qa.joint_input;
    }
  }
  out.answer = answer_distribution(image_input, question_input, m);
  const auto p = out.answer.probs.data();
  out.predicted = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  return out;
}

Tensor vqa_loss(const VqaModel& m, const std::vector<const ImageFeatures*>& features,
                const std::vector<const std::vector<int>*>& questions,
                const std::vector<int>& answers) {
  if (features.empty() || features.size() != questions.size() ||
      features.size() != answers.size()) {
    throw std::invalid_argument("vqa_loss: need equal, non-empty batches");
  }
  Tensor total;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (answers[i] < 0 || static_cast<std::size_t>(answers[i]) >= m.dims.answers) {
      throw std::invalid_argument("vqa_loss: gold answer id " + std::to_string(answers[i]) +
                                  " >= A=" + std::to_string(m.dims.answers));
    }
    auto fw = vqa_forward(m, *features[i], *questions[i]);
    auto l = ops::cross_entropy(fw.answer.logits, static_cast<std::size_t>(answers[i]));
    total = total.defined() ? ops::add(total, l) : l;
  }
  return ops::affine(total, 1.0 / static_cast<double>(features.size()), 0.0);
}

}  // namespace datn
