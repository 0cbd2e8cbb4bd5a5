// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "datn/caption.hpp"
#include "datn/concepts.hpp"
#include "datn/features.hpp"
#include "datn/gru.hpp"
#include "datn/metrics.hpp"
#include "datn/ops.hpp"
#include "datn/rng.hpp"
#include "datn/vqa.hpp"
#include "datn/world.hpp"

using namespace datn;

namespace {

Tensor uniform(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v));
}

struct ToyBatch {
  Dataset data;
  ConceptPredictor predictor;
  std::vector<ImageFeatures> features;

  ToyBatch() : data(generate_dataset(7, 256, 8, WorldConfig{})) {
    Rng rng(1);
    ConceptPredictorDims dims;
    dims.concepts = data.vocab.concept_count();
    predictor = ConceptPredictor::init(dims, rng);
    features = extract_features(predictor, data.train, 0.6);
  }
};

const ToyBatch& toy() {
  static const ToyBatch b;
  return b;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = uniform({n, n}, rng), b = uniform({n, n}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(32)->Arg(64);

static void BM_GruCell(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto p = GruParams::init(h, h, rng);
  const auto x = uniform({h}, rng), prev = uniform({h}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(gru_cell(x, prev, p));
}
BENCHMARK(BM_GruCell)->Arg(32)->Arg(64);

static void BM_FeatureExtraction(benchmark::State& state) {
  const auto& b = toy();
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(b.predictor, b.data.train[0].scene, 0.6));
}
BENCHMARK(BM_FeatureExtraction);

// One forward and backward pass over a batch of 8 captions, default dims.
static void BM_CaptionLossStep(benchmark::State& state) {
  const auto& b = toy();
  CaptionDims d;
  d.regions = 16;
  d.region_width = 32;
  d.concepts = b.data.vocab.concept_count();
  d.similarity = 32;
  d.hidden = 64;
  d.vocab = b.data.vocab.size();
  Rng rng(3);
  auto m = CaptionModel::init(static_cast<CaptionVariant>(state.range(0)), d, rng);
  auto params = m.params();
  std::vector<const ImageFeatures*> feats;
  std::vector<const std::vector<int>*> caps;
  for (std::size_t i = 0; i < 8; ++i) {
    feats.push_back(&b.features[i]);
    caps.push_back(&b.data.train[i].captions[0]);
  }
  for (auto _ : state) {
    zero_grads(params);
    caption_loss(m, feats, caps).backward();
  }
  state.SetLabel(to_string(m.variant));
}
BENCHMARK(BM_CaptionLossStep)
    ->Arg(static_cast<int>(CaptionVariant::kNoneAtt))
    ->Arg(static_cast<int>(CaptionVariant::kFull))
    ->Unit(benchmark::kMillisecond);

static void BM_VqaLossStep(benchmark::State& state) {
  const auto& b = toy();
  VqaDims d;
  d.regions = 16;
  d.region_width = 32;
  d.concepts = b.data.vocab.concept_count();
  d.similarity = 32;
  d.question = 32;
  d.joint = 32;
  d.answers = b.data.vocab.answer_count();
  d.vocab = b.data.vocab.size();
  Rng rng(4);
  auto m = VqaModel::init(VqaVariant::kFull, d, rng);
  auto params = m.params();
  std::vector<const ImageFeatures*> feats;
  std::vector<const std::vector<int>*> qs;
  std::vector<int> answers;
  for (std::size_t i = 0; i < 8; ++i) {
    feats.push_back(&b.features[i]);
    qs.push_back(&b.data.train[i].qa[0].question);
    answers.push_back(b.data.train[i].qa[0].answer);
  }
  for (auto _ : state) {
    zero_grads(params);
    vqa_loss(m, feats, qs, answers).backward();
  }
}
BENCHMARK(BM_VqaLossStep)->Unit(benchmark::kMillisecond);

static void BM_Decode(benchmark::State& state) {
  const auto& b = toy();
  CaptionDims d;
  d.regions = 16;
  d.region_width = 32;
  d.concepts = b.data.vocab.concept_count();
  d.similarity = 32;
  d.hidden = 64;
  d.vocab = b.data.vocab.size();
  Rng rng(5);
  const auto m = CaptionModel::init(CaptionVariant::kFull, d, rng);
  const auto width = static_cast<std::size_t>(state.range(0));
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(generate(m, b.features[0], width, 16));
}
BENCHMARK(BM_Decode)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_CorpusBleuCider(benchmark::State& state) {
  const auto& b = toy();
  EvalCorpus corpus;
  for (std::size_t i = 0; i < b.data.train.size(); ++i) {
    const auto ref = split_words(b.data.vocab.decode(b.data.train[i].captions[0]));
    const auto cand = split_words(b.data.vocab.decode(b.data.train[(i + 1) % b.data.train.size()].captions[0]));
    corpus.push_back({cand, {ref}});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu(corpus, 4));
    benchmark::DoNotOptimize(cider(corpus));
  }
}
BENCHMARK(BM_CorpusBleuCider)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
