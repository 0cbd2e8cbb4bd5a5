// SPDX-License-Identifier: Apache-2.0
#include "datn/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "datn/dataset_io.hpp"
#include "datn/features.hpp"
#include "datn/kv.hpp"
#include "datn/ops.hpp"
#include "datn/optim.hpp"
#include "datn/rng.hpp"

namespace datn {

namespace {

// Seed tags; each stream of randomness gets its own derived seed.
constexpr std::uint64_t kTagConceptInit = 1;
constexpr std::uint64_t kTagHeadInit = 2;
constexpr std::uint64_t kTagConceptShuffle = 0x10000;
constexpr std::uint64_t kTagHeadShuffle = 0x20000;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t tag) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, tag));
  rng.shuffle(order);
  return order;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> to_vector(const Tensor& t) {
  const auto d = t.data();
  return {d.begin(), d.end()};
}

// One training example for the head: (sample index, caption or question index).
using Unit = std::pair<std::size_t, std::size_t>;

std::vector<Unit> head_units(Task task, const std::vector<Sample>& samples) {
  std::vector<Unit> units;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t n = task == Task::kCaption ? samples[i].captions.size() : samples[i].qa.size();
    for (std::size_t k = 0; k < n; ++k) units.emplace_back(i, k);
  }
  return units;
}

Tensor head_loss(const TaskModel& model, const std::vector<Sample>& samples,
                 const std::vector<ImageFeatures>& features, const std::vector<Unit>& batch) {
  std::vector<const ImageFeatures*> f;
  for (const auto& [i, k] : batch) f.push_back(&features[i]);
  if (model.caption) {
    std::vector<const std::vector<int>*> caps;
    for (const auto& [i, k] : batch) caps.push_back(&samples[i].captions[k]);
    return caption_loss(*model.caption, f, caps);
  }
  std::vector<const std::vector<int>*> qs;
  std::vector<int> answers;
  for (const auto& [i, k] : batch) {
    qs.push_back(&samples[i].qa[k].question);
    answers.push_back(samples[i].qa[k].answer);
  }
  return vqa_loss(*model.vqa, f, qs, answers);
}

void restore_optimizer(const Checkpoint& ck, const ParamList& params, Optimizer& opt) {
  std::vector<std::vector<double>> first, second;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto* m = ck.find("opt.m." + params[k].name);
    const auto* v = ck.find("opt.v." + params[k].name);
    first.push_back(m ? m->values : std::vector<double>{});
    second.push_back(v ? v->values : std::vector<double>{});
  }
  opt.restore(ck.step, std::move(first), std::move(second));
}

}  // namespace

ParamList TaskModel::head_params() const {
  if (caption) return caption->params();
  if (vqa) return vqa->params();
  throw std::logic_error("task model has no head");
}

ParamList TaskModel::all_params() const {
  ParamList out = predictor.params();
  for (auto& p : head_params()) out.push_back(std::move(p));
  return out;
}

TaskModel init_task_model(const RunConfig& config, std::size_t vocab_size,
                          const ConceptPredictor& predictor) {
  config.validate();
  TaskModel m;
  m.config = config;
  m.predictor = predictor;
  Rng rng(derive_seed(config.seed, kTagHeadInit));
  if (config.task == Task::kCaption) {
    m.caption = CaptionModel::init(config.caption_variant(), config.caption_dims(vocab_size), rng);
    m.caption->semantic_norm = config.semantic_norm;
  } else {
    m.vqa = VqaModel::init(config.vqa_variant(), config.vqa_dims(vocab_size), rng);
    m.vqa->semantic_norm = config.semantic_norm;
  }
  return m;
}

std::string format_loss_log(const std::vector<LossRecord>& records) {
  std::string out = "step loss\n";
  for (const auto& r : records) out += std::to_string(r.step) + " " + fmt17(r.loss) + "\n";
  return out;
}

std::vector<LossRecord> parse_loss_log(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "step loss") {
    throw FormatError(source + ":1: expected header 'step loss'");
  }
  std::vector<LossRecord> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::istringstream fields(line);
    LossRecord r;
    if (!(fields >> r.step >> r.loss)) {
      throw FormatError(source + ":" + std::to_string(n) + ": expected 'step loss'");
    }
    out.push_back(r);
  }
  return out;
}

ConceptPredictor train_concept_predictor(const RunConfig& config,
                                         const std::vector<Sample>& train,
                                         std::vector<LossRecord>* log) {
  if (train.empty()) throw std::invalid_argument("train_concept_predictor: no training samples");
  Rng rng(derive_seed(config.seed, kTagConceptInit));
  auto model = ConceptPredictor::init(config.concept_dims(), rng);
  auto params = model.params();
  OptimizerConfig oc = config.optimizer;
  oc.learning_rate = config.concept_learning_rate;
  Optimizer opt(oc, params);

  std::vector<Tensor> images, labels;
  for (const auto& s : train) {
    images.push_back(scene_tensor(s.scene, config.canvas));
    labels.push_back(Tensor::vector(s.concept_labels));
  }
  const std::size_t bs = config.concept_batch_size;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.concept_epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.seed, kTagConceptShuffle + epoch);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<Tensor> logits, ys;
      for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) {
        logits.push_back(model.logits(images[order[i]]));
        ys.push_back(labels[order[i]]);
      }
      zero_grads(params);
      auto loss = multilabel_loss_logits(logits, ys);
      if (log) log->push_back({step, loss.item()});
      loss.backward();
      opt.step(params);
      ++step;
    }
  }
  return model;
}

Checkpoint make_checkpoint(const TaskModel& model, const Optimizer* optimizer, std::uint64_t step) {
  Checkpoint ck;
  ck.config_text = model.config.to_text();
  ck.step = step;
  append_params(ck, model.predictor.params());
  const auto head = model.head_params();
  append_params(ck, head);
  if (optimizer) {
    for (std::size_t k = 0; k < head.size(); ++k) {
      const auto& m = optimizer->first_moments()[k];
      const auto& v = optimizer->second_moments()[k];
      if (!m.empty()) ck.records.push_back({"opt.m." + head[k].name, {m.size()}, m});
      if (!v.empty()) ck.records.push_back({"opt.v." + head[k].name, {v.size()}, v});
    }
  }
  return ck;
}

TaskModel load_task_model(const Checkpoint& ck, std::size_t vocab_size) {
  const auto config = RunConfig::from_text(ck.config_text, "checkpoint config");
  Rng rng(0);
  auto predictor = ConceptPredictor::init(config.concept_dims(), rng);
  auto pp = predictor.params();
  restore_params(ck, pp);
  auto model = init_task_model(config, vocab_size, predictor);
  auto hp = model.head_params();
  restore_params(ck, hp);
  return model;
}

TrainResult run_training(const RunConfig& config, const Dataset& data, const TrainOptions& options) {
  config.check_against(data.vocab);
  if (data.train.empty()) throw std::invalid_argument("run_training: empty training split");
  const auto progress = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  TrainResult result;
  std::optional<Checkpoint> resume_ck;
  if (options.resume) {
    resume_ck = load_checkpoint(*options.resume);
    if (RunConfig::from_text(resume_ck->config_text, options.resume->string()) != config) {
      throw std::invalid_argument("run_training: checkpoint '" + options.resume->string() +
                                  "' was written with a different config");
    }
    result.model = load_task_model(*resume_ck, data.vocab.size());
  } else {
    ConceptPredictor predictor;
    if (options.pretrained) {
      predictor = *options.pretrained;
    } else {
      progress("training concept predictor");
      predictor = train_concept_predictor(config, data.train, &result.concept_losses);
      if (!options.out_dir.empty()) {
        write_file(options.out_dir / "concept_loss.log", format_loss_log(result.concept_losses));
      }
    }
    result.model = init_task_model(config, data.vocab.size(), predictor);
  }

  const auto features = extract_features(result.model.predictor, data.train, config.threshold);
  const auto units = head_units(config.task, data.train);
  if (units.empty()) throw std::invalid_argument("run_training: no training examples for task");
  const std::size_t bs = config.batch_size;
  const std::size_t per_epoch = (units.size() + bs - 1) / bs;
  result.total_steps = per_epoch * config.epochs;

  auto params = result.model.head_params();
  Optimizer opt(config.optimizer, params);
  std::uint64_t step = 0;
  std::vector<LossRecord> log;
  if (resume_ck) {
    restore_optimizer(*resume_ck, params, opt);
    step = resume_ck->step;
    const auto old_log = options.out_dir / "loss.log";
    if (!options.out_dir.empty() && std::filesystem::exists(old_log)) {
      for (const auto& r : parse_loss_log(read_text_file(old_log.string()), old_log.string())) {
        if (r.step < step) log.push_back(r);
      }
    }
  }

  std::uint64_t stop = result.total_steps;
  if (options.stop_after) stop = std::min<std::uint64_t>(stop, *options.stop_after);
  std::vector<std::size_t> order;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  for (; step < stop; ++step) {
    const std::size_t epoch = step / per_epoch;
    const std::size_t b = (step % per_epoch) * bs;
    if (epoch != order_epoch) {
      order = epoch_order(units.size(), config.seed, kTagHeadShuffle + epoch);
      order_epoch = epoch;
      progress("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(config.epochs));
    }
    std::vector<Unit> batch;
    for (std::size_t i = b; i < std::min(units.size(), b + bs); ++i) batch.push_back(units[order[i]]);
    zero_grads(params);
    auto loss = head_loss(result.model, data.train, features, batch);
    result.losses.push_back({step, loss.item()});
    log.push_back({step, loss.item()});
    loss.backward();
    opt.step(params);
  }
  result.step = step;

  if (!options.out_dir.empty()) {
    save_checkpoint(make_checkpoint(result.model, &opt, step), options.out_dir / "model.ckpt");
    write_file(options.out_dir / "loss.log", format_loss_log(log));
    write_file(options.out_dir / "config.txt", config.to_text());
  }
  return result;
}

double MetricsReport::get(const std::string& name) const {
  for (const auto& [k, v] : values) {
    if (k == name) return v;
  }
  throw std::invalid_argument("metrics report has no '" + name + "'");
}

std::string MetricsReport::to_table() const {
  std::size_t width = 6;
  for (const auto& [k, v] : values) width = std::max(width, k.size());
  std::string out = "metric" + std::string(width - 6 + 2, ' ') + "value\n";
  for (const auto& [k, v] : values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    out += k + std::string(width - k.size() + 2, ' ') + buf + "\n";
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = to_string(task);
  for (const auto& [k, v] : values) j["metrics"][k] = v;
  return j.dump();
}

Sentence caption_words(const std::vector<int>& tokens, const Vocabulary& vocab) {
  Sentence out;
  for (int t : tokens) {
    if (t == kStartId || t == kPadId) continue;
    if (t == kEndId) break;
    out.push_back(vocab.token(static_cast<std::size_t>(t)));
  }
  return out;
}

MetricsReport evaluate(const TaskModel& model, const Vocabulary& vocab,
                       const std::vector<Sample>& split, const Taxonomy& taxonomy) {
  if (split.empty()) throw std::invalid_argument("evaluate: empty split");
  model.config.check_against(vocab);
  const std::size_t vocab_size = model.caption ? model.caption->dims.vocab : model.vqa->dims.vocab;
  if (vocab_size != vocab.size()) {
    throw std::invalid_argument("evaluate: checkpoint vocabulary has " + std::to_string(vocab_size) +
                                " tokens, dataset has " + std::to_string(vocab.size()));
  }
  NoGradGuard no_grad;
  const auto features = extract_features(model.predictor, split, model.config.threshold);
  MetricsReport r;
  r.task = model.config.task;
  if (model.caption) {
    EvalCorpus corpus;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
      const auto gen = generate(*model.caption, features[i], model.config.beam_width,
                                model.config.max_caption_length);
      EvalItem item;
      item.candidate = caption_words(gen.tokens, vocab);
      bool hit = false;
      for (const auto& c : split[i].captions) {
        item.references.push_back(caption_words(c, vocab));
        hit = hit || item.references.back() == item.candidate;
      }
      exact += hit ? 1 : 0;
      corpus.push_back(std::move(item));
    }
    for (std::size_t n = 1; n <= 4; ++n) r.values.emplace_back("bleu" + std::to_string(n), bleu(corpus, n));
    r.values.emplace_back("cider", cider(corpus));
    r.values.emplace_back("exact_match", static_cast<double>(exact) / static_cast<double>(split.size()));
    return r;
  }
  std::vector<std::string> preds, golds;
  std::array<std::size_t, kNumQuestionTypes> hits{}, counts{};
  for (std::size_t i = 0; i < split.size(); ++i) {
    for (const auto& qa : split[i].qa) {
      const auto fw = vqa_forward(*model.vqa, features[i], qa.question);
      preds.push_back(vocab.answers()[fw.predicted]);
      golds.push_back(vocab.answers()[static_cast<std::size_t>(qa.answer)]);
      const auto t = static_cast<std::size_t>(qa.type);
      ++counts[t];
      hits[t] += preds.back() == golds.back() ? 1 : 0;
    }
  }
  if (preds.empty()) throw std::invalid_argument("evaluate: split has no questions");
  r.values.emplace_back("accuracy", accuracy(preds, golds));
  for (std::size_t t = 0; t < kNumQuestionTypes; ++t) {
    const std::string name = question_type_name(static_cast<QuestionType>(t));
    r.values.emplace_back("accuracy_" + name,
                          counts[t] ? static_cast<double>(hits[t]) / static_cast<double>(counts[t]) : 0.0);
    r.values.emplace_back("count_" + name, static_cast<double>(counts[t]));
  }
  r.values.emplace_back("wups_0.9", wups(preds, golds, taxonomy, 0.9));
  r.values.emplace_back("wups_0.0", wups(preds, golds, taxonomy, 0.0));
  return r;
}

const std::vector<std::string>& ablation_variants(Task task) {
  static const std::vector<std::string> caption = {"none_att", "wa", "wsa", "full"};
  static const std::vector<std::string> vqa = {"none_att", "qa", "sa", "full"};
  return task == Task::kCaption ? caption : vqa;
}

double AblationTable::mean(const std::string& variant, const std::string& metric) const {
  for (std::size_t v = 0; v < variants.size(); ++v) {
    if (variants[v] != variant) continue;
    double s = 0.0;
    for (const auto& r : reports[v]) s += r.get(metric);
    return s / static_cast<double>(reports[v].size());
  }
  throw std::invalid_argument("ablation table has no variant '" + variant + "'");
}

std::string AblationTable::to_table() const {
  if (reports.empty() || reports[0].empty()) return {};
  std::vector<std::string> metrics;
  for (const auto& [k, v] : reports[0][0].values) {
    if (k.rfind("count_", 0) != 0) metrics.push_back(k);
  }
  std::string out = "variant ";
  for (const auto& m : metrics) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %14s", m.c_str());
    out += buf;
  }
  out += "\n";
  for (const auto& v : variants) {
    char name[16];
    std::snprintf(name, sizeof name, "%-8s", v.c_str());
    out += name;
    for (const auto& m : metrics) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %14.4f", mean(v, m));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string AblationTable::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = to_string(task);
  j["seeds"] = seeds;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    nlohmann::ordered_json row;
    row["variant"] = variants[v];
    for (const auto& [k, x] : reports[v][0].values) row["mean"][k] = mean(variants[v], k);
    for (const auto& r : reports[v]) {
      nlohmann::ordered_json per;
      for (const auto& [k, x] : r.values) per[k] = x;
      row["per_seed"].push_back(per);
    }
    j["variants"].push_back(row);
  }
  return j.dump();
}

AblationTable run_ablation_suite(const RunConfig& base, const Dataset& data,
                                 const std::vector<std::uint64_t>& seeds,
                                 const Taxonomy& taxonomy, const ProgressFn& progress) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation_suite: need at least one seed");
  base.check_against(data.vocab);
  AblationTable table;
  table.task = base.task;
  table.seeds = seeds;
  table.variants = ablation_variants(base.task);
  table.reports.resize(table.variants.size());
  for (auto seed : seeds) {
    RunConfig seeded = base;
    seeded.seed = seed;
    if (progress) progress("seed " + std::to_string(seed) + ": concept predictor");
    const auto predictor = train_concept_predictor(seeded, data.train);
    for (std::size_t v = 0; v < table.variants.size(); ++v) {
      RunConfig c = seeded;
      c.ablation = table.variants[v];
      if (progress) progress("seed " + std::to_string(seed) + ": " + c.ablation);
      TrainOptions opts;
      opts.pretrained = &predictor;
      const auto trained = run_training(c, data, opts);
      table.reports[v].push_back(evaluate(trained.model, data.vocab, data.test, taxonomy));
    }
  }
  return table;
}

std::string region_matrix_text(const std::vector<double>& weights, std::size_t height,
                               std::size_t width) {
  if (weights.size() != height * width) {
    throw std::invalid_argument("region_matrix_text: " + std::to_string(weights.size()) +
                                " weights for a " + std::to_string(height) + "x" +
                                std::to_string(width) + " grid");
  }
  std::string out;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c) out += ' ';
      out += fmt17(weights[r * width + c]);
    }
    out += '\n';
  }
  return out;
}

std::string region_pgm(const std::vector<double>& weights, std::size_t height, std::size_t width) {
  if (weights.size() != height * width) {
    throw std::invalid_argument("region_pgm: weight count does not match the grid");
  }
  const double top = *std::max_element(weights.begin(), weights.end());
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (double w : weights) {
    const double scaled = top > 0.0 ? std::round(255.0 * w / top) : 0.0;
    out += static_cast<char>(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0)));
  }
  return out;
}

std::string concept_table(const std::vector<double>& weights,
                          const std::vector<std::string>& words) {
  if (weights.size() != words.size()) {
    throw std::invalid_argument("concept_table: weight and word counts differ");
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += words[i] + " " + fmt17(weights[i]) + "\n";
  return out;
}

std::vector<std::filesystem::path> export_attention(const TaskModel& model,
                                                    const Vocabulary& vocab,
                                                    const Sample& sample,
                                                    const std::filesystem::path& out_dir) {
  const std::size_t g = model.config.grid;
  NoGradGuard no_grad;
  const auto f = extract_features(model.predictor, sample.scene, model.config.threshold);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& stem, const std::vector<double>& w) {
    written.push_back(out_dir / (stem + ".txt"));
    write_file(written.back(), region_matrix_text(w, g, g));
    written.push_back(out_dir / (stem + ".pgm"));
    write_file(written.back(), region_pgm(w, g, g));
  };
  auto emit_semantic = [&](const SemanticAttentionOutput& s) {
    emit("regions_semantic", to_vector(s.region_weights));
    written.push_back(out_dir / "concepts.txt");
    write_file(written.back(), concept_table(to_vector(s.concept_weights), vocab.concept_words()));
  };
  char stem[32];
  if (model.caption) {
    const auto& m = *model.caption;
    if (!m.uses_bigru()) {
      throw std::invalid_argument("export_attention: variant none_att has no attention maps");
    }
    const auto gen = generate_greedy(m, f, model.config.max_caption_length);
    std::string words;
    for (std::size_t t = 0; t < gen.trace.size(); ++t) {
      std::snprintf(stem, sizeof stem, "step_%02zu", t);
      emit(stem, gen.trace[t].attention);
      words += std::to_string(t) + " " + vocab.token(static_cast<std::size_t>(gen.trace[t].token)) +
               " " + fmt17(gen.trace[t].gate) + "\n";
    }
    written.push_back(out_dir / "steps.txt");
    write_file(written.back(), "step word gate\n" + words);
    if (m.uses_semantic()) emit_semantic(*encode_image(m, f).semantic);
    return written;
  }
  const auto& m = *model.vqa;
  if (!m.uses_bigru()) {
    throw std::invalid_argument("export_attention: variant none_att has no attention maps");
  }
  std::optional<SemanticAttentionOutput> semantic;
  for (std::size_t k = 0; k < sample.qa.size(); ++k) {
    const auto fw = vqa_forward(m, f, sample.qa[k].question);
    if (fw.region_weights.defined()) {
      std::snprintf(stem, sizeof stem, "question_%02zu", k);
      emit(stem, to_vector(fw.region_weights));
    }
    if (fw.semantic) semantic = fw.semantic;
  }
  if (semantic) emit_semantic(*semantic);
  return written;
}

const std::string& builtin_taxonomy_text() {
  static const std::string text =
      "entity\n"
      "  shape\n"
      "    circle\n"
      "    square\n"
      "    triangle\n"
      "  color\n"
      "    red\n"
      "    green\n"
      "    blue\n"
      "    yellow\n"
      "    brown\n"
      "  number\n"
      "    one\n"
      "    two\n"
      "    three\n"
      "    four\n"
      "  location\n"
      "    top\n"
      "      top-left\n"
      "      top-right\n"
      "    bottom\n"
      "      bottom-left\n"
      "      bottom-right\n";
  return text;
}

}  // namespace datn
