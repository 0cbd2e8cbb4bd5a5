// SPDX-License-Identifier: Apache-2.0
#include "datn/world.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "datn/rng.hpp"

namespace datn {

namespace {

constexpr const char* kShapeWords[] = {"circle", "square", "triangle"};
constexpr const char* kColorWords[] = {"red", "green", "blue", "yellow", "brown"};
constexpr const char* kSizeWords[] = {"small", "large"};
constexpr const char* kTypeNames[] = {"object", "number", "color", "location"};
constexpr const char* kCountWords[] = {"one", "two", "three", "four", "five",
                                       "six", "seven", "eight", "nine"};
constexpr double kRgb[kNumColors][3] = {
    {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 1.0, 0.0}, {0.6, 0.3, 0.1}};

template <std::size_t N>
std::size_t parse_word(const char* const (&words)[N], const std::string& w, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (w == words[i]) return i;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + w + "'");
}

// Shape membership in cell-relative coordinates (u right, v down, both [0,1]).
bool inside(ShapeKind shape, SizeKind size, double u, double v) {
  const double r = size == SizeKind::kLarge ? 0.45 : 0.28;
  const double du = u - 0.5, dv = v - 0.5;
  switch (shape) {
    case ShapeKind::kCircle: return du * du + dv * dv <= r * r;
    case ShapeKind::kSquare: return std::abs(du) <= 0.8 * r && std::abs(dv) <= 0.8 * r;
    case ShapeKind::kTriangle: {
      const double apex = 0.5 - r, base = 0.5 + 0.8 * r;
      if (v < apex || v > base) return false;
      return std::abs(du) <= r * (v - apex) / (base - apex);
    }
  }
  return false;
}

const char* count_word(std::size_t n) {
  if (n == 0 || n > 9) throw std::invalid_argument("count word out of range");
  return kCountWords[n - 1];
}

}  // namespace

const char* shape_word(ShapeKind s) { return kShapeWords[static_cast<std::size_t>(s)]; }
const char* color_word(ColorKind c) { return kColorWords[static_cast<std::size_t>(c)]; }
const char* size_word(SizeKind s) { return kSizeWords[static_cast<std::size_t>(s)]; }
const char* question_type_name(QuestionType t) { return kTypeNames[static_cast<std::size_t>(t)]; }
ShapeKind parse_shape(const std::string& w) {
  return static_cast<ShapeKind>(parse_word(kShapeWords, w, "shape"));
}
ColorKind parse_color(const std::string& w) {
  return static_cast<ColorKind>(parse_word(kColorWords, w, "color"));
}
SizeKind parse_size(const std::string& w) {
  return static_cast<SizeKind>(parse_word(kSizeWords, w, "size"));
}
QuestionType parse_question_type(const std::string& w) {
  return static_cast<QuestionType>(parse_word(kTypeNames, w, "question type"));
}

void WorldConfig::validate() const {
  if (canvas == 0 || grid == 0 || canvas % grid != 0) {
    throw std::invalid_argument("world: canvas (" + std::to_string(canvas) +
                                ") must be a positive multiple of grid (" +
                                std::to_string(grid) + ")");
  }
  if (min_objects < 1 || min_objects > max_objects) {
    throw std::invalid_argument("world: need 1 <= min_objects <= max_objects");
  }
  if (max_objects > grid * grid) {
    throw std::invalid_argument("world: " + std::to_string(max_objects) +
                                " objects requested but the grid has only " +
                                std::to_string(grid * grid) + " cells");
  }
  if (max_objects > kNumColors || max_objects > 4) {
    throw std::invalid_argument("world: at most 4 objects per scene are supported");
  }
  if (min_count < 1) throw std::invalid_argument("world: min_count must be >= 1");
  double total = 0.0;
  for (double p : question_mix) {
    if (p < 0.0) throw std::invalid_argument("world: negative question proportion");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("world: question proportions must sum to 1");
  }
}

std::vector<SceneObject> sample_objects(std::uint64_t seed, const WorldConfig& config) {
  Rng rng(seed);
  const std::size_t n =
      config.min_objects + rng.below(config.max_objects - config.min_objects + 1);

  std::vector<std::size_t> cells(config.grid * config.grid);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  rng.shuffle(cells);
  std::vector<std::size_t> colors(kNumColors);
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
  rng.shuffle(colors);
  std::vector<std::size_t> kinds(kNumShapes * kNumSizes);
  for (std::size_t i = 0; i < kinds.size(); ++i) kinds[i] = i;
  rng.shuffle(kinds);

  std::vector<SceneObject> objects;
  for (std::size_t i = 0; i < n; ++i) {
    SceneObject o;
    o.shape = static_cast<ShapeKind>(kinds[i] % kNumShapes);
    o.size = static_cast<SizeKind>(kinds[i] / kNumShapes);
    o.color = static_cast<ColorKind>(colors[i]);
    o.row = cells[i] / config.grid;
    o.col = cells[i] % config.grid;
    objects.push_back(o);
  }
  std::sort(objects.begin(), objects.end(), [&](const SceneObject& a, const SceneObject& b) {
    return a.cell(config.grid) < b.cell(config.grid);
  });
  return objects;
}

std::vector<double> render_canvas(const std::vector<SceneObject>& objects,
                                  const WorldConfig& config) {
  const std::size_t side = config.canvas;
  const std::size_t cell = config.canvas / config.grid;
  constexpr int kSuper = 4;
  std::vector<double> canvas(side * side * 3, 0.0);
  for (const auto& o : objects) {
    for (std::size_t py = 0; py < cell; ++py)
      for (std::size_t px = 0; px < cell; ++px) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy)
          for (int sx = 0; sx < kSuper; ++sx) {
            const double u = (static_cast<double>(px) + (sx + 0.5) / kSuper) / static_cast<double>(cell);
            const double v = (static_cast<double>(py) + (sy + 0.5) / kSuper) / static_cast<double>(cell);
            hits += inside(o.shape, o.size, u, v) ? 1 : 0;
          }
        const double coverage = static_cast<double>(hits) / (kSuper * kSuper);
        const std::size_t y = o.row * cell + py, x = o.col * cell + px;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          canvas[(y * side + x) * 3 + ch] = coverage * kRgb[static_cast<std::size_t>(o.color)][ch];
        }
      }
  }
  return canvas;
}

std::vector<double> canvas_chw(const std::vector<double>& canvas, std::size_t side) {
  std::vector<double> out(canvas.size());
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch)
        out[(ch * side + y) * side + x] = canvas[(y * side + x) * 3 + ch];
  return out;
}

std::string quadrant_word(const SceneObject& o, std::size_t grid) {
  const bool top = 2 * o.row < grid;
  const bool left = 2 * o.col < grid;
  return std::string(top ? "top" : "bottom") + (left ? "-left" : "-right");
}

std::string caption_text(const std::vector<SceneObject>& objects, std::size_t grid) {
  if (objects.empty()) throw std::invalid_argument("caption_text: empty scene");
  auto describe = [](const SceneObject& o) {
    return std::string(size_word(o.size)) + " " + color_word(o.color) + " " + shape_word(o.shape);
  };
  if (objects.size() == 1) {
    const auto& o = objects[0];
    const bool top = 2 * o.row < grid;
    const bool left = 2 * o.col < grid;
    return std::string("one ") + describe(o) + " at the " + (top ? "top" : "bottom") + " " +
           (left ? "left" : "right");
  }
  // Subject and reference are the two objects earliest in colour order.
  std::vector<SceneObject> by_color = objects;
  std::sort(by_color.begin(), by_color.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.color < b.color; });
  const auto& s = by_color[0];
  const auto& r = by_color[1];
  std::string relation;
  if (s.row == r.row) {
    relation = s.col < r.col ? "left of" : "right of";
  } else if (s.col == r.col) {
    relation = s.row < r.row ? "above" : "below";
  } else {
    relation = "near";
  }
  return std::string(count_word(objects.size())) + " objects with a " + describe(s) + " " +
         relation + " a " + describe(r);
}

const std::vector<std::string>& answer_words() {
  static const std::vector<std::string> words = {
      "circle", "square", "triangle", "red",   "green",    "blue",      "yellow",      "brown",
      "one",    "two",    "three",    "four",  "top-left", "top-right", "bottom-left", "bottom-right"};
  return words;
}

QaText question_text(const std::vector<SceneObject>& objects, std::size_t grid,
                     QuestionType type, std::size_t target) {
  if (target >= objects.size()) throw std::invalid_argument("question_text: bad target");
  const auto& o = objects[target];
  QaText q;
  q.type = type;
  switch (type) {
    case QuestionType::kObject:
      q.question = std::string("what shape is the ") + color_word(o.color) + " object";
      q.answer = shape_word(o.shape);
      break;
    case QuestionType::kNumber:
      q.question = "how many objects are there";
      q.answer = count_word(objects.size());
      break;
    case QuestionType::kColor:
      q.question = std::string("what color is the ") + size_word(o.size) + " " + shape_word(o.shape);
      q.answer = color_word(o.color);
      break;
    case QuestionType::kLocation:
      q.question = std::string("where is the ") + color_word(o.color) + " " + shape_word(o.shape);
      q.answer = quadrant_word(o, grid);
      break;
  }
  return q;
}

QuestionType question_type_for(std::size_t k, const WorldConfig& config) {
  constexpr double kGolden = 0.61803398874989484820;
  const double u = std::fmod((static_cast<double>(k) + 0.5) * kGolden, 1.0);
  double acc = 0.0;
  for (std::size_t t = 0; t < kNumQuestionTypes; ++t) {
    acc += config.question_mix[t];
    if (u < acc) return static_cast<QuestionType>(t);
  }
  // Rounding left u at the top of the range: last type with nonzero weight.
  for (std::size_t t = kNumQuestionTypes; t-- > 0;) {
    if (config.question_mix[t] > 0.0) return static_cast<QuestionType>(t);
  }
  return QuestionType::kObject;
}

std::vector<double> concept_labels_from(const std::vector<std::vector<int>>& captions,
                                        const Vocabulary& vocab) {
  std::vector<double> y(vocab.concept_count(), 0.0);
  for (const auto& c : captions)
    for (int id : c) {
      const int j = vocab.concept_index(id);
      if (j >= 0) y[static_cast<std::size_t>(j)] = 1.0;
    }
  return y;
}

Dataset generate_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                         const WorldConfig& config) {
  if (n_train < 1 || n_test < 1) {
    throw std::invalid_argument("generate_dataset: n_train and n_test must be >= 1");
  }
  config.validate();

  struct Raw {
    std::uint64_t seed;
    std::vector<SceneObject> objects;
    std::string caption;
    std::vector<QaText> qa;
  };
  const std::size_t total = n_train + n_test;
  std::vector<Raw> raw;
  raw.reserve(total);
  std::set<std::uint64_t> used;
  std::uint64_t tag = 0;
  for (std::size_t i = 0; i < total; ++i) {
    std::uint64_t s = derive_seed(seed, tag++);
    while (!used.insert(s).second) s = derive_seed(seed, tag++);
    Raw r;
    r.seed = s;
    r.objects = sample_objects(s, config);
    r.caption = caption_text(r.objects, config.grid);
    Rng pick(derive_seed(s, 1));
    for (std::size_t j = 0; j < config.questions_per_sample; ++j) {
      const auto type = question_type_for(i * config.questions_per_sample + j, config);
      const auto target = static_cast<std::size_t>(pick.below(r.objects.size()));
      r.qa.push_back(question_text(r.objects, config.grid, type, target));
    }
    raw.push_back(std::move(r));
  }

  std::vector<std::vector<std::string>> captions, questions;
  for (std::size_t i = 0; i < n_train; ++i) {
    captions.push_back(split_words(raw[i].caption));
    for (const auto& q : raw[i].qa) questions.push_back(split_words(q.question));
  }

  Dataset ds;
  ds.world = config;
  ds.vocab = build_vocab(captions, questions, config.min_count, config.concepts, answer_words());

  for (std::size_t i = 0; i < total; ++i) {
    Sample s;
    s.scene.seed = raw[i].seed;
    s.scene.objects = raw[i].objects;
    s.scene.canvas = render_canvas(raw[i].objects, config);
    std::vector<int> ids{kStartId};
    for (const auto& w : split_words(raw[i].caption)) ids.push_back(ds.vocab.id_or_unknown(w));
    ids.push_back(kEndId);
    s.captions.push_back(std::move(ids));
    for (const auto& q : raw[i].qa) {
      QaPair p;
      for (const auto& w : split_words(q.question)) p.question.push_back(ds.vocab.id_or_unknown(w));
      p.answer = ds.vocab.answer_id(q.answer);
      p.type = q.type;
      s.qa.push_back(std::move(p));
    }
    s.concept_labels = concept_labels_from(s.captions, ds.vocab);
    (i < n_train ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

}  // namespace datn
