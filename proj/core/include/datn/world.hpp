// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "datn/vocab.hpp"

namespace datn {

enum class ShapeKind : std::uint8_t { kCircle, kSquare, kTriangle };
enum class ColorKind : std::uint8_t { kRed, kGreen, kBlue, kYellow, kBrown };
enum class SizeKind : std::uint8_t { kSmall, kLarge };
enum class QuestionType : std::uint8_t { kObject, kNumber, kColor, kLocation };

inline constexpr std::size_t kNumShapes = 3;
inline constexpr std::size_t kNumColors = 5;
inline constexpr std::size_t kNumSizes = 2;
inline constexpr std::size_t kNumQuestionTypes = 4;

const char* shape_word(ShapeKind s);
const char* color_word(ColorKind c);
const char* size_word(SizeKind s);
const char* question_type_name(QuestionType t);
ShapeKind parse_shape(const std::string& w);
ColorKind parse_color(const std::string& w);
SizeKind parse_size(const std::string& w);
QuestionType parse_question_type(const std::string& w);

struct SceneObject {
  ShapeKind shape{};
  ColorKind color{};
  SizeKind size{};
  std::size_t row = 0;  // grid cell
  std::size_t col = 0;

  std::size_t cell(std::size_t grid) const { return row * grid + col; }
  bool operator==(const SceneObject&) const = default;
};

struct WorldConfig {
  std::size_t canvas = 16;  // G: canvas side in pixels
  std::size_t grid = 4;     // cells per side; must match the region grid
  std::size_t min_objects = 1;
  std::size_t max_objects = 4;
  std::size_t questions_per_sample = 2;
  // object, number, color, location
  std::array<double, kNumQuestionTypes> question_mix{0.25, 0.25, 0.25, 0.25};
  std::size_t min_count = 5;
  std::size_t concepts = 24;

  void validate() const;
};

/// A rendered scene: canvas is canvas x canvas x 3, row-major HWC, in [0,1].
struct Scene {
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  std::vector<double> canvas;
};

struct QaPair {
  std::vector<int> question;  // token ids
  int answer = 0;             // answer class id
  QuestionType type{};
  bool operator==(const QaPair&) const = default;
};

struct Sample {
  Scene scene;
  std::vector<double> concept_labels;      // y, length c, entries 0/1
  std::vector<std::vector<int>> captions;  // token ids incl. start/end
  std::vector<QaPair> qa;
};

struct Dataset {
  WorldConfig world;
  Vocabulary vocab;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Places objects for a scene seed; no two objects share a cell, a colour or
/// a (size, shape) pair, so every templated reference is unambiguous.
std::vector<SceneObject> sample_objects(std::uint64_t seed, const WorldConfig& config);

/// Rasterises objects onto a black canvas (4x4 supersampled coverage).
std::vector<double> render_canvas(const std::vector<SceneObject>& objects,
                                  const WorldConfig& config);

/// Channel-first copy [3, G, G] of a canvas, the layout convolutions use.
std::vector<double> canvas_chw(const std::vector<double>& canvas, std::size_t side);

// Templated text, as whitespace-separated words without start/end markers.
std::string caption_text(const std::vector<SceneObject>& objects, std::size_t grid);
std::string quadrant_word(const SceneObject& o, std::size_t grid);
struct QaText {
  std::string question;
  std::string answer;
  QuestionType type{};
};
QaText question_text(const std::vector<SceneObject>& objects, std::size_t grid,
                     QuestionType type, std::size_t target);

/// Fixed closed set of single-word answers, in class-id order.
const std::vector<std::string>& answer_words();

/// Question type for the k-th question of a dataset: a golden-ratio
/// low-discrepancy sequence mapped through the cumulative mix.
QuestionType question_type_for(std::size_t k, const WorldConfig& config);

/// y_j = 1 iff concept word j occurs in at least one caption.
std::vector<double> concept_labels_from(const std::vector<std::vector<int>>& captions,
                                        const Vocabulary& vocab);

Dataset generate_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                         const WorldConfig& config);

}  // namespace datn
