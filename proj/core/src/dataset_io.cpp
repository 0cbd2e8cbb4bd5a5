// SPDX-License-Identifier: Apache-2.0
#include "datn/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "datn/kv.hpp"

namespace datn {

namespace {

using ojson = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

[[noreturn]] void field_error(const std::string& where, const std::string& field,
                              const std::string& what) {
  throw FormatError(where + ": field '" + field + "': " + what);
}

}  // namespace

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# tokens\n";
  for (const auto& t : vocab.tokens()) out << t << '\n';
  out << "# concepts\n";
  for (const auto& c : vocab.concept_words()) out << c << '\n';
  out << "# answers\n";
  for (const auto& a : vocab.answers()) out << a << '\n';
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> sections[3];
  int current = -1;
  std::string line;
  std::size_t n = 0;
  const std::string where = path.string();
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "# tokens") {
      current = 0;
    } else if (line == "# concepts") {
      current = 1;
    } else if (line == "# answers") {
      current = 2;
    } else if (line.empty()) {
      throw FormatError(where + ":" + std::to_string(n) + ": empty line");
    } else if (current < 0) {
      throw FormatError(where + ":" + std::to_string(n) + ": entry before '# tokens' header");
    } else {
      sections[current].push_back(line);
    }
  }
  const std::vector<std::string> specials = {"<start>", "<end>", "<unk>", "<pad>"};
  if (sections[0].size() < 4 ||
      !std::equal(specials.begin(), specials.end(), sections[0].begin())) {
    throw FormatError(where + ": token section must begin with <start> <end> <unk> <pad>");
  }
  try {
    return Vocabulary(std::vector<std::string>(sections[0].begin() + 4, sections[0].end()),
                      sections[1], sections[2]);
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

std::string sample_to_json(const Sample& sample, const Vocabulary& vocab) {
  ojson j;
  j["seed"] = sample.scene.seed;
  ojson objects = ojson::array();
  for (const auto& o : sample.scene.objects) {
    objects.push_back(ojson{{"shape", shape_word(o.shape)},
                            {"color", color_word(o.color)},
                            {"size", size_word(o.size)},
                            {"row", o.row},
                            {"col", o.col}});
  }
  j["objects"] = std::move(objects);
  ojson captions = ojson::array();
  for (const auto& c : sample.captions) captions.push_back(vocab.decode(c));
  j["captions"] = std::move(captions);
  ojson qa = ojson::array();
  for (const auto& q : sample.qa) {
    qa.push_back(ojson{{"question", vocab.decode(q.question)},
                       {"answer", vocab.answers().at(static_cast<std::size_t>(q.answer))},
                       {"type", question_type_name(q.type)}});
  }
  j["qa"] = std::move(qa);
  ojson y = ojson::array();
  for (double v : sample.concept_labels) y.push_back(v > 0.5 ? 1 : 0);
  j["y"] = std::move(y);
  return j.dump();
}

Sample sample_from_json(const std::string& line, const Vocabulary& vocab,
                        const WorldConfig& world) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  auto need = [&](const ojson& obj, const char* key) -> const ojson& {
    if (!obj.is_object() || !obj.contains(key)) field_error("record", key, "missing");
    return obj.at(key);
  };
  Sample s;
  try {
    const auto& seed = need(j, "seed");
    if (!seed.is_number_unsigned()) field_error("record", "seed", "expected unsigned integer");
    s.scene.seed = seed.get<std::uint64_t>();

    const auto& objects = need(j, "objects");
    if (!objects.is_array() || objects.empty()) field_error("record", "objects", "expected non-empty array");
    for (const auto& o : objects) {
      SceneObject so;
      so.shape = parse_shape(need(o, "shape").get<std::string>());
      so.color = parse_color(need(o, "color").get<std::string>());
      so.size = parse_size(need(o, "size").get<std::string>());
      so.row = need(o, "row").get<std::size_t>();
      so.col = need(o, "col").get<std::size_t>();
      if (so.row >= world.grid || so.col >= world.grid) {
        field_error("record", "objects", "cell outside the " + std::to_string(world.grid) + "x" +
                                             std::to_string(world.grid) + " grid");
      }
      s.scene.objects.push_back(so);
    }
    s.scene.canvas = render_canvas(s.scene.objects, world);

    const auto& captions = need(j, "captions");
    if (!captions.is_array() || captions.empty()) field_error("record", "captions", "expected non-empty array");
    for (const auto& c : captions) {
      std::vector<int> ids;
      for (const auto& w : split_words(c.get<std::string>())) {
        if (!vocab.contains(w)) field_error("record", "captions", "token '" + w + "' not in vocabulary");
        ids.push_back(vocab.id(w));
      }
      if (ids.size() < 3 || ids.front() != kStartId || ids.back() != kEndId) {
        field_error("record", "captions", "caption must be '<start> ... <end>' with at least one word");
      }
      s.captions.push_back(std::move(ids));
    }

    const auto& qa = need(j, "qa");
    if (!qa.is_array()) field_error("record", "qa", "expected array");
    for (const auto& q : qa) {
      QaPair p;
      for (const auto& w : split_words(need(q, "question").get<std::string>())) {
        if (!vocab.contains(w)) field_error("record", "qa", "token '" + w + "' not in vocabulary");
        p.question.push_back(vocab.id(w));
      }
      if (p.question.empty()) field_error("record", "qa", "empty question");
      const auto answer = need(q, "answer").get<std::string>();
      try {
        p.answer = vocab.answer_id(answer);
      } catch (const std::invalid_argument&) {
        field_error("record", "qa", "answer '" + answer + "' not in answer classes");
      }
      p.type = parse_question_type(need(q, "type").get<std::string>());
      s.qa.push_back(std::move(p));
    }

    const auto& y = need(j, "y");
    if (!y.is_array() || y.size() != vocab.concept_count()) {
      field_error("record", "y", "expected array of length " + std::to_string(vocab.concept_count()));
    }
    for (const auto& v : y) {
      const int b = v.get<int>();
      if (b != 0 && b != 1) field_error("record", "y", "entries must be 0 or 1");
      s.concept_labels.push_back(b);
    }
    if (s.concept_labels != concept_labels_from(s.captions, vocab)) {
      field_error("record", "y", "labels disagree with the captions");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("record: ") + e.what());
  }
  return s;
}

void save_samples(const std::vector<Sample>& samples, const Vocabulary& vocab,
                  const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& s : samples) out << sample_to_json(s, vocab) << '\n';
}

std::vector<Sample> load_samples(const std::filesystem::path& path, const Vocabulary& vocab,
                                 const WorldConfig& world) {
  auto in = open_in(path);
  std::vector<Sample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(line, vocab, world));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string world_to_text(const WorldConfig& w) {
  std::ostringstream os;
  os.precision(17);
  os << "canvas = " << w.canvas << '\n'
     << "grid = " << w.grid << '\n'
     << "min_objects = " << w.min_objects << '\n'
     << "max_objects = " << w.max_objects << '\n'
     << "questions_per_sample = " << w.questions_per_sample << '\n'
     << "mix_object = " << w.question_mix[0] << '\n'
     << "mix_number = " << w.question_mix[1] << '\n'
     << "mix_color = " << w.question_mix[2] << '\n'
     << "mix_location = " << w.question_mix[3] << '\n'
     << "min_count = " << w.min_count << '\n'
     << "concepts = " << w.concepts << '\n';
  return os.str();
}

WorldConfig world_from_text(const std::string& text) {
  const std::string src = "world.cfg";
  WorldConfig w;
  for (const auto& kv : parse_key_values(text, src)) {
    if (kv.key == "canvas") w.canvas = parse_size(kv, src);
    else if (kv.key == "grid") w.grid = parse_size(kv, src);
    else if (kv.key == "min_objects") w.min_objects = parse_size(kv, src);
    else if (kv.key == "max_objects") w.max_objects = parse_size(kv, src);
    else if (kv.key == "questions_per_sample") w.questions_per_sample = parse_size(kv, src);
    else if (kv.key == "mix_object") w.question_mix[0] = parse_double(kv, src);
    else if (kv.key == "mix_number") w.question_mix[1] = parse_double(kv, src);
    else if (kv.key == "mix_color") w.question_mix[2] = parse_double(kv, src);
    else if (kv.key == "mix_location") w.question_mix[3] = parse_double(kv, src);
    else if (kv.key == "min_count") w.min_count = parse_size(kv, src);
    else if (kv.key == "concepts") w.concepts = parse_size(kv, src);
    else throw FormatError(src + ":" + std::to_string(kv.line) + ": unknown field '" + kv.key + "'");
  }
  w.validate();
  return w;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "world.cfg");
    out << world_to_text(ds.world);
  }
  save_vocab(ds.vocab, dir / "vocab.txt");
  save_samples(ds.train, ds.vocab, dir / "train.jsonl");
  save_samples(ds.test, ds.vocab, dir / "test.jsonl");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.world = world_from_text(read_text_file((dir / "world.cfg").string()));
  ds.vocab = load_vocab(dir / "vocab.txt");
  ds.train = load_samples(dir / "train.jsonl", ds.vocab, ds.world);
  ds.test = load_samples(dir / "test.jsonl", ds.vocab, ds.world);
  return ds;
}

std::uint64_t file_fingerprint(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace datn
