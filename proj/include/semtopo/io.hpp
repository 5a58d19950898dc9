#pragma once

// File formats: embedding and chunk JSONL, CSV tables, diagram JSON.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "semtopo/chunking.hpp"
#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"
#include "semtopo/index.hpp"
#include "semtopo/persistence.hpp"
#include "semtopo/simulation.hpp"

namespace semtopo {

using Json = nlohmann::json;

/// Shortest decimal string that round-trips; stable across runs.
inline std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::logic_error("number formatting failed");
  return std::string(buf, end);
}

inline Json diagram_to_json(const PersistenceDiagram& diagram) {
  Json bars = Json::array();
  for (const auto& b : diagram.bars()) {
    Json entry{{"degree", b.degree}, {"birth", b.birth}};
    entry["death"] = b.death ? Json(*b.death) : Json(nullptr);
    bars.push_back(std::move(entry));
  }
  return bars;
}

inline PersistenceDiagram diagram_from_json(const Json& j, std::size_t point_count) {
  std::vector<Bar> bars;
  for (const auto& entry : j) {
    Bar b;
    b.degree = entry.at("degree").get<int>();
    b.birth = entry.at("birth").get<double>();
    if (!entry.at("death").is_null()) b.death = entry.at("death").get<double>();
    bars.push_back(b);
  }
  return PersistenceDiagram(std::move(bars), point_count);
}

// ---------------------------------------------------------------------------
// JSONL

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    fn(j, line_no);
  }
}

inline Json embedding_to_json(const EmbeddingRecord& r) {
  Json vec = Json::array();
  for (Eigen::Index i = 0; i < r.vector.size(); ++i) vec.push_back(r.vector(i));
  return Json{{"doc_id", r.chunk.doc_id},       {"chunk_id", r.chunk.chunk_id},
              {"token_start", r.chunk.token_start}, {"token_end", r.chunk.token_end},
              {"model_tag", r.model_tag},        {"vector", std::move(vec)}};
}

inline EmbeddingRecord embedding_from_json(const Json& j) {
  EmbeddingRecord r;
  r.chunk.doc_id = j.at("doc_id").get<std::string>();
  r.chunk.chunk_id = j.at("chunk_id").get<std::size_t>();
  r.chunk.token_start = j.at("token_start").get<std::size_t>();
  r.chunk.token_end = j.at("token_end").get<std::size_t>();
  r.model_tag = j.at("model_tag").get<std::string>();
  const auto& vec = j.at("vector");
  Vector v(static_cast<Eigen::Index>(vec.size()));
  for (std::size_t i = 0; i < vec.size(); ++i) v(static_cast<Eigen::Index>(i)) = vec[i].get<double>();
  r.vector = normalize(v);
  return r;
}

inline void write_embeddings_jsonl(const std::filesystem::path& path, const std::vector<EmbeddingRecord>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << embedding_to_json(r).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<EmbeddingRecord> read_embeddings_jsonl(const std::filesystem::path& path) {
  std::vector<EmbeddingRecord> records;
  for_each_jsonl(path, [&](const Json& j, std::size_t line_no) {
    try {
      records.push_back(embedding_from_json(j));
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad embedding record: " + e.what());
    }
  });
  if (!records.empty()) {
    const auto dim = records.front().vector.size();
    for (const auto& r : records)
      if (r.vector.size() != dim) throw DimensionMismatch(path.string() + ": records have mixed vector dimensions");
  }
  return records;
}

inline void write_chunks_jsonl(const std::filesystem::path& path, const ChunkSet& set) {
  auto out = open_output(path);
  for (const auto& c : set.chunks)
    out << Json{{"doc_id", c.doc_id},       {"chunk_id", c.chunk_id}, {"token_start", c.token_start},
                {"token_end", c.token_end}, {"granularity", set.granularity}, {"text", c.text}}
               .dump()
        << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline ChunkSet read_chunks_jsonl(const std::filesystem::path& path) {
  ChunkSet set;
  for_each_jsonl(path, [&](const Json& j, std::size_t line_no) {
    try {
      set.granularity = j.value("granularity", set.granularity);
      set.chunks.push_back({j.at("doc_id").get<std::string>(), j.at("chunk_id").get<std::size_t>(),
                            j.at("token_start").get<std::size_t>(), j.at("token_end").get<std::size_t>(),
                            j.at("text").get<std::string>()});
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad chunk record: " + e.what());
    }
  });
  return set;
}

// ---------------------------------------------------------------------------
// Scenario config

inline Json scenario_config_to_json(const ScenarioConfig& c) {
  return Json{{"dimension", c.dimension},
              {"topic_count", c.topic_count},
              {"n_parent", c.n_parent},
              {"n_child", c.child_topics()},
              {"sigma_noise", c.sigma_noise},
              {"corpus_size", c.corpus_size},
              {"epsilon", c.epsilon},
              {"seed", c.seed},
              {"topic_style", c.topic_style == TopicStyle::kOrthonormal ? "orthonormal" : "binary_mask"},
              {"lineage_fraction", c.lineage_fraction},
              {"mix_ratio", c.mix_ratio},
              {"foreign_lineages", c.foreign_lineages}};
}

/// Missing keys keep their defaults; unknown keys are an error.
inline ScenarioConfig scenario_config_from_json(const Json& j, ScenarioConfig c = {}) {
  if (!j.is_object()) throw InvalidArgument("scenario config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dimension") c.dimension = value.get<std::size_t>();
      else if (key == "topic_count") c.topic_count = value.get<std::size_t>();
      else if (key == "n_parent") c.n_parent = value.get<std::size_t>();
      else if (key == "n_child") c.n_child = value.get<std::size_t>();
      else if (key == "sigma_noise") c.sigma_noise = value.get<double>();
      else if (key == "corpus_size") c.corpus_size = value.get<std::size_t>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "lineage_fraction") c.lineage_fraction = value.get<double>();
      else if (key == "mix_ratio") c.mix_ratio = value.get<double>();
      else if (key == "foreign_lineages") c.foreign_lineages = value.get<std::size_t>();
      else if (key == "topic_style") {
        const auto s = value.get<std::string>();
        if (s == "binary_mask") c.topic_style = TopicStyle::kBinaryMask;
        else if (s == "orthonormal") c.topic_style = TopicStyle::kOrthonormal;
        else throw InvalidArgument("topic_style must be 'binary_mask' or 'orthonormal'");
      } else {
        throw InvalidArgument("unknown config key '" + key + "'");
      }
    } catch (const Json::exception& e) {
      throw InvalidArgument("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(open_output(path)), columns_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw std::logic_error("CSV row has the wrong number of fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InvalidArgument("CSV has no column '" + std::string(name) + "'");
  }
  bool has_column(std::string_view name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

inline std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  table.header = parse_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != table.header.size())
      throw IoError(path.string() + ": row has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace semtopo
