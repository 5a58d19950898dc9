#include <gtest/gtest.h>

#include <filesystem>

#include "semtopo/io.hpp"
#include "support.hpp"

using namespace semtopo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "semtopo_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto rng = testgen::rng_for(seed);
    const double v = testgen::uniform(rng, -1e3, 1e3);
    EXPECT_EQ(parse_double(format_number(v)), v);
  }
}

TEST(ParseDouble, Rejects) {
  EXPECT_THROW(parse_double("abc"), InvalidArgument);
  EXPECT_THROW(parse_double("1.5x"), InvalidArgument);
  EXPECT_THROW(parse_double(""), InvalidArgument);
}

TEST(Csv, EscapingRoundTrip) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const std::vector<std::string> fields{"x", "a,b", "q\"q", "", "Q=T750;C=T250"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
  EXPECT_EQ(parse_csv_line(line), fields);
}

TEST(Csv, WriterAndReader) {
  const auto p = scratch("t.csv");
  {
    CsvWriter w(p, {"name", "value"});
    w.row({"a", "1"});
    w.row({"b,c", "2.5"});
    EXPECT_THROW(w.row({"only one"}), std::logic_error);
  }
  const auto t = read_csv(p);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][t.column("name")], "b,c");
  EXPECT_TRUE(t.has_column("value"));
  EXPECT_FALSE(t.has_column("nope"));
  EXPECT_THROW(t.column("nope"), InvalidArgument);
}

TEST(Files, MissingInputIsIoError) {
  EXPECT_THROW(open_input(scratch("does_not_exist.txt")), IoError);
  EXPECT_THROW(read_csv(scratch("does_not_exist.csv")), IoError);
}

TEST(Jsonl, EmbeddingsRoundTrip) {
  const auto p = scratch("emb.jsonl");
  auto rng = testgen::rng_for(3);
  std::vector<EmbeddingRecord> recs;
  for (std::size_t i = 0; i < 5; ++i)
    recs.push_back(make_record({"doc" + std::to_string(i % 2), i, i * 10, i * 10 + 10},
                               testgen::gaussian_vector(rng, 12), "mock"));
  write_embeddings_jsonl(p, recs);
  const auto back = read_embeddings_jsonl(p);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].chunk, recs[i].chunk);
    EXPECT_EQ(back[i].model_tag, "mock");
    EXPECT_LT((back[i].vector - recs[i].vector).norm(), 1e-15);
  }
}

TEST(Jsonl, MixedDimensionsRejected) {
  const auto p = scratch("mixed.jsonl");
  std::vector<EmbeddingRecord> recs{make_record({"a", 0, 0, 1}, Vector::Ones(3), "m"),
                                    make_record({"a", 1, 1, 2}, Vector::Ones(4), "m")};
  write_embeddings_jsonl(p, recs);
  EXPECT_THROW(read_embeddings_jsonl(p), DimensionMismatch);
}

TEST(Jsonl, MalformedLineNamesTheLine) {
  const auto p = scratch("bad.jsonl");
  {
    auto out = open_output(p);
    out << "{\"doc_id\": \"a\"}\n{not json\n";
  }
  try {
    read_embeddings_jsonl(p);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos) << e.what();
  }
}

TEST(Jsonl, ChunksRoundTrip) {
  const auto p = scratch("chunks.jsonl");
  const auto set = chunk_documents({{"a", "one two\nthree \"four\""}, {"b", "five"}}, 2);
  write_chunks_jsonl(p, set);
  const auto back = read_chunks_jsonl(p);
  EXPECT_EQ(back.granularity, 2u);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back.chunks[i].ref(), set.chunks[i].ref());
    EXPECT_EQ(back.chunks[i].text, set.chunks[i].text);
  }
}

TEST(Diagram, JsonRoundTrip) {
  const PersistenceDiagram d({{0, 0.0, 1.0}, {0, 0.0, std::nullopt}, {1, 1.0, 1.5}}, 2);
  const auto back = diagram_from_json(diagram_to_json(d), 2);
  ASSERT_EQ(back.bars().size(), 3u);
  EXPECT_TRUE(back.bars()[1].infinite());
  EXPECT_EQ(*back.bars()[2].death, 1.5);
}

TEST(ScenarioConfigJson, RoundTripAndDefaults) {
  ScenarioConfig c;
  c.dimension = 128;
  c.topic_count = 32;
  c.n_parent = 16;
  c.sigma_noise = 0.05;
  c.topic_style = TopicStyle::kOrthonormal;
  const auto back = scenario_config_from_json(scenario_config_to_json(c));
  EXPECT_EQ(back.dimension, 128u);
  EXPECT_EQ(back.n_parent, 16u);
  EXPECT_EQ(back.sigma_noise, 0.05);
  EXPECT_EQ(back.topic_style, TopicStyle::kOrthonormal);
  const auto partial = scenario_config_from_json(Json{{"epsilon", 0.8}});
  EXPECT_EQ(partial.epsilon, 0.8);
  EXPECT_EQ(partial.dimension, 256u);
}

TEST(ScenarioConfigJson, Rejects) {
  EXPECT_THROW(scenario_config_from_json(Json{{"dimensions", 3}}), InvalidArgument);
  EXPECT_THROW(scenario_config_from_json(Json{{"dimension", "big"}}), InvalidArgument);
  EXPECT_THROW(scenario_config_from_json(Json{{"topic_style", "round"}}), InvalidArgument);
  EXPECT_THROW(scenario_config_from_json(Json{{"n_parent", 100}}), InvalidArgument);
  EXPECT_THROW(scenario_config_from_json(Json::array()), InvalidArgument);
}

TEST(ScenarioConfigJson, SampleConfigParses) {
  const auto path = fs::path(SEMTOPO_SOURCE_DIR) / "configs" / "simulation.json";
  const auto j = Json::parse(read_file(path));
  EXPECT_EQ(scenario_config_from_json(j).n_parent, 32u);
}
