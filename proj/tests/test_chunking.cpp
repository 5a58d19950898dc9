#include <gtest/gtest.h>

#include <string>

#include "semtopo/chunking.hpp"
#include "support.hpp"

using namespace semtopo;

namespace {

std::string words(std::size_t n, const std::string& sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? sep : "") + "w" + std::to_string(i);
  return s;
}

// Irregular whitespace, leading and trailing padding.
std::string messy_text(std::uint64_t seed, std::size_t n) {
  auto rng = testgen::rng_for(seed);
  const char* gaps[] = {" ", "  ", "\n", "\t", " \n\n "};
  std::string s = seed % 2 ? "  " : "";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += gaps[testgen::uniform_size(rng, 0, 4)];
    s += "tok" + std::to_string(testgen::uniform_size(rng, 0, 999));
  }
  if (seed % 3 == 0) s += "\n";
  return s;
}

std::string concat(const ChunkSet& set) {
  std::string s;
  for (const auto& c : set.chunks) s += c.text;
  return s;
}

}  // namespace

TEST(Tokenize, Offsets) {
  const auto t = whitespace_tokenize("  ab c\n\tdef ");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].begin, 2u);
  EXPECT_EQ(t[0].end, 4u);
  EXPECT_EQ(t[2].begin, 8u);
  EXPECT_EQ(t[2].end, 11u);
  EXPECT_TRUE(whitespace_tokenize(" \n ").empty());
}

TEST(Chunking, ThousandTokensAt250) {
  const auto set = chunk_text({"d", words(1000)}, 250);
  ASSERT_EQ(set.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(set.chunks[i].chunk_id, i);
    EXPECT_EQ(set.chunks[i].token_start, 250 * i);
    EXPECT_EQ(set.chunks[i].token_count(), 250u);
  }
}

TEST(Chunking, ThousandTokensAt750LeavesShortTail) {
  const auto set = chunk_text({"d", words(1000)}, 750);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.chunks[0].token_count(), 750u);
  EXPECT_EQ(set.chunks[1].token_count(), 250u);
  EXPECT_EQ(set.chunks[1].token_end, 1000u);
}

TEST(Chunking, ShortDocumentIsOneChunk) {
  const auto set = chunk_text({"d", words(10)}, 250);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.chunks[0].text, words(10));
}

TEST(Chunking, Errors) {
  EXPECT_THROW(chunk_text({"d", ""}, 10), DegenerateInput);
  EXPECT_THROW(chunk_text({"d", "  \n"}, 10), DegenerateInput);
  EXPECT_THROW(chunk_text({"d", "a b"}, 0), InvalidArgument);
}

TEST(Chunking, ChunkTextStartsAtItsFirstToken) {
  const auto set = chunk_text({"d", "a b  c d"}, 2);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.chunks[0].text, "a b  ");
  EXPECT_EQ(set.chunks[1].text, "c d");
}

TEST(Chunking, ConcatenationReconstructsDocument) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = testgen::rng_for(seed + 500);
    const auto n = testgen::uniform_size(rng, 1, 400);
    const auto T = testgen::uniform_size(rng, 1, 120);
    const Document doc{"doc", messy_text(seed, n)};
    const auto set = chunk_text(doc, T);
    ASSERT_EQ(concat(set), doc.text) << "seed " << seed;
    ASSERT_EQ(set.size(), (n + T - 1) / T);
    std::size_t covered = 0;
    for (const auto& c : set.chunks) {
      ASSERT_EQ(c.token_start, covered);
      covered = c.token_end;
      ASSERT_EQ(whitespace_tokenize(c.text).size(), c.token_count());
    }
    ASSERT_EQ(covered, n);
  }
}

TEST(Chunking, FineChunksNestInCoarseWhenGranularitiesDivide) {
  const Document doc{"d", messy_text(7, 1000)};
  const auto fine = chunk_text(doc, 250), coarse = chunk_text(doc, 750);
  for (const auto& f : fine.chunks) {
    std::size_t parents = 0;
    for (const auto& c : coarse.chunks) {
      if (!containment_check(f, c)) continue;
      ++parents;
      EXPECT_NE(c.text.find(f.text.substr(0, f.text.find_last_not_of(" \n\t") + 1)), std::string::npos);
    }
    EXPECT_EQ(parents, 1u);
  }
}

TEST(Chunking, UnionOfTokensAgreesAcrossGranularities) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Document doc{"d", messy_text(seed, 300 + seed)};
    std::vector<std::string> seen;
    for (std::size_t T : {7u, 64u, 250u}) {
      std::string toks;
      for (const auto& c : chunk_text(doc, T).chunks)
        for (const auto& t : whitespace_tokenize(c.text)) toks += c.text.substr(t.begin, t.end - t.begin) + "|";
      seen.push_back(toks);
    }
    EXPECT_EQ(seen[0], seen[1]);
    EXPECT_EQ(seen[1], seen[2]);
  }
}

TEST(Chunking, MultipleDocuments) {
  const auto set = chunk_documents({{"a", words(5)}, {"b", words(3)}}, 2);
  ASSERT_EQ(set.size(), 5u);
  EXPECT_EQ(set.granularity, 2u);
  EXPECT_EQ(set.chunks[3].doc_id, "b");
  EXPECT_EQ(set.chunks[3].chunk_id, 0u);
}

TEST(Containment, Cases) {
  const ChunkRef big{"d", 0, 0, 750}, small{"d", 1, 250, 500}, other{"e", 1, 250, 500}, straddle{"d", 3, 700, 950};
  EXPECT_TRUE(containment_check(small, big));
  EXPECT_TRUE(containment_check(big, small));
  EXPECT_TRUE(containment_check(big, big));
  EXPECT_FALSE(containment_check(other, big));
  EXPECT_FALSE(containment_check(straddle, big));
  EXPECT_FALSE(containment_check(small, straddle));
}
