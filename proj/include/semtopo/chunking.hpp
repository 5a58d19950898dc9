#pragma once

#include <cctype>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/index.hpp"

namespace semtopo {

/// Byte range [begin, end) of one token in the source text.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
};

using Tokenizer = std::function<std::vector<Token>(std::string_view)>;

inline std::vector<Token> whitespace_tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const auto space = [&](std::size_t p) { return std::isspace(static_cast<unsigned char>(text[p])) != 0; };
  while (i < text.size()) {
    while (i < text.size() && space(i)) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !space(i)) ++i;
    tokens.push_back({start, i});
  }
  return tokens;
}

struct Document {
  std::string doc_id;
  std::string text;
};

struct Chunk {
  std::string doc_id;
  std::size_t chunk_id = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  std::string text;

  std::size_t token_count() const noexcept { return token_end - token_start; }
  ChunkRef ref() const { return {doc_id, chunk_id, token_start, token_end}; }
};

struct ChunkSet {
  std::size_t granularity = 0;
  std::vector<Chunk> chunks;

  std::size_t size() const noexcept { return chunks.size(); }
  bool empty() const noexcept { return chunks.empty(); }
};

/// Contiguous T-token windows. Each chunk's text runs from the start of the
/// document (first chunk) or of its first token up to the first byte of the
/// next chunk, so the texts concatenate back to the document exactly.
inline ChunkSet chunk_text(const Document& doc, std::size_t tokens_per_chunk,
                           const Tokenizer& tokenizer = whitespace_tokenize) {
  if (tokens_per_chunk == 0) throw InvalidArgument("chunk size T must be at least 1");
  const auto tokens = tokenizer(doc.text);
  if (tokens.empty()) throw DegenerateInput("document '" + doc.doc_id + "' has no tokens");
  ChunkSet set;
  set.granularity = tokens_per_chunk;
  for (std::size_t start = 0, id = 0; start < tokens.size(); start += tokens_per_chunk, ++id) {
    const std::size_t end = std::min(start + tokens_per_chunk, tokens.size());
    const std::size_t byte_begin = start == 0 ? 0 : tokens[start].begin;
    const std::size_t byte_end = end == tokens.size() ? doc.text.size() : tokens[end].begin;
    set.chunks.push_back({doc.doc_id, id, start, end, doc.text.substr(byte_begin, byte_end - byte_begin)});
  }
  return set;
}

inline ChunkSet chunk_documents(const std::vector<Document>& docs, std::size_t tokens_per_chunk,
                                const Tokenizer& tokenizer = whitespace_tokenize) {
  ChunkSet all;
  all.granularity = tokens_per_chunk;
  for (const auto& d : docs) {
    auto set = chunk_text(d, tokens_per_chunk, tokenizer);
    for (auto& c : set.chunks) all.chunks.push_back(std::move(c));
  }
  return all;
}

/// Same document and one token span nested in the other.
inline bool containment_check(const ChunkRef& query, const ChunkRef& top) {
  if (query.doc_id != top.doc_id) return false;
  const auto inside = [](const ChunkRef& a, const ChunkRef& b) {
    return b.token_start <= a.token_start && a.token_end <= b.token_end;
  };
  return inside(query, top) || inside(top, query);
}

inline bool containment_check(const Chunk& query, const Chunk& top) { return containment_check(query.ref(), top.ref()); }

}  // namespace semtopo
