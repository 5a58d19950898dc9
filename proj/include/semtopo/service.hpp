#pragma once

// Embedding-service client (OpenAI-compatible /embeddings API) and a JSONL
// response cache. Needs OpenSSL; define CPPHTTPLIB_OPENSSL_SUPPORT for https.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "semtopo/embedder.hpp"
#include "semtopo/error.hpp"
#include "semtopo/parallel.hpp"

namespace semtopo {

struct ServiceConfig {
  std::string endpoint;  // e.g. https://api.example.com/v1/embeddings
  std::string api_key;
  std::string model;
  std::size_t batch_size = 64;
  std::size_t max_retries = 4;
  std::size_t initial_backoff_ms = 500;
  std::size_t max_concurrency = 4;
  std::size_t min_interval_ms = 0;  // between request starts, across workers
  std::size_t timeout_s = 60;

  static ServiceConfig from_environment() {
    const auto env = [](const char* name) -> std::string {
      const char* v = std::getenv(name);
      return v ? std::string(v) : std::string();
    };
    ServiceConfig c;
    c.endpoint = env("SEMTOPO_EMBED_ENDPOINT");
    c.api_key = env("SEMTOPO_EMBED_KEY");
    c.model = env("SEMTOPO_EMBED_MODEL");
    if (const auto b = env("SEMTOPO_EMBED_BATCH"); !b.empty()) {
      try {
        c.batch_size = std::stoul(b);
      } catch (const std::exception&) {
        throw InvalidArgument("SEMTOPO_EMBED_BATCH is not a number: '" + b + "'");
      }
    }
    if (c.endpoint.empty()) throw InvalidArgument("SEMTOPO_EMBED_ENDPOINT is not set");
    return c;
  }
};

namespace detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint URL needs a scheme: '" + url + "'");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw InvalidArgument("unsupported URL scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/embeddings"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

class ServiceEmbedder final : public Embedder {
 public:
  explicit ServiceEmbedder(ServiceConfig config) : config_(std::move(config)), url_(detail::parse_url(config_.endpoint)) {
    if (config_.batch_size == 0) throw InvalidArgument("service batch size must be at least 1");
    if (config_.max_concurrency == 0) config_.max_concurrency = 1;
  }

  std::string model_tag() const override { return "service:" + (config_.model.empty() ? url_.origin : config_.model); }

  std::vector<Vector> embed(const std::vector<std::string>& texts) override {
    const std::size_t batches = (texts.size() + config_.batch_size - 1) / config_.batch_size;
    std::vector<std::vector<Vector>> results(batches);
    parallel_for(
        batches,
        [&](std::size_t b) {
          const auto first = texts.begin() + static_cast<std::ptrdiff_t>(b * config_.batch_size);
          const auto last = texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), (b + 1) * config_.batch_size));
          results[b] = post_with_retry(std::vector<std::string>(first, last));
        },
        config_.max_concurrency);
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (auto& r : results)
      for (auto& v : r) out.push_back(std::move(v));
    return out;
  }

  std::size_t request_count() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  void wait_for_slot() {
    if (config_.min_interval_ms == 0) return;
    std::chrono::steady_clock::time_point start;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      start = std::max(now, next_start_);
      next_start_ = start + std::chrono::milliseconds(config_.min_interval_ms);
    }
    std::this_thread::sleep_until(start);
  }

  std::vector<Vector> post_with_retry(const std::vector<std::string>& batch) {
    nlohmann::json body{{"input", batch}};
    if (!config_.model.empty()) body["model"] = config_.model;
    const std::string payload = body.dump();

    httplib::Client client(url_.origin);
    client.set_connection_timeout(static_cast<time_t>(config_.timeout_s), 0);
    client.set_read_timeout(static_cast<time_t>(config_.timeout_s), 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    auto backoff = std::chrono::milliseconds(config_.initial_backoff_ms);
    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      wait_for_slot();
      {
        std::lock_guard lock(mutex_);
        ++requests_;
      }
      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw IoError("embedding service " + config_.endpoint + " returned HTTP " + std::to_string(res->status) +
                      ": " + res->body.substr(0, 200));
      return parse_response(res->body, batch.size());
    }
    throw IoError("embedding service " + config_.endpoint + " unreachable after " +
                  std::to_string(config_.max_retries + 1) + " attempts (" + last_error + ")");
  }

  std::vector<Vector> parse_response(const std::string& body, std::size_t expected) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(std::string("embedding service returned invalid JSON: ") + e.what());
    }
    if (!j.contains("data") || !j["data"].is_array()) throw IoError("embedding response has no 'data' array");
    const auto& data = j["data"];
    if (data.size() != expected)
      throw IoError("embedding response has " + std::to_string(data.size()) + " items, expected " +
                    std::to_string(expected));
    std::vector<Vector> out(expected);
    for (std::size_t n = 0; n < data.size(); ++n) {
      const auto& item = data[n];
      const std::size_t i = item.contains("index") ? item["index"].get<std::size_t>() : n;
      if (i >= expected || out[i].size() != 0) throw IoError("embedding response has a bad or repeated index");
      const auto& e = item.at("embedding");
      Vector v(static_cast<Eigen::Index>(e.size()));
      for (std::size_t c = 0; c < e.size(); ++c) v(static_cast<Eigen::Index>(c)) = e[c].get<double>();
      check_dimension(static_cast<std::size_t>(v.size()));
      out[i] = std::move(v);
    }
    return out;
  }

  void check_dimension(std::size_t d) {
    std::lock_guard lock(mutex_);
    if (!dimension_) dimension_ = d;
    if (*dimension_ != d)
      throw DimensionMismatch("embedding dimension drifted from " + std::to_string(*dimension_) + " to " +
                              std::to_string(d));
  }

  ServiceConfig config_;
  detail::ParsedUrl url_;
  mutable std::mutex mutex_;
  std::chrono::steady_clock::time_point next_start_{};
  std::optional<std::size_t> dimension_;
  std::size_t requests_ = 0;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Wraps another embedder; responses are appended to a JSONL file keyed by
/// model tag and text hash, so later runs need no network.
class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(std::unique_ptr<Embedder> inner, std::filesystem::path path)
      : inner_(std::move(inner)), path_(std::move(path)), tag_(inner_->model_tag()) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || j.value("model_tag", "") != tag_) continue;
      const auto& e = j.at("vector");
      Vector v(static_cast<Eigen::Index>(e.size()));
      for (std::size_t c = 0; c < e.size(); ++c) v(static_cast<Eigen::Index>(c)) = e[c].get<double>();
      cache_[j.at("key").get<std::string>()] = std::move(v);
    }
  }

  std::string model_tag() const override { return tag_; }
  std::size_t cached() const noexcept { return cache_.size(); }

  std::vector<Vector> embed(const std::vector<std::string>& texts) override {
    std::vector<std::string> keys;
    std::vector<std::string> missing;
    std::unordered_map<std::string, bool> queued;
    for (const auto& t : texts) {
      keys.push_back(sha256_hex(t));
      if (!cache_.count(keys.back()) && !queued[keys.back()]) {
        queued[keys.back()] = true;
        missing.push_back(t);
      }
    }
    if (!missing.empty()) {
      const auto fresh = inner_->embed(missing);
      if (fresh.size() != missing.size()) throw IoError("inner embedder returned the wrong number of vectors");
      if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
      std::ofstream out(path_, std::ios::app);
      if (!out) throw IoError("cannot append to embedding cache " + path_.string());
      for (std::size_t i = 0; i < missing.size(); ++i) {
        const auto key = sha256_hex(missing[i]);
        nlohmann::json vec = nlohmann::json::array();
        for (Eigen::Index c = 0; c < fresh[i].size(); ++c) vec.push_back(fresh[i](c));
        out << nlohmann::json{{"key", key}, {"model_tag", tag_}, {"vector", vec}}.dump() << '\n';
        cache_[key] = fresh[i];
      }
    }
    std::vector<Vector> result;
    result.reserve(texts.size());
    for (const auto& k : keys) result.push_back(cache_.at(k));
    return result;
  }

 private:
  std::unique_ptr<Embedder> inner_;
  std::filesystem::path path_;
  std::string tag_;
  std::unordered_map<std::string, Vector> cache_;
};

}  // namespace semtopo
