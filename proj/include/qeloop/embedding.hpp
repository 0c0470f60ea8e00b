#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qeloop/clock.hpp"
#include "qeloop/text.hpp"

namespace qeloop {

struct EmbeddingVector {
  std::string provider_id;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool is_zero() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// In-place L2 normalization; an all-zero vector stays all-zero.
void l2_normalize(std::vector<double>& v);

// Whitespace runs collapsed, ends trimmed. Cache keys and EmptyText checks
// are defined over this form.
std::string normalize_text(std::string_view text);

inline constexpr std::string_view kHashProviderId = "hash-v1";
inline constexpr std::size_t kHashDim = 256;

// Signed feature hashing of the stopword-filtered token set; unit norm or
// all-zero.
EmbeddingVector hash_embed(std::string_view text, const WordSet& stopwords);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  // One provider call. Returns one raw (not necessarily normalized) vector
  // per input, in input order.
  virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) = 0;
};

class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(WordSet stopwords = Lexicons::defaults().stopwords);
  std::string id() const override { return std::string(kHashProviderId); }
  std::size_t dim() const override { return kHashDim; }
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;

 private:
  WordSet stopwords_;
};

struct RemoteEmbeddingConfig {
  std::string url;  // e.g. "http://localhost:8081/embed"
  std::string model;
  std::size_t dim = 0;
  std::string provider_id;      // defaults to "remote:<model>"
  std::string api_key_env;      // bearer token source, optional
  int timeout_seconds = 30;
  int retries = 1;
};

// POST {"model", "inputs"} -> {"vectors"}. Transport failures and non-200
// responses raise ProviderUnavailable.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);
  std::string id() const override;
  std::size_t dim() const override { return config_.dim; }
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;

 private:
  RemoteEmbeddingConfig config_;
};

/// Content-addressed vector store keyed by (provider id, normalized text).
///
/// Readers share a lock, writers are serialized. When backed by a file, each
/// new entry is appended as one JSON line; records torn by an interrupted
/// write are skipped on load.
class EmbeddingCache {
 public:
  struct Entry {
    std::uint64_t key = 0;
    std::string provider_id;
    std::string text;  // normalized; disambiguates key collisions
    EmbeddingVector vector;
    std::string created_at;
  };

  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path file, Clock clock = system_clock());

  static std::uint64_t key_of(std::string_view provider_id, std::string_view normalized_text);

  std::optional<EmbeddingVector> get(std::string_view provider_id, std::string_view normalized_text) const;
  void put(std::string_view provider_id, std::string_view normalized_text, const EmbeddingVector& vector);
  std::size_t size() const;

 private:
  void insert_locked(Entry entry);

  mutable std::shared_mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> entries_;
  std::size_t count_ = 0;
  std::optional<std::filesystem::path> file_;
  Clock clock_ = system_clock();
};

/// Embeds texts through a provider with caching. Safe to share between
/// threads; results never depend on batching or on cache state.
class Embedder {
 public:
  Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache,
           std::size_t batch_size = 64);

  // Throws EmptyText, DimensionMismatch, ProviderUnavailable.
  EmbeddingVector embed(std::string_view text);
  std::vector<EmbeddingVector> embed_many(std::span<const std::string> texts);

  std::string provider_id() const { return provider_->id(); }
  std::uint64_t provider_calls() const { return calls_.load(); }

 private:
  std::shared_ptr<EmbeddingProvider> provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::size_t batch_size_;
  std::atomic<std::uint64_t> calls_{0};
};

// Hash provider with an in-memory cache.
std::shared_ptr<Embedder> make_hash_embedder(const WordSet& stopwords = Lexicons::defaults().stopwords);

}  // namespace qeloop
