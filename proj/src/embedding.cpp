#include "qeloop/embedding.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "http_client.hpp"
#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const {
  for (double x : values)
    if (x != 0.0) return false;
  return true;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void l2_normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  const double n = std::sqrt(s);
  if (n == 1.0) return;
  for (double& x : v) x /= n;
}

std::string normalize_text(std::string_view text) { return str::collapse_ws(text); }

EmbeddingVector hash_embed(std::string_view text, const WordSet& stopwords) {
  EmbeddingVector v{std::string(kHashProviderId), std::vector<double>(kHashDim, 0.0)};
  for (const auto& tok : tokenize_normalize(text, stopwords)) {
    const auto h = fnv1a64(tok);
    const double sign = ((h >> 8) & 1U) ? -1.0 : 1.0;
    v.values[h % kHashDim] += sign;
  }
  l2_normalize(v.values);
  return v;
}

HashEmbeddingProvider::HashEmbeddingProvider(WordSet stopwords) : stopwords_(std::move(stopwords)) {}

std::vector<std::vector<double>> HashEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t, stopwords_).values);
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.dim == 0) throw Error(Errc::InvalidConfig, "embedding.dim", "remote provider needs a positive dim");
}

std::string RemoteEmbeddingProvider::id() const {
  return config_.provider_id.empty() ? "remote:" + config_.model : config_.provider_id;
}

std::vector<std::vector<double>> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
  const nlohmann::json body = {{"model", config_.model},
                               {"inputs", std::vector<std::string>(texts.begin(), texts.end())}};
  const auto res = detail::post_json({config_.url, config_.api_key_env, config_.timeout_seconds, config_.retries},
                                     body, id());
  try {
    auto vectors = res.at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != texts.size())
      throw Error(Errc::ProviderUnavailable, id(), "vector count does not match input count");
    return vectors;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ProviderUnavailable, id(), std::string("bad response body: ") + e.what());
  }
}

EmbeddingCache::EmbeddingCache(std::filesystem::path file, Clock clock)
    : file_(std::move(file)), clock_(std::move(clock)) {
  std::ifstream in(*file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (str::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Entry e;
      e.provider_id = j.at("provider_id").get<std::string>();
      e.text = j.at("text").get<std::string>();
      e.vector = {e.provider_id, j.at("vector").get<std::vector<double>>()};
      e.created_at = j.value("created_at", "");
      e.key = key_of(e.provider_id, e.text);
      insert_locked(std::move(e));
    } catch (const nlohmann::json::exception&) {
      // torn record from an interrupted append; recomputed on demand
    }
  }
}

std::uint64_t EmbeddingCache::key_of(std::string_view provider_id, std::string_view normalized_text) {
  std::string material(provider_id);
  material += '\x1f';
  material += normalized_text;
  return fnv1a64(material);
}

std::optional<EmbeddingVector> EmbeddingCache::get(std::string_view provider_id,
                                                   std::string_view normalized_text) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(key_of(provider_id, normalized_text));
  if (it == entries_.end()) return std::nullopt;
  for (const auto& e : it->second)
    if (e.provider_id == provider_id && e.text == normalized_text) return e.vector;
  return std::nullopt;
}

void EmbeddingCache::insert_locked(Entry entry) {
  auto& bucket = entries_[entry.key];
  for (const auto& e : bucket)
    if (e.provider_id == entry.provider_id && e.text == entry.text) return;
  bucket.push_back(std::move(entry));
  ++count_;
}

void EmbeddingCache::put(std::string_view provider_id, std::string_view normalized_text,
                         const EmbeddingVector& vector) {
  Entry e{key_of(provider_id, normalized_text), std::string(provider_id), std::string(normalized_text), vector,
          clock_ ? clock_() : std::string()};
  std::unique_lock lock(mu_);
  const auto before = count_;
  if (file_) {
    const nlohmann::json j = {{"provider_id", e.provider_id},
                              {"text", e.text},
                              {"created_at", e.created_at},
                              {"vector", e.vector.values}};
    insert_locked(std::move(e));
    if (count_ == before) return;
    std::filesystem::create_directories(file_->parent_path().empty() ? "." : file_->parent_path());
    std::ofstream out(*file_, std::ios::app);
    if (!out) throw Error(Errc::IoFailure, file_->string(), "cannot append to embedding cache");
    out << j.dump() << '\n';
    out.flush();
    return;
  }
  insert_locked(std::move(e));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return count_;
}

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache,
                   std::size_t batch_size)
    : provider_(std::move(provider)),
      cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()),
      batch_size_(batch_size == 0 ? 1 : batch_size) {}

EmbeddingVector Embedder::embed(std::string_view text) {
  const std::string t(text);
  return embed_many(std::span<const std::string>(&t, 1)).front();
}

std::vector<EmbeddingVector> Embedder::embed_many(std::span<const std::string> texts) {
  const auto pid = provider_->id();
  const auto dim = provider_->dim();
  std::vector<std::string> normalized;
  normalized.reserve(texts.size());
  for (const auto& t : texts) {
    normalized.push_back(normalize_text(t));
    if (normalized.back().empty()) throw Error(Errc::EmptyText, pid, "cannot embed empty text");
  }

  std::vector<std::optional<EmbeddingVector>> found(texts.size());
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    found[i] = cache_->get(pid, normalized[i]);
    if (!found[i] && miss_index.emplace(normalized[i], misses.size()).second) misses.push_back(normalized[i]);
  }

  std::vector<EmbeddingVector> computed(misses.size());
  for (std::size_t start = 0; start < misses.size(); start += batch_size_) {
    const auto n = std::min(batch_size_, misses.size() - start);
    std::span<const std::string> batch(misses.data() + start, n);
    ++calls_;
    auto raw = provider_->embed_batch(batch);
    if (raw.size() != n) throw Error(Errc::ProviderUnavailable, pid, "provider returned wrong number of vectors");
    for (std::size_t k = 0; k < n; ++k) {
      if (raw[k].size() != dim) {
        throw Error(Errc::DimensionMismatch, pid,
                    "expected " + std::to_string(dim) + ", got " + std::to_string(raw[k].size()));
      }
      l2_normalize(raw[k]);
      computed[start + k] = EmbeddingVector{pid, std::move(raw[k])};
      cache_->put(pid, misses[start + k], computed[start + k]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back(found[i] ? std::move(*found[i]) : computed[miss_index.at(normalized[i])]);
  return out;
}

std::shared_ptr<Embedder> make_hash_embedder(const WordSet& stopwords) {
  return std::make_shared<Embedder>(std::make_shared<HashEmbeddingProvider>(stopwords),
                                    std::make_shared<EmbeddingCache>());
}

}  // namespace qeloop
