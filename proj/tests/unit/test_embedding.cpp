#include <cmath>
#include <fstream>

#include "qeloop/embedding.hpp"
#include "qeloop/similarity.hpp"
#include "support.hpp"

using namespace qeloop;

namespace {

class FixedProvider final : public EmbeddingProvider {
 public:
  FixedProvider(std::size_t declared, std::size_t returned) : declared_(declared), returned_(returned) {}
  std::string id() const override { return "fixed"; }
  std::size_t dim() const override { return declared_; }
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override {
    ++calls;
    return std::vector<std::vector<double>>(texts.size(), std::vector<double>(returned_, 1.0));
  }
  int calls = 0;

 private:
  std::size_t declared_, returned_;
};

// Reference feature hashing built on the test-side FNV.
std::vector<double> hash_oracle(std::string_view text, const WordSet& stopwords) {
  std::vector<double> v(kHashDim, 0.0);
  for (const auto& tok : tokenize_normalize(text, stopwords)) {
    const auto h = test::fnv_oracle(tok);
    v[h % kHashDim] += ((h >> 8) & 1U) ? -1.0 : 1.0;
  }
  double n = 0;
  for (double x : v) n += x * x;
  if (n > 0)
    for (double& x : v) x /= std::sqrt(n);
  return v;
}

}  // namespace

TEST_CASE("fnv1a64 matches the reference") {
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  for (std::string_view s : {"account", "locked", "the system shall", "\xc3\xa9t\xc3\xa9"})
    CHECK(fnv1a64(s) == test::fnv_oracle(s));
}

TEST_CASE("hash_embed matches the reference construction") {
  const auto& sw = Lexicons::defaults().stopwords;
  for (std::string_view text : {"The system shall lock the account after 3 failed attempts.",
                                "Customer downloads monthly statements", "x"}) {
    const auto v = hash_embed(text, sw);
    const auto ref = hash_oracle(text, sw);
    REQUIRE(v.dim() == kHashDim);
    for (std::size_t i = 0; i < kHashDim; ++i) CHECK(v.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    CHECK(v.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("hash_embed: bag of words and degenerate input") {
  const auto& sw = Lexicons::defaults().stopwords;
  CHECK(hash_embed("account locked", sw) == hash_embed("locked account", sw));
  CHECK(hash_embed("the a an", {"the", "a", "an"}).is_zero());
  const auto v = hash_embed("identical text", sw);
  CHECK(cosine(v, hash_embed("identical text", sw)) == doctest::Approx(1.0));
}

TEST_CASE("cache: second embed makes no provider call") {
  auto emb = make_hash_embedder();
  const auto a = emb->embed("The account is locked.");
  const auto calls = emb->provider_calls();
  CHECK(calls == 1);
  const auto b = emb->embed("  The account   is locked. ");
  CHECK(emb->provider_calls() == calls);
  CHECK(a == b);
}

TEST_CASE("cached and uncached vectors agree") {
  auto warm = make_hash_embedder();
  std::vector<std::string> texts{"one two", "three four", "one two", "five"};
  const auto first = warm->embed_many(texts);
  const auto second = warm->embed_many(texts);
  CHECK(first == second);
  auto cold = make_hash_embedder();
  for (std::size_t i = 0; i < texts.size(); ++i) CHECK(cold->embed(texts[i]) == first[i]);
}

TEST_CASE("batching never changes results") {
  auto cache = std::make_shared<EmbeddingCache>();
  Embedder small(std::make_shared<HashEmbeddingProvider>(), cache, 1);
  Embedder big(std::make_shared<HashEmbeddingProvider>(), nullptr, 64);
  std::vector<std::string> texts{"alpha", "beta", "gamma"};
  CHECK(small.embed_many(texts) == big.embed_many(texts));
  CHECK(small.provider_calls() == 3);
  CHECK(big.provider_calls() == 1);
}

TEST_CASE("empty text is rejected") {
  auto emb = make_hash_embedder();
  CHECK_ERRC(emb->embed(""), Errc::EmptyText);
  CHECK_ERRC(emb->embed(" \n\t"), Errc::EmptyText);
}

TEST_CASE("provider dimension must match its declaration") {
  Embedder emb(std::make_shared<FixedProvider>(256, 384), nullptr);
  CHECK_ERRC(emb.embed("text"), Errc::DimensionMismatch);
}

TEST_CASE("file-backed cache persists and skips torn records") {
  test::TempDir dir("cache");
  const auto file = dir.path() / "embeddings.jsonl";
  auto provider = std::make_shared<FixedProvider>(4, 4);
  {
    Embedder emb(provider, std::make_shared<EmbeddingCache>(file, fixed_clock("2026-01-01T00:00:00Z")));
    (void)emb.embed("persisted text");
  }
  {
    std::ofstream out(file, std::ios::app);
    out << "{\"provider_id\": \"fixed\", \"te";
  }
  auto cache = std::make_shared<EmbeddingCache>(file);
  CHECK(cache->size() == 1);
  Embedder emb(provider, cache);
  (void)emb.embed("persisted text");
  CHECK(emb.provider_calls() == 0);
  CHECK(provider->calls == 1);
}

TEST_CASE("normalize_text collapses whitespace") {
  CHECK(normalize_text("  a \n\t b  ") == "a b");
}
