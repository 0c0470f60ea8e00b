#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include <doctest.h>

#include "qeloop/error.hpp"
#include "qeloop/generation.hpp"

namespace qeloop::test {

inline std::filesystem::path samples_dir() { return QELOOP_SAMPLES_DIR; }

// Fresh, empty directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag) {
    static std::atomic<int> seq{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("qeloop-" + std::string(tag) + "-" + std::to_string(rd()) + "-" + std::to_string(seq++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Independent FNV-1a (64-bit) reference.
inline std::uint64_t fnv_oracle(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Wraps a provider and counts every call it sees.
class CountingProvider final : public GenerationProvider {
 public:
  explicit CountingProvider(std::shared_ptr<GenerationProvider> inner) : inner_(std::move(inner)) {}
  std::string id() const override { return inner_->id(); }
  std::string generate(const GenerationRequest& r) override {
    ++calls;
    return inner_->generate(r);
  }
  std::atomic<std::uint64_t> calls{0};

 private:
  std::shared_ptr<GenerationProvider> inner_;
};

}  // namespace qeloop::test

// Checks that `expr` throws qeloop::Error with the given code.
#define CHECK_ERRC(expr, errc)                                   \
  do {                                                           \
    bool qeloop_thrown_ = false;                                 \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const ::qeloop::Error& qeloop_e_) {                 \
      qeloop_thrown_ = true;                                     \
      CHECK_MESSAGE(qeloop_e_.code() == (errc), qeloop_e_.what()); \
    }                                                            \
    CHECK_MESSAGE(qeloop_thrown_, "expected " #errc);            \
  } while (false)
