#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsnlu/tensor.hpp"

namespace zsnlu {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingEmbeddingError : public std::runtime_error {
 public:
  explicit MissingEmbeddingError(std::string key)
      : std::runtime_error("no embedding for \"" + key +
                           "\"; re-run the exporter with this string in the manifest"),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Sentence-level vector plus one vector per word for an exact text key.
struct EmbeddingRecord {
  std::string key;
  std::vector<std::string> tokens;
  Tensor cls;     // 1 x dim
  Tensor token_vecs;  // T x dim
};

inline constexpr char kStoreMagic[] = "ZSEMB1";

// Immutable after load; lookups are const and safe to share across threads.
// Vectors are held as doubles but serialised as float32, so a store read
// from disk round-trips bitwise.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim = 0) : dim_(dim) {}

  static EmbeddingStore load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool contains(std::string_view key) const { return records_.find(key) != records_.end(); }
  const EmbeddingRecord& lookup(std::string_view key) const;
  const std::map<std::string, EmbeddingRecord, std::less<>>& records() const { return records_; }

  // Validates the record against the header; rejects duplicate keys.
  void insert(EmbeddingRecord record);

 private:
  std::size_t dim_;
  std::map<std::string, EmbeddingRecord, std::less<>> records_;
};

// Deterministic stand-in for a contextual encoder. Token vectors are seeded
// hash expansions living in the first dim-1 coordinates; the sentence vector
// is the normalised token mean pushed along the last coordinate, so that
// sentence-level and word-level vectors are deliberately not comparable.
class ToyEncoder {
 public:
  static constexpr double kClsOffset = 2.0;

  ToyEncoder(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::vector<double> token_vector(std::string_view token) const;
  // Pins a token to a given vector (normalised on insert), e.g. to place slot
  // values near their description.
  void set_token_vector(std::string token, std::vector<double> vec);
  EmbeddingRecord encode(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::unordered_map<std::string, std::vector<double>> pinned_;
};

EmbeddingRecord toy_encode(std::string_view text, std::size_t dim, std::uint64_t seed);

void normalize(std::vector<double>& v);
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace zsnlu
