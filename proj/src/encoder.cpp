#include "zsnlu/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "zsnlu/corpus.hpp"

namespace zsnlu {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_vector(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    std::string s(n, '\0');
    read(s.data(), n, what);
    return s;
  }

  void floats(std::span<double> out, const char* what) {
    for (double& v : out) v = static_cast<double>(std::bit_cast<float>(u32(what)));
  }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw StoreError(std::string("truncated store while reading ") + what + " at byte " +
                       std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())));
    }
    offset_ += n;
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open embedding store " + path);
  Reader r(in);
  char magic[6];
  r.read(magic, 6, "magic");
  if (std::memcmp(magic, kStoreMagic, 6) != 0) {
    throw StoreError(path + ": bad magic, expected \"" + std::string(kStoreMagic) + "\"");
  }
  const std::uint32_t dim = r.u32("dimension");
  if (dim == 0) throw StoreError(path + ": zero dimension");
  const std::uint32_t count = r.u32("record count");
  EmbeddingStore store(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.key = r.str("key");
    const std::uint32_t t = r.u32("token count");
    for (std::uint32_t k = 0; k < t; ++k) rec.tokens.push_back(r.str("token"));
    rec.cls = Tensor(1, dim);
    rec.token_vecs = Tensor(t, dim);
    r.floats(rec.cls.values(), "vectors");
    r.floats(rec.token_vecs.values(), "vectors");
    try {
      store.insert(std::move(rec));
    } catch (const StoreError& e) {
      throw StoreError(path + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw StoreError(path + ": trailing bytes after records");
  return store;
}

void EmbeddingStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write embedding store " + path);
  out.write(kStoreMagic, 6);
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u32(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& [key, rec] : records_) {
    put_string(out, rec.key);
    put_u32(out, static_cast<std::uint32_t>(rec.tokens.size()));
    for (const auto& tok : rec.tokens) put_string(out, tok);
    put_vector(out, rec.cls.values());
    put_vector(out, rec.token_vecs.values());
  }
  if (!out) throw StoreError("failed writing " + path);
}

const EmbeddingRecord& EmbeddingStore::lookup(std::string_view key) const {
  auto it = records_.find(key);
  if (it == records_.end()) throw MissingEmbeddingError(std::string(key));
  return it->second;
}

void EmbeddingStore::insert(EmbeddingRecord record) {
  if (record.cls.rows() != 1 || record.cls.cols() != dim_) {
    throw StoreError("sentence vector of \"" + record.key + "\" is " + record.cls.shape_string() +
                     ", store dimension is " + std::to_string(dim_));
  }
  if (record.token_vecs.rows() != record.tokens.size() ||
      (record.token_vecs.cols() != dim_ && !record.tokens.empty())) {
    throw StoreError("token vectors of \"" + record.key + "\" do not match its tokens / dimension");
  }
  if (records_.contains(record.key)) throw StoreError("duplicate key \"" + record.key + "\"");
  std::string key = record.key;
  records_.emplace(std::move(key), std::move(record));
}

// ---------------------------------------------------------------------------

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

ToyEncoder::ToyEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw std::invalid_argument("toy encoder needs dim >= 2");
}

std::vector<double> ToyEncoder::token_vector(std::string_view token) const {
  if (auto it = pinned_.find(std::string(token)); it != pinned_.end()) return it->second;
  // FNV-1a over the token bytes, mixed with the seed.
  std::uint64_t h = 1469598103934665603ULL ^ (seed_ * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 gen(h);
  std::vector<double> v(dim_, 0.0);
  for (std::size_t i = 0; i + 1 < dim_; ++i) {
    v[i] = static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0;
  }
  normalize(v);
  return v;
}

void ToyEncoder::set_token_vector(std::string token, std::vector<double> vec) {
  if (vec.size() != dim_) throw std::invalid_argument("pinned vector has the wrong dimension");
  normalize(vec);
  pinned_[std::move(token)] = std::move(vec);
}

EmbeddingRecord ToyEncoder::encode(std::string_view text) const {
  EmbeddingRecord rec;
  rec.key = std::string(text);
  rec.tokens = split_whitespace(text);
  rec.token_vecs = Tensor(rec.tokens.size(), dim_);
  std::vector<double> mean(dim_, 0.0);
  for (std::size_t t = 0; t < rec.tokens.size(); ++t) {
    const auto v = token_vector(rec.tokens[t]);
    for (std::size_t i = 0; i < dim_; ++i) {
      rec.token_vecs(t, i) = v[i];
      mean[i] += v[i];
    }
  }
  normalize(mean);
  mean[dim_ - 1] += kClsOffset;
  normalize(mean);
  rec.cls = Tensor::row(mean);
  return rec;
}

EmbeddingRecord toy_encode(std::string_view text, std::size_t dim, std::uint64_t seed) {
  return ToyEncoder(dim, seed).encode(text);
}

}  // namespace zsnlu
