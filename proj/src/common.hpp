#pragma once

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace protoforge {

// ---------------------------------------------------------------------------
// Errors. Every failure in the library throws one of these; the C API maps
// them to status codes at the boundary.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };
class SamplingError : public Error { public: using Error::Error; };
class LossError : public Error { public: using Error::Error; };
class DeterminismError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };
class TrainError : public Error { public: using Error::Error; };

// printf-style string builder (gcc 11 ships no <format>)
inline std::string strfmt(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
  std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

inline std::string lowercase(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
    size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\r' || s[j] == '\n')) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return s.substr(b, e - b);
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. std::uniform_int_distribution and std::shuffle are
// implementation-defined, so bounded draws are rolled by hand to keep seeded
// runs byte-identical across platforms. Named forks give each consumer
// (sampler, dropout, per-parameter init) an independent stream, so adding or
// removing one consumer does not shift the draws of another.

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  Rng(uint64_t seed, const std::string& stream) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(fnv1a64(stream)),
                      static_cast<uint32_t>(fnv1a64(stream) >> 32)};
    engine_.seed(seq);
  }

  Rng fork(const std::string& stream) const { return Rng(base_draw_seed(), stream); }

  uint64_t next() { return engine_(); }

  // uniform on [0, n), unbiased via rejection
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw IndexError("uniform_int: empty range");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // uniform on [0, 1), 53-bit resolution
  double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // first k entries of a Fisher-Yates pass over [0, n): a k-subset drawn
  // without replacement, order random
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(uniform_int(static_cast<uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  std::mt19937_64& engine() { return engine_; }
  const std::mt19937_64& engine() const { return engine_; }

 private:
  uint64_t base_draw_seed() const {
    std::mt19937_64 copy = engine_;
    return copy();
  }
  std::mt19937_64 engine_;
};

}  // namespace protoforge
