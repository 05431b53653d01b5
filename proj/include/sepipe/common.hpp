#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sepipe {

// Library-wide error type. `kind` distinguishes bad inputs/config from
// failures that happen mid-run; the CLI maps them to exit codes 1 and 2.
class Error : public std::runtime_error {
 public:
  enum class Kind { validation, runtime };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(Error::Kind::validation, msg);
}

inline void require_runtime(bool cond, const std::string& msg) {
  if (!cond) throw Error(Error::Kind::runtime, msg);
}

// splitmix64; used to derive independent seed streams so that parallel or
// resumed runs see the same randomness as a straight-line run.
inline uint64_t hash_u64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t seed_stream(uint64_t seed, uint64_t a) { return hash_u64(seed ^ hash_u64(a)); }

inline uint64_t seed_stream(uint64_t seed, uint64_t a, uint64_t b) {
  return hash_u64(seed_stream(seed, a) ^ hash_u64(b));
}

inline uint64_t seed_stream(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return hash_u64(seed_stream(seed, a, b) ^ hash_u64(c));
}

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace sepipe
