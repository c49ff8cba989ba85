#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include "coinflip/rational.hpp"

namespace coinflip {

// SplitMix64: small, stable across platforms, cheap to seed per query.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child stream seed from a parent seed and up to two tags.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = mix64(parent + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (b + 0x85157af5ULL));
  return h;
}

// Path hash; the length is folded in so "0" and "00" differ.
inline std::uint64_t hash_path(std::string_view bits) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ bits.size();
  for (char c : bits) h = mix64(h * 3 + static_cast<std::uint64_t>(c - '0') + 1);
  return h;
}

// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Exact Bernoulli(p) for rational p: compare a 64-bit word against ⌊p·2^64⌋ and,
// on the boundary word, recurse on the fractional remainder.
class ExactBernoulli {
 public:
  ExactBernoulli() = default;
  explicit ExactBernoulli(const Rational& p) {
    if (p <= 0) {
      kind_ = Kind::never;
    } else if (p >= 1) {
      kind_ = Kind::always;
    } else {
      kind_ = Kind::threshold;
      Rational scaled = p * two64();
      Integer w = scaled.get_num() / scaled.get_den();
      word_ = to_u64(w);
      remainder_ = scaled - Rational(w);
    }
  }

  bool operator()(Rng& rng) const {
    switch (kind_) {
      case Kind::never:
        return false;
      case Kind::always:
        return true;
      case Kind::threshold:
        break;
    }
    std::uint64_t x = rng();
    if (x < word_) return true;
    if (x > word_ || remainder_ == 0) return false;
    return ExactBernoulli(remainder_)(rng);
  }

 private:
  enum class Kind : std::uint8_t { never, always, threshold };

  static const Rational& two64() {
    static const Rational r = [] {
      Integer z;
      mpz_ui_pow_ui(z.get_mpz_t(), 2, 64);
      return Rational(z);
    }();
    return r;
  }

  static std::uint64_t to_u64(const Integer& z) {
    std::uint64_t out = 0;
    mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, z.get_mpz_t());
    return out;
  }

  Kind kind_ = Kind::never;
  std::uint64_t word_ = 0;
  Rational remainder_;
};

}  // namespace coinflip
