#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace gms {

/// xoshiro256** seeded through splitmix64.
///
/// Every draw is defined by integer arithmetic alone, so a seed reproduces
/// the same stream on any platform. The standard library distributions are
/// not used anywhere in the pipeline because their output is
/// implementation-defined.
///
/// Stream splitting: a child stream for a named stage is seeded with
/// `derive_seed(parent, name)`, i.e. splitmix64(parent ^ fnv1a64(name)).
/// Stage names used by the pipeline are "view/<k>", "offset/<k>", "layout",
/// "fill", "epoch/<e>", "shuffle/<e>", "init", "fold/<f>".
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage);

}  // namespace gms
