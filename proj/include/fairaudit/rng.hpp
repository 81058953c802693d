#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace fairaudit {

/// xoshiro256** seeded through splitmix64.
///
/// All distributions are implemented here rather than taken from <random> so
/// that a seed maps to the same stream with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  double normal();
  double gamma(double shape);
  double beta(double a, double b);

  void shuffle(std::vector<std::size_t>& v);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Stable 64-bit FNV-1a hash, used for seed derivation and fingerprints.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n);
  void str(std::string_view s);
  void u64(std::uint64_t v);
  void f64(double v);
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

/// Derives an independent seed from a master seed and a sequence of labels.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::string_view> labels,
                          std::uint64_t index = 0);

}  // namespace fairaudit
