#pragma once

#include <cstdint>
#include <random>

namespace simrec {

/// Reproducible random stream identified by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded with a splitmix64 mix of the pair.
/// Both are fully specified, so draws are identical across platforms. Derived quantities (uniform reals, bounded integers) are
/// computed here rather than through the std distributions, whose algorithms
/// are implementation-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream whose id mixes this stream's id with `tag`. Forking does
  /// not consume draws from the parent.
  RngStream fork(std::uint64_t tag) const;
  RngStream fork(std::uint64_t tag_a, std::uint64_t tag_b) const;

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1]; safe to take the logarithm of.
  double uniform_open_zero();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used for stream-id derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace simrec
