#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "byzfed/types.hpp"

namespace byzfed {

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

/// Reproducible random stream keyed by (master_seed, stream_id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All transforms below are written out explicitly because the
/// std distributions are implementation-defined; with them the same key
/// produces the same draws on every platform. A stream has a single owner.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p = 0.5) { return uniform() < p; }

  Vector normal_vector(Eigen::Index d, double stddev = 1.0);
  /// Elementwise scale * Bernoulli(1/2).
  Vector bernoulli_vector(Eigen::Index d, double scale = 1.0);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace byzfed
