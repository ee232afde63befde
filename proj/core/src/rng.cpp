#include "byzfed/rng.hpp"

#include <cmath>
#include <numeric>

namespace byzfed {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_(master_seed), stream_(stream_id), engine_(mix_seed(master_seed, stream_id)) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

Vector RngStream::normal_vector(Eigen::Index d, double stddev) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = stddev * normal();
  return v;
}

Vector RngStream::bernoulli_vector(Eigen::Index d, double scale) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = (engine_() >> 63) ? scale : 0.0;
  return v;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle(p);
  return p;
}

}  // namespace byzfed
