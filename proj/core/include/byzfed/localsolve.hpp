#pragma once

#include <optional>

#include "byzfed/datagen.hpp"
#include "byzfed/types.hpp"

namespace byzfed {

enum class LossKind {
  SquaredError,  ///< f(w; (x, y)) = 1/2 (x^T w - y)^2
  Location,      ///< f(w; x) = 1/2 ||w - x||^2, for raw feature points
};

struct LossSpec {
  LossKind kind = LossKind::SquaredError;
  bool operator==(const LossSpec&) const = default;
};

/// One streamed sample. `response` is ignored by Location losses.
struct Sample {
  Vector x;
  double response = 0.0;
};

/// Pull-based sample stream for online solvers.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<Sample> next() = 0;
};

/// Streams a shard's rows in stored order.
class ShardSource final : public SampleSource {
 public:
  ShardSource(const WorkerShard& shard, LossSpec loss) : shard_(shard), loss_(loss) {}
  std::optional<Sample> next() override;

 private:
  const WorkerShard& shard_;
  LossSpec loss_;
  Eigen::Index row_ = 0;
};

/// F(w) = (1/n) sum_j f(w; x_j).
double local_loss(const WorkerShard& shard, const LossSpec& loss, const Vector& w);

/// Gradient of F at w. Honest by construction; attacks are applied by the
/// optimization layer.
Vector local_gradient(const WorkerShard& shard, const LossSpec& loss, const Vector& w);

/// Gradient of a single sample's loss.
Vector sample_gradient(const LossSpec& loss, const Sample& sample, const Vector& w);

/// Exact minimizer of F: least squares (minimum norm) or the sample mean.
Vector local_erm(const WorkerShard& shard, const LossSpec& loss);

/// 1 / lambda_max of the Hessian of F (1 for Location).
double default_gd_step(const WorkerShard& shard, const LossSpec& loss);

/// `iters` plain gradient steps on F from zero. Approximate; with few steps
/// this is an early-stopped (shrunk) estimate. Throws NumericError when the
/// iterate norm exceeds 1e12.
Vector gd_erm(const WorkerShard& shard, const LossSpec& loss, double step, int iters);

/// Step eta_l = 1 / (lambda l); projection onto the l2 ball of `radius`
/// (radius <= 0 means 2 sqrt(d)).
struct OgdSchedule {
  double lambda = 1.0;
  double radius = 0.0;
  bool operator==(const OgdSchedule&) const = default;
};

/// Online gradient descent over the stream, one pass, each sample read
/// once; returns the average of the iterates w_1..w_n (w_1 = 0).
Vector online_to_batch(SampleSource& source, const LossSpec& loss, const OgdSchedule& schedule, Eigen::Index d);
Vector online_to_batch(const WorkerShard& shard, const LossSpec& loss, const OgdSchedule& schedule);

}  // namespace byzfed
