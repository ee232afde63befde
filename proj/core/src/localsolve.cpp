#include "byzfed/localsolve.hpp"

#include <cmath>
#include <string>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"

namespace byzfed {

namespace {

constexpr double kDivergenceNorm = 1e12;

void require_nonempty(const WorkerShard& shard, const LossSpec& loss, const char* who) {
  if (shard.rows() == 0 || shard.dim() == 0) throw InputError(std::string(who) + ": empty shard");
  if (loss.kind == LossKind::SquaredError && shard.y.size() != shard.rows()) {
    throw InputError(std::string(who) + ": squared-error loss needs one response per row");
  }
}

}  // namespace

std::optional<Sample> ShardSource::next() {
  if (row_ >= shard_.rows()) return std::nullopt;
  Sample s{shard_.X.row(row_).transpose(), loss_.kind == LossKind::SquaredError ? shard_.y[row_] : 0.0};
  ++row_;
  return s;
}

double local_loss(const WorkerShard& shard, const LossSpec& loss, const Vector& w) {
  require_nonempty(shard, loss, "local_loss");
  const double n = static_cast<double>(shard.rows());
  if (loss.kind == LossKind::SquaredError) return 0.5 * (shard.X * w - shard.y).squaredNorm() / n;
  return 0.5 * (shard.X.rowwise() - w.transpose()).rowwise().squaredNorm().sum() / n;
}

Vector local_gradient(const WorkerShard& shard, const LossSpec& loss, const Vector& w) {
  require_nonempty(shard, loss, "local_gradient");
  const double n = static_cast<double>(shard.rows());
  if (loss.kind == LossKind::SquaredError) return shard.X.transpose() * (shard.X * w - shard.y) / n;
  return w - shard.X.colwise().mean().transpose();
}

Vector sample_gradient(const LossSpec& loss, const Sample& sample, const Vector& w) {
  if (loss.kind == LossKind::SquaredError) return sample.x * (sample.x.dot(w) - sample.response);
  return w - sample.x;
}

Vector local_erm(const WorkerShard& shard, const LossSpec& loss) {
  require_nonempty(shard, loss, "local_erm");
  if (loss.kind == LossKind::SquaredError) return least_squares(shard.X, shard.y);
  return shard.X.colwise().mean().transpose();
}

double default_gd_step(const WorkerShard& shard, const LossSpec& loss) {
  require_nonempty(shard, loss, "default_gd_step");
  if (loss.kind == LossKind::Location) return 1.0;
  const Matrix H = shard.X.transpose() * shard.X / static_cast<double>(shard.rows());
  const double top = top_eigenpair(0.5 * (H + H.transpose())).value;
  if (top <= 0.0) return 1.0;
  return 1.0 / top;
}

Vector gd_erm(const WorkerShard& shard, const LossSpec& loss, double step, int iters) {
  require_nonempty(shard, loss, "gd_erm");
  if (!(step > 0.0)) throw ConfigError("gd_erm: step must be positive");
  Vector w = Vector::Zero(shard.dim());
  for (int it = 0; it < iters; ++it) {
    w -= step * local_gradient(shard, loss, w);
    if (!w.allFinite() || w.norm() > kDivergenceNorm) {
      throw NumericError("gd_erm: diverged at iteration " + std::to_string(it + 1));
    }
  }
  return w;
}

Vector online_to_batch(SampleSource& source, const LossSpec& loss, const OgdSchedule& schedule, Eigen::Index d) {
  if (!(schedule.lambda > 0.0)) throw ConfigError("online_to_batch: lambda must be positive");
  const double radius = schedule.radius > 0.0 ? schedule.radius : 2.0 * std::sqrt(static_cast<double>(d));
  Vector w = Vector::Zero(d);
  Vector sum = Vector::Zero(d);
  long long count = 0;
  while (auto sample = source.next()) {
    if (sample->x.size() != d) throw InputError("online_to_batch: sample dimension mismatch");
    ++count;
    sum += w;  // w_count is played before seeing sample `count`
    const double eta = 1.0 / (schedule.lambda * static_cast<double>(count));
    w -= eta * sample_gradient(loss, *sample, w);
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
  }
  if (count == 0) throw InputError("online_to_batch: empty stream");
  return sum / static_cast<double>(count);
}

Vector online_to_batch(const WorkerShard& shard, const LossSpec& loss, const OgdSchedule& schedule) {
  require_nonempty(shard, loss, "online_to_batch");
  ShardSource source(shard, loss);
  return online_to_batch(source, loss, schedule, shard.dim());
}

}  // namespace byzfed
