#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "byzfed/datagen.hpp"
#include "byzfed/localsolve.hpp"
#include "byzfed/robust_stats.hpp"
#include "byzfed/types.hpp"

namespace byzfed {

struct OptConfig {
  double step = 0.0;      ///< <= 0: 1 / lambda_max of the pooled Hessian
  int max_rounds = 300;
  AggregatorSpec aggregator = TrimmedMeanSpec{};
  int local_steps = 1;    ///< 1 = robust GD, > 1 = federated averaging
  Vector init;            ///< empty = zero
  double stop_tol = 1e-8; ///< stop when ||w_{t+1} - w_t|| < stop_tol
  unsigned threads = 1;   ///< workers for the per-machine computations
  bool operator==(const OptConfig& o) const {
    return step == o.step && max_rounds == o.max_rounds && aggregator == o.aggregator &&
           local_steps == o.local_steps && init.size() == o.init.size() && init == o.init && stop_tol == o.stop_tol &&
           threads == o.threads;
  }
};

/// What Byzantine machines report. Honest machines are never affected.
enum class AttackKind {
  None,            ///< Byzantine machines send nothing
  OwnCorruptData,  ///< honest computation on their own (corrupt) data
  SignFlip,        ///< -scale times the honest update
  RandomGauss,     ///< scale * N(0, I)
  ConstantVector,  ///< a fixed vector
};

struct AttackSpec {
  AttackKind kind = AttackKind::OwnCorruptData;
  double scale = 1.0;
  Vector constant;         ///< ConstantVector payload
  std::uint64_t seed = 0;  ///< RandomGauss draws
  bool operator==(const AttackSpec& o) const {
    return kind == o.kind && scale == o.scale && constant.size() == o.constant.size() && constant == o.constant &&
           seed == o.seed;
  }
};

struct OptResult {
  Vector w;
  PointSet trajectory;               ///< w_0, w_1, ...
  std::vector<double> update_norms;  ///< ||w_{t+1} - w_t|| per round
  int rounds = 0;
  bool converged = false;  ///< stopped on stop_tol
  bool diverged = false;   ///< iterate blew up; w is the last finite iterate
};

/// 1 / lambda_max(sum_i X_i^T X_i / sum_i n_i) over all given shards
/// (1 for Location losses).
double pooled_step_size(std::span<const WorkerShard> shards, const LossSpec& loss);

/// w_{t+1} = w_t - step * aggregate({g_i(w_t)}).
OptResult robust_gd(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                    const AttackSpec& attack);

/// Per round every machine runs local_steps gradient steps from the global
/// model and the center aggregates the returned models. Accepts
/// local_steps = 1, which is model-space robust GD.
OptResult model_averaging(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                          const AttackSpec& attack);

/// Robust federated averaging; requires local_steps >= 2.
OptResult fed_avg_robust(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                         const AttackSpec& attack);

}  // namespace byzfed
