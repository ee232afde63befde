#include "byzfed/distopt.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/parallel.hpp"
#include "byzfed/rng.hpp"

namespace byzfed {
namespace {

constexpr double kBlowUp = 1e12;

Eigen::Index dimension_of(std::span<const WorkerShard> shards) {
  if (shards.empty()) throw InputError("distopt: no shards");
  const auto d = shards.front().dim();
  for (const auto& s : shards) {
    if (s.dim() != d) throw InputError("distopt: shards differ in dimension");
  }
  return d;
}

void check_config(const OptConfig& cfg) {
  if (cfg.max_rounds < 0) throw ConfigError("distopt: max_rounds must be non-negative");
  if (cfg.local_steps < 1) throw ConfigError("distopt: local_steps must be at least 1");
  if (!std::isfinite(cfg.step)) throw ConfigError("distopt: step must be finite");
  if (!(cfg.stop_tol >= 0.0)) throw ConfigError("distopt: stop_tol must be non-negative");
}

double resolve_step(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg) {
  return cfg.step > 0.0 ? cfg.step : pooled_step_size(shards, loss);
}

// Payload of machine i in a round: an update (gradient or model) computed
// honestly, then replaced for Byzantine machines according to the attack.
// `center` is the reference the attack perturbs around (zero for gradients,
// the global model for models).
template <typename Honest>
std::optional<Vector> payload(const WorkerShard& shard, const AttackSpec& attack, int round, const Vector& center,
                              Honest&& honest) {
  if (!shard.byzantine) return honest();
  switch (attack.kind) {
    case AttackKind::None:
      return std::nullopt;
    case AttackKind::OwnCorruptData:
      return honest();
    case AttackKind::SignFlip:
      return Vector(center - attack.scale * (honest() - center));
    case AttackKind::RandomGauss: {
      RngStream rng(mix_seed(attack.seed, static_cast<std::uint64_t>(round)),
                    static_cast<std::uint64_t>(shard.machine_id));
      return Vector(center + rng.normal_vector(center.size(), attack.scale));
    }
    case AttackKind::ConstantVector:
      if (attack.constant.size() != center.size()) throw ConfigError("attack: constant vector has wrong dimension");
      return attack.constant;
  }
  return std::nullopt;
}

template <typename RoundFn>
OptResult iterate(std::span<const WorkerShard> shards, const OptConfig& cfg, RoundFn&& round_fn) {
  const auto d = dimension_of(shards);
  OptResult out;
  Vector w = cfg.init.size() == 0 ? Vector(Vector::Zero(d)) : cfg.init;
  if (w.size() != d) throw InputError("distopt: init has wrong dimension");
  out.trajectory.push_back(w);
  for (int t = 0; t < cfg.max_rounds; ++t) {
    std::optional<Vector> next = round_fn(w, t);
    out.rounds = t + 1;
    if (!next) break;  // nobody reported
    if (!all_finite(*next) || next->norm() > kBlowUp) {
      out.diverged = true;
      break;
    }
    const double step_norm = (*next - w).norm();
    w = std::move(*next);
    out.trajectory.push_back(w);
    out.update_norms.push_back(step_norm);
    if (step_norm < cfg.stop_tol) {
      out.converged = true;
      break;
    }
  }
  out.w = w;
  return out;
}

std::optional<Vector> aggregate_slots(const AggregatorSpec& spec, std::vector<std::optional<Vector>>& slots) {
  PointSet reported;
  reported.reserve(slots.size());
  for (auto& s : slots) {
    if (!s) continue;
    // Sorting-based estimators are undefined on NaN; report the blow-up.
    if (!all_finite(*s)) return Vector::Constant(s->size(), std::numeric_limits<double>::quiet_NaN());
    reported.push_back(std::move(*s));
  }
  if (reported.empty()) return std::nullopt;
  return aggregate(spec, reported);
}

}  // namespace

double pooled_step_size(std::span<const WorkerShard> shards, const LossSpec& loss) {
  const auto d = dimension_of(shards);
  if (loss.kind == LossKind::Location) return 1.0;
  Matrix H = Matrix::Zero(d, d);
  double rows = 0.0;
  for (const auto& s : shards) {
    H.selfadjointView<Eigen::Lower>().rankUpdate(s.X.transpose());
    rows += static_cast<double>(s.rows());
  }
  if (rows == 0.0) throw InputError("pooled_step_size: shards have no rows");
  H = H.selfadjointView<Eigen::Lower>();
  H /= rows;
  const double lmax = top_eigenpair(H).value;
  if (!(lmax > 0.0)) throw NumericError("pooled_step_size: pooled Hessian is zero");
  return 1.0 / lmax;
}

OptResult robust_gd(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                    const AttackSpec& attack) {
  check_config(cfg);
  if (cfg.local_steps != 1) throw ConfigError("robust_gd: local_steps must be 1");
  const double step = resolve_step(shards, loss, cfg);
  const unsigned threads = resolve_threads(cfg.threads);
  return iterate(shards, cfg, [&](const Vector& w, int round) -> std::optional<Vector> {
    std::vector<std::optional<Vector>> slots(shards.size());
    const Vector zero = Vector::Zero(w.size());
    parallel_for(shards.size(), threads, [&](std::size_t i) {
      slots[i] = payload(shards[i], attack, round, zero, [&] { return local_gradient(shards[i], loss, w); });
    });
    auto g = aggregate_slots(cfg.aggregator, slots);
    if (!g) return std::nullopt;
    return Vector(w - step * *g);
  });
}

OptResult model_averaging(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                          const AttackSpec& attack) {
  check_config(cfg);
  const double step = resolve_step(shards, loss, cfg);
  const unsigned threads = resolve_threads(cfg.threads);
  return iterate(shards, cfg, [&](const Vector& w, int round) -> std::optional<Vector> {
    std::vector<std::optional<Vector>> slots(shards.size());
    parallel_for(shards.size(), threads, [&](std::size_t i) {
      slots[i] = payload(shards[i], attack, round, w, [&] {
        Vector v = w;
        for (int e = 0; e < cfg.local_steps; ++e) {
          v -= step * local_gradient(shards[i], loss, v);
          if (!all_finite(v)) break;
        }
        return v;
      });
    });
    return aggregate_slots(cfg.aggregator, slots);
  });
}

OptResult fed_avg_robust(std::span<const WorkerShard> shards, const LossSpec& loss, const OptConfig& cfg,
                         const AttackSpec& attack) {
  if (cfg.local_steps < 2) throw ConfigError("fed_avg_robust: local_steps must be at least 2");
  return model_averaging(shards, loss, cfg, attack);
}

}  // namespace byzfed
