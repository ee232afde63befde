#include <algorithm>
#include <cmath>
#include <limits>

#include "byzfed/assignment.hpp"
#include "byzfed/clustering.hpp"
#include "byzfed/error.hpp"

namespace byzfed {

MisclusterReport mismetrics(const ClusteringState& state, const GroundTruth& truth) {
  const int K = truth.K();
  if (K < 1) throw InputError("mismetrics: truth has no centers");
  if (state.K() != K) throw InputError("mismetrics: estimated and true K differ");
  if (state.labels.size() != truth.labels.size()) throw InputError("mismetrics: label counts differ");
  const std::size_t m = state.labels.size();
  const bool has_trim = state.trimmed.size() == m;

  MisclusterReport r;
  r.iteration = state.iteration;
  r.confusion = Eigen::MatrixXi::Zero(K + 1, K);
  Eigen::MatrixXi untrimmed = Eigen::MatrixXi::Zero(K + 1, K);
  for (std::size_t i = 0; i < m; ++i) {
    const int e = state.labels[i];
    if (e < 0 || e >= K) throw InputError("mismetrics: label out of range");
    const int g = truth.labels[i] == kByzantineLabel ? K : truth.labels[i];
    if (g < 0 || g > K) throw InputError("mismetrics: true label out of range");
    ++r.confusion(g, e);
    if (!(has_trim && state.trimmed[i])) ++untrimmed(g, e);
  }

  Matrix cost(K, K);
  for (int g = 0; g < K; ++g)
    for (int e = 0; e < K; ++e) cost(g, e) = -static_cast<double>(r.confusion(g, e));
  r.true_to_est = K <= 20 ? hungarian_min_cost(cost) : greedy_min_cost(cost);

  long long honest = 0;
  long long matched = 0;
  for (int g = 0; g < K; ++g) {
    honest += r.confusion.row(g).sum();
    matched += r.confusion(g, static_cast<Eigen::Index>(r.true_to_est[static_cast<std::size_t>(g)]));
  }
  r.A = honest > 0 ? 1.0 - static_cast<double>(matched) / static_cast<double>(honest) : 0.0;

  auto frac = [](long long num, long long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; };
  for (int h = 0; h < K; ++h) {
    const auto e = static_cast<Eigen::Index>(r.true_to_est[static_cast<std::size_t>(h)]);
    const long long in_e = r.confusion.block(0, e, K, 1).sum();
    const long long in_e_u = untrimmed.block(0, e, K, 1).sum();
    const long long wrong_in = in_e - r.confusion(h, e);
    const long long wrong_in_u = in_e_u - untrimmed(h, e);
    const long long true_h = r.confusion.row(h).sum();
    const long long missed = true_h - r.confusion(h, e);
    const long long trimmed_h = r.confusion(h, e) - untrimmed(h, e);
    r.G = std::max({r.G, frac(wrong_in, in_e), frac(missed, true_h)});
    r.G_untrimmed = std::max({r.G_untrimmed, frac(wrong_in_u, in_e_u), frac(missed + trimmed_h, true_h)});
  }

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (int a = 0; a < K; ++a) {
    for (int b = a + 1; b < K; ++b) {
      const double dist = (truth.centers[static_cast<std::size_t>(a)] - truth.centers[static_cast<std::size_t>(b)]).norm();
      dmin = std::min(dmin, dist);
      dmax = std::max(dmax, dist);
    }
  }
  if (K == 1) {
    r.Delta = 0.0;
    r.lambda_ratio = 1.0;
  } else {
    r.Delta = dmin;
    r.lambda_ratio = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
  }
  // With a single cluster there is no separation; report the raw center error.
  const double scale = K == 1 ? 1.0 : r.Delta;
  for (int h = 0; h < K; ++h) {
    const auto e = r.true_to_est[static_cast<std::size_t>(h)];
    const double err = (state.centers[e] - truth.centers[static_cast<std::size_t>(h)]).norm();
    r.Lambda = std::max(r.Lambda, scale > 0.0 ? err / scale : std::numeric_limits<double>::infinity());
  }
  return r;
}

}  // namespace byzfed
