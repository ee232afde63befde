#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "byzfed/datagen.hpp"
#include "byzfed/robust_stats.hpp"
#include "byzfed/types.hpp"

namespace byzfed {

/// Labels, centers and trim mask at one clustering iteration.
struct ClusteringState {
  std::vector<int> labels;   ///< per point, in [0, K)
  PointSet centers;          ///< K centers
  std::vector<bool> trimmed; ///< excluded from its bucket's center estimate
  int iteration = 0;

  int K() const { return static_cast<int>(centers.size()); }
};

/// Misclustering measures against ground truth. Estimated cluster indices
/// are matched to true ones first (Hungarian on the honest confusion matrix
/// for K <= 20, greedy above).
struct MisclusterReport {
  int iteration = 0;
  double A = 0.0;        ///< misclustered fraction of honest points
  double G = 0.0;        ///< worst cluster-wise misclustering fraction
  double G_untrimmed = 0.0;
  double Lambda = 0.0;   ///< worst center error / Delta
  double Delta = 0.0;    ///< min pairwise true-center distance
  double lambda_ratio = 0.0;  ///< max / min pairwise true-center distance
  /// (K_true + 1) x K counts; the last row holds Byzantine points.
  Eigen::MatrixXi confusion;
  std::vector<std::size_t> true_to_est;
};

/// Nearest-center labels; ties go to the lowest index.
std::vector<int> assign_labels(PointView points, PointView centers);

/// Sum of squared distances to the assigned centers, skipping trimmed points.
double within_cluster_cost(PointView points, const ClusteringState& state);

/// Threshold-graph clustering: components (edge iff distance < gamma) with
/// at least min_cluster points become clusters centered at their means;
/// points of smaller components join the nearest surviving center.
ClusteringState edge_cut_cluster(PointView points, double gamma, int min_cluster);

/// One Lloyd step: bucket sample means, then relabel.
ClusteringState lloyd_step(PointView points, const ClusteringState& state);

/// One K-geomedians step: bucket geometric medians, then relabel.
ClusteringState kgeomedian_step(PointView points, const ClusteringState& state, const GeoMedianSpec& gm = {});

inline constexpr double kDefaultTrimC = 2.0;

/// Where the estimated trim scale comes from when sigma_hat is not given:
/// 1.4826 * median distance to the bucket's geometric median / sqrt(d),
/// with the median taken over all buckets' points together (Pooled) or
/// within each bucket (PerBucket). A bucket taken over by adversaries
/// inflates its own median, so Pooled is the default.
enum class TrimScale { Pooled, PerBucket };

/// Trimmed K-means step. Per bucket: geometric median, trim points farther
/// than C * sigma * sqrt(d) from it, center = mean of the rest (an
/// all-trimmed bucket keeps its previous center), then relabel every point.
/// sigma_hat <= 0 selects the MAD estimate described at TrimScale.
ClusteringState trimmed_kmeans_step(PointView points, const ClusteringState& state, double sigma_hat = 0.0,
                                    double C = kDefaultTrimC, TrimScale scale = TrimScale::Pooled,
                                    const GeoMedianSpec& gm = {});

enum class LloydKind { Lloyd, KGeoMedian, TrimmedKMeans };

struct LloydVariant {
  LloydKind kind = LloydKind::Lloyd;
  double sigma_hat = 0.0;  ///< TrimmedKMeans only; <= 0 = MAD estimate
  double C = kDefaultTrimC;
  TrimScale scale = TrimScale::Pooled;
  GeoMedianSpec geomedian;
  bool operator==(const LloydVariant&) const = default;
};

struct LloydRun {
  ClusteringState state;
  std::vector<MisclusterReport> history;  ///< iteration 0 .. final, when truth given
  int iterations = 0;
  bool converged = false;  ///< labels stopped changing before max_iter
};

/// Iterates the chosen step until labels are unchanged or max_iter steps.
LloydRun run_lloyd_variant(PointView points, const ClusteringState& init, const LloydVariant& variant, int max_iter,
                           const GroundTruth* truth = nullptr);

struct TwoClusterResult {
  Vector theta;
  std::vector<int> labels;  ///< +1 / -1
  std::size_t remainder = 0;  ///< points left out of the T batches
};

/// Sample-split clustering of a symmetric two-cluster mixture. Batch t
/// (floor(m / T) points) is labeled against theta^(t-1) and the filtered
/// mean of the sign-corrected batch becomes theta^(t); every point is then
/// labeled against theta^(T). Ties (<y, theta> = 0) label +1.
TwoClusterResult iterfilter_2cluster(PointView points, const Vector& theta0, int T, const IterFilterSpec& filter);

/// Honest machines: a random ceil(f * count) subset keeps its true label,
/// the rest get a uniformly random wrong label. Byzantine machines get
/// uniformly random labels. Centers are bucket means.
ClusteringState warm_start_init(PointView points, const GroundTruth& truth, double correct_fraction, int K,
                                std::uint64_t seed);

/// Uniformly random labels for every point; centers are bucket means.
ClusteringState random_init(PointView points, int K, std::uint64_t seed);

/// Center estimates from labels (bucket means; empty buckets are reseeded).
PointSet bucket_means(PointView points, const std::vector<int>& labels, int K);

MisclusterReport mismetrics(const ClusteringState& state, const GroundTruth& truth);

}  // namespace byzfed
