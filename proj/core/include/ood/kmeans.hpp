#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ood {

/// Dense row-major point set.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }

  void push_back(std::span<const double> point);
  void push_back(std::span<const float> point);

  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

struct LloydResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centroids;
  /// Inertia after each update step, one entry per iteration.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;
  bool empty_cluster = false;
};

/// Lloyd iteration from explicit initial centroids. An iteration assigns every
/// point to its nearest centroid (lowest index on ties) and then recomputes the
/// centroids; iteration stops once an assignment step changes nothing or after
/// `max_iterations`. Stops early with `empty_cluster` set if a centroid loses
/// all of its points.
LloydResult lloyd(const PointSet& points, std::vector<std::vector<double>> centroids,
                  std::size_t max_iterations = 300);

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  /// Reseeding attempts per restart after an empty cluster.
  std::size_t max_reseeds = 16;
};

struct KMeansResult {
  std::vector<int> assignment;  // labels in {0, 1}; point 0 is always in cluster 0
  double inertia = 0.0;
  /// All points coincide; assignment is all zeros.
  bool degenerate = false;
  std::size_t best_restart = 0;
  std::size_t reseeds = 0;
  /// Per accepted restart, the inertia after each Lloyd iteration.
  std::vector<std::vector<double>> inertia_histories;
};

/// Two-cluster k-means with k-means++ seeding; the lowest-inertia restart wins
/// (earliest restart on ties). Deterministic in (points, seed).
KMeansResult kmeans2(const PointSet& points, std::uint64_t seed, const KMeansOptions& options = {});

/// Pair-counting adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace ood
