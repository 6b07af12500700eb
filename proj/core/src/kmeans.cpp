#include "ood/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include "ood/error.hpp"
#include "ood/rng.hpp"

namespace ood {

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) throw ValidationError("point dimension mismatch");
  values_.insert(values_.end(), point.begin(), point.end());
}

void PointSet::push_back(std::span<const float> point) {
  if (point.size() != dim_) throw ValidationError("point dimension mismatch");
  for (float v : point) values_.push_back(static_cast<double>(v));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

namespace {

std::size_t nearest(std::span<const double> point, const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double distance = squared_distance(point, centroids[c]);
    if (distance < best_distance) {
      best_distance = distance;
      best = c;
    }
  }
  return best;
}

double inertia_of(const PointSet& points, const std::vector<int>& assignment,
                  const std::vector<std::vector<double>>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
  }
  return total;
}

// k-means++ seeding for k = 2: first centre uniform, second drawn with
// probability proportional to squared distance from the first.
std::vector<std::vector<double>> seed_two(const PointSet& points, Rng& rng) {
  const std::size_t n = points.size();
  const auto first = static_cast<std::size_t>(rng.below(n));
  std::vector<double> weights(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = squared_distance(points[i], points[first]);
    total += weights[i];
  }
  std::size_t second = first;
  if (total > 0.0) {
    const double target = rng.uniform() * total;
    double running = 0.0;
    second = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      running += weights[i];
      second = i;
      if (target < running) break;
    }
  }
  const auto a = points[first];
  const auto b = points[second];
  return {std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())};
}

}  // namespace

LloydResult lloyd(const PointSet& points, std::vector<std::vector<double>> centroids,
                  std::size_t max_iterations) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  const std::size_t dim = points.dim();

  LloydResult result;
  result.assignment.assign(n, -1);
  result.centroids = std::move(centroids);

  std::vector<std::size_t> counts(k);
  for (std::size_t iteration = 0; iteration < max_iterations; ++iteration) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest(points[i], result.centroids));
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    ++result.iterations;
    if (!changed) {
      result.converged = true;
      result.inertia_history.push_back(result.inertia_history.empty()
                                           ? inertia_of(points, result.assignment, result.centroids)
                                           : result.inertia_history.back());
      break;
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (auto& centroid : result.centroids) std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      ++counts[c];
      const auto point = points[i];
      for (std::size_t d = 0; d < dim; ++d) result.centroids[c][d] += point[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        result.empty_cluster = true;
        return result;
      }
      for (auto& value : result.centroids[c]) value /= static_cast<double>(counts[c]);
    }
    result.inertia_history.push_back(inertia_of(points, result.assignment, result.centroids));
  }
  return result;
}

KMeansResult kmeans2(const PointSet& points, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = points.size();
  if (n < 2) throw ValidationError("k-means needs at least 2 points");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  bool all_identical = true;
  for (std::size_t i = 1; i < n && all_identical; ++i) {
    all_identical = squared_distance(points[i], points[0]) == 0.0;
  }
  if (all_identical) {
    best.assignment.assign(n, 0);
    best.inertia = 0.0;
    best.degenerate = true;
    return best;
  }

  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    LloydResult run;
    bool accepted = false;
    for (std::size_t attempt = 0; attempt <= options.max_reseeds; ++attempt) {
      Rng rng(Rng::derive(seed, (restart << 16) | attempt));
      run = lloyd(points, seed_two(points, rng), options.max_iterations);
      if (!run.empty_cluster) {
        accepted = true;
        break;
      }
      ++best.reseeds;
    }
    if (!accepted) continue;

    const double inertia = inertia_of(points, run.assignment, run.centroids);
    best.inertia_histories.push_back(run.inertia_history);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assignment = std::move(run.assignment);
      best.best_restart = restart;
    }
  }
  if (best.assignment.empty()) {
    throw std::runtime_error("k-means failed: every restart produced an empty cluster");
  }
  if (best.assignment.front() != 0) {
    for (auto& label : best.assignment) label = 1 - label;
  }
  return best;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("adjusted Rand index: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("adjusted Rand index needs at least 2 items");

  auto pairs = [](double count) { return count * (count - 1.0) / 2.0; };

  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < n; ++i) {
    cells[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }

  double index = 0.0;
  for (const auto& [key, count] : cells) index += pairs(count);
  double row_pairs = 0.0;
  for (const auto& [key, count] : rows) row_pairs += pairs(count);
  double col_pairs = 0.0;
  for (const auto& [key, count] : cols) col_pairs += pairs(count);

  const double expected = row_pairs * col_pairs / pairs(static_cast<double>(n));
  const double maximum = (row_pairs + col_pairs) / 2.0;
  // Both partitions trivial (all singletons or one block): identical by convention.
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace ood
