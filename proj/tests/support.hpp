#pragma once

// Shared fixtures and brute-force oracles for the test suites. The oracles
// follow the textbook definitions directly and share no code with core/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ood/corpus.hpp"

namespace ood::test {

inline TaskSpec make_task(std::vector<std::string> labels = {"pro", "con"},
                          ShiftKind kind = ShiftKind::topic, bool pairwise = false) {
  TaskSpec task;
  task.name = "synthetic";
  task.shift_kind = kind;
  task.labels = std::move(labels);
  task.pairwise = pairwise;
  return task;
}

inline Instance make_instance(std::string id, std::string group, std::string label,
                              std::string text = "Some words here.",
                              ShiftKind kind = ShiftKind::topic) {
  Instance instance;
  instance.id = std::move(id);
  instance.text = std::move(text);
  instance.label = std::move(label);
  instance.groups[kind] = std::move(group);
  return instance;
}

/// Corpus with `sizes[g]` instances in group "g<g>", labels alternating.
inline Corpus sized_corpus(const std::vector<std::size_t>& sizes, const TaskSpec& task = make_task()) {
  std::vector<Instance> instances;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    for (std::size_t i = 0; i < sizes[g]; ++i) {
      const std::string id = "g" + std::to_string(g) + "-" + std::to_string(i);
      instances.push_back(make_instance(id, "g" + std::to_string(g),
                                        task.labels[instances.size() % task.labels.size()],
                                        "Text.", task.shift_kind));
    }
  }
  return Corpus(task, std::move(instances));
}

/// Random corpus: `groups` groups, `n` instances, every group non-empty,
/// instances interleaved across groups in file order.
inline Corpus random_corpus(std::mt19937_64& gen, std::size_t groups, std::size_t n) {
  const TaskSpec task = make_task();
  std::vector<std::size_t> group_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    group_of[i] = i < groups ? i : std::uniform_int_distribution<std::size_t>(0, groups - 1)(gen);
  }
  std::shuffle(group_of.begin(), group_of.end(), gen);
  std::vector<Instance> instances;
  instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    instances.push_back(make_instance("i" + std::to_string(i), "topic-" + std::to_string(group_of[i]),
                                      task.labels[gen() % 2], "Text."));
  }
  return Corpus(task, std::move(instances));
}

// ---------------------------------------------------------------------------
// Oracles

/// O(n^2) concordant/discordant/tie counting.
inline double kendall_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ties_x += 1;
      } else if (dy == 0) {
        ties_y += 1;
      } else if ((dx > 0) == (dy > 0)) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  }
  return (concordant - discordant) /
         std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
}

/// Pair-counting ARI (Hubert-Arabie form over the four pair categories).
inline double ari_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double both = 0, only_a = 0, only_b = 0, neither = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool same_a = a[i] == a[j];
      const bool same_b = b[i] == b[j];
      if (same_a && same_b) {
        both += 1;
      } else if (same_a) {
        only_a += 1;
      } else if (same_b) {
        only_b += 1;
      } else {
        neither += 1;
      }
    }
  }
  const double denominator =
      (neither + only_a) * (only_a + both) + (neither + only_b) * (only_b + both);
  if (denominator == 0) return 1.0;
  return 2.0 * (neither * both - only_a * only_b) / denominator;
}

/// Confusion-matrix macro F1 (x100) via per-class precision and recall.
inline double macro_f1_oracle(const std::vector<std::string>& truth,
                              const std::vector<std::string>& pred,
                              const std::vector<std::string>& labels) {
  const std::size_t k = labels.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < k; ++c) index[labels[c]] = c;
  std::vector<std::vector<double>> matrix(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) matrix[index[truth[i]]][index[pred[i]]] += 1;
  double sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += matrix[c][j];
      col += matrix[j][c];
    }
    const double precision = col > 0 ? matrix[c][c] / col : 0.0;
    const double recall = row > 0 ? matrix[c][c] / row : 0.0;
    if (precision + recall > 0) sum += 2 * precision * recall / (precision + recall);
  }
  return 100.0 * sum / static_cast<double>(k);
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix (rows).
inline std::vector<std::vector<double>> random_rotation(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> q;
  while (q.size() < dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(gen);
    for (const auto& u : q) {
      double dot = 0;
      for (std::size_t d = 0; d < dim; ++d) dot += v[d] * u[d];
      for (std::size_t d = 0; d < dim; ++d) v[d] -= dot * u[d];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    q.push_back(std::move(v));
  }
  return q;
}

}  // namespace ood::test
