#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ood {

struct EpochRecord {
  std::size_t epoch = 0;
  double dev_loss = 0.0;
  double dev_f1 = 0.0;  // 0..100
};

struct RunRecord {
  std::string run_id;
  std::size_t fold = 0;
  std::int64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> test_true;
  std::vector<std::string> test_pred;
};

struct RunScore {
  std::string run_id;
  double f1 = 0.0;
  std::optional<double> tau;  // absent when undefined
};

struct EvalSummary {
  double mu_f1 = 0.0;
  double sigma_f1 = 0.0;
  std::optional<double> mu_tau;
  std::optional<double> sigma_tau;
  std::size_t n_runs = 0;
  /// Runs whose reliability was undefined (constant loss or F1 trajectory).
  std::size_t n_tau_undefined = 0;
  std::vector<RunScore> runs;
};

/// Unweighted mean of per-class F1 over the whole label set, x100. Classes with
/// precision + recall == 0 contribute 0.
double macro_f1(std::span<const std::string> true_labels, std::span<const std::string> pred_labels,
                std::span<const std::string> label_set);

/// Tie-corrected Kendall rank correlation, O(n log n). Empty when either
/// sequence is constant.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b between the dev-loss and dev-F1 trajectories, x100.
/// Throws ValidationError for fewer than 2 epochs; empty when undefined.
std::optional<double> reliability(const RunRecord& run);

/// Applicability, Reliability and Stability over pooled runs. Standard
/// deviations use the n-1 denominator.
EvalSummary aggregate(std::span<const RunRecord> runs, std::span<const std::string> label_set);

/// Checks structural invariants (strictly increasing epochs, >= 2 epochs,
/// parallel test lists, F1 in range). Throws ValidationError.
void validate_run(const RunRecord& run);

std::vector<RunRecord> parse_runs(std::istream& in, std::string_view source);
std::vector<RunRecord> load_runs(const std::filesystem::path& path);

double mean(std::span<const double> values);
/// Sample standard deviation; 0 for fewer than 2 values.
double sample_stddev(std::span<const double> values);

}  // namespace ood
