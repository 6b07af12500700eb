#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ood/corpus.hpp"
#include "ood/runeval.hpp"
#include "ood/shiftstats.hpp"

namespace ood {

enum class TableFormat { tsv, md, json };

TableFormat parse_table_format(std::string_view text);

/// Rounds half away from zero to `decimals` places on the shortest decimal
/// representation of `value`. Negative results use `minus`; zero has no sign.
std::string format_fixed(double value, int decimals = 1, std::string_view minus = "-");

/// "66.8±0.9", or "66.8" without a deviation. Negative numbers use U+2212.
std::string format_cell(double mean, std::optional<double> deviation);

/// Shift profiles of one task, one entry per fold.
struct TaskProfiles {
  std::string task;
  ShiftKind shift_kind = ShiftKind::topic;
  std::vector<ShiftProfile> folds;
};

/// Machine-readable per-fold profile file:
/// task, shift_kind, fold, separability, delta_flesch, delta_words, kl.
void write_profile_tsv(std::ostream& out, const TaskProfiles& profiles);
std::vector<TaskProfiles> read_profile_tsv(std::istream& in, std::string_view source);
std::vector<TaskProfiles> load_profile_tsv(const std::filesystem::path& path);

/// One row per task with fold-averaged Separability, Δ Flesch, Δ Words and KL.
std::string render_profile(std::span<const TaskProfiles> tasks, TableFormat format);

struct TaskSummary {
  std::string task;
  ShiftKind shift_kind = ShiftKind::topic;
  EvalSummary summary;
};

std::string summary_to_json(const TaskSummary& summary);
TaskSummary summary_from_json(std::string_view text);
TaskSummary load_summary(const std::filesystem::path& path);

/// One row named `row_label`: a μF1±σF1 cell per task, then Applicability
/// (task mean of μF1 ± task mean of σF1) and Reliability (same over τ).
std::string render_summary(std::span<const TaskSummary> tasks, TableFormat format,
                           std::string_view row_label = "runs");

}  // namespace ood
