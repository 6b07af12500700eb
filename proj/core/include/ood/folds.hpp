#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ood/corpus.hpp"

namespace ood {

enum class SplitMode { ood, id };

std::string_view to_string(SplitMode mode);

enum class Role { train, dev, test };

std::string_view to_string(Role role);
inline constexpr Role kRoles[] = {Role::train, Role::dev, Role::test};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;

  const std::vector<std::string>& ids(Role role) const;

  friend bool operator==(const Split&, const Split&) = default;
};

struct FoldPlan {
  SplitMode mode = SplitMode::ood;
  std::vector<Split> folds;
  std::uint64_t seed = 0;
  ShiftKind shift_kind = ShiftKind::topic;
  /// Held-out group values per fold; empty in ID mode.
  std::vector<std::vector<std::string>> test_groups;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Number of folds for a corpus with `n_groups` distinct shift-property values:
/// three whenever possible, four for exactly four groups, and leave-one-group-out
/// below three.
std::size_t fold_count(std::size_t n_groups);

/// Dev groups taken from the groups left over after the test fold is removed.
std::size_t dev_group_count(std::size_t leftover_groups);

/// Out-of-distribution folds: whole groups are held out for testing, each group
/// in exactly one test fold. Groups are balanced largest-first into the
/// currently smallest test fold; per fold, the left-over groups are shuffled
/// with a per-fold stream and cut into dev and train groups.
///
/// Throws ValidationError when any fold would end up with an empty split.
FoldPlan compose_ood(const Corpus& corpus, std::uint64_t seed,
                     std::optional<std::size_t> folds_override = std::nullopt);

/// In-distribution folds with exactly the OOD split sizes per fold and role.
FoldPlan compose_id(const Corpus& corpus, const FoldPlan& ood_plan, std::uint64_t seed);

struct Violation {
  std::optional<std::size_t> fold;
  std::optional<Role> role;
  std::string rule;
  std::string message;  // "<rule>: <detail>"
};

/// Empty iff every plan invariant holds against `corpus`.
std::vector<Violation> verify_plan(const FoldPlan& plan, const Corpus& corpus);

/// Per fold and role, ID split sizes must equal the OOD ones.
std::vector<Violation> verify_size_match(const FoldPlan& id_plan, const FoldPlan& ood_plan);

std::string plan_to_json(const FoldPlan& plan);
FoldPlan plan_from_json(std::string_view text);
FoldPlan load_plan(const std::filesystem::path& path);

}  // namespace ood
