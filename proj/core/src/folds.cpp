#include "ood/folds.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "ood/error.hpp"
#include "ood/rng.hpp"

namespace ood {

namespace {

// Stream ids keep the OOD dev draw, the ID shuffle and the per-fold ID draws
// on independent sub-streams of the same user seed.
constexpr std::uint64_t kOodDevStream = 0x100;
constexpr std::uint64_t kIdShuffleStream = 0x200;
constexpr std::uint64_t kIdFoldStream = 0x300;

std::string join(const std::vector<std::size_t>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) os << (i + 1 == values.size() ? " and " : ", ");
    os << values[i];
  }
  return os.str();
}

}  // namespace

std::string_view to_string(SplitMode mode) { return mode == SplitMode::ood ? "OOD" : "ID"; }

std::string_view to_string(Role role) {
  switch (role) {
    case Role::train: return "train";
    case Role::dev: return "dev";
    case Role::test: return "test";
  }
  return "train";
}

const std::vector<std::string>& Split::ids(Role role) const {
  switch (role) {
    case Role::train: return train;
    case Role::dev: return dev;
    case Role::test: return test;
  }
  return train;
}

std::size_t fold_count(std::size_t n_groups) {
  if (n_groups < 2) throw ValidationError("fold composition needs at least 2 groups");
  if (n_groups == 4) return 4;
  if (n_groups < 3) return n_groups;
  return 3;
}

std::size_t dev_group_count(std::size_t leftover_groups) {
  return std::max<std::size_t>(1, (leftover_groups + 9) / 10);
}

FoldPlan compose_ood(const Corpus& corpus, std::uint64_t seed,
                     std::optional<std::size_t> folds_override) {
  const auto& index = corpus.group_index();
  const std::size_t n_groups = index.size();
  std::size_t n_folds = fold_count(n_groups);
  if (folds_override) {
    if (*folds_override < 2 || *folds_override > n_groups) {
      throw ValidationError("fold count " + std::to_string(*folds_override) +
                            " needs between 2 and " + std::to_string(n_groups) + " folds");
    }
    n_folds = *folds_override;
  }

  // Largest group first; equal sizes ordered by group value.
  std::vector<std::pair<std::string, std::size_t>> groups;
  groups.reserve(n_groups);
  for (const auto& [value, ids] : index) groups.emplace_back(value, ids.size());
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::size_t> fold_sizes(n_folds, 0);
  std::vector<std::vector<std::string>> test_groups(n_folds);
  for (const auto& [value, size] : groups) {
    const auto smallest = static_cast<std::size_t>(
        std::min_element(fold_sizes.begin(), fold_sizes.end()) - fold_sizes.begin());
    fold_sizes[smallest] += size;
    test_groups[smallest].push_back(value);
  }
  for (auto& values : test_groups) std::sort(values.begin(), values.end());

  FoldPlan plan;
  plan.mode = SplitMode::ood;
  plan.seed = seed;
  plan.shift_kind = corpus.task().shift_kind;
  plan.test_groups = test_groups;
  plan.folds.resize(n_folds);

  for (std::size_t f = 0; f < n_folds; ++f) {
    const std::set<std::string> held_out(test_groups[f].begin(), test_groups[f].end());
    std::vector<std::string> leftover;
    for (const auto& [value, ids] : index) {
      if (!held_out.contains(value)) leftover.push_back(value);
    }
    const std::size_t n_dev = dev_group_count(leftover.size());
    if (test_groups[f].empty() || leftover.size() <= n_dev) {
      throw ValidationError("fold " + std::to_string(f) + " would get an empty " +
                            (test_groups[f].empty() ? "test" : "train") + " split (" +
                            std::to_string(n_groups) + " groups cannot fill " +
                            std::to_string(n_folds) +
                            " folds with group-disjoint train, dev and test)");
    }

    Rng rng(Rng::derive(seed, kOodDevStream + f));
    rng.shuffle(std::span<std::string>(leftover));
    const std::set<std::string> dev_groups(leftover.begin(),
                                           leftover.begin() + static_cast<std::ptrdiff_t>(n_dev));

    Split& split = plan.folds[f];
    for (const auto& instance : corpus.instances()) {
      const auto& group = corpus.group_of(instance);
      if (held_out.contains(group)) {
        split.test.push_back(instance.id);
      } else if (dev_groups.contains(group)) {
        split.dev.push_back(instance.id);
      } else {
        split.train.push_back(instance.id);
      }
    }
  }
  return plan;
}

FoldPlan compose_id(const Corpus& corpus, const FoldPlan& ood_plan, std::uint64_t seed) {
  if (ood_plan.mode != SplitMode::ood) {
    throw ValidationError("ID composition needs an OOD plan to synchronize with");
  }
  std::size_t total_test = 0;
  for (const auto& split : ood_plan.folds) {
    total_test += split.test.size();
    if (split.train.size() + split.dev.size() + split.test.size() != corpus.size()) {
      throw ValidationError("OOD plan does not cover the corpus; cannot size-match ID folds");
    }
  }
  if (total_test != corpus.size()) {
    throw ValidationError("OOD test splits do not partition the corpus; cannot size-match ID folds");
  }

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(Rng::derive(seed, kIdShuffleStream));
  shuffle_rng.shuffle(std::span<std::size_t>(order));

  FoldPlan plan;
  plan.mode = SplitMode::id;
  plan.seed = seed;
  plan.shift_kind = ood_plan.shift_kind;
  plan.folds.resize(ood_plan.folds.size());

  // Rows sorted ascending give corpus order.
  const auto ids_of_rows = [&](std::vector<std::size_t> rows) {
    std::sort(rows.begin(), rows.end());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t row : rows) ids.push_back(corpus.instances()[row].id);
    return ids;
  };

  std::size_t cursor = 0;
  for (std::size_t f = 0; f < ood_plan.folds.size(); ++f) {
    const Split& reference = ood_plan.folds[f];
    const std::size_t test_end = cursor + reference.test.size();

    std::vector<std::size_t> rest;
    rest.reserve(corpus.size() - reference.test.size());
    rest.insert(rest.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cursor));
    rest.insert(rest.end(), order.begin() + static_cast<std::ptrdiff_t>(test_end), order.end());
    Rng fold_rng(Rng::derive(seed, kIdFoldStream + f));
    fold_rng.shuffle(std::span<std::size_t>(rest));

    const auto dev_end = rest.begin() + static_cast<std::ptrdiff_t>(reference.dev.size());
    Split& split = plan.folds[f];
    split.test = ids_of_rows({order.begin() + static_cast<std::ptrdiff_t>(cursor),
                              order.begin() + static_cast<std::ptrdiff_t>(test_end)});
    split.dev = ids_of_rows({rest.begin(), dev_end});
    split.train = ids_of_rows({dev_end, rest.end()});
    cursor = test_end;
  }

  if (!verify_size_match(plan, ood_plan).empty()) {
    throw ValidationError("ID plan failed to match OOD split sizes");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Verification

std::vector<Violation> verify_plan(const FoldPlan& plan, const Corpus& corpus) {
  std::vector<Violation> out;
  auto report = [&](std::optional<std::size_t> fold, std::optional<Role> role, std::string rule,
                    const std::string& detail) {
    out.push_back({fold, role, rule, rule + ": " + detail});
  };

  if (plan.folds.empty()) report(std::nullopt, std::nullopt, "folds", "plan has no folds");

  std::map<std::string, std::vector<std::size_t>> test_folds;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Split& split = plan.folds[f];
    std::unordered_map<std::string, Role> seen;
    for (auto role : kRoles) {
      const auto& ids = split.ids(role);
      if (ids.empty()) {
        report(f, role, "non-empty",
               "fold " + std::to_string(f) + " has an empty " + std::string(to_string(role)) +
                   " split");
      }
      for (const auto& id : ids) {
        if (!corpus.find(id)) {
          report(f, role, "unknown-id",
                 "id " + id + " in fold " + std::to_string(f) + " " +
                     std::string(to_string(role)) + " is not in the corpus");
          continue;
        }
        const auto [it, inserted] = seen.emplace(id, role);
        if (!inserted) {
          report(f, role, "role-disjointness",
                 "id " + id + " appears in both " + std::string(to_string(it->second)) +
                     " and " + std::string(to_string(role)) + " of fold " + std::to_string(f));
        }
        if (role == Role::test && (inserted || it->second != Role::test)) {
          test_folds[id].push_back(f);
        }
      }
    }
  }

  for (const auto& instance : corpus.instances()) {
    const auto it = test_folds.find(instance.id);
    if (it == test_folds.end()) {
      report(std::nullopt, Role::test, "test-coverage",
             "id " + instance.id + " is in no test split");
    } else if (it->second.size() > 1) {
      report(it->second.front(), Role::test, "test-coverage",
             "id " + instance.id + " appears in folds " + join(it->second));
    }
  }

  if (plan.mode != SplitMode::ood) return out;

  // Group-level invariants.
  if (plan.test_groups.size() != plan.folds.size()) {
    report(std::nullopt, Role::test, "test-groups",
           "expected " + std::to_string(plan.folds.size()) + " test group sets, found " +
               std::to_string(plan.test_groups.size()));
    return out;
  }
  std::map<std::string, std::size_t> owner;
  for (std::size_t f = 0; f < plan.test_groups.size(); ++f) {
    for (const auto& group : plan.test_groups[f]) {
      const auto [it, inserted] = owner.emplace(group, f);
      if (!inserted) {
        report(f, Role::test, "test-groups",
               "group " + group + " is held out in folds " + std::to_string(it->second) +
                   " and " + std::to_string(f));
      } else if (!corpus.group_index().contains(group)) {
        report(f, Role::test, "test-groups", "group " + group + " does not occur in the corpus");
      }
    }
  }
  for (const auto& [group, ids] : corpus.group_index()) {
    if (!owner.contains(group)) {
      report(std::nullopt, Role::test, "test-groups",
             "group " + group + " is not held out in any fold");
    }
  }

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::map<Role, std::set<std::string>> groups;
    for (auto role : kRoles) {
      for (const auto& id : plan.folds[f].ids(role)) {
        if (const Instance* instance = corpus.find(id)) {
          groups[role].insert(corpus.group_of(*instance));
        }
      }
    }
    const std::set<std::string> declared(plan.test_groups[f].begin(), plan.test_groups[f].end());
    for (const auto& group : groups[Role::test]) {
      if (!declared.contains(group)) {
        report(f, Role::test, "test-groups",
               "fold " + std::to_string(f) + " tests group " + group +
                   " which is not declared for it");
      }
    }
    for (const auto& group : groups[Role::train]) {
      if (groups[Role::test].contains(group)) {
        report(f, Role::train, "group-leak",
               "fold " + std::to_string(f) + " train shares group " + group + " with test");
      }
      if (groups[Role::dev].contains(group)) {
        report(f, Role::dev, "dev-disjointness",
               "fold " + std::to_string(f) + " dev shares group " + group + " with train");
      }
    }
    for (const auto& group : groups[Role::dev]) {
      if (groups[Role::test].contains(group)) {
        report(f, Role::dev, "dev-disjointness",
               "fold " + std::to_string(f) + " dev shares group " + group + " with test");
      }
    }
  }
  return out;
}

std::vector<Violation> verify_size_match(const FoldPlan& id_plan, const FoldPlan& ood_plan) {
  std::vector<Violation> out;
  if (id_plan.folds.size() != ood_plan.folds.size()) {
    const std::string rule = "size-match";
    out.push_back({std::nullopt, std::nullopt, rule,
                   rule + ": fold counts differ (" + std::to_string(id_plan.folds.size()) +
                       " vs " + std::to_string(ood_plan.folds.size()) + ")"});
    return out;
  }
  for (std::size_t f = 0; f < id_plan.folds.size(); ++f) {
    for (auto role : kRoles) {
      const auto a = id_plan.folds[f].ids(role).size();
      const auto b = ood_plan.folds[f].ids(role).size();
      if (a != b) {
        const std::string rule = "size-match";
        out.push_back({f, role, rule,
                       rule + ": fold " + std::to_string(f) + " " +
                           std::string(to_string(role)) + " has " + std::to_string(a) +
                           " ID instances vs " + std::to_string(b) + " OOD"});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string plan_to_json(const FoldPlan& plan) {
  nlohmann::ordered_json doc;
  doc["mode"] = std::string(to_string(plan.mode));
  doc["seed"] = plan.seed;
  doc["shift_kind"] = std::string(to_string(plan.shift_kind));
  auto folds = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    nlohmann::ordered_json fold;
    fold["train"] = plan.folds[f].train;
    fold["dev"] = plan.folds[f].dev;
    fold["test"] = plan.folds[f].test;
    fold["test_groups"] =
        plan.mode == SplitMode::ood && f < plan.test_groups.size() ? plan.test_groups[f]
                                                                   : std::vector<std::string>{};
    folds.push_back(std::move(fold));
  }
  doc["folds"] = std::move(folds);
  return doc.dump(1) + "\n";
}

FoldPlan plan_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed plan JSON: ") + e.what());
  }
  try {
    FoldPlan plan;
    const auto mode = doc.at("mode").get<std::string>();
    if (mode == "OOD") {
      plan.mode = SplitMode::ood;
    } else if (mode == "ID") {
      plan.mode = SplitMode::id;
    } else {
      throw SchemaError("plan mode must be OOD or ID, got '" + mode + "'");
    }
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.shift_kind = parse_shift_kind(doc.at("shift_kind").get<std::string>());
    for (const auto& fold : doc.at("folds")) {
      Split split;
      split.train = fold.at("train").get<std::vector<std::string>>();
      split.dev = fold.at("dev").get<std::vector<std::string>>();
      split.test = fold.at("test").get<std::vector<std::string>>();
      plan.folds.push_back(std::move(split));
      if (plan.mode == SplitMode::ood) {
        plan.test_groups.push_back(fold.at("test_groups").get<std::vector<std::string>>());
      }
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid plan JSON: ") + e.what());
  }
}

FoldPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open plan file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return plan_from_json(buffer.str());
}

}  // namespace ood
