#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ood/error.hpp"
#include "ood/folds.hpp"
#include "support.hpp"

namespace {

using ood::compose_id;
using ood::compose_ood;
using ood::Corpus;
using ood::FoldPlan;
using ood::Role;
using ood::test::make_instance;
using ood::test::make_task;
using ood::test::sized_corpus;

std::vector<std::string> messages(const std::vector<ood::Violation>& violations) {
  std::vector<std::string> out;
  for (const auto& v : violations) out.push_back(v.message);
  return out;
}

bool contains(const std::vector<std::string>& items, const std::string& wanted) {
  return std::find(items.begin(), items.end(), wanted) != items.end();
}

TEST(FoldCount, MatchesProtocol) {
  EXPECT_EQ(ood::fold_count(4), 4u);
  EXPECT_EQ(ood::fold_count(8), 3u);
  EXPECT_EQ(ood::fold_count(2), 2u);
  EXPECT_EQ(ood::fold_count(3), 3u);
  EXPECT_EQ(ood::fold_count(5), 3u);
  EXPECT_EQ(ood::fold_count(12), 3u);
  EXPECT_THROW(ood::fold_count(1), ood::ValidationError);
}

TEST(DevGroupCount, TenPercentRoundedUpAtLeastOne) {
  EXPECT_EQ(ood::dev_group_count(2), 1u);
  EXPECT_EQ(ood::dev_group_count(10), 1u);
  EXPECT_EQ(ood::dev_group_count(11), 2u);
  EXPECT_EQ(ood::dev_group_count(20), 2u);
}

TEST(ComposeOod, ThreeGroupsIsLeaveOneGroupOut) {
  const Corpus corpus = sized_corpus({7, 2, 5});
  const FoldPlan plan = compose_ood(corpus, 3);
  ASSERT_EQ(plan.folds.size(), 3u);
  std::set<std::string> held_out;
  for (const auto& groups : plan.test_groups) {
    ASSERT_EQ(groups.size(), 1u);
    held_out.insert(groups.front());
  }
  EXPECT_EQ(held_out, (std::set<std::string>{"g0", "g1", "g2"}));
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(plan.folds[f].test, corpus.group_index().at(plan.test_groups[f].front()));
  }
  EXPECT_TRUE(ood::verify_plan(plan, corpus).empty());
}

TEST(ComposeOod, EightEqualTopicsBalanceThreeThreeTwo) {
  const Corpus corpus = sized_corpus(std::vector<std::size_t>(8, 10));
  const FoldPlan plan = compose_ood(corpus, 0);
  ASSERT_EQ(plan.folds.size(), 3u);
  std::vector<std::size_t> counts;
  for (const auto& groups : plan.test_groups) counts.push_back(groups.size());
  EXPECT_EQ(counts, (std::vector<std::size_t>{3, 3, 2}));
  std::set<std::string> ids;
  std::size_t total = 0;
  for (const auto& split : plan.folds) {
    ids.insert(split.test.begin(), split.test.end());
    total += split.test.size();
  }
  EXPECT_EQ(total, 80u);
  EXPECT_EQ(ids.size(), 80u);
  EXPECT_TRUE(ood::verify_plan(plan, corpus).empty());
}

TEST(ComposeOod, FourDomainsFourFoldsOneDevDomain) {
  const auto task = make_task({"pro", "con"}, ood::ShiftKind::domain);
  const Corpus corpus = sized_corpus({6, 6, 6, 6}, task);
  const FoldPlan plan = compose_ood(corpus, 11);
  ASSERT_EQ(plan.folds.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) {
    EXPECT_EQ(plan.test_groups[f], (std::vector<std::string>{"g" + std::to_string(f)}));
    std::set<std::string> dev_groups;
    for (const auto& id : plan.folds[f].dev) dev_groups.insert(corpus.group_of(corpus.at(id)));
    EXPECT_EQ(dev_groups.size(), 1u);
    EXPECT_EQ(plan.folds[f].train.size(), 12u);
    EXPECT_EQ(plan.folds[f].dev.size(), 6u);
  }
  EXPECT_TRUE(ood::verify_plan(plan, corpus).empty());
}

TEST(ComposeOod, LargestGroupGoesFirst) {
  const Corpus corpus = sized_corpus({1, 50, 2, 3, 40});
  const FoldPlan plan = compose_ood(corpus, 0);
  EXPECT_EQ(plan.test_groups[0], (std::vector<std::string>{"g1"}));
  EXPECT_EQ(plan.test_groups[1], (std::vector<std::string>{"g4"}));
  EXPECT_EQ(plan.test_groups[2], (std::vector<std::string>{"g0", "g2", "g3"}));
}

TEST(ComposeOod, TwoGroupsCannotSeparateTrainAndDev) {
  const Corpus corpus = sized_corpus({5, 5});
  try {
    compose_ood(corpus, 0);
    FAIL() << "expected ValidationError";
  } catch (const ood::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty train split"), std::string::npos) << e.what();
  }
}

TEST(ComposeOod, SingleGroupRejected) {
  EXPECT_THROW(compose_ood(sized_corpus({5}), 0), ood::ValidationError);
}

TEST(ComposeOod, PureFunctionOfCorpusAndSeed) {
  const Corpus corpus = sized_corpus({9, 4, 4, 8, 3, 6, 2});
  EXPECT_EQ(ood::plan_to_json(compose_ood(corpus, 42)), ood::plan_to_json(compose_ood(corpus, 42)));
}

TEST(ComposeId, MatchesOodSizesAndPartitions) {
  const Corpus corpus = sized_corpus(std::vector<std::size_t>(8, 10));
  const FoldPlan ood_plan = compose_ood(corpus, 0);
  const FoldPlan id_plan = compose_id(corpus, ood_plan, 0);
  ASSERT_EQ(id_plan.mode, ood::SplitMode::id);
  std::vector<std::size_t> test_sizes;
  std::set<std::string> ids;
  for (const auto& split : id_plan.folds) {
    test_sizes.push_back(split.test.size());
    ids.insert(split.test.begin(), split.test.end());
  }
  EXPECT_EQ(test_sizes, (std::vector<std::size_t>{30, 30, 20}));
  EXPECT_EQ(ids.size(), 80u);
  for (std::size_t f = 0; f < 3; ++f) {
    for (Role role : ood::kRoles) {
      EXPECT_EQ(id_plan.folds[f].ids(role).size(), ood_plan.folds[f].ids(role).size());
    }
  }
  EXPECT_TRUE(ood::verify_size_match(id_plan, ood_plan).empty());
  EXPECT_TRUE(ood::verify_plan(id_plan, corpus).empty());
  EXPECT_TRUE(id_plan.test_groups.empty());
}

TEST(ComposeId, ByteIdenticalForSameInputs) {
  const Corpus corpus = sized_corpus({12, 9, 7, 4, 4});
  const FoldPlan ood_plan = compose_ood(corpus, 5);
  EXPECT_EQ(ood::plan_to_json(compose_id(corpus, ood_plan, 5)),
            ood::plan_to_json(compose_id(corpus, ood_plan, 5)));
}

TEST(VerifyPlan, ReportsIdInTwoTestSplits) {
  std::vector<ood::Instance> instances;
  for (int i = 0; i < 12; ++i) {
    instances.push_back(make_instance("x" + std::to_string(i), "g" + std::to_string(i % 3), "pro"));
  }
  const Corpus corpus(make_task(), instances);
  FoldPlan plan = compose_ood(corpus, 0);
  // x3 is in group g0; copy it into the test split of the fold that does not hold g0.
  std::size_t home = 0;
  for (std::size_t f = 0; f < 3; ++f) {
    if (plan.test_groups[f].front() == "g0") home = f;
  }
  ASSERT_EQ(home, 0u);
  plan.folds[2].test.push_back("x3");
  const auto found = messages(ood::verify_plan(plan, corpus));
  EXPECT_TRUE(contains(found, "test-coverage: id x3 appears in folds 0 and 2"));
}

TEST(VerifyPlan, ReportsDevSharingGroupWithTrain) {
  const auto task = make_task();
  std::vector<ood::Instance> instances;
  for (const char* group : {"abortion", "cloning", "guns", "nuclear"}) {
    for (int i = 0; i < 3; ++i) {
      instances.push_back(make_instance(std::string(group) + std::to_string(i), group, "pro"));
    }
  }
  const Corpus corpus(task, instances);
  FoldPlan plan = compose_ood(corpus, 0);
  ASSERT_EQ(plan.test_groups[1], (std::vector<std::string>{"cloning"}));
  auto& split = plan.folds[1];
  if (corpus.group_of(corpus.at(split.dev.front())) == "guns") {
    split.train.push_back(split.dev.back());
    split.dev.pop_back();
  } else {
    auto it = std::find(split.train.begin(), split.train.end(), "guns0");
    ASSERT_NE(it, split.train.end());
    split.dev.push_back(*it);
    split.train.erase(it);
  }
  const auto violations = ood::verify_plan(plan, corpus);
  const auto found = messages(violations);
  EXPECT_TRUE(contains(found, "dev-disjointness: fold 1 dev shares group guns with train"));
  for (const auto& v : violations) {
    if (v.rule == "dev-disjointness") {
      EXPECT_EQ(v.fold, 1u);
      EXPECT_EQ(v.role, Role::dev);
    }
  }
}

TEST(VerifyPlan, ReportsMissingCoverageAndOverlap) {
  const Corpus corpus = sized_corpus({4, 4, 4});
  FoldPlan plan = compose_ood(corpus, 0);
  const std::string moved = plan.folds[0].test.back();
  plan.folds[0].test.pop_back();
  plan.folds[0].train.push_back(plan.folds[0].dev.front());
  const auto violations = ood::verify_plan(plan, corpus);
  std::set<std::string> rules;
  for (const auto& v : violations) rules.insert(v.rule);
  EXPECT_TRUE(rules.count("test-coverage"));
  EXPECT_TRUE(rules.count("role-disjointness"));
  EXPECT_TRUE(contains(messages(violations), "test-coverage: id " + moved + " is in no test split"));
}

TEST(PlanJson, RoundTrips) {
  const Corpus corpus = sized_corpus({5, 3, 6, 2});
  const FoldPlan plan = compose_ood(corpus, 9);
  EXPECT_EQ(ood::plan_from_json(ood::plan_to_json(plan)), plan);
  const FoldPlan id_plan = compose_id(corpus, plan, 9);
  EXPECT_EQ(ood::plan_from_json(ood::plan_to_json(id_plan)), id_plan);
}

TEST(PlanJson, RejectsMalformed) {
  EXPECT_THROW(ood::plan_from_json("{"), ood::SchemaError);
  EXPECT_THROW(ood::plan_from_json(R"({"mode": "XX", "seed": 0, "shift_kind": "topic", "folds": []})"),
               ood::SchemaError);
}

TEST(FoldProperties, RandomCorporaSatisfyInvariants) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t groups = 3 + gen() % 10;
    const std::size_t n = groups + gen() % 300;
    const Corpus corpus = ood::test::random_corpus(gen, groups, n);
    const std::uint64_t seed = gen();
    const FoldPlan plan = compose_ood(corpus, seed);
    EXPECT_TRUE(ood::verify_plan(plan, corpus).empty()) << "trial " << trial;
    const FoldPlan id_plan = compose_id(corpus, plan, seed);
    EXPECT_TRUE(ood::verify_plan(id_plan, corpus).empty()) << "trial " << trial;
    EXPECT_TRUE(ood::verify_size_match(id_plan, plan).empty()) << "trial " << trial;
  }
}

TEST(FoldProperties, RelabelingGroupsPreservesFoldSizeMultiset) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Corpus corpus = ood::test::random_corpus(gen, 3 + trial % 6, 40 + trial * 7);
    std::vector<ood::Instance> renamed = corpus.instances();
    for (auto& instance : renamed) {
      instance.groups[ood::ShiftKind::topic] = "renamed-" + instance.groups[ood::ShiftKind::topic];
    }
    const Corpus other(corpus.task(), renamed);
    auto sizes = [](const FoldPlan& plan) {
      std::multiset<std::size_t> out;
      for (const auto& split : plan.folds) out.insert(split.test.size());
      return out;
    };
    EXPECT_EQ(sizes(compose_ood(corpus, 1)), sizes(compose_ood(other, 1)));
  }
}

}  // namespace
