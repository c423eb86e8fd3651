#include "adaptany/splitter.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rational_oracle.hpp"
#include "support.hpp"

using namespace adaptany;
using adaptany::testing::random_batch;
using adaptany::testing::rational_mean;
using adaptany::testing::TempDir;
using adaptany::testing::tiny_architecture;

namespace {

// A model whose logits are exactly `bias` for every input: zero weights
// everywhere, so features are zero and the head adds its bias.
nn::ModelState constant_logit_model(const std::vector<double>& bias) {
  auto m = nn::init_model(tiny_architecture(), static_cast<int>(bias.size()), 1);
  m.extractor.values.setZero();
  auto& head = m.heads.at(nn::kMainHead);
  head.values.setZero();
  for (std::size_t c = 0; c < bias.size(); ++c) head.matrix("bias")(0, static_cast<Eigen::Index>(c)) = bias[c];
  return m;
}

ImageSet unlabeled_set(int n, int categories) {
  const auto b = random_batch(n, tiny_architecture().input, 3);
  ImageSet s;
  s.shape = b.shape;
  s.images = b.images;
  for (int i = 0; i < n; ++i) {
    s.ids.push_back("t" + std::to_string(i));
    s.labels.push_back(-1);
  }
  for (int c = 0; c < categories; ++c) s.category_names.push_back("c" + std::to_string(c));
  return s;
}

PseudoLabelTable table_of(const std::vector<std::pair<int, double>>& rows) {
  PseudoLabelTable t;
  t.category_count = 4;
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.entries.push_back({"s" + std::to_string(i), rows[i].first, rows[i].second});
  return t;
}

PseudoLabelTable random_table(Rng& rng, int n, int categories) {
  PseudoLabelTable t;
  t.category_count = categories;
  for (int i = 0; i < n; ++i) t.entries.push_back({"r" + std::to_string(i), rng.index(categories), rng.uniform()});
  return t;
}

}  // namespace

TEST(PseudoLabel, ConfidenceIsMaxSoftmax) {
  const auto table = pseudo_label(constant_logit_model({2.0, 0.0}), unlabeled_set(3, 2));
  ASSERT_EQ(table.size(), 3u);
  for (const auto& e : table.entries) {
    EXPECT_EQ(e.pseudo_label, 0);
    EXPECT_NEAR(e.confidence, 0.8808, 1e-4);
    EXPECT_NEAR(e.confidence, 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  }
  EXPECT_EQ(table.entries[2].sample_id, "t2");
}

TEST(PseudoLabel, TieGoesToLowestIndex) {
  const auto table = pseudo_label(constant_logit_model({0.0, 0.0}), unlabeled_set(2, 2));
  for (const auto& e : table.entries) {
    EXPECT_EQ(e.pseudo_label, 0);
    EXPECT_DOUBLE_EQ(e.confidence, 0.5);
  }
}

TEST(PseudoLabel, EmptyTargetGivesEmptyTable) {
  const auto table = pseudo_label(constant_logit_model({1.0, 0.0}), unlabeled_set(0, 2));
  EXPECT_EQ(table.size(), 0u);
  EXPECT_THROW(split_by_category_mean(table), InvalidArgument);
}

TEST(PseudoLabel, CategoryCountMismatch) {
  EXPECT_THROW(pseudo_label(constant_logit_model({1.0, 0.0}), unlabeled_set(2, 3)), InvalidArgument);
}

TEST(Split, ThresholdIsCategoryMean) {
  const auto part = split_by_category_mean(table_of({{0, 0.9}, {0, 0.5}, {0, 0.7}}));
  EXPECT_DOUBLE_EQ(part.per_category_threshold.at(0), 0.7);
  EXPECT_EQ(part.confident_ids, (std::set<std::string>{"s0", "s2"}));
  EXPECT_EQ(part.unconfident_ids, (std::set<std::string>{"s1"}));
}

TEST(Split, AllEqualConfidencesAreConfident) {
  const auto part = split_by_category_mean(table_of({{1, 0.1}, {1, 0.1}, {1, 0.1}, {1, 0.1}, {1, 0.1}}));
  EXPECT_EQ(part.confident_ids.size(), 5u);
  EXPECT_TRUE(part.unconfident_ids.empty());
}

TEST(Split, SingletonCategoryIsConfident) {
  const auto part = split_by_category_mean(table_of({{0, 0.9}, {0, 0.3}, {3, 0.26}}));
  EXPECT_TRUE(part.confident_ids.count("s2"));
  EXPECT_EQ(part.per_category_threshold.count(1), 0u);
  EXPECT_EQ(part.per_category_threshold.count(2), 0u);
}

TEST(Split, PartitionCoversEverySampleOnce) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_table(rng, 1 + rng.index(60), 1 + rng.index(6));
    const auto part = split_by_category_mean(t);
    EXPECT_EQ(part.confident_ids.size() + part.unconfident_ids.size(), t.size());
    for (const auto& e : t.entries)
      EXPECT_NE(part.confident_ids.count(e.sample_id), part.unconfident_ids.count(e.sample_id));
    std::set<int> labels;
    for (const auto& e : t.entries) labels.insert(e.pseudo_label);
    for (int c : labels) {
      bool any = false;
      for (const auto& e : t.entries) any |= e.pseudo_label == c && part.confident_ids.count(e.sample_id);
      EXPECT_TRUE(any) << "category " << c << " has no confident sample";
    }
  }
}

TEST(Split, InvariantToTableOrder) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto t = random_table(rng, 40, 4);
    const auto before = split_by_category_mean(t);
    rng.shuffle(t.entries.begin(), t.entries.end());
    EXPECT_EQ(split_by_category_mean(t), before);
  }
}

TEST(Split, OtherCategoriesDoNotAffectAssignment) {
  Rng rng(3);
  auto t = random_table(rng, 50, 3);
  const auto before = split_by_category_mean(t);
  for (auto& e : t.entries)
    if (e.pseudo_label != 0) e.confidence = rng.uniform();
  const auto after = split_by_category_mean(t);
  for (const auto& e : t.entries) {
    if (e.pseudo_label == 0) {
      EXPECT_EQ(before.confident_ids.count(e.sample_id), after.confident_ids.count(e.sample_id));
    }
  }
}

TEST(Split, RaisingOwnConfidenceKeepsSampleConfident) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto t = random_table(rng, 30, 3);
    const auto before = split_by_category_mean(t);
    for (auto& e : t.entries) {
      if (!before.confident_ids.count(e.sample_id)) continue;
      const double old = e.confidence;
      e.confidence = old + (1.0 - old) * rng.uniform();
      EXPECT_TRUE(split_by_category_mean(t).confident_ids.count(e.sample_id));
      e.confidence = old;
    }
  }
}

TEST(Split, ConfidentMeanAtLeastUnconfidentMean) {
  Rng rng(5);
  auto t = random_table(rng, 200, 4);
  const auto part = split_by_category_mean(t);
  std::vector<double> conf, unconf;
  for (const auto& e : t.entries)
    (part.confident_ids.count(e.sample_id) ? conf : unconf).push_back(e.confidence);
  ASSERT_FALSE(unconf.empty());
  EXPECT_GE(exact_mean(conf), exact_mean(unconf));
}

TEST(Split, RejectsMalformedTables) {
  EXPECT_THROW(split_by_category_mean(table_of({{0, 1.5}})), InvalidArgument);
  EXPECT_THROW(split_by_category_mean(table_of({{-1, 0.5}})), InvalidArgument);
  auto dup = table_of({{0, 0.5}, {0, 0.6}});
  dup.entries[1].sample_id = dup.entries[0].sample_id;
  EXPECT_THROW(split_by_category_mean(dup), InvalidArgument);
}

TEST(ExactMean, MatchesRationalOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(1 + rng.index(40)));
    for (auto& x : v) x = rng.uniform();
    EXPECT_EQ(exact_mean(v), rational_mean(v));
  }
}

TEST(ExactMean, CancellationAndExtremeMagnitudes) {
  const std::vector<double> cancel{1e308, 1.0, -1e308};
  EXPECT_EQ(exact_mean(cancel), 1.0 / 3.0);
  EXPECT_EQ(exact_mean(cancel), rational_mean(cancel));
  const std::vector<double> tiny{4.9e-324, 4.9e-324, 0.0};
  EXPECT_EQ(exact_mean(tiny), rational_mean(tiny));
  const std::vector<double> thirds{0.1, 0.2, 0.3};
  EXPECT_EQ(exact_mean(thirds), rational_mean(thirds));
  EXPECT_THROW(exact_mean({}), InvalidArgument);
  EXPECT_THROW(exact_mean({1.0, std::nan("")}), NonFinite);
}

TEST(PartitionFile, RoundTrip) {
  TempDir dir("partition");
  Rng rng(7);
  PartitionFile pf;
  pf.table = random_table(rng, 25, 3);
  pf.table.model_checkpoint_id = "abc";
  pf.partition = split_by_category_mean(pf.table);
  pf.target_manifest = "/data/target.jsonl";
  pf.category_names = {"a", "b", "c"};
  write_partition(pf, dir / "p.jsonl");
  const auto back = load_partition(dir / "p.jsonl");
  EXPECT_EQ(back.table.entries, pf.table.entries);
  EXPECT_EQ(back.partition, pf.partition);
  EXPECT_EQ(back.target_manifest, pf.target_manifest);
  EXPECT_EQ(back.category_names, pf.category_names);
  EXPECT_EQ(back.table.model_checkpoint_id, "abc");
  EXPECT_EQ(serialize_partition(back), serialize_partition(pf));
  EXPECT_THROW(back.side_of("missing"), InvalidArgument);
}

TEST(PartitionFile, RejectsForeignFile) {
  TempDir dir("partition-bad");
  write_file(dir / "p.jsonl", "{\"format\":\"other\"}\n");
  EXPECT_THROW(load_partition(dir / "p.jsonl"), InvalidArgument);
}
