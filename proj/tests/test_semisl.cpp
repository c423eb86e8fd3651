#include "adaptany/semisl.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace adaptany;
using namespace adaptany::nn;
using adaptany::testing::alternating_labels;
using adaptany::testing::random_batch;
using adaptany::testing::render_set;
using adaptany::testing::tiny_architecture;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

// Target set plus a partition built from a fresh model's pseudo-labels.
struct StageThreeFixture {
  ImageSet target = render_set(3, "textured", 12, {16, 16, 3}, 5, false, DomainTag::target);
  ModelState init = init_model(tiny_architecture(), 3, 2);
  PartitionFile pf;

  StageThreeFixture() {
    pf.table = pseudo_label(init, target);
    pf.partition = split_by_category_mean(pf.table);
    pf.target_manifest = target.origin;
    pf.category_names = target.category_names;
  }
};

SemiConfig quick(SemiMethod m) {
  SemiConfig c;
  c.method = m;
  c.epochs = 2;
  c.batch_size = 8;
  c.seed = 4;
  return c;
}

}  // namespace

TEST(Sharpen, KnownValue) {
  const Matrix s = sharpen(row({0.8, 0.2}), 0.5);
  EXPECT_NEAR(s(0, 0), 0.9412, 1e-4);
  EXPECT_NEAR(s(0, 1), 0.0588, 1e-4);
  EXPECT_NEAR(s(0, 0), 16.0 / 17.0, 1e-15);
}

TEST(Sharpen, TemperatureOneIsIdentity) {
  const Matrix p = row({0.1, 0.6, 0.3});
  EXPECT_LE((sharpen(p, 1.0) - p).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sharpen, UniformStaysUniform) {
  const Matrix s = sharpen(row({0.25, 0.25, 0.25, 0.25}), 0.1);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(s(0, j), 0.25);
}

TEST(Sharpen, RejectsNonDistributions) {
  EXPECT_THROW(sharpen(row({0.5, 0.6}), 0.5), InvalidArgument);
  EXPECT_THROW(sharpen(row({1.2, -0.2}), 0.5), InvalidArgument);
  EXPECT_THROW(sharpen(row({0.5, 0.5}), 0.0), InvalidArgument);
}

TEST(Sharpen, TinyTemperatureDoesNotUnderflow) {
  const Matrix s = sharpen(row({0.3, 0.7}), 1e-3);
  EXPECT_TRUE(s.allFinite());
  EXPECT_DOUBLE_EQ(s(0, 1), 1.0);
}

TEST(Mixup, LambdaFoldsToUpperHalf) {
  EXPECT_DOUBLE_EQ(mixup_lambda(0.3), 0.7);
  EXPECT_DOUBLE_EQ(mixup_lambda(0.7), 0.7);
  EXPECT_THROW(mixup_lambda(1.5), InvalidArgument);
}

TEST(Mixup, LambdaOneReturnsFirstOperandExactly) {
  const Matrix x1 = row({0.1, 0.2}), x2 = row({0.9, 0.8}), y1 = row({1, 0}), y2 = row({0, 1});
  for (double raw : {0.0, 1.0}) {
    const auto m = mixup(x1, y1, x2, y2, raw);
    EXPECT_TRUE(m.x == x1);
    EXPECT_TRUE(m.y == y1);
  }
}

TEST(Mixup, ConstantImagesMixLinearly) {
  const Matrix x1 = Matrix::Zero(1, 4), x2 = Matrix::Ones(1, 4);
  const auto m = mixup(x1, row({1, 0}), x2, row({0, 1}), 0.3);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(m.x(0, j), 0.3, 1e-15);
  EXPECT_NEAR(m.y(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(m.y(0, 1), 0.3, 1e-15);
  EXPECT_THROW(mixup(x1, row({1, 0}), Matrix::Ones(2, 4), row({0, 1}), 0.3), ShapeMismatch);
}

TEST(FixMatch, TauOneDropsEverythingShortOfCertainty) {
  Matrix weak(2, 2);
  weak << 2.0, 0.0, 0.0, 3.0;
  EXPECT_EQ(fixmatch_unlabeled_loss(weak, weak, 1.0), 0.0);
}

TEST(FixMatch, LowTauRetainsAll) {
  Matrix probs(3, 2);
  probs << 0.6, 0.4, 0.5, 0.5, 0.1, 0.9;
  const auto m = fixmatch_mask(probs, 0.5);
  EXPECT_EQ(m.count(), 3);
  EXPECT_EQ(m.pseudo_labels, (std::vector<int>{0, 0, 1}));
}

TEST(FixMatch, MaskedCrossEntropyByHand) {
  Matrix weak(2, 2), strong(2, 2);
  weak << 5.0, 0.0, 0.0, 0.1;   // first row confident, second not
  strong << 1.0, 2.0, 0.0, 0.0;
  const double expected = std::log(std::exp(1.0) + std::exp(2.0)) - 1.0;
  EXPECT_NEAR(fixmatch_unlabeled_loss(weak, strong, 0.95), expected, 1e-12);
}

TEST(FixMatch, LossNonIncreasingInTau) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix weak = Matrix::NullaryExpr(16, 4, [&] { return rng.uniform(-3.0, 3.0); });
    const Matrix strong = Matrix::NullaryExpr(16, 4, [&] { return rng.uniform(-3.0, 3.0); });
    int previous = 17;
    for (double tau : {0.3, 0.5, 0.7, 0.9, 0.99}) {
      const int kept = fixmatch_mask(softmax(weak), tau).count();
      EXPECT_LE(kept, previous);
      previous = kept;
    }
  }
}

TEST(MixMatch, ZeroUnlabeledWeightContributesNothing) {
  const auto arch = tiny_architecture();
  const auto m = init_model(arch, 3, 1);
  auto l = random_batch(6, arch.input, 2);
  l.labels = alternating_labels(6, 3);
  const auto u = random_batch(6, arch.input, 3);
  const auto prepared = mixmatch_prepare(m, l, u, quick(SemiMethod::mixmatch), 9);
  const auto with_zero = mixmatch_loss(m, prepared, 0.0);
  EXPECT_DOUBLE_EQ(with_zero.loss, with_zero.parts.at("labeled"));
  EXPECT_GT(with_zero.parts.at("unlabeled"), 0.0);
  EXPECT_GE(prepared.lambda, 0.5);
}

TEST(MixMatch, GradientsMatchFiniteDifferences) {
  const auto arch = tiny_architecture();
  const auto m = init_model(arch, 3, 1, {2, false});
  auto l = random_batch(4, arch.input, 2);
  l.labels = alternating_labels(4, 3);
  const auto prepared = mixmatch_prepare(m, l, random_batch(4, arch.input, 3), quick(SemiMethod::mixmatch), 9);
  LossFn f = [&](const ModelState& s, const Batch&) { return mixmatch_loss(s, prepared, 2.0); };
  EXPECT_LE(grad_check(f, m, l, 30, 1e-4), 1e-3);
}

TEST(FixMatchStep, GradientsMatchFiniteDifferences) {
  const auto arch = tiny_architecture();
  const auto m = init_model(arch, 3, 1);
  auto l = random_batch(4, arch.input, 2);
  l.labels = alternating_labels(4, 3);
  const auto strong = random_batch(4, arch.input, 3).images;
  FixMatchMask mask{{0, 1, 2, 0}, {1, 0, 1, 1}};
  LossFn f = [&](const ModelState& s, const Batch& x) { return fixmatch_loss(s, x, strong, mask, 1.0); };
  // At 1e-4 one probe of this fixture straddles a ReLU kink in the extractor.
  EXPECT_LE(grad_check(f, m, l, 30, 1e-5), 1e-3);
}

TEST(Config, UnknownMethodAndDefaults) {
  EXPECT_THROW(parse_semi_method("meanteacher"), InvalidArgument);
  EXPECT_DOUBLE_EQ(SemiConfig{}.lambda_u(), 75.0);
  SemiConfig f;
  f.method = SemiMethod::fixmatch;
  EXPECT_DOUBLE_EQ(f.lambda_u(), 1.0);
  EXPECT_DOUBLE_EQ(f.lambda_u_at(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f.lambda_u_at(1.0), 1.0);
  EXPECT_EQ(SemiConfig::from_json(f.to_json()).to_json(), f.to_json());
}

TEST(TargetImages, RejectsSyntheticSets) {
  const auto synthetic = render_set(2, "flat", 2, {16, 16, 3}, 1, true, DomainTag::synthetic);
  EXPECT_THROW(TargetImages::from(synthetic), InvalidArgument);
}

TEST(TargetImages, StripsLabels) {
  const auto labeled = render_set(2, "textured", 2, {16, 16, 3}, 1, true, DomainTag::target);
  const auto t = TargetImages::from(labeled);
  for (int l : t.set().labels) EXPECT_EQ(l, -1);
}

TEST(SemiInputs, FollowsPartitionSides) {
  const StageThreeFixture fx;
  const auto [labeled, unlabeled] = semi_inputs(fx.pf, TargetImages::from(fx.target));
  EXPECT_EQ(static_cast<std::size_t>(labeled.images.size()), fx.pf.partition.confident_ids.size());
  EXPECT_EQ(static_cast<std::size_t>(unlabeled.images.size()), fx.pf.partition.unconfident_ids.size());
  for (const auto& id : labeled.images.set().ids) EXPECT_TRUE(fx.pf.partition.confident_ids.count(id));
  for (int l : unlabeled.images.set().labels) EXPECT_EQ(l, -1);
}

TEST(SemiInputs, MismatchedPartitionRejected) {
  StageThreeFixture fx;
  fx.pf.table.entries.pop_back();
  EXPECT_THROW(semi_inputs(fx.pf, TargetImages::from(fx.target)), InvalidArgument);
}

TEST(TrainSemi, EmptyLabeledSideRejected) {
  const StageThreeFixture fx;
  auto [labeled, unlabeled] = semi_inputs(fx.pf, TargetImages::from(fx.target));
  const ImageSet none = render_set(3, "textured", 0, {16, 16, 3}, 1, false, DomainTag::target);
  const LabeledTarget empty{TargetImages::from(none), {}, "p"};
  EXPECT_THROW(train_semisl(fx.init, empty, unlabeled, quick(SemiMethod::mixmatch)), InvalidArgument);
}

TEST(TrainSemi, BothMethodsDeterministicWithReport) {
  const StageThreeFixture fx;
  const auto [labeled, unlabeled] = semi_inputs(fx.pf, TargetImages::from(fx.target));
  const auto eval = render_set(3, "textured", 12, {16, 16, 3}, 5, true, DomainTag::target);
  for (auto method : {SemiMethod::mixmatch, SemiMethod::fixmatch}) {
    SemiObserver obs{&eval, {}};
    const auto a = train_semisl(fx.init, labeled, unlabeled, quick(method), obs);
    const auto b = train_semisl(fx.init, labeled, unlabeled, quick(method), obs);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.report.metrics_json(), b.report.metrics_json());
    EXPECT_EQ(a.report.stage_tag, "stage-3");
    EXPECT_EQ(a.report.epoch_losses.at("total").size(), 2u);
    EXPECT_EQ(a.report.init_checkpoint, checkpoint_id(fx.init));
    for (const auto& in : a.report.inputs) EXPECT_EQ(in.domain, "target");
    EXPECT_TRUE(a.report.final_target_accuracy.has_value());
    EXPECT_FALSE(a.model == fx.init);
  }
}

TEST(TrainSemi, SyntheticEvalRejected) {
  const StageThreeFixture fx;
  const auto [labeled, unlabeled] = semi_inputs(fx.pf, TargetImages::from(fx.target));
  const auto synthetic = render_set(3, "flat", 2, {16, 16, 3}, 1, true, DomainTag::synthetic);
  EXPECT_THROW(train_semisl(fx.init, labeled, unlabeled, quick(SemiMethod::fixmatch), {&synthetic, {}}),
               InvalidArgument);
}

TEST(BalancedSampler, CyclesThroughCategories) {
  std::vector<int> labels(40, 0);
  labels[3] = 1;
  labels[7] = 2;
  BalancedSampler s(labels, 1);
  std::map<int, int> counts;
  for (int round = 0; round < 10; ++round)
    for (int idx : s.next(9)) ++counts[labels[static_cast<std::size_t>(idx)]];
  EXPECT_EQ(counts[0], 30);
  EXPECT_EQ(counts[1], 30);
  EXPECT_EQ(counts[2], 30);
}
