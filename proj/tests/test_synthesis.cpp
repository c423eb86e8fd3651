#include "adaptany/synthesis.hpp"

#include <gtest/gtest.h>

#include "adaptany/dataset.hpp"
#include "support.hpp"

using namespace adaptany;
using adaptany::testing::TempDir;

namespace {

PromptSet prompts_for(int categories) {
  TaskDefinition task;
  task.task_id = "t";
  for (int c = 0; c < categories; ++c) task.categories.push_back({"cat" + std::to_string(c), ""});
  return build_prompt_set(task, Mechanism::simple);
}

double pixel_fraction_differing(const Image& a, const Image& b) {
  int differ = 0;
  const int pixels = a.shape.height * a.shape.width;
  for (int p = 0; p < pixels; ++p)
    for (int c = 0; c < 3; ++c)
      if (a.pixels[static_cast<std::size_t>(p * 3 + c)] != b.pixels[static_cast<std::size_t>(p * 3 + c)]) {
        ++differ;
        break;
      }
  return static_cast<double>(differ) / pixels;
}

SynthesisOptions small(int parallelism = 2) {
  SynthesisOptions o;
  o.image_shape = {16, 16, 3};
  o.parallelism = parallelism;
  return o;
}

class FailingGenerator : public T2IClient {
 public:
  explicit FailingGenerator(int bad_category) : bad_(bad_category) {}
  std::vector<Image> generate(const T2IRequest& r) override {
    if (r.category_hint == bad_) throw ClientError("backend down");
    return inner_.generate(r);
  }
  std::string id() const override { return "failing"; }

 private:
  int bad_;
  MockT2IClient inner_;
};

}  // namespace

TEST(Synthesize, ExactCountsAndLabelsFromPrompts) {
  TempDir dir("synth");
  const auto prompts = prompts_for(3);
  MockT2IClient gen;
  const auto m = synthesize(prompts, gen, 5, dir.path(), 7, small());
  ASSERT_EQ(m.size(), 15u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& r = m.records[i];
    EXPECT_EQ(r.label, static_cast<int>(i / 5));
    EXPECT_EQ(r.domain_tag, DomainTag::synthetic);
    EXPECT_EQ(*r.prompt_text, prompts.records[static_cast<std::size_t>(*r.label)].text);
  }
  EXPECT_EQ(m.provenance["seed"], 7);
  EXPECT_EQ(m.provenance["per_category"], 5);
  EXPECT_EQ(m.provenance["generator"], gen.id());
  EXPECT_TRUE(load_manifest(dir / "manifest.jsonl").same_content(m));
}

TEST(Synthesize, ThirtyOneCategoriesTwoHundredEach) {
  TempDir dir("synth31");
  MockT2IClient gen;
  SynthesisOptions o = small(4);
  o.image_shape = {8, 8, 3};
  EXPECT_EQ(synthesize(prompts_for(31), gen, 200, dir.path(), 7, o).size(), 6200u);
}

TEST(Synthesize, SingleCategorySingleImage) {
  TempDir dir("synth1");
  MockT2IClient gen;
  const auto m = synthesize(prompts_for(1), gen, 1, dir.path(), 3, small());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.records[0].label, 0);
}

TEST(Synthesize, DeterministicAcrossParallelism) {
  TempDir a("synthA"), b("synthB");
  MockT2IClient gen;
  const auto ma = synthesize(prompts_for(3), gen, 4, a.path(), 11, small(1));
  const auto mb = synthesize(prompts_for(3), gen, 4, b.path(), 11, small(4));
  EXPECT_TRUE(ma.same_content(mb));
  for (const auto& r : ma.records) EXPECT_EQ(read_file(a / r.image_path), read_file(b / r.image_path));
}

TEST(Synthesize, DisjointSeedsShareNoIds) {
  TempDir a("seedA"), b("seedB");
  MockT2IClient gen;
  const auto ma = synthesize(prompts_for(2), gen, 3, a.path(), 1, small());
  const auto mb = synthesize(prompts_for(2), gen, 3, b.path(), 2, small());
  for (const auto& ra : ma.records)
    for (const auto& rb : mb.records) EXPECT_NE(ra.sample_id, rb.sample_id);
}

TEST(Synthesize, CategoryWithoutPromptsRejected) {
  TempDir dir("synth-gap");
  auto prompts = prompts_for(3);
  prompts.records.erase(prompts.records.begin() + 1);
  MockT2IClient gen;
  EXPECT_THROW(synthesize(prompts, gen, 2, dir.path(), 1, small()), InvalidArgument);
}

TEST(Synthesize, GeneratorFailureLeavesPartialManifest) {
  TempDir dir("synth-fail");
  FailingGenerator gen(1);
  try {
    synthesize(prompts_for(3), gen, 2, dir.path(), 1, small());
    FAIL() << "expected partial-manifest error";
  } catch (const PartialManifestError& e) {
    EXPECT_EQ(e.kind(), "partial-manifest");
    EXPECT_EQ(e.completed_categories(), (std::vector<int>{0, 2}));
    EXPECT_EQ(e.failed_categories(), (std::vector<int>{1}));
    EXPECT_EQ(load_manifest(e.partial_manifest()).size(), 4u);
  }
  EXPECT_FALSE(fs::exists(dir / "manifest.jsonl"));
}

TEST(ProceduralRender, Deterministic) {
  const auto& style = style_by_name("flat");
  EXPECT_EQ(procedural_render(2, style, {32, 32, 3}, 5), procedural_render(2, style, {32, 32, 3}, 5));
}

TEST(ProceduralRender, CategoriesDifferInAtLeastOnePercentOfPixels) {
  for (const auto& [name, style] : style_table())
    for (int c = 0; c + 1 < 12; ++c)
      for (std::uint64_t seed : {1u, 2u, 3u})
        EXPECT_GE(pixel_fraction_differing(procedural_render(c, style, {32, 32, 3}, seed),
                                           procedural_render(c + 1, style, {32, 32, 3}, seed)),
                  0.01)
            << name << " category " << c << " seed " << seed;
}

TEST(ProceduralRender, StylesDiffer) {
  const auto a = procedural_render(0, style_by_name("flat"), {32, 32, 3}, 1);
  const auto b = procedural_render(0, style_by_name("textured"), {32, 32, 3}, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(a.pixels[i] - b.pixels[i]);
  EXPECT_GT(sum / static_cast<double>(a.pixels.size()), 0.0);
}

TEST(ProceduralRender, UnsupportedShape) {
  EXPECT_THROW(procedural_render(0, style_by_name("flat"), {32, 32, 1}, 1), InvalidArgument);
}

TEST(LabelNoise, ExactlyTwentyOfHundredChange) {
  TempDir dir("noise");
  MockT2IClient gen;
  SynthesisOptions o = small();
  o.image_shape = {8, 8, 3};
  const auto m = synthesize(prompts_for(4), gen, 25, dir.path(), 1, o);
  const auto noisy = inject_label_noise(m, 0.2, 9);
  int changed = 0;
  ASSERT_EQ(noisy.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(noisy.records[i].sample_id, m.records[i].sample_id);
    EXPECT_EQ(noisy.records[i].image_path, m.records[i].image_path);
    changed += noisy.records[i].label != m.records[i].label;
  }
  EXPECT_EQ(changed, 20);
  EXPECT_EQ(noisy.provenance["label_noise"][0]["rate"], 0.2);
  EXPECT_EQ(noisy.provenance["label_noise"][0]["seed"], 9);
  EXPECT_TRUE(inject_label_noise(m, 0.2, 9).same_content(noisy));
}

TEST(LabelNoise, ZeroRateIsIdentityOnRecords) {
  TempDir dir("noise0");
  MockT2IClient gen;
  const auto m = synthesize(prompts_for(2), gen, 3, dir.path(), 1, small());
  EXPECT_EQ(inject_label_noise(m, 0.0, 1).records, m.records);
}

TEST(LabelNoise, FullRateChangesEveryLabel) {
  TempDir dir("noise1");
  MockT2IClient gen;
  const auto m = synthesize(prompts_for(2), gen, 5, dir.path(), 1, small());
  const auto noisy = inject_label_noise(m, 1.0, 4);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NE(noisy.records[i].label, m.records[i].label);
}

TEST(LabelNoise, TargetManifestRejected) {
  TempDir dir("noise-target");
  const auto fx = render_target_fixture({"a", "b"}, "textured", 2, {16, 16, 3}, 1, dir.path());
  EXPECT_THROW(inject_label_noise(fx.unlabeled, 0.1, 1), InvalidArgument);
}

TEST(Manifest, RoundTripAndValidation) {
  TempDir dir("manifest");
  MockT2IClient gen;
  const auto m = synthesize(prompts_for(2), gen, 2, dir.path(), 1, small());
  EXPECT_TRUE(load_manifest(dir / "manifest.jsonl").same_content(m));

  fs::remove(dir / m.records[1].image_path);
  try {
    load_manifest(dir / "manifest.jsonl");
    FAIL() << "expected manifest error";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find(m.records[1].sample_id), std::string::npos);
  }
}

TEST(Manifest, LabelEqualToCategoryCountIsOutOfRange) {
  DatasetManifest m;
  m.category_names.assign(65, "c");
  m.domain_tag = DomainTag::target;
  m.records.push_back({"s", "x.ppm", 65, DomainTag::target, {}, {}});
  ASSERT_EQ(m.violations().size(), 1u);
  EXPECT_NE(m.violations()[0].find("out of range"), std::string::npos);
  EXPECT_THROW(write_manifest(m, fs::temp_directory_path() / "adaptany-never-written.jsonl"), ManifestError);
}

TEST(Manifest, SyntheticNeedsLabelAndPrompt) {
  DatasetManifest m;
  m.category_names = {"a"};
  m.domain_tag = DomainTag::synthetic;
  m.records.push_back({"s", "x.ppm", std::nullopt, DomainTag::synthetic, {}, {}});
  EXPECT_EQ(m.violations().size(), 1u);
}

TEST(TargetFixture, UnlabeledAndLabeledShareImages) {
  TempDir dir("fixture");
  const auto fx = render_target_fixture({"a", "b", "c"}, "textured", 4, {16, 16, 3}, 2, dir.path());
  const auto u = load_images(dir / "target.jsonl");
  const auto l = load_images(dir / "target_eval.jsonl");
  EXPECT_EQ(u.size(), 12);
  EXPECT_FALSE(u.fully_labeled());
  EXPECT_TRUE(l.fully_labeled());
  EXPECT_TRUE(u.images == l.images);
  EXPECT_EQ(u.domain, DomainTag::target);
}
