#pragma once

#include <atomic>
#include <memory>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/image.hpp"
#include "adaptany/manifest.hpp"
#include "adaptany/procedural.hpp"
#include "adaptany/prompt_engine.hpp"

namespace adaptany {

struct T2IRequest {
  std::string prompt;
  int count = 1;
  std::uint64_t seed = 0;
  ImageShape shape;
  int category_hint = -1;  // used by the procedural mock only; never sent remotely
};

// Text-to-image generator. Implementations throw ClientError on failure and
// must return exactly `count` images of `shape`.
class T2IClient {
 public:
  virtual ~T2IClient() = default;
  virtual std::vector<Image> generate(const T2IRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Procedural stand-in for a diffusion model. The style comes from the prompt:
// a prompt naming a style from the style table renders in that style,
// otherwise the base style is used with a prompt-dependent palette rotation,
// so diverse prompts still give diverse images.
class MockT2IClient : public T2IClient {
 public:
  explicit MockT2IClient(std::string base_style = "flat") : base_style_(std::move(base_style)) {
    style_by_name(base_style_);
  }

  StyleParams style_for_prompt(const std::string& prompt) const {
    const auto lowered = to_lower(prompt);
    for (const auto& [name, style] : style_table())
      if (name != base_style_ && lowered.find(name) != std::string::npos) return style;
    StyleParams style = style_by_name(base_style_);
    if (style.palette.size() > 1) {
      const auto shift = fnv1a(lowered) % style.palette.size();
      std::rotate(style.palette.begin(), style.palette.begin() + static_cast<long>(shift),
                  style.palette.end());
    }
    return style;
  }

  std::vector<Image> generate(const T2IRequest& request) override {
    require(request.category_hint >= 0, "mock generator needs a category hint");
    const auto style = style_for_prompt(request.prompt);
    std::vector<Image> out;
    for (int i = 0; i < request.count; ++i)
      out.push_back(procedural_render(request.category_hint, style, request.shape,
                                      derive_seed(request.seed, static_cast<std::uint64_t>(i))));
    return out;
  }

  std::string id() const override { return "procedural-mock:" + base_style_; }

 private:
  std::string base_style_;
};

class PartialManifestError : public Error {
 public:
  PartialManifestError(std::vector<int> completed, std::vector<int> failed, fs::path partial,
                       const std::string& detail)
      : Error("partial-manifest", describe(completed, failed, partial, detail)),
        completed_(std::move(completed)),
        failed_(std::move(failed)),
        partial_(std::move(partial)) {}
  const std::vector<int>& completed_categories() const { return completed_; }
  const std::vector<int>& failed_categories() const { return failed_; }
  const fs::path& partial_manifest() const { return partial_; }

 private:
  static std::string describe(const std::vector<int>& c, const std::vector<int>& f,
                              const fs::path& p, const std::string& detail) {
    auto list = [](const std::vector<int>& v) {
      std::string s;
      for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
      return "[" + s + "]";
    };
    return "generator failed; completed categories " + list(c) + ", failed " + list(f) +
           ", partial manifest at " + p.string() + ": " + detail;
  }
  std::vector<int> completed_;
  std::vector<int> failed_;
  fs::path partial_;
};

struct SynthesisOptions {
  ImageShape image_shape{32, 32, 3};
  int max_attempts = 3;
  int parallelism = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string manifest_name = "manifest.jsonl";
};

// Category names indexed by id, taken from the prompt records. A gap in the
// id range means a category without prompts.
inline std::vector<std::string> categories_from_prompts(const PromptSet& prompts) {
  int max_id = -1;
  for (const auto& r : prompts.records) max_id = std::max(max_id, r.category_id);
  require(max_id >= 0, "prompt set is empty");
  std::vector<std::string> names(static_cast<std::size_t>(max_id + 1));
  for (const auto& r : prompts.records) {
    require(r.category_id >= 0, "negative category_id in prompt set");
    names[r.category_id] = r.category_name;
  }
  for (int c = 0; c <= max_id; ++c)
    require(!names[c].empty(), "zero prompts for category id " + std::to_string(c));
  return names;
}

inline std::string synthetic_sample_id(std::uint64_t seed, int category, int rep) {
  return "syn-s" + std::to_string(seed) + "-c" + std::to_string(category) + "-r" + std::to_string(rep);
}

// Generates exactly `per_category` images per category, cycling through each
// category's prompts. Labels come from the prompt, never from image content.
inline DatasetManifest synthesize(const PromptSet& prompts, T2IClient& generator, int per_category,
                                  const fs::path& out_dir, std::uint64_t seed,
                                  SynthesisOptions opts = {},
                                  std::vector<std::string> category_names = {}) {
  require(per_category >= 1, "per_category must be >= 1");
  if (category_names.empty()) category_names = categories_from_prompts(prompts);
  const int n_cat = static_cast<int>(category_names.size());
  std::vector<std::vector<const PromptRecord*>> by_cat(n_cat);
  for (const auto& r : prompts.records) {
    require(r.category_id >= 0 && r.category_id < n_cat, "prompt category_id out of range");
    by_cat[r.category_id].push_back(&r);
  }
  for (int c = 0; c < n_cat; ++c)
    require(!by_cat[c].empty(), "zero prompts for category '" + category_names[c] + "'");

  fs::create_directories(out_dir / "images");
  const std::size_t total = static_cast<std::size_t>(n_cat) * per_category;
  std::vector<SampleRecord> records(total);
  std::vector<std::string> errors(total);
  std::vector<char> ok(total, 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const int c = static_cast<int>(job / per_category);
      const int rep = static_cast<int>(job % per_category);
      const PromptRecord& prompt = *by_cat[c][rep % by_cat[c].size()];
      T2IRequest req{prompt.text, 1, derive_seed(seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(rep)),
                     opts.image_shape, c};
      for (int attempt = 0; attempt < opts.max_attempts && !ok[job]; ++attempt) {
        try {
          auto images = generator.generate(req);
          if (images.size() != 1) throw ClientError("generator returned " + std::to_string(images.size()) + " images");
          const Image img = resize_nearest(images.front(), opts.image_shape);
          SampleRecord rec;
          rec.sample_id = synthetic_sample_id(seed, c, rep);
          rec.image_path = "images/" + rec.sample_id + ".ppm";
          rec.label = c;
          rec.domain_tag = DomainTag::synthetic;
          rec.prompt_text = prompt.text;
          write_ppm(img, out_dir / rec.image_path);
          records[job] = std::move(rec);
          ok[job] = 1;
        } catch (const Error& e) {
          errors[job] = e.what();
        }
      }
    }
  };
  {
    const int workers = std::max(1, std::min<int>(opts.parallelism, static_cast<int>(total)));
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  DatasetManifest m;
  m.category_names = category_names;
  m.domain_tag = DomainTag::synthetic;
  m.image_shape = opts.image_shape;
  m.base_dir = out_dir;
  m.provenance = {{"generator", generator.id()},
                  {"seed", seed},
                  {"per_category", per_category},
                  {"task_id", prompts.task_id},
                  {"prompt_mechanism", to_string(prompts.created_with)}};

  std::vector<int> completed, failed;
  std::string first_error;
  for (int c = 0; c < n_cat; ++c) {
    bool all = true;
    for (int rep = 0; rep < per_category; ++rep) {
      const std::size_t job = static_cast<std::size_t>(c) * per_category + rep;
      if (!ok[job]) {
        all = false;
        if (first_error.empty()) first_error = errors[job];
      }
    }
    (all ? completed : failed).push_back(c);
  }
  // Ordered by (category, repetition) regardless of scheduling.
  for (int c : completed)
    for (int rep = 0; rep < per_category; ++rep)
      m.records.push_back(records[static_cast<std::size_t>(c) * per_category + rep]);

  const auto manifest_path = out_dir / opts.manifest_name;
  if (!failed.empty()) {
    m.provenance["partial"] = true;
    const auto partial = out_dir / (opts.manifest_name + ".partial");
    write_manifest(m, partial);
    throw PartialManifestError(completed, failed, partial, first_error);
  }
  write_manifest(m, manifest_path);
  return m;
}

// Relabels exactly round(rate * N) records with a label drawn uniformly from
// the other categories. Images, ids and order are untouched.
inline DatasetManifest inject_label_noise(const DatasetManifest& manifest, double rate, std::uint64_t seed) {
  if (manifest.domain_tag != DomainTag::synthetic)
    throw InvalidArgument("label noise can only be injected into a synthetic manifest");
  require(rate >= 0.0 && rate <= 1.0, "noise rate must lie in [0,1]");
  DatasetManifest out = manifest;
  const auto n = manifest.records.size();
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  const int n_cat = manifest.category_count();
  require(k == 0 || n_cat >= 2, "label noise needs at least two categories");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  order.resize(k);
  std::sort(order.begin(), order.end());
  for (auto idx : order) {
    auto& rec = out.records[idx];
    const int old = rec.label.value();
    const int draw = rng.index(n_cat - 1);
    rec.label = draw < old ? draw : draw + 1;
  }
  json history = out.provenance.value("label_noise", json::array());
  history.push_back({{"rate", rate}, {"seed", seed}, {"changed", k}});
  out.provenance["label_noise"] = history;
  return out;
}

struct TargetFixture {
  DatasetManifest unlabeled;  // what training sees
  DatasetManifest labeled;    // same images with labels, for evaluation only
};

// Renders a target-domain image set in one style, writing an unlabeled
// training manifest and a labeled evaluation manifest that share the images.
inline TargetFixture render_target_fixture(const std::vector<std::string>& category_names,
                                           const std::string& style_name, int per_category,
                                           ImageShape shape, std::uint64_t seed, const fs::path& out_dir) {
  require(!category_names.empty(), "target fixture needs categories");
  require(per_category >= 1, "per_category must be >= 1");
  const auto& style = style_by_name(style_name);
  TargetFixture fx;
  for (auto* m : {&fx.unlabeled, &fx.labeled}) {
    m->category_names = category_names;
    m->domain_tag = DomainTag::target;
    m->image_shape = shape;
    m->base_dir = out_dir;
    m->provenance = {{"generator", "procedural:" + style_name}, {"seed", seed}, {"per_category", per_category}};
  }
  for (int c = 0; c < static_cast<int>(category_names.size()); ++c) {
    for (int rep = 0; rep < per_category; ++rep) {
      SampleRecord rec;
      rec.sample_id = "tgt-s" + std::to_string(seed) + "-c" + std::to_string(c) + "-r" + std::to_string(rep);
      rec.image_path = "images/" + rec.sample_id + ".ppm";
      rec.domain_tag = DomainTag::target;
      const auto draw = derive_seed(derive_seed(seed, 0x7467u), static_cast<std::uint64_t>(c),
                                    static_cast<std::uint64_t>(rep));
      write_ppm(procedural_render(c, style, shape, draw), out_dir / rec.image_path);
      fx.unlabeled.records.push_back(rec);
      rec.label = c;
      fx.labeled.records.push_back(rec);
    }
  }
  write_manifest(fx.unlabeled, out_dir / "target.jsonl");
  write_manifest(fx.labeled, out_dir / "target_eval.jsonl");
  return fx;
}

}  // namespace adaptany
