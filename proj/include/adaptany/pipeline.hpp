#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/dataset.hpp"
#include "adaptany/http_clients.hpp"
#include "adaptany/llm.hpp"
#include "adaptany/nnkit.hpp"
#include "adaptany/prompt_engine.hpp"
#include "adaptany/semisl.hpp"
#include "adaptany/splitter.hpp"
#include "adaptany/synthesis.hpp"
#include "adaptany/uda.hpp"

namespace adaptany {

// ---- evaluation -------------------------------------------------------------

struct EvalMetrics {
  double overall_accuracy = 0.0;
  std::vector<std::optional<double>> per_category_accuracy;  // nullopt: no samples of that category
  double mean_per_category_accuracy = 0.0;                   // over categories with samples
  std::vector<std::vector<long>> confusion;                  // [true][predicted]

  long total() const {
    long n = 0;
    for (const auto& row : confusion)
      for (long v : row) n += v;
    return n;
  }

  json to_json() const {
    json per = json::array();
    for (const auto& a : per_category_accuracy) per.push_back(a ? json(*a) : json(nullptr));
    return {{"overall_accuracy", overall_accuracy},
            {"per_category_accuracy", per},
            {"mean_per_category_accuracy", mean_per_category_accuracy},
            {"confusion_matrix", confusion}};
  }
};

inline EvalMetrics evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                        int category_count) {
  require(!truth.empty(), "evaluation set is empty");
  require(truth.size() == predicted.size(), "evaluation needs one prediction per sample");
  require(category_count >= 1, "evaluation needs at least one category");
  EvalMetrics m;
  m.confusion.assign(static_cast<std::size_t>(category_count), std::vector<long>(category_count, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0) throw InvalidArgument("evaluation needs a labeled manifest (sample " + std::to_string(i) + ")");
    require(truth[i] < category_count && predicted[i] >= 0 && predicted[i] < category_count,
            "label or prediction out of range in evaluation");
    ++m.confusion[truth[i]][predicted[i]];
  }
  long correct = 0;
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < category_count; ++c) {
    long row = 0;
    for (long v : m.confusion[c]) row += v;
    correct += m.confusion[c][c];
    if (row == 0) {
      m.per_category_accuracy.push_back(std::nullopt);
      continue;
    }
    const double acc = static_cast<double>(m.confusion[c][c]) / static_cast<double>(row);
    m.per_category_accuracy.push_back(acc);
    sum += acc;
    ++present;
  }
  m.overall_accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.mean_per_category_accuracy = sum / present;
  return m;
}

// Evaluation only: the labels read here never reach a training loop.
inline EvalMetrics evaluate(const nn::ModelState& model, const ImageSet& labeled) {
  require(labeled.size() > 0, "evaluation set is empty");
  if (!labeled.fully_labeled()) throw InvalidArgument("evaluation needs a labeled manifest: " + labeled.origin);
  if (model.category_count != labeled.category_count())
    throw InvalidArgument("model has " + std::to_string(model.category_count) + " categories, evaluation set has " +
                          std::to_string(labeled.category_count()));
  const nn::Matrix p = nn::predict_probabilities(model, labeled.images);
  std::vector<int> predicted;
  for (Eigen::Index i = 0; i < p.rows(); ++i) predicted.push_back(nn::argmax_row(p, i));
  return evaluate_predictions(labeled.labels, predicted, model.category_count);
}

// Per-category + AVG table; one accuracy column per named model.
inline std::string metrics_table(const std::vector<std::string>& category_names,
                                 const std::vector<std::pair<std::string, EvalMetrics>>& columns) {
  std::string out = "category";
  for (const auto& [name, m] : columns) out += "\t" + name;
  out += "\n";
  auto cell = [](std::optional<double> v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
    return std::string(buf);
  };
  for (std::size_t c = 0; c < category_names.size(); ++c) {
    out += category_names[c];
    for (const auto& [name, m] : columns) out += "\t" + cell(m.per_category_accuracy.at(c));
    out += "\n";
  }
  out += "AVG";
  for (const auto& [name, m] : columns) out += "\t" + cell(m.mean_per_category_accuracy);
  out += "\noverall";
  for (const auto& [name, m] : columns) out += "\t" + cell(m.overall_accuracy);
  return out + "\n";
}

// CSV rows: sample_id, label, f0..f{D-1}. The label is the true label when
// the set has one, else the pseudo-label from `table`, else -1.
inline void dump_embeddings(const nn::ModelState& model, const ImageSet& set, const fs::path& out,
                            const PseudoLabelTable* table = nullptr) {
  std::map<std::string, int> pseudo;
  if (table)
    for (const auto& e : table->entries) pseudo[e.sample_id] = e.pseudo_label;
  const nn::Matrix f = nn::features_of(model, set.images);
  std::string csv = "sample_id,label";
  for (Eigen::Index d = 0; d < f.cols(); ++d) csv += ",f" + std::to_string(d);
  csv += "\n";
  char buf[40];
  for (int i = 0; i < set.size(); ++i) {
    const auto& id = set.ids[static_cast<std::size_t>(i)];
    int label = set.labels.empty() ? -1 : set.labels[static_cast<std::size_t>(i)];
    if (label < 0) {
      const auto it = pseudo.find(id);
      if (it != pseudo.end()) label = it->second;
    }
    csv += id + "," + std::to_string(label);
    for (Eigen::Index d = 0; d < f.cols(); ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", f(i, d));
      csv += buf;
    }
    csv += "\n";
  }
  write_file(out, csv);
}

// ---- configuration ----------------------------------------------------------

struct GeneratorConfig {
  std::string kind = "mock";  // mock | remote
  std::string style = "flat";  // mock base style
  std::string url;             // remote endpoint

  json to_json() const { return {{"kind", kind}, {"style", style}, {"url", url}}; }
};

struct LlmConfig {
  fs::path replay_log;  // offline replay; takes precedence over url
  std::string url;      // OpenAI-compatible endpoint
  std::string model = "gpt-3.5-turbo";

  json to_json() const { return {{"replay_log", replay_log.string()}, {"url", url}, {"model", model}}; }
};

struct PipelineConfig {
  TaskDefinition task;
  fs::path target_manifest;                // unlabeled target, the only target input to training
  std::optional<fs::path> eval_manifest;   // labeled target, reports only
  Mechanism prompt_mechanism = Mechanism::simple;
  int prompt_count = 1;
  LlmConfig llm;
  GeneratorConfig generator;
  ImageShape image_shape{16, 16, 3};
  int per_category = 200;
  double noise_rate = 0.0;
  UdaConfig uda;
  SemiConfig semi;
  std::uint64_t seed = 0;  // seeds synthesis, noise and both trainers
  fs::path output_root = "adaptany-run";

  // Trainer configs with the run seed applied.
  UdaConfig uda_config() const {
    UdaConfig c = uda;
    c.seed = seed;
    return c;
  }
  SemiConfig semi_config() const {
    SemiConfig c = semi;
    c.seed = seed;
    return c;
  }

  void validate() const {
    require(!task.categories.empty(), "pipeline: task has no categories");
    require(!target_manifest.empty(), "pipeline: target_manifest is required");
    if (!fs::exists(target_manifest))
      throw InvalidArgument("pipeline: target manifest " + target_manifest.string() + " does not exist");
    const auto target = load_manifest(target_manifest, {false});
    require(target.domain_tag == DomainTag::target, "pipeline: target manifest is not target-domain");
    require(target.category_names == task.category_names(), "pipeline: target categories differ from the task");
    require(target.image_shape == image_shape, "pipeline: target image shape " + target.image_shape.str() +
                                                   " differs from image_shape " + image_shape.str());
    if (eval_manifest) {
      if (!fs::exists(*eval_manifest))
        throw InvalidArgument("pipeline: eval manifest " + eval_manifest->string() + " does not exist");
      const auto eval = load_manifest(*eval_manifest, {false});
      require(eval.domain_tag == DomainTag::target, "pipeline: eval manifest is not target-domain");
      require(eval.category_names == task.category_names(), "pipeline: eval categories differ from the task");
    }
    require(prompt_count >= 1, "pipeline: prompt_count must be >= 1");
    if (prompt_mechanism == Mechanism::gpt) {
      require(!llm.replay_log.empty() || !llm.url.empty(), "pipeline: gpt prompts need llm.replay_log or llm.url");
      if (!llm.replay_log.empty() && !fs::exists(llm.replay_log))
        throw InvalidArgument("pipeline: llm replay log " + llm.replay_log.string() + " does not exist");
    }
    require(generator.kind == "mock" || generator.kind == "remote", "pipeline: generator.kind must be mock or remote");
    if (generator.kind == "mock") style_by_name(generator.style);
    if (generator.kind == "remote") require(!generator.url.empty(), "pipeline: remote generator needs a url");
    require(per_category >= 1, "pipeline: per_category must be >= 1");
    require(noise_rate >= 0.0 && noise_rate <= 1.0, "pipeline: noise_rate must lie in [0,1]");
    uda_config().model.architecture(image_shape);
    uda_config().validate();
    semi_config().validate();
    require(!output_root.empty(), "pipeline: output_root is required");
  }

  json to_json() const {
    json j = {{"task", task.to_json()},
              {"target_manifest", target_manifest.string()},
              {"eval_manifest", eval_manifest ? json(eval_manifest->string()) : json(nullptr)},
              {"prompt_mechanism", to_string(prompt_mechanism)},
              {"prompt_count", prompt_count},
              {"llm", llm.to_json()},
              {"generator", generator.to_json()},
              {"image_shape", image_shape.to_json()},
              {"per_category", per_category},
              {"noise_rate", noise_rate},
              {"uda", uda_config().to_json()},
              {"semi", semi_config().to_json()},
              {"seed", seed},
              {"output_root", output_root.string()}};
    return j;
  }

  // Relative paths resolve against `base` (the config file's directory).
  static PipelineConfig from_json(const json& j, const fs::path& base = {}) {
    auto path = [&](const std::string& s) {
      const fs::path p(s);
      return p.is_relative() && !base.empty() ? base / p : p;
    };
    PipelineConfig c;
    try {
      if (j.contains("task")) {
        c.task = TaskDefinition::from_json(j["task"]);
      } else if (j.contains("task_file")) {
        c.task = TaskDefinition::load(path(j["task_file"].get<std::string>()));
      } else {
        throw InvalidArgument("pipeline config needs 'task' or 'task_file'");
      }
      c.target_manifest = path(j.at("target_manifest").get<std::string>());
      if (j.contains("eval_manifest") && !j["eval_manifest"].is_null())
        c.eval_manifest = path(j["eval_manifest"].get<std::string>());
      if (j.contains("prompt_mechanism")) c.prompt_mechanism = parse_mechanism(j["prompt_mechanism"].get<std::string>());
      c.prompt_count = j.value("prompt_count", c.prompt_count);
      if (j.contains("llm")) {
        const auto& l = j["llm"];
        if (!l.value("replay_log", "").empty()) c.llm.replay_log = path(l["replay_log"].get<std::string>());
        c.llm.url = l.value("url", c.llm.url);
        c.llm.model = l.value("model", c.llm.model);
      }
      if (j.contains("generator")) {
        const auto& g = j["generator"];
        c.generator.kind = g.value("kind", c.generator.kind);
        c.generator.style = g.value("style", c.generator.style);
        c.generator.url = g.value("url", c.generator.url);
      }
      if (j.contains("image_shape")) c.image_shape = ImageShape::from_json(j["image_shape"]);
      c.per_category = j.value("per_category", c.per_category);
      c.noise_rate = j.value("noise_rate", c.noise_rate);
      if (j.contains("uda")) c.uda = UdaConfig::from_json(j["uda"]);
      if (j.contains("semi")) c.semi = SemiConfig::from_json(j["semi"]);
      c.seed = j.value("seed", c.seed);
      if (j.contains("output_root")) c.output_root = path(j["output_root"].get<std::string>());
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("malformed pipeline config: ") + e.what());
    }
    return c;
  }

  static PipelineConfig load(const fs::path& file) { return from_json(read_json(file), file.parent_path()); }
};

// ---- stages -----------------------------------------------------------------

enum class Stage { prompts, synth, train_uda, split, train_semi, eval };
inline constexpr int kStageCount = 6;

inline std::string to_string(Stage s) {
  static const char* names[] = {"prompts", "synth", "train-uda", "split", "train-semi", "eval"};
  return names[static_cast<int>(s)];
}

inline Stage parse_stage(const std::string& s) {
  for (int i = 0; i < kStageCount; ++i)
    if (to_string(static_cast<Stage>(i)) == s) return static_cast<Stage>(i);
  throw InvalidArgument("unknown stage '" + s + "' (known: prompts, synth, train-uda, split, train-semi, eval)");
}

// A stage failure. Keeps the kind of the underlying error.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& kind, const std::string& what)
      : Error(kind, "stage '" + to_string(stage) + "' failed: " + what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

class ResumeError : public Error {
 public:
  explicit ResumeError(const std::string& what) : Error("resume-checksum", what) {}
};

class IsolationError : public Error {
 public:
  explicit IsolationError(const std::string& what) : Error("isolation", what) {}
};

// Artifact paths relative to the output root. A manifest artifact's checksum
// also covers every image it references.
struct Artifact {
  const char* rel;
  bool manifest = false;
};

namespace artifacts {
inline constexpr Artifact prompts{"prompts/prompts.jsonl"};
inline constexpr Artifact synth_raw{"synth/manifest.jsonl", true};
inline constexpr Artifact source{"synth/source.jsonl", true};
inline constexpr Artifact stage2_model{"stage2/model.ckpt"};
inline constexpr Artifact stage2_metrics{"stage2/train_metrics.json"};
inline constexpr Artifact partition{"split/partition.jsonl"};
inline constexpr Artifact stage3_model{"stage3/model.ckpt"};
inline constexpr Artifact stage3_metrics{"stage3/train_metrics.json"};
inline constexpr Artifact metrics{"eval/metrics.json"};
}  // namespace artifacts

struct StageSpec {
  Stage stage;
  const char* dir;
  std::vector<Artifact> consumes;  // produced by earlier stages
  std::vector<Artifact> produces;
};

inline const std::vector<StageSpec>& stage_specs() {
  using namespace artifacts;
  static const std::vector<StageSpec> specs = {
      {Stage::prompts, "prompts", {}, {prompts}},
      {Stage::synth, "synth", {prompts}, {synth_raw, source}},
      {Stage::train_uda, "stage2", {source}, {stage2_model, stage2_metrics}},
      {Stage::split, "split", {stage2_model}, {partition}},
      {Stage::train_semi, "stage3", {stage2_model, partition}, {stage3_model, stage3_metrics}},
      {Stage::eval, "eval", {stage2_model, stage3_model}, {metrics}},
  };
  return specs;
}

// Checksum of a manifest file plus the bytes of every image it lists.
inline std::string manifest_checksum(const fs::path& path) {
  const auto m = load_manifest(path, {false});
  std::uint64_t h = fnv1a(read_file(path));
  for (const auto& r : m.records) {
    h = fnv1a(r.sample_id, h);
    h = fnv1a(read_file(m.resolve(r)), h);
  }
  return hex64(h);
}

inline std::string artifact_checksum(const fs::path& root, const Artifact& a) {
  const fs::path p = root / a.rel;
  return a.manifest ? manifest_checksum(p) : file_checksum(p);
}

// True when `p` is `dir` or lies below it.
inline bool is_within(const fs::path& p, const fs::path& dir) {
  const auto a = fs::weakly_canonical(fs::absolute(p));
  const auto b = fs::weakly_canonical(fs::absolute(dir));
  auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
  return ib == b.end() || (std::next(ib) == b.end() && ib->empty());
}

struct PipelineOptions {
  bool resume = false;
  std::optional<Stage> stop_after;
  std::optional<fs::path> shared_prompts;  // copy this prompt file instead of building one
  LlmClient* llm = nullptr;                // overrides the configured LLM
  T2IClient* generator = nullptr;          // overrides the configured generator
  std::function<void(const std::string&)> log;
};

struct PipelineResult {
  fs::path root;
  std::vector<Stage> executed;
  std::vector<Stage> skipped;
  std::optional<EvalMetrics> stage2_metrics;
  std::optional<EvalMetrics> final_metrics;
};

namespace detail {

inline std::string fingerprint(const std::string& prev, const json& j) { return hex64(fnv1a(j.dump(), fnv1a(prev))); }

class PipelineRun {
 public:
  PipelineRun(const PipelineConfig& cfg, const PipelineOptions& opts) : cfg_(cfg), opts_(opts), root_(cfg.output_root) {}

  PipelineResult execute() {
    fs::create_directories(root_ / ".stages");
    compute_fingerprints();
    const int last = opts_.stop_after ? static_cast<int>(*opts_.stop_after) : kStageCount - 1;
    int first = 0;
    if (opts_.resume) {
      while (first <= last && marker_valid(first)) ++first;
      verify_consumed(first, last);
    }
    PipelineResult res;
    res.root = root_;
    for (int s = 0; s < first; ++s) res.skipped.push_back(static_cast<Stage>(s));
    for (int s = first; s <= last; ++s) {
      const auto stage = static_cast<Stage>(s);
      const auto& spec = stage_specs()[s];
      log("stage " + to_string(stage));
      for (int later = s; later < kStageCount; ++later) fs::remove(marker_path(later));
      fs::remove_all(root_ / spec.dir);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        run_stage(stage);
      } catch (const Error& e) {
        throw StageError(stage, e.kind(), e.what());
      } catch (const std::exception& e) {
        throw StageError(stage, "internal", e.what());
      }
      record_timing(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      write_marker(s);
      res.executed.push_back(stage);
    }
    if (last == kStageCount - 1) {
      const json m = read_json(root_ / artifacts::metrics.rel);
      if (!m.at("stage3").is_null()) res.final_metrics = metrics_from_json(m["stage3"]);
      if (!m.at("stage2").is_null()) res.stage2_metrics = metrics_from_json(m["stage2"]);
    }
    return res;
  }

 private:
  const PipelineConfig& cfg_;
  const PipelineOptions& opts_;
  fs::path root_;
  std::vector<std::string> fp_;

  void log(const std::string& msg) const {
    if (opts_.log) opts_.log(msg);
  }

  fs::path marker_path(int s) const { return root_ / ".stages" / (to_string(static_cast<Stage>(s)) + ".json"); }

  // Each fingerprint chains the previous one, so a config change invalidates
  // its stage and everything after it.
  void compute_fingerprints() {
    json prompts = {{"task", cfg_.task.to_json()},
                    {"mechanism", to_string(cfg_.prompt_mechanism)},
                    {"count", cfg_.prompt_count}};
    if (opts_.shared_prompts) {
      prompts["shared"] = file_checksum(*opts_.shared_prompts);
    } else if (cfg_.prompt_mechanism == Mechanism::gpt) {
      prompts["llm"] = cfg_.llm.replay_log.empty() ? json(cfg_.llm.url + "|" + cfg_.llm.model)
                                                   : json(file_checksum(cfg_.llm.replay_log));
    }
    const std::string target = manifest_checksum(cfg_.target_manifest);
    const std::string eval = cfg_.eval_manifest ? manifest_checksum(*cfg_.eval_manifest) : "";
    fp_.push_back(fingerprint("", prompts));
    fp_.push_back(fingerprint(fp_.back(), {{"generator", cfg_.generator.to_json()},
                                           {"image_shape", cfg_.image_shape.to_json()},
                                           {"per_category", cfg_.per_category},
                                           {"noise_rate", cfg_.noise_rate},
                                           {"seed", cfg_.seed}}));
    fp_.push_back(fingerprint(fp_.back(), {{"uda", cfg_.uda_config().to_json()}, {"target", target}, {"eval", eval}}));
    fp_.push_back(fingerprint(fp_.back(), {{"target", target}}));
    fp_.push_back(fingerprint(fp_.back(), {{"semi", cfg_.semi_config().to_json()}}));
    fp_.push_back(fingerprint(fp_.back(), {{"eval", eval}}));
  }

  bool marker_valid(int s) const {
    if (!fs::exists(marker_path(s))) return false;
    try {
      const json m = read_json(marker_path(s));
      return m.at("fingerprint").get<std::string>() == fp_[s];
    } catch (const Error&) {
      return false;
    } catch (const json::exception&) {
      return false;
    }
  }

  // Artifacts that stages [first, last] read from already-completed stages
  // must still match the checksums recorded when they were written.
  void verify_consumed(int first, int last) const {
    for (int s = first; s <= last; ++s) {
      for (const auto& a : stage_specs()[s].consumes) {
        const int producer = producer_of(a);
        if (producer >= first) continue;
        const json m = read_json(marker_path(producer));
        const std::string want = m.at("outputs").at(a.rel).get<std::string>();
        std::string got;
        try {
          got = artifact_checksum(root_, a);
        } catch (const Error& e) {
          throw ResumeError(std::string("cannot verify ") + a.rel + ": " + e.what());
        }
        if (got != want)
          throw ResumeError(std::string(a.rel) + " changed since stage '" + to_string(static_cast<Stage>(producer)) +
                            "' completed (checksum " + got + ", recorded " + want + ")");
      }
    }
  }

  static int producer_of(const Artifact& a) {
    for (const auto& spec : stage_specs())
      for (const auto& p : spec.produces)
        if (std::string_view(p.rel) == a.rel) return static_cast<int>(spec.stage);
    throw Error("internal", std::string("no stage produces ") + a.rel);
  }

  void write_marker(int s) const {
    const auto& spec = stage_specs()[s];
    json inputs = json::object(), outputs = json::object();
    for (const auto& a : spec.consumes) inputs[a.rel] = artifact_checksum(root_, a);
    for (const auto& a : spec.produces) outputs[a.rel] = artifact_checksum(root_, a);
    for (const auto& p : external_inputs(spec.stage)) inputs[p.string()] = file_checksum(p);
    const json m = {{"stage", to_string(spec.stage)}, {"fingerprint", fp_[s]}, {"inputs", inputs}, {"outputs", outputs}};
    write_file(marker_path(s), m.dump(2) + "\n");
  }

  // Files outside the output root that a stage reads.
  std::vector<fs::path> external_inputs(Stage s) const {
    std::vector<fs::path> out;
    if (s == Stage::prompts && opts_.shared_prompts) out.push_back(*opts_.shared_prompts);
    if (s == Stage::prompts && !opts_.shared_prompts && cfg_.prompt_mechanism == Mechanism::gpt &&
        !cfg_.llm.replay_log.empty())
      out.push_back(cfg_.llm.replay_log);
    if (s == Stage::train_uda || s == Stage::split || s == Stage::train_semi) out.push_back(cfg_.target_manifest);
    if ((s == Stage::train_uda || s == Stage::train_semi || s == Stage::eval) && cfg_.eval_manifest)
      out.push_back(*cfg_.eval_manifest);
    return out;
  }

  void record_timing(Stage s, double seconds) const {
    const fs::path p = root_ / "timing.json";
    json t = fs::exists(p) ? read_json(p) : json::object();
    t[to_string(s)] = seconds;
    write_file(p, t.dump(2) + "\n");
  }

  ImageSet load_set(const fs::path& path, const std::string& origin) const {
    ImageSet s = load_images(path);
    s.origin = origin;
    return s;
  }

  ImageSet target_set() const { return load_set(cfg_.target_manifest, cfg_.target_manifest.string()); }

  std::optional<ImageSet> eval_set() const {
    if (!cfg_.eval_manifest) return std::nullopt;
    return load_set(*cfg_.eval_manifest, cfg_.eval_manifest->string());
  }

  void run_stage(Stage s) {
    switch (s) {
      case Stage::prompts: return run_prompts();
      case Stage::synth: return run_synth();
      case Stage::train_uda: return run_uda();
      case Stage::split: return run_split();
      case Stage::train_semi: return run_semi();
      case Stage::eval: return run_eval();
    }
  }

  void run_prompts() {
    const fs::path out = root_ / artifacts::prompts.rel;
    if (opts_.shared_prompts) {
      const auto set = load_prompt_set(*opts_.shared_prompts, cfg_.task.task_id);
      require(categories_from_prompts(set) == cfg_.task.category_names(), "shared prompts do not match the task");
      write_file(out, read_file(*opts_.shared_prompts));
      return;
    }
    std::unique_ptr<LlmClient> owned;
    std::unique_ptr<RecordingLlmClient> recorder;
    LlmClient* llm = opts_.llm;
    if (!llm && cfg_.prompt_mechanism == Mechanism::gpt) {
      if (!cfg_.llm.replay_log.empty()) {
        owned = std::make_unique<ReplayLlmClient>(cfg_.llm.replay_log);
      } else {
        owned = std::make_unique<HttpLlmClient>(cfg_.llm.url, cfg_.llm.model);
      }
      llm = owned.get();
    }
    if (llm && cfg_.llm.replay_log.empty()) {
      recorder = std::make_unique<RecordingLlmClient>(*llm, root_ / "prompts" / "llm_log.jsonl");
      llm = recorder.get();
    }
    PromptBuildOptions po;
    po.count = cfg_.prompt_count;
    write_prompt_set(build_prompt_set(cfg_.task, cfg_.prompt_mechanism, llm, po), out);
  }

  void run_synth() {
    const auto prompts = load_prompt_set(root_ / artifacts::prompts.rel, cfg_.task.task_id);
    std::unique_ptr<T2IClient> owned;
    T2IClient* gen = opts_.generator;
    if (!gen) {
      if (cfg_.generator.kind == "remote") {
        owned = std::make_unique<HttpT2IClient>(cfg_.generator.url);
      } else {
        owned = std::make_unique<MockT2IClient>(cfg_.generator.style);
      }
      gen = owned.get();
    }
    SynthesisOptions so;
    so.image_shape = cfg_.image_shape;
    const auto raw = synthesize(prompts, *gen, cfg_.per_category, root_ / "synth", cfg_.seed, so,
                                cfg_.task.category_names());
    auto noisy = inject_label_noise(raw, cfg_.noise_rate, cfg_.seed);
    write_manifest(noisy, root_ / artifacts::source.rel);
  }

  void run_uda() {
    const ImageSet source = load_set(root_ / artifacts::source.rel, artifacts::source.rel);
    const ImageSet target = target_set();
    const auto eval = eval_set();
    const UdaData data{source, &target, eval ? &*eval : nullptr, {}};
    const auto res = default_registry().run(data, cfg_.uda_config());
    nn::write_checkpoint(res.model, root_ / artifacts::stage2_model.rel);
    res.report.write(root_ / "stage2");
  }

  void run_split() {
    const auto model = nn::load_checkpoint(root_ / artifacts::stage2_model.rel);
    const ImageSet target = target_set();
    const auto table = pseudo_label(model, target);
    const PartitionFile pf{table, split_by_category_mean(table), cfg_.target_manifest.string(), target.category_names};
    write_partition(pf, root_ / artifacts::partition.rel);
  }

  // Stage 3 reads the stage-2 checkpoint, the partition and target-domain
  // manifests. Anything under synth/ is refused before and after training.
  void run_semi() {
    const fs::path synth = root_ / "synth";
    std::vector<fs::path> reads = {root_ / artifacts::stage2_model.rel, root_ / artifacts::partition.rel,
                                   cfg_.target_manifest};
    if (cfg_.eval_manifest) reads.push_back(*cfg_.eval_manifest);
    for (const auto& p : reads)
      if (is_within(p, synth)) throw IsolationError("stage 3 would read " + p.string() + " from the synthetic directory");

    const auto init = nn::load_checkpoint(root_ / artifacts::stage2_model.rel);
    const auto pf = load_partition(root_ / artifacts::partition.rel);
    require(pf.target_manifest == cfg_.target_manifest.string(), "partition was made for another target manifest");
    const ImageSet target = target_set();
    const auto [labeled, unlabeled] = semi_inputs(pf, TargetImages::from(target));
    const auto eval = eval_set();
    SemiObserver obs;
    if (eval) obs.eval = &*eval;
    auto res = train_semisl(init, labeled, unlabeled, cfg_.semi_config(), obs);
    res.report.inputs.push_back({"partition", artifacts::partition.rel, "target"});
    for (const auto& in : res.report.inputs)
      if (in.domain != "target")
        throw IsolationError("stage-3 input '" + in.role + "' (" + in.origin + ") is " + in.domain + "-domain");
    nn::write_checkpoint(res.model, root_ / artifacts::stage3_model.rel);
    res.report.write(root_ / "stage3");
  }

  void run_eval() {
    const auto stage2 = nn::load_checkpoint(root_ / artifacts::stage2_model.rel);
    const auto stage3 = nn::load_checkpoint(root_ / artifacts::stage3_model.rel);
    json m = {{"category_names", cfg_.task.category_names()},
              {"stage2_checkpoint", nn::checkpoint_id(stage2)},
              {"stage3_checkpoint", nn::checkpoint_id(stage3)},
              {"stage2", nullptr},
              {"stage3", nullptr}};
    std::string report = "task: " + cfg_.task.task_id + "\nseed: " + std::to_string(cfg_.seed) + "\n";
    if (const auto eval = eval_set()) {
      const auto m2 = evaluate(stage2, *eval);
      const auto m3 = evaluate(stage3, *eval);
      m["stage2"] = m2.to_json();
      m["stage3"] = m3.to_json();
      report += "eval_manifest: " + eval->origin + "\n\n" +
                metrics_table(cfg_.task.category_names(), {{"stage-2", m2}, {"stage-3", m3}});
    } else {
      report += "no labeled evaluation manifest configured\n";
    }
    write_file(root_ / artifacts::metrics.rel, m.dump(2) + "\n");
    write_file(root_ / "eval" / "report.txt", report);
  }

  static EvalMetrics metrics_from_json(const json& j) {
    EvalMetrics m;
    m.overall_accuracy = j.at("overall_accuracy").get<double>();
    m.mean_per_category_accuracy = j.at("mean_per_category_accuracy").get<double>();
    for (const auto& a : j.at("per_category_accuracy"))
      m.per_category_accuracy.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    m.confusion = j.at("confusion_matrix").get<std::vector<std::vector<long>>>();
    return m;
  }
};

}  // namespace detail

// prompts -> synth -> train-uda -> split -> train-semi -> eval. Every stage
// writes under cfg.output_root and leaves a marker with its config
// fingerprint and output checksums; with `resume`, completed stages whose
// fingerprint still matches are skipped after their consumed outputs are
// re-verified.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineOptions& opts = {}) {
  cfg.validate();
  return detail::PipelineRun(cfg, opts).execute();
}

// ---- image-count ablation ---------------------------------------------------

struct AblationRow {
  int per_category = 0;
  double stage2_accuracy = 0.0;
  double final_accuracy = 0.0;
  double final_mean_per_category = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  std::string tsv() const {
    std::string out = "per_category\tstage2_accuracy\tfinal_accuracy\tfinal_mean_per_category\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\n", r.per_category, r.stage2_accuracy, r.final_accuracy,
                    r.final_mean_per_category);
      out += buf;
    }
    return out;
  }

  json to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows)
      rows_j.push_back({{"per_category", r.per_category},
                        {"stage2_accuracy", r.stage2_accuracy},
                        {"final_accuracy", r.final_accuracy},
                        {"final_mean_per_category", r.final_mean_per_category}});
    return {{"rows", rows_j}};
  }
};

// One pipeline run per count under <root>/count-<n>, all with the same seed
// and one shared prompt file, so only the number of images changes.
inline AblationTable ablate_image_count(const PipelineConfig& cfg, const std::vector<int>& counts,
                                        const PipelineOptions& opts = {}) {
  require(!counts.empty(), "ablation needs at least one count");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] >= 1, "ablation counts must be >= 1");
    if (i > 0 && counts[i] == counts[i - 1])
      throw InvalidArgument("duplicate ablation count " + std::to_string(counts[i]));
    if (i > 0) require(counts[i] > counts[i - 1], "ablation counts must be sorted ascending");
  }
  require(cfg.eval_manifest.has_value(), "ablation needs a labeled eval_manifest");

  PipelineConfig shared = cfg;
  shared.output_root = cfg.output_root / "shared";
  PipelineOptions prompt_opts = opts;
  prompt_opts.stop_after = Stage::prompts;
  run_pipeline(shared, prompt_opts);
  const fs::path prompts = shared.output_root / artifacts::prompts.rel;

  AblationTable table;
  for (int n : counts) {
    PipelineConfig run = cfg;
    run.per_category = n;
    run.output_root = cfg.output_root / ("count-" + std::to_string(n));
    PipelineOptions o = opts;
    o.stop_after.reset();
    o.shared_prompts = prompts;
    const auto res = run_pipeline(run, o);
    table.rows.push_back({n, res.stage2_metrics->overall_accuracy, res.final_metrics->overall_accuracy,
                          res.final_metrics->mean_per_category_accuracy});
  }
  write_file(cfg.output_root / "ablation.tsv", table.tsv());
  write_file(cfg.output_root / "ablation.json", table.to_json().dump(2) + "\n");
  return table;
}

}  // namespace adaptany
