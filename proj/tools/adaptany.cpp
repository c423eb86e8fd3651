// adaptany: command-line front end for the adaptation pipeline.
// Exit status is 0 only when the requested command fully succeeds.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "adaptany/pipeline.hpp"

using namespace adaptany;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ImageShape parse_shape(const std::string& s) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> h >> x >> w) || x != 'x' || h < 1 || w < 1)
    throw InvalidArgument("image shape must look like 16x16, got '" + s + "'");
  return {h, w, 3};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

json config_or_empty(const Globals& g) { return g.config.empty() ? json::object() : read_json(g.config); }

void require_out(const Globals& g) { require(!g.out.empty(), "--out is required"); }

ImageSet load_named(const std::string& path) { return load_images(fs::path(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptany: synthetic-source domain adaptation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file for the command");
  app.add_option("--seed", g.seed, "seed; overrides the config seed");
  app.add_option("--out", g.out, "output file or directory");

  // prompts
  auto* prompts = app.add_subcommand("prompts", "build a prompt set for a task");
  std::string mechanism = "simple", task_file, replay, llm_url, llm_model = "gpt-3.5-turbo";
  int count = 1;
  prompts->add_option("--mechanism", mechanism)->check(CLI::IsMember({"simple", "domain", "gpt"}));
  prompts->add_option("--task", task_file, "task definition JSON")->required()->check(CLI::ExistingFile);
  prompts->add_option("--count", count, "prompts per category (gpt)");
  prompts->add_option("--replay", replay, "answer LLM requests from this log (offline)")->check(CLI::ExistingFile);
  prompts->add_option("--llm-url", llm_url, "OpenAI-compatible endpoint");
  prompts->add_option("--llm-model", llm_model);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic source manifest");
  std::string prompt_file, generator = "mock", style = "flat", gen_url, shape = "16x16";
  int per_category = 200;
  synth->add_option("--prompts", prompt_file)->required()->check(CLI::ExistingFile);
  synth->add_option("--generator", generator)->check(CLI::IsMember({"mock", "remote"}));
  synth->add_option("--style", style, "mock generator base style");
  synth->add_option("--url", gen_url, "remote generator endpoint");
  synth->add_option("--per-category", per_category);
  synth->add_option("--shape", shape, "HxW");

  // noise
  auto* noise = app.add_subcommand("noise", "inject label noise into a synthetic manifest");
  std::string manifest;
  double rate = 0.0;
  noise->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  noise->add_option("--rate", rate)->required();

  // train-uda
  auto* uda = app.add_subcommand("train-uda", "stage 2: train on synthetic source and unlabeled target");
  std::string trainer, source, target, eval_manifest;
  uda->add_option("--trainer", trainer, "source_only | dann | mcd (or a registered plugin)");
  uda->add_option("--source", source)->required()->check(CLI::ExistingFile);
  uda->add_option("--target", target)->check(CLI::ExistingFile);
  uda->add_option("--eval", eval_manifest, "labeled target manifest, reported only")->check(CLI::ExistingFile);

  // split
  auto* split = app.add_subcommand("split", "pseudo-label the target and split by per-category mean confidence");
  std::string checkpoint;
  split->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  split->add_option("--target", target)->required()->check(CLI::ExistingFile);

  // train-semi
  auto* semi = app.add_subcommand("train-semi", "stage 3: semi-supervised training on the split target");
  std::string method, init, partition;
  semi->add_option("--method", method)->check(CLI::IsMember({"mixmatch", "fixmatch"}));
  semi->add_option("--init", init)->required()->check(CLI::ExistingFile);
  semi->add_option("--partition", partition)->required()->check(CLI::ExistingFile);
  semi->add_option("--target", target)->required()->check(CLI::ExistingFile);
  semi->add_option("--eval", eval_manifest, "labeled target manifest, reported only")->check(CLI::ExistingFile);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled manifest");
  eval->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run all stages end to end");
  bool resume = false;
  std::string stop_after;
  pipeline->add_flag("--resume", resume, "skip stages that already completed with the same config");
  pipeline->add_option("--stop-after", stop_after, "last stage to run");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "image-count ablation");
  std::string counts = "50,100,200";
  ablate->add_option("--counts", counts, "ascending per-category counts, comma separated");
  ablate->add_flag("--resume", resume);

  // dump-embeddings
  auto* dump = app.add_subcommand("dump-embeddings", "write per-sample feature vectors as CSV");
  dump->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  dump->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  dump->add_option("--partition", partition, "pseudo-labels for unlabeled samples")->check(CLI::ExistingFile);

  // fixture
  auto* fixture = app.add_subcommand("fixture", "render a procedural target domain (target.jsonl, target_eval.jsonl)");
  std::string categories, fixture_style = "textured";
  fixture->add_option("--categories", categories, "comma separated names")->required();
  fixture->add_option("--style", fixture_style);
  fixture->add_option("--per-category", per_category);
  fixture->add_option("--shape", shape, "HxW");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::uint64_t seed = g.seed.value_or(0);
    if (*prompts) {
      require_out(g);
      const auto task = TaskDefinition::load(task_file);
      std::unique_ptr<LlmClient> llm;
      if (!replay.empty()) {
        llm = std::make_unique<ReplayLlmClient>(replay);
      } else if (!llm_url.empty()) {
        llm = std::make_unique<HttpLlmClient>(llm_url, llm_model);
      }
      PromptBuildOptions po;
      po.count = count;
      const auto set = build_prompt_set(task, parse_mechanism(mechanism), llm.get(), po);
      write_prompt_set(set, g.out);
      std::cout << set.records.size() << " prompts -> " << g.out << "\n";
    } else if (*synth) {
      require_out(g);
      const auto set = load_prompt_set(prompt_file);
      std::unique_ptr<T2IClient> gen;
      if (generator == "remote") {
        gen = std::make_unique<HttpT2IClient>(gen_url);
      } else {
        gen = std::make_unique<MockT2IClient>(style);
      }
      SynthesisOptions so;
      so.image_shape = parse_shape(shape);
      const auto m = synthesize(set, *gen, per_category, g.out, seed, so);
      std::cout << m.size() << " images -> " << (fs::path(g.out) / so.manifest_name).string() << "\n";
    } else if (*noise) {
      require_out(g);
      const auto noisy = inject_label_noise(load_manifest(manifest), rate, seed);
      // Image paths stay relative to the source manifest's directory.
      require(fs::absolute(g.out).parent_path() == fs::absolute(manifest).parent_path(),
              "--out must sit next to the input manifest so image paths still resolve");
      write_manifest(noisy, g.out);
      std::cout << noisy.provenance["label_noise"].back()["changed"] << " labels changed -> " << g.out << "\n";
    } else if (*uda) {
      require_out(g);
      UdaConfig cfg = UdaConfig::from_json(config_or_empty(g));
      if (!trainer.empty()) cfg.trainer_id = trainer;
      if (g.seed) cfg.seed = *g.seed;
      const ImageSet S = load_named(source);
      std::optional<ImageSet> T, E;
      if (!target.empty()) T = load_named(target);
      if (!eval_manifest.empty()) E = load_named(eval_manifest);
      const auto res = default_registry().run({S, T ? &*T : nullptr, E ? &*E : nullptr, {}}, cfg);
      nn::write_checkpoint(res.model, fs::path(g.out) / "model.ckpt");
      res.report.write(g.out);
      std::cout << res.report.text();
    } else if (*split) {
      require_out(g);
      const auto model = nn::load_checkpoint(checkpoint);
      const ImageSet T = load_named(target);
      const auto table = pseudo_label(model, T);
      const PartitionFile pf{table, split_by_category_mean(table), target, T.category_names};
      write_partition(pf, g.out);
      std::cout << pf.partition.confident_ids.size() << " confident, " << pf.partition.unconfident_ids.size()
                << " unconfident -> " << g.out << "\n";
    } else if (*semi) {
      require_out(g);
      SemiConfig cfg = SemiConfig::from_json(config_or_empty(g));
      if (!method.empty()) cfg.method = parse_semi_method(method);
      if (g.seed) cfg.seed = *g.seed;
      const auto model = nn::load_checkpoint(init);
      const auto pf = load_partition(partition);
      const auto [L, U] = semi_inputs(pf, TargetImages::from(load_named(target)));
      std::optional<ImageSet> E;
      if (!eval_manifest.empty()) E = load_named(eval_manifest);
      SemiObserver obs;
      if (E) obs.eval = &*E;
      const auto res = train_semisl(model, L, U, cfg, obs);
      nn::write_checkpoint(res.model, fs::path(g.out) / "model.ckpt");
      res.report.write(g.out);
      std::cout << res.report.text();
    } else if (*eval) {
      const auto model = nn::load_checkpoint(checkpoint);
      const ImageSet E = load_named(manifest);
      const auto m = evaluate(model, E);
      std::cout << metrics_table(E.category_names, {{"accuracy", m}});
      if (!g.out.empty()) write_file(g.out, m.to_json().dump(2) + "\n");
    } else if (*pipeline || *ablate) {
      require(!g.config.empty(), "--config is required");
      auto cfg = PipelineConfig::load(g.config);
      if (g.seed) cfg.seed = *g.seed;
      if (!g.out.empty()) cfg.output_root = g.out;
      PipelineOptions opts;
      opts.resume = resume;
      opts.log = [](const std::string& msg) { std::cerr << msg << "\n"; };
      if (*pipeline) {
        if (!stop_after.empty()) opts.stop_after = parse_stage(stop_after);
        const auto res = run_pipeline(cfg, opts);
        for (auto s : res.skipped) std::cout << "skipped " << to_string(s) << "\n";
        for (auto s : res.executed) std::cout << "ran " << to_string(s) << "\n";
        if (res.final_metrics) std::cout << read_file(cfg.output_root / "eval" / "report.txt");
      } else {
        std::vector<int> ns;
        for (const auto& s : split_list(counts)) ns.push_back(std::stoi(s));
        std::cout << ablate_image_count(cfg, ns, opts).tsv();
      }
    } else if (*dump) {
      require_out(g);
      const auto model = nn::load_checkpoint(checkpoint);
      const ImageSet set = load_named(manifest);
      std::optional<PartitionFile> pf;
      if (!partition.empty()) pf = load_partition(partition);
      dump_embeddings(model, set, g.out, pf ? &pf->table : nullptr);
      std::cout << set.size() << " rows -> " << g.out << "\n";
    } else if (*fixture) {
      require_out(g);
      const auto fx = render_target_fixture(split_list(categories), fixture_style, per_category,
                                            parse_shape(shape), seed, g.out);
      std::cout << fx.unlabeled.size() << " target images -> " << g.out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
