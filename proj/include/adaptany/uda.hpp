#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/dataset.hpp"
#include "adaptany/nnkit.hpp"

namespace adaptany {

struct ModelConfig {
  std::vector<int> conv_channels{16, 32, 64};
  int feature_dim = 128;
  int domain_hidden = 64;

  nn::Architecture architecture(ImageShape input) const {
    nn::Architecture a;
    a.input = input;
    a.conv_channels = conv_channels;
    a.feature_dim = feature_dim;
    a.domain_hidden = domain_hidden;
    a.validate();
    return a;
  }
  json to_json() const {
    return {{"conv_channels", conv_channels}, {"feature_dim", feature_dim}, {"domain_hidden", domain_hidden}};
  }
  static ModelConfig from_json(const json& j) {
    ModelConfig m;
    m.conv_channels = j.value("conv_channels", m.conv_channels);
    m.feature_dim = j.value("feature_dim", m.feature_dim);
    m.domain_hidden = j.value("domain_hidden", m.domain_hidden);
    return m;
  }
};

struct UdaConfig {
  std::string trainer_id = "dann";
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double clip_norm = 5.0;    // global gradient-norm cap, 0 disables
  double dann_gamma = 10.0;  // lambda_p = 2 / (1 + exp(-gamma p)) - 1
  double dann_weight = 1.0;  // reversal coefficient is dann_weight * lambda_p
  double head_lr_mult = 1.0; // lr factor for heads relative to the extractor
  int mcd_inner_steps = 4;
  std::string lr_schedule = "constant";  // see nn::scheduled_lr
  bool augment = true;       // weak augmentation of training batches
  std::uint64_t seed = 0;
  ModelConfig model;

  void validate() const {
    require(epochs >= 1, "uda: epochs must be >= 1");
    require(batch_size >= 1, "uda: batch_size must be >= 1");
    require(lr > 0.0, "uda: lr must be > 0");
    require(momentum >= 0.0 && weight_decay >= 0.0 && clip_norm >= 0.0,
            "uda: momentum, weight_decay and clip_norm must be >= 0");
    require(mcd_inner_steps >= 1, "uda: mcd_inner_steps must be >= 1");
    require(dann_gamma >= 0.0 && dann_weight >= 0.0, "uda: dann_gamma and dann_weight must be >= 0");
    require(head_lr_mult > 0.0, "uda: head_lr_mult must be > 0");
    nn::scheduled_lr(lr, lr_schedule, 0.0);  // throws on an unknown schedule
  }

  json to_json() const {
    return {{"trainer_id", trainer_id}, {"epochs", epochs},       {"batch_size", batch_size},
            {"lr", lr},                 {"momentum", momentum},   {"weight_decay", weight_decay},
            {"clip_norm", clip_norm},
            {"dann_gamma", dann_gamma}, {"dann_weight", dann_weight}, {"head_lr_mult", head_lr_mult}, {"mcd_inner_steps", mcd_inner_steps}, {"lr_schedule", lr_schedule},
            {"augment", augment},       {"seed", seed},           {"model", model.to_json()}};
  }

  static UdaConfig from_json(const json& j) {
    UdaConfig c;
    c.trainer_id = j.value("trainer_id", c.trainer_id);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.dann_gamma = j.value("dann_gamma", c.dann_gamma);
    c.dann_weight = j.value("dann_weight", c.dann_weight);
    c.head_lr_mult = j.value("head_lr_mult", c.head_lr_mult);
    c.mcd_inner_steps = j.value("mcd_inner_steps", c.mcd_inner_steps);
    c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
    c.augment = j.value("augment", c.augment);
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
    return c;
  }
};

struct InputRef {
  std::string role;    // e.g. "source", "target", "init", "partition"
  std::string origin;  // path or id
  std::string domain;  // "synthetic", "target" or "model"

  bool operator==(const InputRef&) const = default;
};

struct TrainReport {
  std::string stage_tag;
  std::string trainer_id;
  std::map<std::string, std::vector<double>> epoch_losses;
  std::optional<double> final_target_accuracy;
  double wall_clock_seconds = 0.0;
  json config;
  std::vector<InputRef> inputs;
  std::optional<std::string> init_checkpoint;  // checkpoint id the run started from

  // Everything except wall-clock time, so it is reproducible byte for byte.
  json metrics_json() const {
    json inputs_j = json::array();
    for (const auto& i : inputs) inputs_j.push_back({{"role", i.role}, {"origin", i.origin}, {"domain", i.domain}});
    return {{"stage_tag", stage_tag},
            {"trainer_id", trainer_id},
            {"epoch_losses", epoch_losses},
            {"final_target_accuracy",
             final_target_accuracy ? json(*final_target_accuracy) : json(nullptr)},
            {"config", config},
            {"inputs", inputs_j},
            {"init_checkpoint", init_checkpoint ? json(*init_checkpoint) : json(nullptr)}};
  }

  std::string text() const {
    std::ostringstream out;
    out << "stage: " << stage_tag << "\ntrainer: " << trainer_id << "\n";
    out << "wall_clock_seconds: " << wall_clock_seconds << "\n";
    if (final_target_accuracy) out << "final_target_accuracy: " << *final_target_accuracy << "\n";
    if (init_checkpoint) out << "init_checkpoint: " << *init_checkpoint << "\n";
    out << "inputs:\n";
    for (const auto& i : inputs) out << "  " << i.role << " [" << i.domain << "] " << i.origin << "\n";
    out << "epoch";
    for (const auto& [name, series] : epoch_losses) out << "\t" << name;
    out << "\n";
    const std::size_t n = epoch_losses.empty() ? 0 : epoch_losses.begin()->second.size();
    for (std::size_t e = 0; e < n; ++e) {
      out << e + 1;
      for (const auto& [name, series] : epoch_losses) out << "\t" << series[e];
      out << "\n";
    }
    return out.str();
  }

  void write(const fs::path& dir) const {
    write_file(dir / "report.txt", text());
    write_file(dir / "train_metrics.json", metrics_json().dump(2) + "\n");
  }
};

struct UdaResult {
  nn::ModelState model;
  TrainReport report;
};

// Inputs of a stage-2 run. Target labels, if any, are never read for
// training; `eval` (labeled target) only feeds the report.
struct UdaData {
  const ImageSet& source;
  const ImageSet* target = nullptr;
  const ImageSet* eval = nullptr;
  std::function<void(int epoch, const nn::ModelState&)> on_epoch = {};  // observer only
};

inline double accuracy(const nn::ModelState& model, const ImageSet& labeled) {
  require(labeled.fully_labeled(), "accuracy needs a fully labeled set");
  const nn::Matrix p = nn::predict_probabilities(model, labeled.images);
  int correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    correct += nn::argmax_row(p, i) == labeled.labels[static_cast<std::size_t>(i)];
  return static_cast<double>(correct) / static_cast<double>(p.rows());
}

// Seeded per-epoch permutations; a stream for the target side cycles across
// epoch boundaries.
class EpochSampler {
 public:
  EpochSampler(int n, std::uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

  std::vector<int> next(int count) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
      if (cursor_ == n_) reshuffle();
      out.push_back(order_[static_cast<std::size_t>(cursor_++)]);
    }
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(static_cast<std::size_t>(n_));
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(derive_seed(seed_, round_++));
    rng.shuffle(order_.begin(), order_.end());
    cursor_ = 0;
  }
  int n_;
  std::uint64_t seed_;
  std::uint64_t round_ = 0;
  std::vector<int> order_;
  int cursor_ = 0;
};

// ---- losses shared by the trainers and the gradient checks -----------------

// Cross-entropy of every classifier head on a labeled batch (summed over heads).
inline nn::LossEval supervised_loss(const nn::ModelState& model, const nn::Batch& batch,
                                    const std::vector<std::string>& heads) {
  require(batch.labels.has_value(), "supervised loss needs labels");
  nn::LossEval out;
  nn::ExtractorTape tape;
  const nn::Matrix feats = nn::extract_features(model, batch.images, &tape);
  nn::Matrix dfeat = nn::Matrix::Zero(feats.rows(), feats.cols());
  for (const auto& h : heads) {
    nn::HeadTape ht;
    const auto ce = nn::cross_entropy(nn::head_forward(model, h, feats, &ht), *batch.labels);
    out.parts["cls_" + h] = ce.loss;
    out.loss += ce.loss;
    dfeat += nn::head_backward(model, h, feats, ht, ce.dlogits, out.grads);
  }
  nn::extractor_backward(model, tape, dfeat, out.grads[nn::kExtractor]);
  return out;
}

inline double dann_lambda(double progress, double gamma) {
  return 2.0 / (1.0 + std::exp(-gamma * progress)) - 1.0;
}

// DANN objective on a mixed batch (domain_flags: 1 = source, 0 = target;
// labels are read for source rows only). One extractor pass serves both the
// classifier and the domain discriminator. The discriminator receives the
// ordinary gradient of its BCE; the extractor receives the classifier
// gradient plus the BCE gradient passed through a gradient reversal with
// coefficient `lambda`. Reported loss = cls + domain.
inline nn::LossEval dann_loss(const nn::ModelState& model, const nn::Batch& mixed, double lambda) {
  require(mixed.domain_flags.has_value(), "dann loss needs domain flags");
  require(mixed.labels.has_value(), "dann loss needs labels for source rows");
  const auto& flags = *mixed.domain_flags;
  std::vector<int> src_rows, src_labels;
  for (int i = 0; i < mixed.size(); ++i)
    if (flags[static_cast<std::size_t>(i)]) {
      src_rows.push_back(i);
      src_labels.push_back((*mixed.labels)[static_cast<std::size_t>(i)]);
    }
  require(!src_rows.empty(), "dann loss needs at least one source row");

  nn::LossEval out;
  nn::ExtractorTape tape;
  const nn::Matrix feats = nn::extract_features(model, mixed.images, &tape);
  nn::Matrix src_feats(static_cast<Eigen::Index>(src_rows.size()), feats.cols());
  for (std::size_t i = 0; i < src_rows.size(); ++i) src_feats.row(static_cast<Eigen::Index>(i)) = feats.row(src_rows[i]);

  nn::HeadTape cls_tape;
  const auto ce = nn::cross_entropy(nn::head_forward(model, nn::kMainHead, src_feats, &cls_tape), src_labels);
  const nn::Matrix dsrc = nn::head_backward(model, nn::kMainHead, src_feats, cls_tape, ce.dlogits, out.grads);

  const nn::GradientReversal grl{lambda};
  nn::HeadTape dom_tape;
  const nn::Matrix grl_feats = grl.forward(feats);
  const auto bce = nn::binary_cross_entropy(nn::head_forward(model, nn::kDomainHead, grl_feats, &dom_tape), flags);
  const nn::Matrix ddom = nn::head_backward(model, nn::kDomainHead, grl_feats, dom_tape, bce.dlogits, out.grads);

  nn::Matrix dfeat = grl.backward(ddom);
  for (std::size_t i = 0; i < src_rows.size(); ++i) dfeat.row(src_rows[i]) += dsrc.row(static_cast<Eigen::Index>(i));
  nn::extractor_backward(model, tape, dfeat, out.grads[nn::kExtractor]);
  out.parts["cls"] = ce.loss;
  out.parts["domain"] = bce.loss;
  out.loss = ce.loss + bce.loss;
  return out;
}

inline nn::Batch mixed_batch(const nn::Batch& source, const nn::Batch& target) {
  nn::Batch m;
  m.shape = source.shape;
  m.images.resize(source.images.rows() + target.images.rows(), source.images.cols());
  m.images.topRows(source.images.rows()) = source.images;
  m.images.bottomRows(target.images.rows()) = target.images;
  std::vector<int> labels = source.labels.value();
  labels.resize(static_cast<std::size_t>(m.images.rows()), 0);  // placeholder for target rows, never read
  m.labels = std::move(labels);
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(m.images.rows()), 0);
  std::fill_n(flags.begin(), source.images.rows(), std::uint8_t{1});
  m.domain_flags = std::move(flags);
  return m;
}

// MCD phase B objective: source CE on both heads minus target discrepancy.
// Gradients cover every group; the trainer applies the head part only.
inline void require_mcd_heads(const nn::ModelState& model) {
  if (!model.has_head(nn::kMainHead) || !model.has_head(nn::kAuxHead))
    throw InvalidArgument("MCD needs a model with two classifier heads ('main' and 'aux')");
}

inline nn::LossEval mcd_phase_b_loss(const nn::ModelState& model, const nn::Batch& source, const nn::Batch& target) {
  require_mcd_heads(model);
  nn::LossEval out = supervised_loss(model, source, {nn::kMainHead, nn::kAuxHead});
  nn::ExtractorTape tape;
  const nn::Matrix feats = nn::extract_features(model, target.images, &tape);
  nn::HeadTape t1, t2;
  const nn::Matrix l1 = nn::head_forward(model, nn::kMainHead, feats, &t1);
  const nn::Matrix l2 = nn::head_forward(model, nn::kAuxHead, feats, &t2);
  const auto d = nn::discrepancy_from_logits(l1, l2);
  nn::Matrix dfeat = nn::head_backward(model, nn::kMainHead, feats, t1, -d.dlogits1, out.grads);
  dfeat += nn::head_backward(model, nn::kAuxHead, feats, t2, -d.dlogits2, out.grads);
  nn::extractor_backward(model, tape, dfeat, out.grads[nn::kExtractor]);
  out.parts["discrepancy"] = d.value;
  out.loss -= d.value;
  return out;
}

// MCD phase C objective: target discrepancy, minimized by the extractor.
inline nn::LossEval mcd_phase_c_loss(const nn::ModelState& model, const nn::Batch& target) {
  require_mcd_heads(model);
  nn::LossEval out;
  nn::ExtractorTape tape;
  const nn::Matrix feats = nn::extract_features(model, target.images, &tape);
  nn::HeadTape t1, t2;
  const nn::Matrix l1 = nn::head_forward(model, nn::kMainHead, feats, &t1);
  const nn::Matrix l2 = nn::head_forward(model, nn::kAuxHead, feats, &t2);
  const auto d = nn::discrepancy_from_logits(l1, l2);
  nn::Matrix dfeat = nn::head_backward(model, nn::kMainHead, feats, t1, d.dlogits1, out.grads);
  dfeat += nn::head_backward(model, nn::kAuxHead, feats, t2, d.dlogits2, out.grads);
  nn::extractor_backward(model, tape, dfeat, out.grads[nn::kExtractor]);
  out.parts["discrepancy"] = d.value;
  out.loss = d.value;
  return out;
}

inline double target_discrepancy(const nn::ModelState& model, const nn::Batch& target) {
  require_mcd_heads(model);
  const nn::Matrix feats = nn::extract_features(model, target.images);
  return nn::discrepancy(nn::softmax(nn::head_forward(model, nn::kMainHead, feats)),
                         nn::softmax(nn::head_forward(model, nn::kAuxHead, feats)));
}

inline nn::Gradients only(const nn::Gradients& grads, const std::vector<std::string>& keys) {
  nn::Gradients out;
  for (const auto& k : keys)
    if (const auto it = grads.find(k); it != grads.end()) out.emplace(k, it->second);
  return out;
}

// ---- trainers ---------------------------------------------------------------

namespace detail {

inline void check_source(const UdaData& data) {
  require(data.source.size() >= 1, "source set is empty");
  require(data.source.fully_labeled(), "source set must be fully labeled");
}

inline void check_target(const UdaData& data) {
  require(data.target != nullptr && data.target->size() >= 1, "trainer needs a non-empty target set");
  if (data.target->category_names != data.source.category_names)
    throw InvalidArgument("category_names differ between source and target manifests");
  if (!(data.target->shape == data.source.shape)) throw ShapeMismatch("source and target image shapes differ");
}

struct Run {
  UdaConfig cfg;
  nn::ModelState model;
  TrainReport report;
  nn::SgdOptimizer opt;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  int steps_per_epoch = 0;

  Run(const UdaConfig& c, const UdaData& data, nn::HeadSet heads)
      : cfg(c),
        model(nn::init_model(c.model.architecture(data.source.shape), data.source.category_count(), c.seed, heads)),
        opt({c.lr, c.momentum, c.weight_decay, c.clip_norm, {}}) {
    report.stage_tag = "stage-2";
    report.trainer_id = c.trainer_id;
    report.config = c.to_json();
    report.inputs.push_back({"source", data.source.origin, to_string(data.source.domain)});
    if (data.target) report.inputs.push_back({"target", data.target->origin, to_string(data.target->domain)});
    steps_per_epoch = (data.source.size() + c.batch_size - 1) / c.batch_size;
    model.stage_tag = "stage-2";
    nn::SgdConfig sc = opt.config();
    for (const auto& key : model.group_keys())
      if (key != nn::kExtractor) sc.lr_mult[key] = c.head_lr_mult;
    opt = nn::SgdOptimizer(sc);
  }

  // Called once per optimizer step with the global step index.
  void schedule(int step) {
    opt.set_lr(nn::scheduled_lr(cfg.lr, cfg.lr_schedule, static_cast<double>(step) / (cfg.epochs * steps_per_epoch)));
  }

  nn::Batch prepare(const nn::Batch& b, std::uint64_t stream, int step) const {
    return cfg.augment ? nn::augment_weak(b, derive_seed(cfg.seed, stream, static_cast<std::uint64_t>(step))) : b;
  }

  UdaResult finish(const UdaData& data) {
    if (data.eval) {
      report.final_target_accuracy = accuracy(model, *data.eval);
    } else if (data.target && data.target->fully_labeled()) {
      report.final_target_accuracy = accuracy(model, *data.target);
    }
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(report)};
  }
};

}  // namespace detail

inline UdaResult train_source_only(const UdaData& data, const UdaConfig& cfg) {
  cfg.validate();
  detail::check_source(data);
  detail::Run run(cfg, data, {1, false});
  EpochSampler src(data.source.size(), derive_seed(cfg.seed, 1));
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (int s = 0; s < run.steps_per_epoch; ++s, ++step) {
      run.schedule(step);
      const auto batch = run.prepare(data.source.batch(src.next(cfg.batch_size), true), 11, step);
      const auto loss = supervised_loss(run.model, batch, {nn::kMainHead});
      run.opt.step(run.model, loss.grads);
      sum += loss.loss;
    }
    run.report.epoch_losses["cls"].push_back(sum / run.steps_per_epoch);
    if (data.on_epoch) data.on_epoch(epoch, run.model);
  }
  return run.finish(data);
}

inline UdaResult train_dann(const UdaData& data, const UdaConfig& cfg) {
  cfg.validate();
  detail::check_source(data);
  detail::check_target(data);
  detail::Run run(cfg, data, {1, true});
  EpochSampler src(data.source.size(), derive_seed(cfg.seed, 1));
  EpochSampler tgt(data.target->size(), derive_seed(cfg.seed, 2));
  const int total = cfg.epochs * run.steps_per_epoch;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double cls = 0.0, dom = 0.0, lam = 0.0;
    for (int s = 0; s < run.steps_per_epoch; ++s, ++step) {
      run.schedule(step);
      const auto sb = run.prepare(data.source.batch(src.next(cfg.batch_size), true), 11, step);
      const auto tb = run.prepare(data.target->batch(tgt.next(cfg.batch_size)), 12, step);
      const double lambda = cfg.dann_weight * dann_lambda(static_cast<double>(step) / total, cfg.dann_gamma);
      const auto loss = dann_loss(run.model, mixed_batch(sb, tb), lambda);
      run.opt.step(run.model, loss.grads);
      cls += loss.parts.at("cls");
      dom += loss.parts.at("domain");
      lam = lambda;
    }
    run.report.epoch_losses["cls"].push_back(cls / run.steps_per_epoch);
    run.report.epoch_losses["domain"].push_back(dom / run.steps_per_epoch);
    run.report.epoch_losses["lambda"].push_back(lam);
    if (data.on_epoch) data.on_epoch(epoch, run.model);
  }
  return run.finish(data);
}

inline UdaResult train_mcd(const UdaData& data, const UdaConfig& cfg) {
  cfg.validate();
  detail::check_source(data);
  detail::check_target(data);
  detail::Run run(cfg, data, {2, false});
  EpochSampler src(data.source.size(), derive_seed(cfg.seed, 1));
  EpochSampler tgt(data.target->size(), derive_seed(cfg.seed, 2));
  const std::vector<std::string> heads{nn::kMainHead, nn::kAuxHead};
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double cls = 0.0, disc_b = 0.0, disc_c = 0.0;
    for (int s = 0; s < run.steps_per_epoch; ++s, ++step) {
      run.schedule(step);
      const auto sb = run.prepare(data.source.batch(src.next(cfg.batch_size), true), 11, step);
      const auto tb = run.prepare(data.target->batch(tgt.next(cfg.batch_size)), 12, step);
      // A: both heads and the extractor fit the source.
      const auto a = supervised_loss(run.model, sb, heads);
      run.opt.step(run.model, a.grads);
      cls += a.loss;
      // B: heads only, keep source accuracy while maximizing target discrepancy.
      const auto b = mcd_phase_b_loss(run.model, sb, tb);
      run.opt.step(run.model, only(b.grads, heads));
      disc_b += b.parts.at("discrepancy");
      // C: extractor only, minimize target discrepancy.
      double last = 0.0;
      for (int k = 0; k < cfg.mcd_inner_steps; ++k) {
        const auto c = mcd_phase_c_loss(run.model, tb);
        run.opt.step(run.model, only(c.grads, {nn::kExtractor}));
        last = c.loss;
      }
      disc_c += last;
    }
    run.report.epoch_losses["cls"].push_back(cls / run.steps_per_epoch);
    run.report.epoch_losses["discrepancy_max"].push_back(disc_b / run.steps_per_epoch);
    run.report.epoch_losses["discrepancy_min"].push_back(disc_c / run.steps_per_epoch);
    if (data.on_epoch) data.on_epoch(epoch, run.model);
  }
  return run.finish(data);
}

// ---- registry ---------------------------------------------------------------

using UdaTrainer = std::function<UdaResult(const UdaData&, const UdaConfig&)>;

class UnknownTrainer : public Error {
 public:
  explicit UnknownTrainer(const std::string& what) : Error("unknown-trainer", what) {}
};

class DuplicateTrainer : public Error {
 public:
  explicit DuplicateTrainer(const std::string& what) : Error("duplicate-trainer", what) {}
};

class TrainerRegistry {
 public:
  static TrainerRegistry with_builtins() {
    TrainerRegistry r;
    r.register_trainer("source_only", train_source_only);
    r.register_trainer("dann", train_dann);
    r.register_trainer("mcd", train_mcd);
    return r;
  }

  void register_trainer(const std::string& id, UdaTrainer trainer) {
    require(!id.empty(), "trainer id must be non-empty");
    if (!trainers_.emplace(id, std::move(trainer)).second)
      throw DuplicateTrainer("trainer id '" + id + "' is already registered");
  }

  bool contains(const std::string& id) const { return trainers_.count(id) > 0; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : trainers_) out.push_back(k);
    return out;
  }

  const UdaTrainer& get(const std::string& id) const {
    const auto it = trainers_.find(id);
    if (it == trainers_.end()) {
      std::string known;
      for (const auto& k : ids()) known += (known.empty() ? "" : ", ") + k;
      throw UnknownTrainer("unknown trainer '" + id + "'; registered: " + known);
    }
    return it->second;
  }

  UdaResult run(const UdaData& data, const UdaConfig& cfg) const { return get(cfg.trainer_id)(data, cfg); }

 private:
  std::map<std::string, UdaTrainer> trainers_;
};

// Process-wide registry used by the CLI and the pipeline.
inline TrainerRegistry& default_registry() {
  static TrainerRegistry registry = TrainerRegistry::with_builtins();
  return registry;
}

inline void register_trainer(const std::string& id, UdaTrainer trainer) {
  default_registry().register_trainer(id, std::move(trainer));
}

}  // namespace adaptany
