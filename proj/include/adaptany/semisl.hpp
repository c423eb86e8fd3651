#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/dataset.hpp"
#include "adaptany/nnkit.hpp"
#include "adaptany/splitter.hpp"
#include "adaptany/uda.hpp"

namespace adaptany {

enum class SemiMethod { mixmatch, fixmatch };

inline std::string to_string(SemiMethod m) { return m == SemiMethod::mixmatch ? "mixmatch" : "fixmatch"; }

inline SemiMethod parse_semi_method(const std::string& s) {
  if (s == "mixmatch") return SemiMethod::mixmatch;
  if (s == "fixmatch") return SemiMethod::fixmatch;
  throw InvalidArgument("unknown semi-supervised method '" + s + "' (known: mixmatch, fixmatch)");
}

struct SemiConfig {
  SemiMethod method = SemiMethod::mixmatch;
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double clip_norm = 5.0;
  std::string lr_schedule = "cosine";  // see nn::scheduled_lr
  double sharpen_T = 0.5;
  double mixup_alpha = 0.75;
  int k_augment = 2;
  std::optional<double> unlabeled_weight;  // default: 75 for mixmatch, 1 for fixmatch
  double rampup_fraction = 1.0 / 3.0;      // linear ramp of the unlabeled weight
  double fixmatch_tau = 0.95;
  std::uint64_t seed = 0;

  double lambda_u() const { return unlabeled_weight.value_or(method == SemiMethod::mixmatch ? 75.0 : 1.0); }

  // Unlabeled weight at training progress p in [0,1].
  double lambda_u_at(double progress) const {
    if (rampup_fraction <= 0.0) return lambda_u();
    return lambda_u() * std::clamp(progress / rampup_fraction, 0.0, 1.0);
  }

  void validate() const {
    require(epochs >= 1, "semi: epochs must be >= 1");
    require(batch_size >= 1, "semi: batch_size must be >= 1");
    require(lr > 0.0, "semi: lr must be > 0");
    require(momentum >= 0.0 && weight_decay >= 0.0 && clip_norm >= 0.0,
            "semi: momentum, weight_decay and clip_norm must be >= 0");
    nn::scheduled_lr(lr, lr_schedule, 0.0);  // throws on an unknown schedule
    require(sharpen_T > 0.0, "semi: sharpen_T must be > 0");
    require(mixup_alpha > 0.0, "semi: mixup_alpha must be > 0");
    require(k_augment >= 1, "semi: k_augment must be >= 1");
    require(lambda_u() >= 0.0, "semi: unlabeled_weight must be >= 0");
    require(rampup_fraction >= 0.0 && rampup_fraction <= 1.0, "semi: rampup_fraction must lie in [0,1]");
    require(fixmatch_tau > 0.0 && fixmatch_tau <= 1.0, "semi: fixmatch_tau must lie in (0,1]");
  }

  json to_json() const {
    return {{"method", to_string(method)},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"momentum", momentum},
            {"weight_decay", weight_decay},
            {"clip_norm", clip_norm},
            {"lr_schedule", lr_schedule},
            {"sharpen_T", sharpen_T},
            {"mixup_alpha", mixup_alpha},
            {"k_augment", k_augment},
            {"unlabeled_weight", lambda_u()},
            {"rampup_fraction", rampup_fraction},
            {"fixmatch_tau", fixmatch_tau},
            {"seed", seed}};
  }

  static SemiConfig from_json(const json& j) {
    SemiConfig c;
    if (j.contains("method")) c.method = parse_semi_method(j["method"].get<std::string>());
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
    c.sharpen_T = j.value("sharpen_T", c.sharpen_T);
    c.mixup_alpha = j.value("mixup_alpha", c.mixup_alpha);
    c.k_augment = j.value("k_augment", c.k_augment);
    if (j.contains("unlabeled_weight") && !j["unlabeled_weight"].is_null())
      c.unlabeled_weight = j["unlabeled_weight"].get<double>();
    c.rampup_fraction = j.value("rampup_fraction", c.rampup_fraction);
    c.fixmatch_tau = j.value("fixmatch_tau", c.fixmatch_tau);
    c.seed = j.value("seed", c.seed);
    return c;
  }
};

// ---- target-only inputs ------------------------------------------------------

// Target-domain images, stripped of any labels. The only way in is `from`,
// which rejects non-target sets.
class TargetImages {
 public:
  static TargetImages from(const ImageSet& set) {
    if (set.domain != DomainTag::target)
      throw InvalidArgument("stage-3 input '" + set.origin + "' is not a target-domain manifest");
    return TargetImages(set.without_labels());
  }
  const ImageSet& set() const { return set_; }
  int size() const { return set_.size(); }

 private:
  explicit TargetImages(ImageSet s) : set_(std::move(s)) {}
  ImageSet set_;
};

struct LabeledTarget {
  TargetImages images;
  std::vector<int> pseudo_labels;  // frozen at split time
  std::string partition_origin;
};

struct UnlabeledTarget {
  TargetImages images;
};

namespace detail {

inline ImageSet subset(const ImageSet& s, const std::vector<int>& rows) {
  ImageSet out;
  out.shape = s.shape;
  out.category_names = s.category_names;
  out.domain = s.domain;
  out.origin = s.origin;
  out.images.resize(static_cast<Eigen::Index>(rows.size()), s.images.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.images.row(static_cast<Eigen::Index>(i)) = s.images.row(rows[i]);
    out.ids.push_back(s.ids[static_cast<std::size_t>(rows[i])]);
    out.labels.push_back(-1);
  }
  return out;
}

}  // namespace detail

// Splits the target set by the partition: the confident side with its
// pseudo-labels, and the unconfident side without labels.
inline std::pair<LabeledTarget, UnlabeledTarget> semi_inputs(const PartitionFile& pf, const TargetImages& target) {
  const ImageSet& t = target.set();
  if (!pf.category_names.empty() && pf.category_names != t.category_names)
    throw InvalidArgument("partition categories differ from the target manifest");
  std::map<std::string, const PseudoLabelEntry*> by_id;
  for (const auto& e : pf.table.entries) by_id[e.sample_id] = &e;
  std::vector<int> conf_rows, unconf_rows, labels;
  for (int i = 0; i < t.size(); ++i) {
    const auto& id = t.ids[static_cast<std::size_t>(i)];
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("target sample '" + id + "' is missing from the partition");
    if (pf.side_of(id) == SplitSide::confident) {
      conf_rows.push_back(i);
      labels.push_back(it->second->pseudo_label);
    } else {
      unconf_rows.push_back(i);
    }
  }
  if (by_id.size() != static_cast<std::size_t>(t.size()))
    throw InvalidArgument("partition lists samples that are not in the target manifest");
  return {LabeledTarget{TargetImages::from(detail::subset(t, conf_rows)), labels, pf.target_manifest},
          UnlabeledTarget{TargetImages::from(detail::subset(t, unconf_rows))}};
}

// ---- components ----------------------------------------------------------------

// p_i^(1/T), renormalized; rows of `p` must be probability vectors.
inline nn::Matrix sharpen(const nn::Matrix& p, double T) {
  require(T > 0.0, "sharpen: T must be > 0");
  nn::Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double sum = p.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-6 || (p.row(i).array() < 0.0).any())
      throw InvalidArgument("sharpen: row " + std::to_string(i) + " is not a probability vector");
    // Scale by the row max before exponentiating so small T cannot underflow.
    const double mx = p.row(i).maxCoeff();
    out.row(i) = (p.row(i).array() / mx).pow(1.0 / T).matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

inline double mixup_lambda(double lambda_raw) {
  require(lambda_raw >= 0.0 && lambda_raw <= 1.0, "mixup: lambda must lie in [0,1]");
  return std::max(lambda_raw, 1.0 - lambda_raw);
}

struct Mixed {
  nn::Matrix x;
  nn::Matrix y;
};

inline Mixed mixup(const nn::Matrix& x1, const nn::Matrix& y1, const nn::Matrix& x2, const nn::Matrix& y2,
                   double lambda_raw) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols() || y1.rows() != y2.rows() || y1.cols() != y2.cols() ||
      x1.rows() != y1.rows())
    throw ShapeMismatch("mixup: operand shapes differ");
  const double lam = mixup_lambda(lambda_raw);
  if (lam == 1.0) return {x1, y1};
  return {lam * x1 + (1.0 - lam) * x2, lam * y1 + (1.0 - lam) * y2};
}

// Sum over classifier heads of a per-head loss, averaged over heads; the
// extractor pass is shared.
template <typename HeadLoss>
void over_heads(const nn::ModelState& model, const nn::Matrix& images, HeadLoss&& loss_for, double weight,
                const std::string& part, nn::LossEval& acc) {
  const auto heads = model.classifier_heads();
  nn::ExtractorTape tape;
  const nn::Matrix feats = nn::extract_features(model, images, &tape);
  nn::Matrix dfeat = nn::Matrix::Zero(feats.rows(), feats.cols());
  double total = 0.0;
  for (const auto& h : heads) {
    nn::HeadTape ht;
    const nn::LossValue lv = loss_for(nn::head_forward(model, h, feats, &ht));
    total += lv.loss / static_cast<double>(heads.size());
    const nn::Matrix scaled = lv.dlogits * (weight / static_cast<double>(heads.size()));
    dfeat += nn::head_backward(model, h, feats, ht, scaled, acc.grads);
  }
  nn::extractor_backward(model, tape, dfeat, acc.grads[nn::kExtractor]);
  acc.parts[part] = total;
  acc.loss += weight * total;
}

// Everything a MixMatch step needs after guessing: fixed inputs and targets.
struct MixMatchBatch {
  nn::Matrix labeled_x, labeled_y;      // mixed labeled side
  nn::Matrix unlabeled_x, unlabeled_y;  // mixed unlabeled side (guesses are constants)
  double lambda = 1.0;                  // effective mixup coefficient
};

inline nn::Matrix head_averaged_probabilities(const nn::ModelState& model, const nn::Matrix& images) {
  return nn::predict_probabilities(model, images);
}

inline MixMatchBatch mixmatch_prepare(const nn::ModelState& model, const nn::Batch& labeled,
                                      const nn::Batch& unlabeled, const SemiConfig& cfg, std::uint64_t seed) {
  require(labeled.labels.has_value(), "mixmatch: labeled batch needs labels");
  const int K = model.category_count;
  const auto xb = nn::augment_weak(labeled, derive_seed(seed, 1));
  const nn::Matrix yb = nn::one_hot(*labeled.labels, K);
  const Eigen::Index B = xb.images.rows();
  const Eigen::Index U = unlabeled.images.rows();

  std::vector<nn::Matrix> views;
  nn::Matrix guess = nn::Matrix::Zero(U, K);
  for (int k = 0; k < cfg.k_augment; ++k) {
    views.push_back(nn::augment_weak(unlabeled, derive_seed(seed, 2, static_cast<std::uint64_t>(k))).images);
    if (U > 0) guess += head_averaged_probabilities(model, views.back());
  }
  if (U > 0) guess = sharpen(guess / static_cast<double>(cfg.k_augment), cfg.sharpen_T);

  const Eigen::Index total = B + U * cfg.k_augment;
  nn::Matrix all_x(total, xb.images.cols()), all_y(total, K);
  all_x.topRows(B) = xb.images;
  all_y.topRows(B) = yb;
  for (int k = 0; k < cfg.k_augment; ++k) {
    all_x.middleRows(B + k * U, U) = views[static_cast<std::size_t>(k)];
    all_y.middleRows(B + k * U, U) = guess;
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(total));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, 3));
  rng.shuffle(perm.begin(), perm.end());
  nn::Matrix wx(total, all_x.cols()), wy(total, K);
  for (Eigen::Index i = 0; i < total; ++i) {
    wx.row(i) = all_x.row(perm[static_cast<std::size_t>(i)]);
    wy.row(i) = all_y.row(perm[static_cast<std::size_t>(i)]);
  }

  MixMatchBatch out;
  out.lambda = mixup_lambda(rng.beta(cfg.mixup_alpha, cfg.mixup_alpha));
  const auto lx = mixup(all_x.topRows(B), all_y.topRows(B), wx.topRows(B), wy.topRows(B), out.lambda);
  out.labeled_x = lx.x;
  out.labeled_y = lx.y;
  if (U > 0) {
    const auto ux = mixup(all_x.bottomRows(total - B), all_y.bottomRows(total - B), wx.bottomRows(total - B),
                          wy.bottomRows(total - B), out.lambda);
    out.unlabeled_x = ux.x;
    out.unlabeled_y = ux.y;
  }
  return out;
}

// L_x + lambda_u * L_u: soft cross-entropy on the mixed labeled side, mean
// squared probability error on the mixed unlabeled side.
inline nn::LossEval mixmatch_loss(const nn::ModelState& model, const MixMatchBatch& b, double lambda_u) {
  nn::LossEval out;
  over_heads(model, b.labeled_x, [&](const nn::Matrix& z) { return nn::soft_cross_entropy(z, b.labeled_y); }, 1.0,
             "labeled", out);
  if (b.unlabeled_x.rows() > 0) {
    over_heads(model, b.unlabeled_x, [&](const nn::Matrix& z) { return nn::probability_mse(z, b.unlabeled_y); },
               lambda_u, "unlabeled", out);
  } else {
    out.parts["unlabeled"] = 0.0;
  }
  return out;
}

struct FixMatchMask {
  std::vector<int> pseudo_labels;
  std::vector<std::uint8_t> retained;
  int count() const { return static_cast<int>(std::count(retained.begin(), retained.end(), std::uint8_t{1})); }
};

// Pseudo-label from weak-view probabilities; keep rows whose max >= tau.
inline FixMatchMask fixmatch_mask(const nn::Matrix& weak_probs, double tau) {
  require(tau > 0.0 && tau <= 1.0, "fixmatch: tau must lie in (0,1]");
  FixMatchMask m;
  for (Eigen::Index i = 0; i < weak_probs.rows(); ++i) {
    const int l = nn::argmax_row(weak_probs, i);
    m.pseudo_labels.push_back(l);
    m.retained.push_back(weak_probs(i, l) >= tau ? 1 : 0);
  }
  return m;
}

// Mean cross-entropy of the strong view over retained rows; 0 when none.
inline nn::LossValue fixmatch_masked_ce(const nn::Matrix& strong_logits, const FixMatchMask& mask) {
  if (static_cast<std::size_t>(strong_logits.rows()) != mask.retained.size())
    throw ShapeMismatch("fixmatch: mask size differs from batch");
  nn::LossValue out;
  out.dlogits = nn::Matrix::Zero(strong_logits.rows(), strong_logits.cols());
  const int n = mask.count();
  if (n == 0) return out;
  std::vector<int> rows, labels;
  for (std::size_t i = 0; i < mask.retained.size(); ++i)
    if (mask.retained[i]) {
      rows.push_back(static_cast<int>(i));
      labels.push_back(mask.pseudo_labels[i]);
    }
  nn::Matrix kept(n, strong_logits.cols());
  for (int i = 0; i < n; ++i) kept.row(i) = strong_logits.row(rows[static_cast<std::size_t>(i)]);
  const auto ce = nn::cross_entropy(kept, labels);
  out.loss = ce.loss;
  for (int i = 0; i < n; ++i) out.dlogits.row(rows[static_cast<std::size_t>(i)]) = ce.dlogits.row(i);
  return out;
}

inline double fixmatch_unlabeled_loss(const nn::Matrix& weak_logits, const nn::Matrix& strong_logits, double tau) {
  return fixmatch_masked_ce(strong_logits, fixmatch_mask(nn::softmax(weak_logits), tau)).loss;
}

// sup CE on the weak labeled view + lambda_u * masked CE on the strong view.
inline nn::LossEval fixmatch_loss(const nn::ModelState& model, const nn::Batch& weak_labeled,
                                  const nn::Matrix& strong_unlabeled, const FixMatchMask& mask, double lambda_u) {
  require(weak_labeled.labels.has_value(), "fixmatch: labeled batch needs labels");
  nn::LossEval out;
  over_heads(model, weak_labeled.images,
             [&](const nn::Matrix& z) { return nn::cross_entropy(z, *weak_labeled.labels); }, 1.0, "labeled", out);
  if (strong_unlabeled.rows() > 0) {
    over_heads(model, strong_unlabeled, [&](const nn::Matrix& z) { return fixmatch_masked_ce(z, mask); }, lambda_u,
               "unlabeled", out);
  } else {
    out.parts["unlabeled"] = 0.0;
  }
  return out;
}

struct FixMatchStep {
  nn::LossEval loss;
  FixMatchMask mask;
};

inline FixMatchStep fixmatch_step(const nn::ModelState& model, const nn::Batch& labeled, const nn::Batch& unlabeled,
                                  const SemiConfig& cfg, double lambda_u, std::uint64_t seed) {
  const auto weak_l = nn::augment_weak(labeled, derive_seed(seed, 1));
  FixMatchStep step;
  nn::Matrix strong;
  if (unlabeled.size() > 0) {
    const auto weak_u = nn::augment_weak(unlabeled, derive_seed(seed, 2));
    step.mask = fixmatch_mask(head_averaged_probabilities(model, weak_u.images), cfg.fixmatch_tau);
    strong = nn::augment_strong(unlabeled, derive_seed(seed, 3)).images;
  }
  step.loss = fixmatch_loss(model, weak_l, strong, step.mask, lambda_u);
  return step;
}

// ---- trainer ---------------------------------------------------------------------

// Labeled batches cycle through the categories present on the confident
// side, so every batch is close to class-balanced.
class BalancedSampler {
 public:
  BalancedSampler(const std::vector<int>& labels, std::uint64_t seed) : seed_(seed) {
    std::map<int, std::vector<int>> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) rows[labels[i]].push_back(static_cast<int>(i));
    for (auto& [c, r] : rows) {
      categories_.push_back(c);
      members_.push_back(std::move(r));
      samplers_.emplace_back(static_cast<int>(members_.back().size()), derive_seed(seed, static_cast<std::uint64_t>(c)));
    }
  }

  std::vector<int> next(int count) {
    std::vector<int> out;
    Rng rng(derive_seed(seed_, 0xba1u, round_++));
    const int offset = rng.index(static_cast<int>(categories_.size()));
    for (int i = 0; i < count; ++i) {
      const auto c = static_cast<std::size_t>((offset + i) % static_cast<int>(categories_.size()));
      out.push_back(members_[c][static_cast<std::size_t>(samplers_[c].next(1)[0])]);
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t round_ = 0;
  std::vector<int> categories_;
  std::vector<std::vector<int>> members_;
  std::vector<EpochSampler> samplers_;
};

struct SemiResult {
  nn::ModelState model;
  TrainReport report;
};

struct SemiObserver {
  const ImageSet* eval = nullptr;  // labeled target set, read for the report only
  std::function<void(int epoch, const nn::ModelState&)> on_epoch = {};
};

// Stage 3: starts from the stage-2 model and sees target data only.
inline SemiResult train_semisl(const nn::ModelState& init, const LabeledTarget& labeled,
                               const UnlabeledTarget& unlabeled, const SemiConfig& cfg,
                               const SemiObserver& observer = {}) {
  cfg.validate();
  const ImageSet& L = labeled.images.set();
  const ImageSet& U = unlabeled.images.set();
  if (L.size() == 0) throw InvalidArgument("stage-3 labeled side is empty");
  if (labeled.pseudo_labels.size() != static_cast<std::size_t>(L.size()))
    throw InvalidArgument("stage-3 labeled side has " + std::to_string(L.size()) + " images but " +
                          std::to_string(labeled.pseudo_labels.size()) + " labels");
  if (init.category_count != L.category_count())
    throw InvalidArgument("init model has " + std::to_string(init.category_count) + " categories, target has " +
                          std::to_string(L.category_count()));
  for (int l : labeled.pseudo_labels) require(l >= 0 && l < init.category_count, "pseudo label out of range");
  if (observer.eval && observer.eval->domain != DomainTag::target)
    throw InvalidArgument("stage-3 evaluation set must be target-domain");
  if (U.size() > 0 && !(U.shape == L.shape)) throw ShapeMismatch("labeled and unlabeled target shapes differ");

  const auto start = std::chrono::steady_clock::now();
  SemiResult res{init, {}};
  res.model.stage_tag = "stage-3";
  res.report.stage_tag = "stage-3";
  res.report.trainer_id = to_string(cfg.method);
  res.report.config = cfg.to_json();
  res.report.inputs.push_back({"labeled", labeled.partition_origin, to_string(L.domain)});
  res.report.inputs.push_back({"unlabeled", U.origin.empty() ? L.origin : U.origin, to_string(U.domain)});
  res.report.init_checkpoint = nn::checkpoint_id(init);

  ImageSet labeled_set = L;
  labeled_set.labels = labeled.pseudo_labels;
  nn::SgdOptimizer opt({cfg.lr, cfg.momentum, cfg.weight_decay, cfg.clip_norm, {}});
  BalancedSampler lab(labeled.pseudo_labels, derive_seed(cfg.seed, 1));
  std::optional<EpochSampler> unl;
  if (U.size() > 0) unl.emplace(U.size(), derive_seed(cfg.seed, 2));

  const int steps = (L.size() + U.size() + cfg.batch_size - 1) / cfg.batch_size;
  const int total = steps * cfg.epochs;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0, sup = 0.0, uns = 0.0, retained = 0.0;
    for (int s = 0; s < steps; ++s, ++step) {
      const double progress = static_cast<double>(step) / total;
      opt.set_lr(nn::scheduled_lr(cfg.lr, cfg.lr_schedule, progress));
      const double lambda_u = cfg.lambda_u_at(progress);
      const auto lb = labeled_set.batch(lab.next(cfg.batch_size), true);
      const auto ub = unl ? U.batch(unl->next(cfg.batch_size)) : U.batch({});
      const std::uint64_t step_seed = derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(step));
      nn::LossEval loss;
      if (cfg.method == SemiMethod::mixmatch) {
        loss = mixmatch_loss(res.model, mixmatch_prepare(res.model, lb, ub, cfg, step_seed), lambda_u);
      } else {
        auto fm = fixmatch_step(res.model, lb, ub, cfg, lambda_u, step_seed);
        retained += ub.size() > 0 ? static_cast<double>(fm.mask.count()) / ub.size() : 0.0;
        loss = std::move(fm.loss);
      }
      opt.step(res.model, loss.grads);
      sum += loss.loss;
      sup += loss.parts.at("labeled");
      uns += loss.parts.at("unlabeled");
    }
    res.report.epoch_losses["total"].push_back(sum / steps);
    res.report.epoch_losses["labeled"].push_back(sup / steps);
    res.report.epoch_losses["unlabeled"].push_back(uns / steps);
    if (cfg.method == SemiMethod::fixmatch) res.report.epoch_losses["retained_fraction"].push_back(retained / steps);
    if (observer.on_epoch) observer.on_epoch(epoch, res.model);
  }
  if (observer.eval) res.report.final_target_accuracy = accuracy(res.model, *observer.eval);
  res.report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// Stage-3 isolation, checked at compile time: stage 3 accepts target-only
// wrappers, and nothing converts an arbitrary ImageSet or manifest into one.
static_assert(!std::is_constructible_v<TargetImages, ImageSet>);
static_assert(!std::is_constructible_v<TargetImages, DatasetManifest>);
static_assert(!std::is_convertible_v<ImageSet, LabeledTarget>);
static_assert(!std::is_convertible_v<ImageSet, UnlabeledTarget>);
static_assert(!std::is_invocable_v<decltype(&train_semisl), const nn::ModelState&, const ImageSet&,
                                   const ImageSet&, const SemiConfig&, const SemiObserver&>);
static_assert(!std::is_invocable_v<decltype(&train_semisl), const nn::ModelState&, const DatasetManifest&,
                                   const DatasetManifest&, const SemiConfig&, const SemiObserver&>);

}  // namespace adaptany
