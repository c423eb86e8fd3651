#pragma once

#include <map>
#include <string>
#include <vector>

#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double clip_norm = 0.0;  // global gradient-norm cap; 0 disables
  std::map<std::string, double> lr_mult;  // per-group factor on lr, default 1
};

// Momentum SGD, v <- mu v + (g + wd theta); theta <- theta - lr v.
// Groups absent from `grads` are left untouched. Non-finite gradients or a
// non-finite result reject the whole step and leave model and velocity as
// they were.
inline void sgd_step_inplace(ModelState& model, const Gradients& grads, const SgdConfig& cfg,
                             Gradients* velocity = nullptr) {
  require(cfg.lr >= 0.0 && cfg.momentum >= 0.0 && cfg.weight_decay >= 0.0 && cfg.clip_norm >= 0.0,
          "sgd: lr, momentum, weight_decay and clip_norm must be >= 0");
  for (const auto& [key, g] : grads) {
    if (g.size() != model.group(key).values.size())
      throw ShapeMismatch("gradient for '" + key + "' has " + std::to_string(g.size()) + " entries, expected " +
                          std::to_string(model.group(key).values.size()));
    if (!g.allFinite()) throw NonFinite("non-finite gradient in group '" + key + "'; step rejected");
  }
  double scale = 1.0;
  if (cfg.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [key, g] : grads) sq += g.squaredNorm();
    if (std::sqrt(sq) > cfg.clip_norm) scale = cfg.clip_norm / std::sqrt(sq);
  }
  std::vector<std::pair<std::string, Vector>> new_values, new_velocity;
  for (const auto& [key, g] : grads) {
    const Vector& theta = model.group(key).values;
    Vector v = scale * g + cfg.weight_decay * theta;
    if (velocity && cfg.momentum > 0.0) {
      const auto it = velocity->find(key);
      if (it != velocity->end() && it->second.size() == v.size()) v += cfg.momentum * it->second;
    }
    const auto mult = cfg.lr_mult.find(key);
    Vector next = theta - cfg.lr * (mult == cfg.lr_mult.end() ? 1.0 : mult->second) * v;
    if (!next.allFinite()) throw NonFinite("sgd step produced non-finite parameters in '" + key + "'");
    new_values.emplace_back(key, std::move(next));
    new_velocity.emplace_back(key, std::move(v));
  }
  for (auto& [key, vals] : new_values) model.group(key).values = std::move(vals);
  if (velocity)
    for (auto& [key, v] : new_velocity) (*velocity)[key] = std::move(v);
}

inline ModelState sgd_step(const ModelState& model, const Gradients& grads, double lr, double momentum = 0.0,
                           double weight_decay = 0.0, Gradients* velocity = nullptr) {
  ModelState next = model;
  sgd_step_inplace(next, grads, {lr, momentum, weight_decay, 0.0, {}}, velocity);
  return next;
}

// Learning rate at training progress p in [0,1]. "constant" keeps the base
// rate, "anneal" is lr / (1 + 10 p)^0.75, "cosine" decays to 0 at p = 1.
inline double scheduled_lr(double lr, const std::string& schedule, double p) {
  if (schedule == "constant") return lr;
  if (schedule == "anneal") return lr / std::pow(1.0 + 10.0 * p, 0.75);
  if (schedule == "cosine") return lr * 0.5 * (1.0 + std::cos(M_PI * std::clamp(p, 0.0, 1.0)));
  throw InvalidArgument("unknown lr schedule '" + schedule + "' (known: constant, anneal, cosine)");
}

class SgdOptimizer {
 public:
  explicit SgdOptimizer(SgdConfig cfg) : cfg_(cfg) {}
  void step(ModelState& model, const Gradients& grads) { sgd_step_inplace(model, grads, cfg_, &velocity_); }
  const SgdConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  SgdConfig cfg_;
  Gradients velocity_;
};

}  // namespace adaptany::nn
