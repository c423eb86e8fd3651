#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adaptany/nn/losses.hpp"
#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

using LossFn = std::function<LossEval(const ModelState&, const Batch&)>;

struct GradCheckOptions {
  int probe_count = 20;
  double epsilon = 1e-4;
  std::uint64_t seed = 0;
  std::vector<std::string> groups;  // empty: all groups of the model
  double floor = 1e-7;              // denominator floor for near-zero gradients
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  int probes = 0;
  std::string worst_coordinate;
};

// Compares the analytic gradient from `loss_fn` with central finite
// differences of its loss value at randomly chosen coordinates.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check_detailed(const LossFn& loss_fn, const ModelState& model, const Batch& batch,
                                           const GradCheckOptions& opts) {
  require(opts.probe_count >= 1, "grad_check: probe_count must be >= 1");
  require(opts.epsilon > 0.0, "grad_check: epsilon must be > 0");
  const LossEval base = loss_fn(model, batch);
  if (!std::isfinite(base.loss)) throw NonFinite("grad_check: loss is not finite");

  const auto keys = opts.groups.empty() ? model.group_keys() : opts.groups;
  std::vector<std::pair<std::string, Eigen::Index>> coords;
  std::size_t total = 0;
  for (const auto& k : keys) total += static_cast<std::size_t>(model.group(k).values.size());
  require(total > 0, "grad_check: no parameters to probe");
  Rng rng(opts.seed);
  for (int p = 0; p < opts.probe_count; ++p) {
    auto pick = static_cast<std::size_t>(rng.engine()() % total);
    for (const auto& k : keys) {
      const auto n = static_cast<std::size_t>(model.group(k).values.size());
      if (pick < n) {
        coords.emplace_back(k, static_cast<Eigen::Index>(pick));
        break;
      }
      pick -= n;
    }
  }

  GradCheckResult result;
  ModelState probe = model;
  for (const auto& [key, idx] : coords) {
    double& theta = probe.group(key).values[idx];
    const double orig = theta;
    theta = orig + opts.epsilon;
    const double plus = loss_fn(probe, batch).loss;
    theta = orig - opts.epsilon;
    const double minus = loss_fn(probe, batch).loss;
    theta = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) throw NonFinite("grad_check: perturbed loss is not finite");
    const double numeric = (plus - minus) / (2.0 * opts.epsilon);
    const auto it = base.grads.find(key);
    const double analytic = it == base.grads.end() ? 0.0 : it->second[idx];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++result.probes;
    if (rel >= result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_coordinate = key + "[" + std::to_string(idx) + "] analytic=" + std::to_string(analytic) +
                                " numeric=" + std::to_string(numeric);
    }
  }
  return result;
}

inline double grad_check(const LossFn& loss_fn, const ModelState& model, const Batch& batch, int probe_count,
                         double epsilon, std::uint64_t seed = 0) {
  GradCheckOptions opts;
  opts.probe_count = probe_count;
  opts.epsilon = epsilon;
  opts.seed = seed;
  return grad_check_detailed(loss_fn, model, batch, opts).max_relative_error;
}

}  // namespace adaptany::nn
