#pragma once

#include <map>
#include <string>
#include <vector>

#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

struct LossValue {
  double loss = 0.0;
  Matrix dlogits;  // d(loss)/d(logits), same shape as the logits
};

// Loss value, named parts, and gradients for every touched parameter group.
struct LossEval {
  double loss = 0.0;
  std::map<std::string, double> parts;
  Gradients grads;
};

inline Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

inline Matrix log_softmax(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double mx = out.row(i).maxCoeff();
    const double lse = mx + std::log((out.row(i).array() - mx).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

// Index of the largest entry; the lowest index wins ties.
inline int argmax_row(const Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j)
    if (m(row, j) > m(row, best)) best = static_cast<int>(j);
  return best;
}

inline Matrix one_hot(const std::vector<int>& labels, int k) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return y;
}

// Mean over rows of -sum_k t_k log softmax(z)_k.
inline LossValue soft_cross_entropy(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeMismatch("soft_cross_entropy: logits and targets differ in shape");
  const double n = static_cast<double>(logits.rows());
  const Matrix logp = log_softmax(logits);
  LossValue out;
  out.loss = -(targets.array() * logp.array()).sum() / n;
  // d/dz = (softmax * sum(t) - t) / n
  const Matrix p = logp.array().exp();
  out.dlogits = (p.array().colwise() * targets.rowwise().sum().array() - targets.array()) / n;
  return out;
}

inline LossValue cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw ShapeMismatch("cross_entropy: label count differs from logits rows");
  return soft_cross_entropy(logits, one_hot(labels, static_cast<int>(logits.cols())));
}

// Mean over rows and classes of (softmax(z) - t)^2.
inline LossValue probability_mse(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeMismatch("probability_mse: logits and targets differ in shape");
  const double denom = static_cast<double>(logits.rows() * logits.cols());
  const Matrix p = softmax(logits);
  const Matrix diff = p - targets;
  LossValue out;
  out.loss = diff.squaredNorm() / denom;
  const Matrix dp = 2.0 * diff / denom;
  // softmax Jacobian-vector product: p * (dp - <dp, p>)
  const Eigen::VectorXd dot = (dp.array() * p.array()).rowwise().sum();
  out.dlogits = p.array() * (dp.array().colwise() - dot.array());
  return out;
}

// Mean binary cross-entropy on a single-column logit matrix.
inline LossValue binary_cross_entropy(const Matrix& logits, const std::vector<std::uint8_t>& flags) {
  if (logits.cols() != 1 || static_cast<Eigen::Index>(flags.size()) != logits.rows())
    throw ShapeMismatch("binary_cross_entropy: expects N x 1 logits and N flags");
  const double n = static_cast<double>(logits.rows());
  LossValue out;
  out.dlogits.resize(logits.rows(), 1);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double z = logits(i, 0);
    const double y = flags[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    // log(1 + exp(-|z|)) + max(z, 0) - y z
    out.loss += (std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y * z) / n;
    const double s = 1.0 / (1.0 + std::exp(-z));
    out.dlogits(i, 0) = (s - y) / n;
  }
  return out;
}

struct DiscrepancyValue {
  double value = 0.0;
  Matrix dlogits1;
  Matrix dlogits2;
};

// Classifier discrepancy: mean over samples and categories of |p1 - p2| on
// softmax outputs.
inline double discrepancy(const Matrix& p1, const Matrix& p2) {
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols()) throw ShapeMismatch("discrepancy: shape mismatch");
  return (p1 - p2).cwiseAbs().sum() / static_cast<double>(p1.size());
}

inline DiscrepancyValue discrepancy_from_logits(const Matrix& logits1, const Matrix& logits2) {
  const Matrix p1 = softmax(logits1);
  const Matrix p2 = softmax(logits2);
  DiscrepancyValue out;
  out.value = discrepancy(p1, p2);
  const Matrix sign = (p1 - p2).array().sign() / static_cast<double>(p1.size());
  auto through_softmax = [](const Matrix& p, const Matrix& dp) -> Matrix {
    const Eigen::VectorXd dot = (dp.array() * p.array()).rowwise().sum();
    return p.array() * (dp.array().colwise() - dot.array());
  };
  out.dlogits1 = through_softmax(p1, sign);
  out.dlogits2 = through_softmax(p2, -sign);
  return out;
}

}  // namespace adaptany::nn
