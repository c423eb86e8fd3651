#pragma once

#include "adaptany/nn/augment.hpp"
#include "adaptany/nn/checkpoint.hpp"
#include "adaptany/nn/gradcheck.hpp"
#include "adaptany/nn/layers.hpp"
#include "adaptany/nn/losses.hpp"
#include "adaptany/nn/model.hpp"
#include "adaptany/nn/optim.hpp"

namespace adaptany::nn {

// Averaged softmax over the model's classifier heads, in chunks.
inline Matrix predict_probabilities(const ModelState& model, const Matrix& images, int chunk = 256) {
  const auto heads = model.classifier_heads();
  require(!heads.empty(), "model has no classifier head");
  Matrix out(images.rows(), model.category_count);
  for (Eigen::Index start = 0; start < images.rows(); start += chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(chunk, images.rows() - start);
    const Matrix feats = extract_features(model, images.middleRows(start, n));
    Matrix acc = Matrix::Zero(n, model.category_count);
    for (const auto& h : heads) acc += softmax(head_forward(model, h, feats));
    out.middleRows(start, n) = acc / static_cast<double>(heads.size());
  }
  return out;
}

inline Matrix features_of(const ModelState& model, const Matrix& images, int chunk = 256) {
  Matrix out(images.rows(), model.feature_dim());
  for (Eigen::Index start = 0; start < images.rows(); start += chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(chunk, images.rows() - start);
    out.middleRows(start, n) = extract_features(model, images.middleRows(start, n));
  }
  return out;
}

}  // namespace adaptany::nn
