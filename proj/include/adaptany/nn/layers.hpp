#pragma once

#include <string>
#include <vector>

#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

namespace detail {

// Rows of `in` are pixels (n, y, x) of an NHWC batch; returns the 3x3, pad-1
// patch matrix with one row per output pixel and 9*C columns.
inline Matrix im2col3x3(const Matrix& in, int n, int h, int w, int c) {
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(n) * h * w, 9 * c);
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * h + y) * w + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(b) * h + sy) * w + sx;
            cols.row(row).segment((ky * 3 + kx) * c, c) = in.row(src);
          }
        }
      }
  return cols;
}

inline Matrix col2im3x3(const Matrix& cols, int n, int h, int w, int c) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n) * h * w, c);
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * h + y) * w + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            const Eigen::Index dst = (static_cast<Eigen::Index>(b) * h + sy) * w + sx;
            out.row(dst) += cols.row(row).segment((ky * 3 + kx) * c, c);
          }
        }
      }
  return out;
}

inline Matrix avgpool2(const Matrix& in, int n, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  Matrix out(static_cast<Eigen::Index>(n) * oh * ow, in.cols());
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const auto r = [&](int yy, int xx) { return (static_cast<Eigen::Index>(b) * h + yy) * w + xx; };
        out.row((static_cast<Eigen::Index>(b) * oh + y) * ow + x) =
            0.25 * (in.row(r(2 * y, 2 * x)) + in.row(r(2 * y, 2 * x + 1)) +
                    in.row(r(2 * y + 1, 2 * x)) + in.row(r(2 * y + 1, 2 * x + 1)));
      }
  return out;
}

inline Matrix avgpool2_backward(const Matrix& dout, int n, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  Matrix din(static_cast<Eigen::Index>(n) * h * w, dout.cols());
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        din.row((static_cast<Eigen::Index>(b) * h + y) * w + x) =
            0.25 * dout.row((static_cast<Eigen::Index>(b) * oh + y / 2) * ow + x / 2);
  return din;
}

inline Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

inline Matrix relu_mask(const Matrix& pre, const Matrix& grad) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

inline Matrix as_rows(const Matrix& m, Eigen::Index rows) {
  return ConstMatrixMap(m.data(), rows, m.size() / rows);
}

}  // namespace detail

// Activations kept from a forward pass for the backward pass.
struct ExtractorTape {
  int batch = 0;
  std::vector<Matrix> cols;      // im2col input of each block
  std::vector<Matrix> conv_pre;  // pre-ReLU conv output of each block
  Matrix flat;
  Matrix fc_pre;
};

inline Matrix extract_features(const ModelState& model, const Matrix& images, ExtractorTape* tape = nullptr) {
  const Architecture arch = model.architecture();
  if (images.cols() != static_cast<Eigen::Index>(arch.input.size()))
    throw ShapeMismatch("images have " + std::to_string(images.cols()) + " values per row, model expects " +
                        arch.input.str());
  require(images.rows() >= 1, "forward needs at least one image");
  const int n = static_cast<int>(images.rows());
  int h = arch.input.height, w = arch.input.width, c = arch.input.channels;
  Matrix act = detail::as_rows(images, static_cast<Eigen::Index>(n) * h * w);
  if (tape) {
    *tape = {};
    tape->batch = n;
  }
  for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
    const auto wname = "conv" + std::to_string(i);
    Matrix cols = detail::im2col3x3(act, n, h, w, c);
    Matrix pre = cols * model.extractor.matrix(wname + ".weight");
    pre.rowwise() += model.extractor.matrix(wname + ".bias").row(0);
    act = detail::avgpool2(detail::relu(pre), n, h, w);
    if (tape) {
      tape->cols.push_back(std::move(cols));
      tape->conv_pre.push_back(std::move(pre));
    }
    h /= 2;
    w /= 2;
    c = arch.conv_channels[i];
  }
  Matrix flat = detail::as_rows(act, n);
  Matrix fc_pre = flat * model.extractor.matrix("fc.weight");
  fc_pre.rowwise() += model.extractor.matrix("fc.bias").row(0);
  Matrix features = detail::relu(fc_pre);
  if (tape) {
    tape->flat = std::move(flat);
    tape->fc_pre = std::move(fc_pre);
  }
  return features;
}

// Accumulates d(loss)/d(extractor params) into `grad` given d(loss)/d(features).
inline void extractor_backward(const ModelState& model, const ExtractorTape& tape, const Matrix& dfeatures,
                               Vector& grad) {
  const Architecture arch = model.architecture();
  const ParamGroup& g = model.extractor;
  if (grad.size() != g.values.size()) grad = Vector::Zero(g.values.size());
  auto gmat = [&](const std::string& name) {
    const auto& s = g.spec(name);
    const int rows = s.shape.size() == 2 ? s.shape[0] : 1;
    return MatrixMap(grad.data() + s.offset, rows, s.shape.back());
  };
  const int n = tape.batch;
  Matrix dpre = detail::relu_mask(tape.fc_pre, dfeatures);
  gmat("fc.weight").noalias() += tape.flat.transpose() * dpre;
  gmat("fc.bias").row(0) += dpre.colwise().sum();
  Matrix dflat = dpre * g.matrix("fc.weight").transpose();

  const int blocks = static_cast<int>(arch.conv_channels.size());
  int h = arch.pooled_height(), w = arch.pooled_width();
  Matrix dact = detail::as_rows(dflat, static_cast<Eigen::Index>(n) * h * w);
  for (int i = blocks - 1; i >= 0; --i) {
    h *= 2;
    w *= 2;
    const int cin = i == 0 ? arch.input.channels : arch.conv_channels[i - 1];
    const auto wname = "conv" + std::to_string(i);
    Matrix dconv = detail::relu_mask(tape.conv_pre[i], detail::avgpool2_backward(dact, n, h, w));
    gmat(wname + ".weight").noalias() += tape.cols[i].transpose() * dconv;
    gmat(wname + ".bias").row(0) += dconv.colwise().sum();
    if (i > 0) {
      Matrix dcols = dconv * g.matrix(wname + ".weight").transpose();
      dact = detail::col2im3x3(dcols, n, h, w, cin);
    }
  }
}

struct HeadTape {
  Matrix hidden_pre;  // mlp heads only
};

inline Matrix head_forward(const ModelState& model, const std::string& head, const Matrix& features,
                           HeadTape* tape = nullptr) {
  const ParamGroup& g = model.head(head);
  if (features.cols() != model.feature_dim())
    throw ShapeMismatch("feature width " + std::to_string(features.cols()) + " != " +
                        std::to_string(model.feature_dim()));
  if (g.kind == "mlp") {
    Matrix pre = features * g.matrix("fc1.weight");
    pre.rowwise() += g.matrix("fc1.bias").row(0);
    Matrix out = detail::relu(pre) * g.matrix("fc2.weight");
    out.rowwise() += g.matrix("fc2.bias").row(0);
    if (tape) tape->hidden_pre = std::move(pre);
    return out;
  }
  Matrix logits = features * g.matrix("weight");
  logits.rowwise() += g.matrix("bias").row(0);
  return logits;
}

// Accumulates head gradients into grads[head] and returns d(loss)/d(features).
inline Matrix head_backward(const ModelState& model, const std::string& head, const Matrix& features,
                            const HeadTape& tape, const Matrix& dout, Gradients& grads) {
  const ParamGroup& g = model.head(head);
  Vector& grad = grads[head];
  if (grad.size() != g.values.size()) grad = Vector::Zero(g.values.size());
  auto gmat = [&](const std::string& name) {
    const auto& s = g.spec(name);
    const int rows = s.shape.size() == 2 ? s.shape[0] : 1;
    return MatrixMap(grad.data() + s.offset, rows, s.shape.back());
  };
  if (g.kind == "mlp") {
    const Matrix hidden = detail::relu(tape.hidden_pre);
    gmat("fc2.weight").noalias() += hidden.transpose() * dout;
    gmat("fc2.bias").row(0) += dout.colwise().sum();
    Matrix dpre = detail::relu_mask(tape.hidden_pre, dout * g.matrix("fc2.weight").transpose());
    gmat("fc1.weight").noalias() += features.transpose() * dpre;
    gmat("fc1.bias").row(0) += dpre.colwise().sum();
    return dpre * g.matrix("fc1.weight").transpose();
  }
  gmat("weight").noalias() += features.transpose() * dout;
  gmat("bias").row(0) += dout.colwise().sum();
  return dout * g.matrix("weight").transpose();
}

struct ForwardResult {
  Matrix features;
  Matrix logits;
};

inline ForwardResult forward(const ModelState& model, const Batch& batch, const std::string& head = kMainHead) {
  batch.validate();
  model.head(head);
  ForwardResult r;
  r.features = extract_features(model, batch.images);
  r.logits = head_forward(model, head, r.features);
  return r;
}

// Gradient reversal: identity forward, gradient scaled by -lambda backward.
struct GradientReversal {
  double lambda = 1.0;

  Matrix forward(const Matrix& x) const { return x; }
  Matrix backward(const Matrix& upstream) const { return -lambda * upstream; }
};

}  // namespace adaptany::nn
