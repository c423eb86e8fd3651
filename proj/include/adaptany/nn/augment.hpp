#pragma once

#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

struct AugmentPolicy {
  int weak_shift = 2;          // max translation in pixels for the weak view
  double flip_probability = 0.5;
  int strong_extra_shift = 3;  // additional translation for the strong view
  double jitter = 0.4;         // brightness/contrast/saturation jitter amplitude
  double erase_probability = 0.75;
  double erase_min = 0.25;     // erased box side as a fraction of the image side
  double erase_max = 0.5;
};

namespace detail {

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Output pixel (y, x) reads source pixel (y - dy, x' - dx) with reflection
// padding, where x' mirrors x when `flip` is set.
inline void flip_shift_row(const double* src, double* dst, ImageShape s, bool flip, int dx, int dy) {
  for (int y = 0; y < s.height; ++y) {
    const int sy = reflect(y - dy, s.height);
    for (int x = 0; x < s.width; ++x) {
      int sx = reflect(x - dx, s.width);
      if (flip) sx = s.width - 1 - sx;
      for (int c = 0; c < s.channels; ++c)
        dst[(y * s.width + x) * s.channels + c] = src[(sy * s.width + sx) * s.channels + c];
    }
  }
}

inline void weak_row(const double* src, double* dst, ImageShape s, Rng& rng, const AugmentPolicy& p) {
  const bool flip = rng.bernoulli(p.flip_probability);
  const int dx = rng.index(2 * p.weak_shift + 1) - p.weak_shift;
  const int dy = rng.index(2 * p.weak_shift + 1) - p.weak_shift;
  flip_shift_row(src, dst, s, flip, dx, dy);
}

}  // namespace detail

inline std::uint64_t augment_row_seed(std::uint64_t seed, Eigen::Index row) {
  return derive_seed(seed, 0x61756775ULL, static_cast<std::uint64_t>(row));
}

// Random horizontal flip plus a small translation, per image. Labels and
// batch size are untouched; deterministic in `seed`.
inline Batch augment_weak(const Batch& batch, std::uint64_t seed, const AugmentPolicy& policy = {}) {
  Batch out = batch;
  for (Eigen::Index i = 0; i < batch.images.rows(); ++i) {
    Rng rng(augment_row_seed(seed, i));
    detail::weak_row(batch.images.row(i).data(), out.images.row(i).data(), batch.shape, rng, policy);
  }
  return out;
}

// The weak view for the same seed, followed by a further translation, colour
// jitter and random erasing.
inline Batch augment_strong(const Batch& batch, std::uint64_t seed, const AugmentPolicy& policy = {}) {
  Batch out = batch;
  const ImageShape s = batch.shape;
  std::vector<double> tmp(s.size());
  for (Eigen::Index i = 0; i < batch.images.rows(); ++i) {
    Rng rng(augment_row_seed(seed, i));
    double* row = out.images.row(i).data();
    detail::weak_row(batch.images.row(i).data(), tmp.data(), s, rng, policy);
    const int extra = policy.strong_extra_shift;
    const int dx = rng.index(2 * extra + 1) - extra;
    const int dy = rng.index(2 * extra + 1) - extra;
    detail::flip_shift_row(tmp.data(), row, s, false, dx, dy);

    const double brightness = 1.0 + policy.jitter * rng.uniform(-1.0, 1.0);
    const double contrast = 1.0 + policy.jitter * rng.uniform(-1.0, 1.0);
    const double saturation = 1.0 + policy.jitter * rng.uniform(-1.0, 1.0);
    const int pixels = s.height * s.width;
    double mean = 0.0;
    for (int k = 0; k < static_cast<int>(s.size()); ++k) mean += row[k];
    mean /= static_cast<double>(s.size());
    for (int px = 0; px < pixels; ++px) {
      double* p = row + px * s.channels;
      double gray = 0.0;
      for (int c = 0; c < s.channels; ++c) gray += p[c];
      gray /= s.channels;
      for (int c = 0; c < s.channels; ++c) {
        double v = gray + saturation * (p[c] - gray);
        v = mean + contrast * (v - mean);
        p[c] = std::clamp(v * brightness, 0.0, 1.0);
      }
    }
    if (rng.bernoulli(policy.erase_probability)) {
      const int eh = std::max(1, static_cast<int>(s.height * rng.uniform(policy.erase_min, policy.erase_max)));
      const int ew = std::max(1, static_cast<int>(s.width * rng.uniform(policy.erase_min, policy.erase_max)));
      const int y0 = rng.index(s.height - eh + 1);
      const int x0 = rng.index(s.width - ew + 1);
      const double fill = rng.uniform();
      for (int y = y0; y < y0 + eh; ++y)
        for (int x = x0; x < x0 + ew; ++x)
          for (int c = 0; c < s.channels; ++c) row[(y * s.width + x) * s.channels + c] = fill;
    }
  }
  return out;
}

}  // namespace adaptany::nn
