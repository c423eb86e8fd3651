#pragma once

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/dataset.hpp"
#include "adaptany/nnkit.hpp"
#include "adaptany/procedural.hpp"

namespace adaptany::testing {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "adaptany-" + tag;
    if (info) name += std::string("-") + info->test_suite_name() + "-" + info->name();
    path_ = fs::temp_directory_path() / name;
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline nn::Architecture tiny_architecture(ImageShape input = {16, 16, 3}) {
  nn::Architecture a;
  a.input = input;
  a.conv_channels = {4, 8, 8};
  a.feature_dim = 16;
  a.domain_hidden = 8;
  return a;
}

inline nn::Batch random_batch(int n, ImageShape shape, std::uint64_t seed) {
  Rng rng(seed);
  nn::Batch b;
  b.shape = shape;
  b.images = nn::Matrix::NullaryExpr(n, static_cast<Eigen::Index>(shape.size()), [&] { return rng.uniform(); });
  return b;
}

inline std::vector<int> alternating_labels(int n, int k) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(i % k);
  return out;
}

// In-memory set of procedural renders, `per_category` rows per category in
// category order. Unlabeled sets carry -1 labels.
inline ImageSet render_set(int categories, const std::string& style, int per_category, ImageShape shape,
                           std::uint64_t seed, bool labeled, DomainTag domain) {
  ImageSet s;
  s.shape = shape;
  s.domain = domain;
  s.origin = "memory:" + style;
  for (int c = 0; c < categories; ++c) s.category_names.push_back("c" + std::to_string(c));
  s.images.resize(categories * per_category, static_cast<Eigen::Index>(shape.size()));
  int row = 0;
  for (int c = 0; c < categories; ++c)
    for (int r = 0; r < per_category; ++r, ++row) {
      const Image img = procedural_render(c, style_by_name(style), shape, derive_seed(seed, c, r));
      for (std::size_t k = 0; k < img.pixels.size(); ++k)
        s.images(row, static_cast<Eigen::Index>(k)) = img.pixels[k] / 255.0;
      s.ids.push_back(style + "-" + std::to_string(c) + "-" + std::to_string(r));
      s.labels.push_back(labeled ? c : -1);
    }
  return s;
}

}  // namespace adaptany::testing
