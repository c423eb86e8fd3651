#pragma once

#include <string>
#include <vector>

#include "adaptany/manifest.hpp"
#include "adaptany/nn/model.hpp"

namespace adaptany {

// A manifest's images decoded into memory, one row per sample.
struct ImageSet {
  std::vector<std::string> ids;
  nn::Matrix images;
  std::vector<int> labels;  // -1 where absent
  ImageShape shape;
  std::vector<std::string> category_names;
  DomainTag domain = DomainTag::target;
  std::string origin;  // manifest path, for provenance

  int size() const { return static_cast<int>(ids.size()); }
  int category_count() const { return static_cast<int>(category_names.size()); }
  bool fully_labeled() const {
    return !labels.empty() && std::none_of(labels.begin(), labels.end(), [](int l) { return l < 0; });
  }

  nn::Batch batch(const std::vector<int>& rows, bool with_labels = false) const {
    nn::Batch b;
    b.shape = shape;
    b.images.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(shape.size()));
    std::vector<int> lab;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      b.images.row(static_cast<Eigen::Index>(i)) = images.row(rows[i]);
      if (with_labels) lab.push_back(labels[static_cast<std::size_t>(rows[i])]);
    }
    if (with_labels) b.labels = std::move(lab);
    return b;
  }

  ImageSet without_labels() const {
    ImageSet out = *this;
    std::fill(out.labels.begin(), out.labels.end(), -1);
    return out;
  }
};

inline ImageSet load_images(const DatasetManifest& m) {
  ImageSet s;
  s.shape = m.image_shape;
  s.category_names = m.category_names;
  s.domain = m.domain_tag;
  s.images.resize(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.image_shape.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& r = m.records[i];
    const Image img = read_ppm(m.resolve(r));
    if (!(img.shape == m.image_shape))
      throw ShapeMismatch(r.sample_id + ": image shape " + img.shape.str() + " != " + m.image_shape.str());
    auto row = s.images.row(static_cast<Eigen::Index>(i));
    for (std::size_t k = 0; k < img.pixels.size(); ++k)
      row[static_cast<Eigen::Index>(k)] = img.pixels[k] / 255.0;
    s.ids.push_back(r.sample_id);
    s.labels.push_back(r.label.value_or(-1));
  }
  return s;
}

inline ImageSet load_images(const fs::path& manifest_path) {
  auto s = load_images(load_manifest(manifest_path));
  s.origin = manifest_path.string();
  return s;
}

}  // namespace adaptany
