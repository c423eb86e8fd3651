#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/image.hpp"

namespace adaptany {

enum class DomainTag { synthetic, target };

inline std::string to_string(DomainTag d) { return d == DomainTag::synthetic ? "synthetic" : "target"; }

inline DomainTag parse_domain_tag(std::string_view s) {
  if (s == "synthetic") return DomainTag::synthetic;
  if (s == "target") return DomainTag::target;
  throw InvalidArgument("unknown domain tag '" + std::string(s) + "'");
}

struct SampleRecord {
  std::string sample_id;
  std::string image_path;  // relative to the manifest's directory
  std::optional<int> label;
  DomainTag domain_tag = DomainTag::target;
  std::optional<std::string> prompt_text;
  std::optional<double> confidence;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::vector<std::string> category_names;
  DomainTag domain_tag = DomainTag::target;
  ImageShape image_shape;
  json provenance = json::object();
  fs::path base_dir;  // where image_path entries resolve; not persisted

  int category_count() const { return static_cast<int>(category_names.size()); }
  std::size_t size() const { return records.size(); }
  bool fully_labeled() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.label.has_value(); });
  }
  fs::path resolve(const SampleRecord& r) const { return base_dir / r.image_path; }

  bool same_content(const DatasetManifest& o) const {
    return records == o.records && category_names == o.category_names &&
           domain_tag == o.domain_tag && image_shape == o.image_shape && provenance == o.provenance;
  }

  // Returns every structural violation (no file-system checks).
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.sample_id).second) out.push_back(r.sample_id + ": duplicate sample_id");
      if (r.domain_tag != domain_tag)
        out.push_back(r.sample_id + ": domain_tag " + to_string(r.domain_tag) +
                      " differs from manifest domain_tag " + to_string(domain_tag));
      if (r.label && (*r.label < 0 || *r.label >= category_count()))
        out.push_back(r.sample_id + ": label " + std::to_string(*r.label) + " out of range [0, " +
                      std::to_string(category_count()) + ")");
      if (r.domain_tag == DomainTag::synthetic && (!r.label || !r.prompt_text))
        out.push_back(r.sample_id + ": synthetic record needs both label and prompt_text");
      if (r.confidence && !(*r.confidence >= 0.0 && *r.confidence <= 1.0))
        out.push_back(r.sample_id + ": confidence outside [0,1]");
    }
    return out;
  }
};

class ManifestError : public Error {
 public:
  explicit ManifestError(std::vector<std::string> problems)
      : Error("manifest-error", join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "manifest invalid (" + std::to_string(p.size()) + " problem(s)):";
    for (const auto& x : p) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

inline json record_to_json(const SampleRecord& r) {
  json j = {{"sample_id", r.sample_id},
            {"image_path", r.image_path},
            {"label", r.label ? json(*r.label) : json(nullptr)},
            {"domain_tag", to_string(r.domain_tag)},
            {"prompt_text", r.prompt_text ? json(*r.prompt_text) : json(nullptr)}};
  if (r.confidence) j["confidence"] = *r.confidence;
  return j;
}

inline SampleRecord record_from_json(const json& j) {
  SampleRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.image_path = j.at("image_path").get<std::string>();
  if (!j.at("label").is_null()) r.label = j["label"].get<int>();
  r.domain_tag = parse_domain_tag(j.at("domain_tag").get<std::string>());
  if (j.contains("prompt_text") && !j["prompt_text"].is_null())
    r.prompt_text = j["prompt_text"].get<std::string>();
  if (j.contains("confidence") && !j["confidence"].is_null()) r.confidence = j["confidence"].get<double>();
  return r;
}

inline std::string serialize_manifest(const DatasetManifest& m) {
  const json header = {{"category_names", m.category_names},
                       {"domain_tag", to_string(m.domain_tag)},
                       {"image_shape", m.image_shape.to_json()},
                       {"provenance", m.provenance}};
  std::string out = header.dump() + '\n';
  for (const auto& r : m.records) out += record_to_json(r).dump() + '\n';
  return out;
}

// Header line (category_names, domain_tag, image_shape, provenance) followed
// by one JSON record per line.
inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
  if (const auto v = m.violations(); !v.empty()) throw ManifestError(v);
  write_file(path, serialize_manifest(m));
}

struct ManifestLoadOptions {
  bool check_files = true;  // verify image existence and shape
};

// Loads and validates; every violation found is reported in one error.
inline DatasetManifest load_manifest(const fs::path& path, ManifestLoadOptions opts = {}) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ManifestError({path.string() + ": empty manifest file"});
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::vector<std::string> problems;
  try {
    const auto header = json::parse(lines.front());
    m.category_names = header.at("category_names").get<std::vector<std::string>>();
    m.domain_tag = parse_domain_tag(header.at("domain_tag").get<std::string>());
    m.image_shape = ImageShape::from_json(header.at("image_shape"));
    m.provenance = header.value("provenance", json::object());
  } catch (const std::exception& e) {
    throw ManifestError({path.string() + ": malformed header: " + e.what()});
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      m.records.push_back(record_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      problems.push_back("line " + std::to_string(i + 1) + ": malformed record: " + e.what());
    }
  }
  auto structural = m.violations();
  problems.insert(problems.end(), structural.begin(), structural.end());
  if (opts.check_files) {
    for (const auto& r : m.records) {
      const auto file = m.resolve(r);
      if (!fs::exists(file)) {
        problems.push_back(r.sample_id + ": missing image file " + file.string());
        continue;
      }
      try {
        const auto shape = peek_ppm_shape(file);
        if (!(shape == m.image_shape))
          problems.push_back(r.sample_id + ": image shape " + shape.str() + " != manifest shape " +
                             m.image_shape.str());
      } catch (const Error& e) {
        problems.push_back(r.sample_id + ": unreadable image: " + e.what());
      }
    }
  }
  if (!problems.empty()) throw ManifestError(problems);
  return m;
}

}  // namespace adaptany
