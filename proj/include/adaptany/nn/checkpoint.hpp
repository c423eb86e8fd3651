#pragma once

#include <bit>
#include <cstring>
#include <string>

#include "adaptany/nn/model.hpp"

namespace adaptany::nn {

inline constexpr const char* kCheckpointFormat = "adaptany-checkpoint/1";

// One JSON header line (architecture, category count, seed, stage tag and the
// parameter registry of every group) followed by the raw little-endian
// float64 values of each group in header order.
inline std::string serialize_checkpoint(const ModelState& m) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian");
  json groups = json::array();
  std::string payload;
  for (const auto& key : m.group_keys()) {
    const auto& g = m.group(key);
    json reg = json::array();
    for (const auto& s : g.registry) reg.push_back({{"name", s.name}, {"shape", s.shape}});
    groups.push_back({{"key", key}, {"kind", g.kind}, {"registry", reg}, {"count", g.values.size()}});
    payload.append(reinterpret_cast<const char*>(g.values.data()),
                   static_cast<std::size_t>(g.values.size()) * sizeof(double));
  }
  const json header = {{"format", kCheckpointFormat},
                       {"architecture_id", m.architecture_id},
                       {"category_count", m.category_count},
                       {"rng_seed", m.rng_seed},
                       {"stage_tag", m.stage_tag},
                       {"groups", groups}};
  return header.dump() + '\n' + payload;
}

inline void write_checkpoint(const ModelState& m, const fs::path& path) {
  write_file(path, serialize_checkpoint(m));
}

inline ModelState parse_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint") {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw InvalidArgument(origin + ": missing checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw InvalidArgument(origin + ": malformed checkpoint header: " + e.what());
  }
  if (header.value("format", "") != kCheckpointFormat)
    throw InvalidArgument(origin + ": unsupported checkpoint format");
  ModelState m;
  m.architecture_id = header.at("architecture_id").get<std::string>();
  m.category_count = header.at("category_count").get<int>();
  m.rng_seed = header.at("rng_seed").get<std::uint64_t>();
  m.stage_tag = header.at("stage_tag").get<std::string>();
  const Architecture arch = Architecture::parse(m.architecture_id);
  std::size_t offset = nl + 1;
  for (const auto& gj : header.at("groups")) {
    const auto key = gj.at("key").get<std::string>();
    const auto kind = gj.at("kind").get<std::string>();
    ParamGroup expected = expected_group(arch, m.category_count, key, kind);
    ParamGroup stored;
    stored.kind = kind;
    for (const auto& sj : gj.at("registry")) stored.add(sj.at("name"), sj.at("shape").get<std::vector<int>>());
    if (!stored.same_layout(expected))
      throw ShapeMismatch(origin + ": parameter registry of '" + key + "' does not match architecture " +
                          m.architecture_id);
    const auto count = gj.at("count").get<std::size_t>();
    if (count != static_cast<std::size_t>(expected.values.size()))
      throw ShapeMismatch(origin + ": group '" + key + "' has wrong parameter count");
    if (bytes.size() < offset + count * sizeof(double)) throw InvalidArgument(origin + ": truncated parameters");
    std::memcpy(expected.values.data(), bytes.data() + offset, count * sizeof(double));
    offset += count * sizeof(double);
    if (key == kExtractor) {
      m.extractor = std::move(expected);
    } else {
      m.heads.emplace(key, std::move(expected));
    }
  }
  if (offset != bytes.size()) throw InvalidArgument(origin + ": trailing bytes after parameters");
  if (m.extractor.values.size() == 0) throw InvalidArgument(origin + ": checkpoint has no extractor");
  if (!m.all_finite()) throw NonFinite(origin + ": checkpoint contains non-finite parameters");
  return m;
}

inline ModelState load_checkpoint(const fs::path& path) { return parse_checkpoint(read_file(path), path.string()); }

// Content-derived checkpoint identifier.
inline std::string checkpoint_id(const ModelState& m) { return hex64(fnv1a(serialize_checkpoint(m))); }

}  // namespace adaptany::nn
