#pragma once

#include <mpfr.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/dataset.hpp"
#include "adaptany/nnkit.hpp"

namespace adaptany {

struct PseudoLabelEntry {
  std::string sample_id;
  int pseudo_label = 0;
  double confidence = 0.0;  // max head-averaged softmax probability

  bool operator==(const PseudoLabelEntry&) const = default;
};

struct PseudoLabelTable {
  std::vector<PseudoLabelEntry> entries;  // target manifest order
  std::string model_checkpoint_id;
  int category_count = 0;

  std::size_t size() const { return entries.size(); }
};

inline PseudoLabelTable pseudo_label(const nn::ModelState& model, const ImageSet& target) {
  if (target.size() > 0 && model.category_count != target.category_count())
    throw InvalidArgument("model has " + std::to_string(model.category_count) + " categories, target manifest has " +
                          std::to_string(target.category_count()));
  PseudoLabelTable table;
  table.model_checkpoint_id = nn::checkpoint_id(model);
  table.category_count = model.category_count;
  if (target.size() == 0) return table;
  const nn::Matrix p = nn::predict_probabilities(model, target.images);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const int label = nn::argmax_row(p, i);
    table.entries.push_back({target.ids[static_cast<std::size_t>(i)], label, p(i, label)});
  }
  return table;
}

// Mean of finite doubles, correctly rounded to nearest: the sum is
// accumulated exactly in a wide binary float and divided once.
inline double exact_mean(const std::vector<double>& values) {
  require(!values.empty(), "exact_mean of an empty set");
  // 2^-1074 .. 2^1024 plus carry room for up to 2^64 terms.
  constexpr mpfr_prec_t kWide = 1074 + 1024 + 64 + 8;
  mpfr_t acc, mean;
  mpfr_init2(acc, kWide);
  mpfr_init2(mean, 53);
  mpfr_set_zero(acc, 1);
  for (double v : values) {
    if (!std::isfinite(v)) {
      mpfr_clears(acc, mean, static_cast<mpfr_ptr>(nullptr));
      throw NonFinite("exact_mean: non-finite value");
    }
    mpfr_add_d(acc, acc, v, MPFR_RNDN);  // exact at this precision
  }
  mpfr_div_ui(mean, acc, static_cast<unsigned long>(values.size()), MPFR_RNDN);
  const double out = mpfr_get_d(mean, MPFR_RNDN);
  mpfr_clears(acc, mean, static_cast<mpfr_ptr>(nullptr));
  return out;
}

enum class SplitSide { confident, unconfident };

inline std::string to_string(SplitSide s) { return s == SplitSide::confident ? "confident" : "unconfident"; }

inline SplitSide parse_split_side(const std::string& s) {
  if (s == "confident") return SplitSide::confident;
  if (s == "unconfident") return SplitSide::unconfident;
  throw InvalidArgument("unknown split side '" + s + "'");
}

struct SplitPartition {
  std::set<std::string> confident_ids;
  std::set<std::string> unconfident_ids;
  std::map<int, double> per_category_threshold;  // only categories that received samples

  bool operator==(const SplitPartition&) const = default;
};

// Confident iff confidence >= the mean confidence of its pseudo-category.
inline SplitPartition split_by_category_mean(const PseudoLabelTable& table) {
  require(table.size() > 0, "split needs a non-empty pseudo-label table");
  std::map<int, std::vector<double>> by_cat;
  std::set<std::string> seen;
  for (const auto& e : table.entries) {
    require(e.confidence >= 0.0 && e.confidence <= 1.0, "confidence outside [0,1] for " + e.sample_id);
    require(e.pseudo_label >= 0, "negative pseudo label for " + e.sample_id);
    require(seen.insert(e.sample_id).second, "duplicate sample_id in pseudo-label table: " + e.sample_id);
    by_cat[e.pseudo_label].push_back(e.confidence);
  }
  SplitPartition part;
  for (const auto& [c, confs] : by_cat) part.per_category_threshold[c] = exact_mean(confs);
  for (const auto& e : table.entries) {
    if (e.confidence >= part.per_category_threshold.at(e.pseudo_label)) {
      part.confident_ids.insert(e.sample_id);
    } else {
      part.unconfident_ids.insert(e.sample_id);
    }
  }
  if (part.confident_ids.empty()) throw Error("internal", "split produced an empty confident side");
  return part;
}

// ---- partition file ---------------------------------------------------------
// JSONL: one header line, then one row per target sample in table order.

inline constexpr const char* kPartitionFormat = "adaptany-partition/1";

struct PartitionFile {
  PseudoLabelTable table;
  SplitPartition partition;
  std::string target_manifest;
  std::vector<std::string> category_names;

  SplitSide side_of(const std::string& id) const {
    if (partition.confident_ids.count(id)) return SplitSide::confident;
    if (partition.unconfident_ids.count(id)) return SplitSide::unconfident;
    throw InvalidArgument("sample '" + id + "' is not in the partition");
  }
};

inline std::string serialize_partition(const PartitionFile& pf) {
  json thresholds = json::object();
  for (const auto& [c, t] : pf.partition.per_category_threshold) thresholds[std::to_string(c)] = t;
  std::string out = json{{"format", kPartitionFormat},
                         {"checkpoint_id", pf.table.model_checkpoint_id},
                         {"target_manifest", pf.target_manifest},
                         {"category_names", pf.category_names},
                         {"thresholds", thresholds}}
                        .dump() +
                    "\n";
  for (const auto& e : pf.table.entries)
    out += json{{"sample_id", e.sample_id},
                {"pseudo_label", e.pseudo_label},
                {"confidence", e.confidence},
                {"side", to_string(pf.side_of(e.sample_id))}}
               .dump() +
           "\n";
  return out;
}

inline void write_partition(const PartitionFile& pf, const fs::path& path) { write_file(path, serialize_partition(pf)); }

inline PartitionFile load_partition(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InvalidArgument(path.string() + ": empty partition file");
  PartitionFile pf;
  try {
    const json header = json::parse(lines[0]);
    if (header.value("format", "") != kPartitionFormat)
      throw InvalidArgument(path.string() + ": not a partition file");
    pf.table.model_checkpoint_id = header.at("checkpoint_id").get<std::string>();
    pf.target_manifest = header.value("target_manifest", "");
    pf.category_names = header.at("category_names").get<std::vector<std::string>>();
    pf.table.category_count = static_cast<int>(pf.category_names.size());
    for (const auto& [k, v] : header.at("thresholds").items())
      pf.partition.per_category_threshold[std::stoi(k)] = v.get<double>();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json row = json::parse(lines[i]);
      PseudoLabelEntry e{row.at("sample_id"), row.at("pseudo_label"), row.at("confidence")};
      const auto side = parse_split_side(row.at("side"));
      (side == SplitSide::confident ? pf.partition.confident_ids : pf.partition.unconfident_ids).insert(e.sample_id);
      pf.table.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": malformed partition file: " + e.what());
  }
  return pf;
}

}  // namespace adaptany
