#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptany/common.hpp"
#include "adaptany/image.hpp"

namespace adaptany::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

inline const std::string kExtractor = "extractor";
inline const std::string kMainHead = "main";
inline const std::string kAuxHead = "aux";
inline const std::string kDomainHead = "domain";

// Images as rows (HWC order), values in [0,1].
struct Batch {
  ImageShape shape;
  Matrix images;
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<std::uint8_t>> domain_flags;

  int size() const { return static_cast<int>(images.rows()); }

  void validate(int category_count = -1) const {
    require(images.rows() >= 1, "batch must contain at least one image");
    if (images.cols() != static_cast<Eigen::Index>(shape.size()))
      throw ShapeMismatch("batch rows have " + std::to_string(images.cols()) + " values, shape " +
                          shape.str() + " needs " + std::to_string(shape.size()));
    if (labels) {
      require(static_cast<int>(labels->size()) == size(), "label count differs from batch size");
      if (category_count > 0)
        for (int l : *labels)
          require(l >= 0 && l < category_count, "batch label " + std::to_string(l) + " out of range");
    }
    if (domain_flags)
      require(static_cast<int>(domain_flags->size()) == size(), "domain flag count differs from batch size");
  }
};

// Conv extractor description. Each block is conv3x3(pad 1) -> ReLU -> 2x2
// average pool; then a fully connected layer with ReLU gives the features.
struct Architecture {
  ImageShape input{32, 32, 3};
  std::vector<int> conv_channels{16, 32, 64};
  int feature_dim = 128;
  int domain_hidden = 64;

  std::string id() const {
    std::string ch;
    for (int c : conv_channels) ch += (ch.empty() ? "" : ".") + std::to_string(c);
    return "convnet-" + input.str() + "-c" + ch + "-f" + std::to_string(feature_dim) + "-d" +
           std::to_string(domain_hidden);
  }

  static Architecture parse(const std::string& id) {
    auto fail = [&] { return InvalidArgument("malformed architecture id '" + id + "'"); };
    std::vector<std::string> parts;
    std::stringstream ss(id);
    for (std::string p; std::getline(ss, p, '-');) parts.push_back(p);
    if (parts.size() != 5 || parts[0] != "convnet") throw fail();
    Architecture a;
    try {
      int h = 0, w = 0, c = 0;
      if (std::sscanf(parts[1].c_str(), "%dx%dx%d", &h, &w, &c) != 3) throw fail();
      a.input = {h, w, c};
      if (parts[2].empty() || parts[2][0] != 'c') throw fail();
      a.conv_channels.clear();
      std::stringstream cs(parts[2].substr(1));
      for (std::string x; std::getline(cs, x, '.');) a.conv_channels.push_back(std::stoi(x));
      if (parts[3][0] != 'f' || parts[4][0] != 'd') throw fail();
      a.feature_dim = std::stoi(parts[3].substr(1));
      a.domain_hidden = std::stoi(parts[4].substr(1));
    } catch (const std::logic_error&) {
      throw fail();
    }
    a.validate();
    return a;
  }

  void validate() const {
    require(input.height > 0 && input.width > 0 && input.channels > 0, "architecture: bad input shape");
    require(!conv_channels.empty(), "architecture: needs at least one conv block");
    const int div = 1 << conv_channels.size();
    require(input.height % div == 0 && input.width % div == 0,
            "architecture: input " + input.str() + " not divisible by 2^blocks");
    for (int c : conv_channels) require(c > 0, "architecture: channel counts must be positive");
    require(feature_dim > 0 && domain_hidden > 0, "architecture: dims must be positive");
  }

  int pooled_height() const { return input.height >> conv_channels.size(); }
  int pooled_width() const { return input.width >> conv_channels.size(); }
  int flat_dim() const { return pooled_height() * pooled_width() * conv_channels.back(); }
};

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;

  std::size_t count() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
  bool operator==(const ParamSpec&) const = default;
};

// A flat parameter vector with a registry of named, shaped slices.
struct ParamGroup {
  std::string kind;  // "conv", "linear" or "mlp"
  std::vector<ParamSpec> registry;
  Vector values;

  void add(const std::string& name, std::vector<int> shape) {
    ParamSpec s{name, std::move(shape), static_cast<std::size_t>(values.size())};
    values.conservativeResize(static_cast<Eigen::Index>(s.offset + s.count()));
    values.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.count())).setZero();
    registry.push_back(std::move(s));
  }

  const ParamSpec& spec(const std::string& name) const {
    for (const auto& s : registry)
      if (s.name == name) return s;
    throw InvalidArgument("no parameter named '" + name + "'");
  }

  ConstMatrixMap matrix(const std::string& name) const {
    const auto& s = spec(name);
    const int rows = s.shape.size() == 2 ? s.shape[0] : 1;
    const int cols = s.shape.back();
    return ConstMatrixMap(values.data() + s.offset, rows, cols);
  }
  MatrixMap matrix(const std::string& name) {
    const auto& s = spec(name);
    const int rows = s.shape.size() == 2 ? s.shape[0] : 1;
    const int cols = s.shape.back();
    return MatrixMap(values.data() + s.offset, rows, cols);
  }

  bool same_layout(const ParamGroup& o) const { return kind == o.kind && registry == o.registry; }
};

using Gradients = std::map<std::string, Vector>;

struct ModelState {
  std::string architecture_id;
  int category_count = 0;
  std::uint64_t rng_seed = 0;
  std::string stage_tag = "init";
  ParamGroup extractor;
  std::map<std::string, ParamGroup> heads;

  Architecture architecture() const { return Architecture::parse(architecture_id); }
  int feature_dim() const { return architecture().feature_dim; }
  bool has_head(const std::string& name) const { return heads.count(name) > 0; }

  const ParamGroup& head(const std::string& name) const {
    const auto it = heads.find(name);
    if (it == heads.end()) throw InvalidArgument("model has no head '" + name + "'");
    return it->second;
  }

  // "extractor" or a head name.
  ParamGroup& group(const std::string& key) {
    if (key == kExtractor) return extractor;
    const auto it = heads.find(key);
    if (it == heads.end()) throw InvalidArgument("model has no parameter group '" + key + "'");
    return it->second;
  }
  const ParamGroup& group(const std::string& key) const {
    return const_cast<ModelState*>(this)->group(key);
  }

  std::vector<std::string> group_keys() const {
    std::vector<std::string> keys{kExtractor};
    for (const auto& [k, v] : heads) keys.push_back(k);
    return keys;
  }

  std::vector<std::string> classifier_heads() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : heads)
      if (v.kind == "linear") out.push_back(k);
    return out;
  }

  bool all_finite() const {
    if (!extractor.values.allFinite()) return false;
    for (const auto& [k, g] : heads)
      if (!g.values.allFinite()) return false;
    return true;
  }

  bool operator==(const ModelState& o) const {
    if (architecture_id != o.architecture_id || category_count != o.category_count ||
        heads.size() != o.heads.size() || !extractor.same_layout(o.extractor) ||
        extractor.values != o.extractor.values)
      return false;
    for (const auto& [k, g] : heads) {
      const auto it = o.heads.find(k);
      if (it == o.heads.end() || !g.same_layout(it->second) || g.values != it->second.values) return false;
    }
    return true;
  }
};

inline Gradients zero_gradients(const ModelState& m, const std::vector<std::string>& keys) {
  Gradients g;
  for (const auto& k : keys) g[k] = Vector::Zero(m.group(k).values.size());
  return g;
}

inline Gradients zero_gradients(const ModelState& m) { return zero_gradients(m, m.group_keys()); }

inline ParamGroup make_extractor_group(const Architecture& a) {
  ParamGroup g;
  g.kind = "conv";
  int cin = a.input.channels;
  for (std::size_t i = 0; i < a.conv_channels.size(); ++i) {
    const int cout = a.conv_channels[i];
    g.add("conv" + std::to_string(i) + ".weight", {9 * cin, cout});
    g.add("conv" + std::to_string(i) + ".bias", {cout});
    cin = cout;
  }
  g.add("fc.weight", {a.flat_dim(), a.feature_dim});
  g.add("fc.bias", {a.feature_dim});
  return g;
}

inline ParamGroup make_linear_head(int in, int out) {
  ParamGroup g;
  g.kind = "linear";
  g.add("weight", {in, out});
  g.add("bias", {out});
  return g;
}

inline ParamGroup make_mlp_head(int in, int hidden) {
  ParamGroup g;
  g.kind = "mlp";
  g.add("fc1.weight", {in, hidden});
  g.add("fc1.bias", {hidden});
  g.add("fc2.weight", {hidden, 1});
  g.add("fc2.bias", {1});
  return g;
}

// Expected layout of a group for an architecture; used to validate checkpoints.
inline ParamGroup expected_group(const Architecture& a, int category_count, const std::string& key,
                                 const std::string& kind) {
  if (key == kExtractor) return make_extractor_group(a);
  if (kind == "mlp") return make_mlp_head(a.feature_dim, a.domain_hidden);
  return make_linear_head(a.feature_dim, category_count);
}

namespace detail {
inline void fill_normal(ParamGroup& g, const std::string& name, double stddev, Rng& rng) {
  auto m = g.matrix(name);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
}

inline void init_group(ParamGroup& g, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& s : g.registry) {
    if (s.shape.size() == 2) fill_normal(g, s.name, std::sqrt(2.0 / s.shape[0]), rng);
  }
}
}  // namespace detail

struct HeadSet {
  int classifier_heads = 1;  // 1, or 2 for MCD
  bool domain_head = false;
};

// He-normal weights and zero biases. Every group draws from its own seed
// stream, so adding a head never perturbs the others.
inline ModelState init_model(const Architecture& arch, int category_count, std::uint64_t seed,
                             HeadSet heads = {}) {
  arch.validate();
  require(category_count >= 1, "category_count must be >= 1");
  require(heads.classifier_heads == 1 || heads.classifier_heads == 2, "1 or 2 classifier heads");
  ModelState m;
  m.architecture_id = arch.id();
  m.category_count = category_count;
  m.rng_seed = seed;
  m.extractor = make_extractor_group(arch);
  detail::init_group(m.extractor, derive_seed(seed, fnv1a(kExtractor)));
  auto add_head = [&](const std::string& key, ParamGroup g) {
    detail::init_group(g, derive_seed(seed, fnv1a(key)));
    m.heads.emplace(key, std::move(g));
  };
  add_head(kMainHead, make_linear_head(arch.feature_dim, category_count));
  if (heads.classifier_heads == 2) add_head(kAuxHead, make_linear_head(arch.feature_dim, category_count));
  if (heads.domain_head) add_head(kDomainHead, make_mlp_head(arch.feature_dim, arch.domain_hidden));
  return m;
}

}  // namespace adaptany::nn
