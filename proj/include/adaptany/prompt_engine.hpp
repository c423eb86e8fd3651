#pragma once

#include <atomic>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/llm.hpp"

namespace adaptany {

enum class Mechanism { simple, domain, gpt };

inline std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::simple: return "simple";
    case Mechanism::domain: return "domain";
    case Mechanism::gpt: return "gpt";
  }
  return "?";
}

inline Mechanism parse_mechanism(std::string_view s) {
  if (s == "simple") return Mechanism::simple;
  if (s == "domain") return Mechanism::domain;
  if (s == "gpt") return Mechanism::gpt;
  throw InvalidArgument("unknown prompt mechanism '" + std::string(s) + "'");
}

struct CategoryInfo {
  std::string name;
  std::string description;
};

// Category list plus the target-domain description a prompt set is built for.
struct TaskDefinition {
  std::string task_id;
  std::string domain_name;
  std::string domain_description;
  std::vector<CategoryInfo> categories;

  std::vector<std::string> category_names() const {
    std::vector<std::string> out;
    for (const auto& c : categories) out.push_back(c.name);
    return out;
  }

  static TaskDefinition from_json(const json& j) {
    TaskDefinition t;
    t.task_id = j.value("task_id", "task");
    if (j.contains("domain")) {
      t.domain_name = j["domain"].value("name", "");
      t.domain_description = j["domain"].value("description", "");
    }
    for (const auto& c : j.at("categories")) {
      if (c.is_string()) {
        t.categories.push_back({c.get<std::string>(), ""});
      } else {
        t.categories.push_back({c.at("name").get<std::string>(), c.value("description", "")});
      }
    }
    require(!t.categories.empty(), "task '" + t.task_id + "' has no categories");
    std::set<std::string> seen;
    for (const auto& c : t.categories) {
      require(!c.name.empty(), "task '" + t.task_id + "' has an empty category name");
      require(seen.insert(c.name).second, "duplicate category '" + c.name + "'");
    }
    return t;
  }

  json to_json() const {
    json cats = json::array();
    for (const auto& c : categories) cats.push_back({{"name", c.name}, {"description", c.description}});
    return {{"task_id", task_id},
            {"domain", {{"name", domain_name}, {"description", domain_description}}},
            {"categories", cats}};
  }

  static TaskDefinition load(const fs::path& path) { return from_json(read_json(path)); }
};

struct PromptRecord {
  std::string text;
  std::string category_name;
  int category_id = 0;
  Mechanism mechanism = Mechanism::simple;
  std::optional<std::string> domain_name;

  bool operator==(const PromptRecord&) const = default;

  json to_json() const {
    return {{"text", text},
            {"category_name", category_name},
            {"category_id", category_id},
            {"mechanism", to_string(mechanism)},
            {"domain_name", domain_name ? json(*domain_name) : json(nullptr)}};
  }

  static PromptRecord from_json(const json& j) {
    PromptRecord r;
    r.text = j.at("text").get<std::string>();
    r.category_name = j.at("category_name").get<std::string>();
    r.category_id = j.at("category_id").get<int>();
    r.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
    if (j.contains("domain_name") && !j["domain_name"].is_null())
      r.domain_name = j["domain_name"].get<std::string>();
    return r;
  }

  // Checks the record-level invariants, plus the label binding when a
  // category list is supplied.
  void validate(const std::vector<std::string>* categories = nullptr) const {
    require(!text.empty(), "prompt text is empty");
    require(text.find('\n') == std::string::npos && text.find('\r') == std::string::npos,
            "prompt text contains a newline: " + text);
    require(mechanism != Mechanism::domain || domain_name.has_value(),
            "domain prompt without domain_name: " + text);
    if (categories) {
      require(category_id >= 0 && category_id < static_cast<int>(categories->size()),
              "category_id " + std::to_string(category_id) + " out of range");
      require((*categories)[category_id] == category_name,
              "category_name '" + category_name + "' does not match category list entry");
    }
  }
};

struct PromptSet {
  std::vector<PromptRecord> records;
  std::string task_id;
  Mechanism created_with = Mechanism::simple;

  std::vector<const PromptRecord*> for_category(int category_id) const {
    std::vector<const PromptRecord*> out;
    for (const auto& r : records)
      if (r.category_id == category_id) out.push_back(&r);
    return out;
  }
};

inline PromptRecord simple_prompt(const std::string& category_name, int category_id = 0) {
  require(!category_name.empty(), "simple_prompt: empty category name");
  PromptRecord r{"a photo of a " + category_name, category_name, category_id, Mechanism::simple, {}};
  r.validate();
  return r;
}

inline PromptRecord domain_prompt(const std::string& domain_name, const std::string& category_name,
                                  int category_id = 0) {
  require(!domain_name.empty(), "domain_prompt: empty domain name");
  require(!category_name.empty(), "domain_prompt: empty category name");
  PromptRecord r{"a " + domain_name + " photo of a " + category_name, category_name, category_id,
                 Mechanism::domain, domain_name};
  r.validate();
  return r;
}

// Whitespace-collapsed, case-folded form used for duplicate detection.
inline std::string normalize_prompt(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline PromptSet dedup(const PromptSet& set) {
  PromptSet out{{}, set.task_id, set.created_with};
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : set.records)
    if (seen.emplace(normalize_prompt(r.text), r.category_id).second) out.records.push_back(r);
  return out;
}

// The instruction sent to the LLM: domain description, category description,
// and a request for `count` one-line prompts.
inline LlmRequest gpt_request(const std::string& domain_desc, const std::string& category_desc,
                              const std::string& category_name, int count) {
  LlmRequest req;
  req.system =
      "You write text prompts for a text-to-image generator. Reply with one prompt per line "
      "and nothing else.";
  req.user = "Domain: " + domain_desc + "\nCategory: " + category_desc + "\nWrite " +
             std::to_string(count) + " diverse one-line text prompts, each depicting a " +
             category_name + " in this domain.";
  return req;
}

// Splits an LLM reply into candidate prompts: strips list markers and
// surrounding quotes, drops blank lines.
inline std::vector<std::string> parse_llm_lines(std::string_view reply) {
  std::vector<std::string> out;
  std::istringstream in{std::string(reply)};
  for (std::string raw; std::getline(in, raw);) {
    std::string line = trim(raw);
    // "1." "12)" "(3)" "-" "*" bullets
    std::size_t i = 0;
    if (i < line.size() && line[i] == '(') ++i;
    std::size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')' ||
                                               line[digits] == ':')) {
      line = trim(std::string_view(line).substr(digits + 1));
    } else if (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '+')) {
      line = trim(std::string_view(line).substr(1));
    } else if (line.rfind("\xe2\x80\xa2", 0) == 0) {  // U+2022 bullet
      line = trim(std::string_view(line).substr(3));
    }
    auto strip_pair = [&](std::string_view open, std::string_view close) {
      if (line.size() >= open.size() + close.size() && line.rfind(open, 0) == 0 &&
          line.compare(line.size() - close.size(), close.size(), close) == 0) {
        line = trim(std::string_view(line).substr(open.size(), line.size() - open.size() - close.size()));
        return true;
      }
      return false;
    };
    strip_pair("\"", "\"") || strip_pair("'", "'") || strip_pair("\xe2\x80\x9c", "\xe2\x80\x9d");
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

// Asks the LLM for `count` prompts for one category. Every record is labeled
// with `category_id`, whatever the wording of the prompt.
inline std::vector<PromptRecord> gpt_prompts(const std::string& domain_desc,
                                             const std::string& category_desc,
                                             const std::string& category_name, int category_id,
                                             int count, LlmClient& llm,
                                             const std::optional<std::string>& domain_name = {},
                                             int max_attempts = 3) {
  require(count >= 1, "gpt_prompts: count must be >= 1");
  require(!category_name.empty(), "gpt_prompts: empty category name");
  const auto reply = complete_with_retry(
      llm, gpt_request(domain_desc, category_desc, category_name, count), max_attempts);
  std::vector<PromptRecord> out;
  std::set<std::string> seen;
  for (auto& line : parse_llm_lines(reply)) {
    if (static_cast<int>(out.size()) == count) break;
    if (!seen.insert(normalize_prompt(line)).second) continue;
    out.push_back({std::move(line), category_name, category_id, Mechanism::gpt, domain_name});
  }
  if (out.empty())
    throw EmptyGeneration("llm returned no usable prompt lines for category '" + category_name + "'");
  return out;
}

struct PromptBuildOptions {
  int count = 1;        // prompts requested per category (gpt only)
  int parallelism = 4;  // concurrent LLM requests
  int max_attempts = 3;
};

// Builds a deduplicated prompt set covering every task category. Fails rather
// than silently omitting a category.
inline PromptSet build_prompt_set(const TaskDefinition& task, Mechanism mechanism,
                                  LlmClient* llm = nullptr, PromptBuildOptions opts = {}) {
  PromptSet set{{}, task.task_id, mechanism};
  const int n = static_cast<int>(task.categories.size());
  if (mechanism == Mechanism::simple) {
    for (int c = 0; c < n; ++c) set.records.push_back(simple_prompt(task.categories[c].name, c));
  } else if (mechanism == Mechanism::domain) {
    require(!task.domain_name.empty(), "domain prompts need a task domain name");
    for (int c = 0; c < n; ++c)
      set.records.push_back(domain_prompt(task.domain_name, task.categories[c].name, c));
  } else {
    require(llm != nullptr, "gpt prompts need an LLM client or a replay log");
    const std::string domain_desc =
        task.domain_description.empty() ? task.domain_name
                                        : task.domain_name + ": " + task.domain_description;
    std::vector<std::vector<PromptRecord>> per_category(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int c = next++; c < n; c = next++) {
        try {
          const auto& cat = task.categories[c];
          const std::string cat_desc =
              cat.description.empty() ? cat.name : cat.name + ": " + cat.description;
          std::optional<std::string> dom;
          if (!task.domain_name.empty()) dom = task.domain_name;
          per_category[c] =
              gpt_prompts(domain_desc, cat_desc, cat.name, c, opts.count, *llm, dom, opts.max_attempts);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    };
    const int workers = std::max(1, std::min(opts.parallelism, n));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (int c = 0; c < n; ++c) {
      if (errors[c]) std::rethrow_exception(errors[c]);
      for (auto& r : per_category[c]) set.records.push_back(std::move(r));
    }
  }
  set = dedup(set);
  const auto names = task.category_names();
  std::vector<bool> covered(n, false);
  for (const auto& r : set.records) {
    r.validate(&names);
    covered[r.category_id] = true;
  }
  for (int c = 0; c < n; ++c)
    require(covered[c], "prompt set does not cover category '" + names[c] + "'");
  return set;
}

inline void write_prompt_set(const PromptSet& set, const fs::path& path) {
  std::string out;
  for (const auto& r : set.records) out += r.to_json().dump() + '\n';
  write_file(path, out);
}

inline PromptSet load_prompt_set(const fs::path& path, std::string task_id = {}) {
  PromptSet set;
  set.task_id = std::move(task_id);
  for (const auto& line : read_lines(path)) {
    try {
      set.records.push_back(PromptRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InvalidArgument(path.string() + ": malformed prompt record: " + e.what());
    }
    set.records.back().validate();
  }
  if (!set.records.empty()) set.created_with = set.records.front().mechanism;
  return set;
}

}  // namespace adaptany
