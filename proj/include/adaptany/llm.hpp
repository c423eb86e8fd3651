#pragma once

#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "adaptany/common.hpp"

namespace adaptany {

struct LlmRequest {
  std::string system;
  std::string user;

  std::string key() const { return system + '\x1f' + user; }
};

// A chat-style language model endpoint. Implementations throw ClientError on
// transport failure.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string id() const = 0;
};

inline std::string complete_with_retry(LlmClient& client, const LlmRequest& request,
                                       int max_attempts = 3) {
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    try {
      return client.complete(request);
    } catch (const ClientError& e) {
      last_error = e.what();
    }
  }
  throw ClientError("llm '" + client.id() + "' failed after " + std::to_string(max_attempts) +
                    " attempts: " + last_error);
}

// Replays exchanges from a JSONL log ({"system","user","response"} per line).
// Repeated identical requests are answered in log order, then the last answer
// repeats.
class ReplayLlmClient : public LlmClient {
 public:
  explicit ReplayLlmClient(const fs::path& log) : path_(log) {
    for (const auto& line : read_lines(log)) {
      const auto j = json::parse(line);
      LlmRequest req{j.at("system").get<std::string>(), j.at("user").get<std::string>()};
      answers_[req.key()].push_back(j.at("response").get<std::string>());
    }
  }

  std::string complete(const LlmRequest& request) override {
    std::lock_guard lock(mutex_);
    const auto it = answers_.find(request.key());
    if (it == answers_.end())
      throw ClientError("no recorded exchange in " + path_.string() + " for request: " +
                        request.user.substr(0, 80));
    auto& cursor = cursors_[request.key()];
    const auto& answer = it->second[std::min(cursor, it->second.size() - 1)];
    ++cursor;
    return answer;
  }

  std::string id() const override { return "replay:" + path_.filename().string(); }

 private:
  fs::path path_;
  std::map<std::string, std::vector<std::string>> answers_;
  std::map<std::string, std::size_t> cursors_;
  std::mutex mutex_;
};

// Forwards to another client and appends every successful exchange to a
// replay log. Single writer: appends are serialized.
class RecordingLlmClient : public LlmClient {
 public:
  RecordingLlmClient(LlmClient& inner, fs::path log) : inner_(inner), log_(std::move(log)) {}

  std::string complete(const LlmRequest& request) override {
    auto response = inner_.complete(request);
    const json j = {{"system", request.system}, {"user", request.user}, {"response", response}};
    std::lock_guard lock(mutex_);
    if (log_.has_parent_path()) fs::create_directories(log_.parent_path());
    std::ofstream out(log_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to replay log " + log_.string());
    out << j.dump() << '\n';
    return response;
  }

  std::string id() const override { return inner_.id(); }

 private:
  LlmClient& inner_;
  fs::path log_;
  std::mutex mutex_;
};

}  // namespace adaptany
