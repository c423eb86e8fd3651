#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "adaptany/common.hpp"
#include "adaptany/image.hpp"
#include "adaptany/llm.hpp"
#include "adaptany/synthesis.hpp"

namespace adaptany {

inline constexpr const char* kLlmApiKeyEnv = "ADAPTANY_LLM_API_KEY";

namespace detail {

// Splits "scheme://host[:port][/prefix]" into a client base and a path prefix.
struct Endpoint {
  std::string base;
  std::string prefix;
};

inline Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos, "endpoint '" + url + "' needs an http:// or https:// scheme");
  const auto path = url.find('/', scheme + 3);
  Endpoint e{url.substr(0, path), path == std::string::npos ? "" : url.substr(path)};
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

inline httplib::Result post_json(const Endpoint& ep, const std::string& path, const json& body,
                                 const httplib::Headers& headers, int timeout_s) {
  httplib::Client client(ep.base);
  client.set_connection_timeout(timeout_s);
  client.set_read_timeout(timeout_s);
  return client.Post(ep.prefix + path, headers, body.dump(), "application/json");
}

inline void check_response(const httplib::Result& res, const std::string& who) {
  if (!res) throw ClientError(who + ": transport error: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ClientError(who + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
}

}  // namespace detail

// OpenAI-compatible chat completions endpoint. The bearer token is read from
// ADAPTANY_LLM_API_KEY; an unset variable sends no Authorization header.
class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient(std::string url, std::string model, double temperature = 0.7, int timeout_s = 60)
      : endpoint_(detail::parse_endpoint(url)),
        url_(std::move(url)),
        model_(std::move(model)),
        temperature_(temperature),
        timeout_s_(timeout_s) {
    if (const char* key = std::getenv(kLlmApiKeyEnv)) api_key_ = key;
  }

  std::string complete(const LlmRequest& request) override {
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    const json body = {{"model", model_}, {"messages", messages}, {"temperature", temperature_}};
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = detail::post_json(endpoint_, "/v1/chat/completions", body, headers, timeout_s_);
    detail::check_response(res, id());
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw ClientError(id() + ": malformed completion response: " + e.what());
    }
  }

  std::string id() const override { return "openai-compatible:" + model_ + "@" + url_; }

 private:
  detail::Endpoint endpoint_;
  std::string url_;
  std::string model_;
  double temperature_;
  int timeout_s_;
  std::string api_key_;
};

// Remote text-to-image service. POST {url}/generate with
// {"prompt","count","seed","height","width"}; the response body is `count`
// concatenated binary PPM images. Images of another size are resized by the
// caller.
class HttpT2IClient : public T2IClient {
 public:
  explicit HttpT2IClient(std::string url, int timeout_s = 300)
      : endpoint_(detail::parse_endpoint(url)), url_(std::move(url)), timeout_s_(timeout_s) {}

  std::vector<Image> generate(const T2IRequest& request) override {
    const json body = {{"prompt", request.prompt},
                       {"count", request.count},
                       {"seed", request.seed},
                       {"height", request.shape.height},
                       {"width", request.shape.width}};
    const auto res = detail::post_json(endpoint_, "/generate", body, {}, timeout_s_);
    detail::check_response(res, id());
    std::vector<Image> out;
    std::string_view rest(res->body);
    try {
      while (!rest.empty() && static_cast<int>(out.size()) < request.count) {
        std::size_t used = 0;
        out.push_back(decode_ppm(rest, &used));
        rest.remove_prefix(used);
      }
    } catch (const Error& e) {
      throw ClientError(id() + ": undecodable image payload: " + e.what());
    }
    if (static_cast<int>(out.size()) != request.count)
      throw ClientError(id() + ": expected " + std::to_string(request.count) + " images, got " +
                        std::to_string(out.size()));
    return out;
  }

  std::string id() const override { return "remote:" + url_; }

 private:
  detail::Endpoint endpoint_;
  std::string url_;
  int timeout_s_;
};

}  // namespace adaptany
