#include "adaptany/http_clients.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

using namespace adaptany;

namespace {

// httplib server on an ephemeral loopback port, stopped on destruction.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(httplib::Server&)> routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Image solid(ImageShape s, std::uint8_t v) {
  Image img;
  img.shape = s;
  img.pixels.assign(s.size(), v);
  return img;
}

}  // namespace

TEST(Endpoint, SplitsBaseAndPrefix) {
  const auto e = detail::parse_endpoint("http://host:8080/api/");
  EXPECT_EQ(e.base, "http://host:8080");
  EXPECT_EQ(e.prefix, "/api");
  EXPECT_EQ(detail::parse_endpoint("https://host").prefix, "");
  EXPECT_THROW(detail::parse_endpoint("host:8080"), InvalidArgument);
}

TEST(HttpLlm, ChatCompletionRoundTrip) {
  json seen;
  std::string auth;
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/proxy/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      auth = req.get_header_value("Authorization");
      res.set_content(json{{"choices", {{{"message", {{"content", "a dog\na cat"}}}}}}}.dump(), "application/json");
    });
  });
  ::setenv(kLlmApiKeyEnv, "sk-test", 1);
  HttpLlmClient client(srv.url("/proxy"), "m1", 0.5, 5);
  ::unsetenv(kLlmApiKeyEnv);
  EXPECT_EQ(client.complete({"sys", "user text"}), "a dog\na cat");
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(seen["model"], "m1");
  EXPECT_EQ(seen["temperature"], 0.5);
  ASSERT_EQ(seen["messages"].size(), 2u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"], "user text");
}

TEST(HttpLlm, NoKeyMeansNoAuthorizationHeader) {
  bool had_auth = true;
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      had_auth = req.has_header("Authorization");
      res.set_content(json{{"choices", {{{"message", {{"content", "x"}}}}}}}.dump(), "application/json");
    });
  });
  ::unsetenv(kLlmApiKeyEnv);
  HttpLlmClient client(srv.url(), "m", 0.7, 5);
  client.complete({"", "u"});
  EXPECT_FALSE(had_auth);
}

TEST(HttpLlm, ServerErrorAndMalformedReplyAreClientErrors) {
  LocalServer srv([](httplib::Server& s) {
    s.Post("/bad/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    s.Post("/odd/v1/chat/completions",
           [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  });
  EXPECT_THROW(HttpLlmClient(srv.url("/bad"), "m", 0.7, 5).complete({"", "u"}), ClientError);
  EXPECT_THROW(HttpLlmClient(srv.url("/odd"), "m", 0.7, 5).complete({"", "u"}), ClientError);
}

TEST(HttpLlm, UnreachableEndpointIsClientError) {
  std::string url;
  {
    LocalServer srv([](httplib::Server&) {});
    url = srv.url();
  }
  EXPECT_THROW(HttpLlmClient(url, "m", 0.7, 2).complete({"", "u"}), ClientError);
}

TEST(HttpT2I, DecodesConcatenatedImages) {
  json seen;
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      const ImageShape shape{seen["height"].get<int>(), seen["width"].get<int>(), 3};
      std::string body;
      for (int i = 0; i < seen["count"].get<int>(); ++i) body += encode_ppm(solid(shape, static_cast<std::uint8_t>(10 * i)));
      res.set_content(body, "image/x-portable-pixmap");
    });
  });
  HttpT2IClient client(srv.url(), 5);
  const auto images = client.generate({"a photo of a dog", 3, 42, {8, 6, 3}, 1});
  ASSERT_EQ(images.size(), 3u);
  EXPECT_EQ(images[2].shape, (ImageShape{8, 6, 3}));
  EXPECT_EQ(images[2].pixels.front(), 20);
  EXPECT_EQ(seen["prompt"], "a photo of a dog");
  EXPECT_EQ(seen["seed"], 42);
  EXPECT_FALSE(seen.contains("category_hint"));
}

TEST(HttpT2I, WrongImageCountAndHttpErrorsAreClientErrors) {
  LocalServer srv([](httplib::Server& s) {
    s.Post("/short/generate", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(encode_ppm(solid({4, 4, 3}, 1)), "image/x-portable-pixmap");
    });
    s.Post("/junk/generate",
           [](const httplib::Request&, httplib::Response& res) { res.set_content("not an image", "text/plain"); });
    s.Post("/down/generate", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  });
  const T2IRequest req{"p", 2, 1, {4, 4, 3}, 0};
  EXPECT_THROW(HttpT2IClient(srv.url("/short"), 5).generate(req), ClientError);
  EXPECT_THROW(HttpT2IClient(srv.url("/junk"), 5).generate(req), ClientError);
  EXPECT_THROW(HttpT2IClient(srv.url("/down"), 5).generate(req), ClientError);
}

TEST(HttpT2I, SynthesisResizesRemoteImages) {
  LocalServer srv([](httplib::Server& s) {
    s.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(encode_ppm(solid({32, 32, 3}, 200)), "image/x-portable-pixmap");
    });
  });
  const auto dir = fs::temp_directory_path() / "adaptany-http-synth";
  fs::remove_all(dir);
  HttpT2IClient client(srv.url(), 5);
  TaskDefinition task;
  task.task_id = "t";
  task.categories = {{"dog", ""}, {"cat", ""}};
  SynthesisOptions o;
  o.image_shape = {8, 8, 3};
  o.parallelism = 2;
  const auto m = synthesize(build_prompt_set(task, Mechanism::simple), client, 2, dir, 1, o);
  EXPECT_EQ(m.size(), 4u);
  EXPECT_EQ(read_ppm(m.resolve(m.records[0])).shape, (ImageShape{8, 8, 3}));
  EXPECT_EQ(m.provenance["generator"], "remote:" + srv.url());
  fs::remove_all(dir);
}
