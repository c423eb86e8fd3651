#include "adaptany/prompt_engine.hpp"

#include <gtest/gtest.h>

#include "support.hpp"

using namespace adaptany;

namespace {

class CannedLlm : public LlmClient {
 public:
  explicit CannedLlm(std::string reply, int failures = 0) : reply_(std::move(reply)), failures_(failures) {}
  std::string complete(const LlmRequest& request) override {
    requests.push_back(request);
    if (failures_-- > 0) throw ClientError("connection refused");
    return reply_;
  }
  std::string id() const override { return "canned"; }
  std::vector<LlmRequest> requests;

 private:
  std::string reply_;
  int failures_;
};

TaskDefinition office_task() {
  return TaskDefinition::from_json(json::parse(R"({
    "task_id": "office",
    "domain": {"name": "Art Painting", "description": "paintings and sketches"},
    "categories": [{"name": "Chair", "description": "a seat with a back"}, "Computer Mouse"]
  })"));
}

}  // namespace

TEST(SimplePrompt, LiteralTemplate) {
  EXPECT_EQ(simple_prompt("Chair").text, "a photo of a Chair");
  EXPECT_EQ(simple_prompt("Computer Mouse").text, "a photo of a Computer Mouse");
  EXPECT_EQ(simple_prompt("x").text, "a photo of a x");
  EXPECT_EQ(simple_prompt("Chair").mechanism, Mechanism::simple);
  EXPECT_THROW(simple_prompt(""), InvalidArgument);
}

TEST(DomainPrompt, LiteralTemplate) {
  const auto r = domain_prompt("Art Painting", "Chair");
  EXPECT_EQ(r.text, "a Art Painting photo of a Chair");
  EXPECT_EQ(r.domain_name, "Art Painting");
  EXPECT_EQ(domain_prompt("Real World", "Computer Mouse").text, "a Real World photo of a Computer Mouse");
  EXPECT_EQ(domain_prompt("d", "c").text, "a d photo of a c");
  EXPECT_THROW(domain_prompt("", "c"), InvalidArgument);
  EXPECT_THROW(domain_prompt("d", ""), InvalidArgument);
}

TEST(Templates, PureFunctions) {
  EXPECT_EQ(simple_prompt("Bike", 3), simple_prompt("Bike", 3));
  EXPECT_EQ(domain_prompt("Clipart", "Bike", 3), domain_prompt("Clipart", "Bike", 3));
}

TEST(Dedup, CaseFoldAndWhitespace) {
  PromptSet s;
  s.records = {simple_prompt("Chair", 0), {"A  photo of a   chair", "Chair", 0, Mechanism::simple, {}}};
  EXPECT_EQ(dedup(s).records.size(), 1u);
}

TEST(Dedup, DifferentLabelsAreDistinct) {
  PromptSet s;
  s.records = {simple_prompt("Chair", 0), {"a photo of a Chair", "Chair", 1, Mechanism::simple, {}}};
  EXPECT_EQ(dedup(s).records.size(), 2u);
}

TEST(Dedup, IdentityOnUniqueAndIdempotent) {
  PromptSet s;
  s.records = {simple_prompt("c", 2), simple_prompt("a", 0), simple_prompt("b", 1)};
  EXPECT_EQ(dedup(s).records, s.records);
  s.records.push_back(simple_prompt("A", 0));
  EXPECT_EQ(dedup(dedup(s)).records, dedup(s).records);
}

TEST(ParseLlmLines, StripsMarkersAndQuotes) {
  const auto lines = parse_llm_lines("1. \"Sketch of a vintage wingback chair\"\n\n- 'Oil chair'\n(2) Plain\n* star\n");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "Sketch of a vintage wingback chair");
  EXPECT_EQ(lines[1], "Oil chair");
  EXPECT_EQ(lines[2], "Plain");
  EXPECT_EQ(lines[3], "star");
}

TEST(GptPrompts, LabelsComeFromRequestNotWording) {
  CannedLlm llm("Abstract expressionist interpretation of a rocking chair\nA computer mouse on a desk\n");
  const auto recs = gpt_prompts("Art Painting: paintings", "Chair: a seat", "Chair", 4, 50, llm, "Art Painting");
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.category_id, 4);
    EXPECT_EQ(r.category_name, "Chair");
    EXPECT_EQ(r.mechanism, Mechanism::gpt);
  }
  ASSERT_EQ(llm.requests.size(), 1u);
  EXPECT_NE(llm.requests[0].user.find("Art Painting: paintings"), std::string::npos);
  EXPECT_NE(llm.requests[0].user.find("Chair: a seat"), std::string::npos);
}

TEST(GptPrompts, CountCapsAndDuplicatesDropped) {
  CannedLlm llm("one\nONE\ntwo\nthree\n");
  const auto recs = gpt_prompts("d", "c", "c", 0, 2, llm);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].text, "one");
  EXPECT_EQ(recs[1].text, "two");
}

TEST(GptPrompts, EmptyReplyIsEmptyGeneration) {
  CannedLlm llm("\n  \n");
  EXPECT_THROW(gpt_prompts("d", "c", "c", 0, 3, llm), EmptyGeneration);
}

TEST(GptPrompts, TransportFailureAfterRetries) {
  CannedLlm flaky("ok", 2);
  EXPECT_EQ(gpt_prompts("d", "c", "c", 0, 1, flaky, {}, 3).size(), 1u);
  CannedLlm dead("ok", 10);
  try {
    gpt_prompts("d", "c", "c", 0, 1, dead, {}, 3);
    FAIL() << "expected client-error";
  } catch (const ClientError& e) {
    EXPECT_EQ(e.kind(), "client-error");
  }
  EXPECT_EQ(dead.requests.size(), 3u);
}

TEST(Replay, OneLineFixtureGivesExactlyThatRecord) {
  adaptany::testing::TempDir dir("replay");
  const auto req = gpt_request("d", "Chair", "Chair", 1);
  write_file(dir / "log.jsonl", json{{"system", req.system}, {"user", req.user}, {"response", "a chair"}}.dump() + "\n");
  ReplayLlmClient replay(dir / "log.jsonl");
  const auto recs = gpt_prompts("d", "Chair", "Chair", 0, 1, replay);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].text, "a chair");
  EXPECT_THROW(replay.complete({"x", "y"}), ClientError);
}

TEST(Recording, LogReplaysIdentically) {
  adaptany::testing::TempDir dir("record");
  const auto task = office_task();
  CannedLlm live("p1\np2\n");
  RecordingLlmClient rec(live, dir / "log.jsonl");
  PromptBuildOptions opts;
  opts.count = 2;
  const auto first = build_prompt_set(task, Mechanism::gpt, &rec, opts);
  ReplayLlmClient replay(dir / "log.jsonl");
  const auto second = build_prompt_set(task, Mechanism::gpt, &replay, opts);
  EXPECT_EQ(first.records, second.records);
}

TEST(BuildPromptSet, CoversEveryCategory) {
  const auto task = office_task();
  const auto s = build_prompt_set(task, Mechanism::simple);
  ASSERT_EQ(s.records.size(), 2u);
  EXPECT_EQ(s.records[1].text, "a photo of a Computer Mouse");
  EXPECT_EQ(s.records[1].category_id, 1);
  const auto d = build_prompt_set(task, Mechanism::domain);
  EXPECT_EQ(d.records[0].text, "a Art Painting photo of a Chair");
}

TEST(BuildPromptSet, GptWithoutClientFails) {
  EXPECT_THROW(build_prompt_set(office_task(), Mechanism::gpt), InvalidArgument);
}

TEST(BuildPromptSet, DomainWithoutDomainNameFails) {
  auto task = office_task();
  task.domain_name.clear();
  EXPECT_THROW(build_prompt_set(task, Mechanism::domain), InvalidArgument);
}

TEST(PromptFile, RoundTrip) {
  adaptany::testing::TempDir dir("prompts");
  const auto s = build_prompt_set(office_task(), Mechanism::domain);
  write_prompt_set(s, dir / "p.jsonl");
  const auto back = load_prompt_set(dir / "p.jsonl", "office");
  EXPECT_EQ(back.records, s.records);
  EXPECT_EQ(back.created_with, Mechanism::domain);
}

TEST(TaskDefinition, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(TaskDefinition::from_json(json::parse(R"({"categories": []})")), InvalidArgument);
  EXPECT_THROW(TaskDefinition::from_json(json::parse(R"({"categories": ["a", "a"]})")), InvalidArgument);
}
