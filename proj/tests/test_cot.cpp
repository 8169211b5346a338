#include <gtest/gtest.h>

#include <mutex>

#include "editeval/cot.hpp"
#include "editeval/error.hpp"
#include "test_util.hpp"

using namespace editeval;

namespace {

const char* kFinal =
    "EDITING EVALUATION: the rain was added cleanly\n"
    "PRESERVATION EVALUATION: the dog is intact\n"
    "OVERALL ASSESSMENT: good edit, slightly loud";

Json Script() {
  return Json{{"chat", {"rain was added", "a dog barks in both", "expected difference repeated",
                        "expected commonality repeated", "editing is effective", "preservation is good",
                        kFinal}}};
}

// Records every request body before delegating to the scripted mock.
class RecordingTransport : public Transport {
 public:
  explicit RecordingTransport(Json script) : mock_(std::move(script)) {}
  HttpResponse Post(std::string_view path, const std::string& body) override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      requests.push_back(Json::parse(body));
    }
    return mock_.Post(path, body);
  }
  std::vector<Json> requests;

 private:
  MockTransport mock_;
  std::mutex mu_;
};

EditingSample Sample(const std::string& id = "s1") {
  EditingSample s;
  s.id = id;
  s.system_id = "sys";
  s.audio_orig = {"orig/" + id + ".wav", std::nullopt};
  s.audio_edit = {"edit/" + id + ".wav", std::nullopt};
  s.caption_orig = "a dog barks";
  s.instruction = "add heavy rain";
  s.operation = EditOperation::kAddition;
  return s;
}

BackendConfig Config() {
  BackendConfig c;
  c.endpoint = "mock";
  c.max_retries = 1;
  c.backoff_base_s = 0.0;
  return c;
}

}  // namespace

TEST(ParseAssessment, InOrder) {
  Assessment a = ParseAssessment(kFinal);
  EXPECT_EQ(a.e_editing, "the rain was added cleanly");
  EXPECT_EQ(a.e_preservation, "the dog is intact");
  EXPECT_EQ(a.e_overall, "good edit, slightly loud");
}

TEST(ParseAssessment, PermutedOrderAndDecoration) {
  Assessment a = ParseAssessment(
      "Here you go.\n**OVERALL ASSESSMENT:** fine overall\n## Preservation Evaluation:  kept \n"
      "EDITING EVALUATION:\n  multi\n  line\n");
  EXPECT_EQ(a.e_overall, "fine overall");
  EXPECT_EQ(a.e_preservation, "kept");
  EXPECT_EQ(a.e_editing, "multi\n  line");
}

TEST(ParseAssessment, MissingSentinelIsNamed) {
  try {
    ParseAssessment("EDITING EVALUATION: a\nPRESERVATION EVALUATION: b\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedResponse);
    EXPECT_NE(std::string(e.what()).find("OVERALL ASSESSMENT:"), std::string::npos);
  }
  EXPECT_THROW(ParseAssessment("EDITING EVALUATION:\nPRESERVATION EVALUATION: b\nOVERALL ASSESSMENT: c"), Error);
}

TEST(Templates, DefaultsValidate) {
  auto t = PromptTemplateSet::Defaults();
  EXPECT_NO_THROW(t.Validate());
  EXPECT_EQ(PromptTemplateSet::FromJson(t.ToJson()).steps, t.steps);
}

TEST(Templates, RejectsBadPlaceholders) {
  auto t = PromptTemplateSet::Defaults();
  t.steps[2] = "{caption_orignal}";
  EXPECT_THROW(t.Validate(), Error);
  t = PromptTemplateSet::Defaults();
  t.steps[1] = "uses {prev_response_2}";
  EXPECT_THROW(t.Validate(), Error);
  t = PromptTemplateSet::Defaults();
  t.steps[6] = "summarize";
  EXPECT_THROW(t.Validate(), Error);
  EXPECT_THROW(PromptTemplateSet::FromJson(Json{{"steps", {"a", "b"}}}), Error);
}

TEST(Templates, LoadFromFile) {
  testutil::TempDir dir;
  testutil::WriteText(dir / "t.json", PromptTemplateSet::Defaults().ToJson().dump());
  EXPECT_EQ(PromptTemplateSet::Load(dir / "t.json").system, PromptTemplateSet::Defaults().system);
}

TEST(RenderTemplate, Placeholders) {
  PromptContext ctx{"orig", "instr", "diff", "common", {"r1"}};
  EXPECT_EQ(RenderTemplate("{caption_orig}|{instruction}|{expected_difference}|{expected_commonality}|"
                           "{prev_response_1}|{prev_response_2}",
                           ctx),
            "orig|instr|diff|common|r1|(response to step 2)");
}

TEST(RunCot, CompleteTranscript) {
  testutil::TempDir dir;
  RecordingTransport transport(Script());
  EditingSample s = Sample();
  CotTranscript t = RunCot(s, Config(), transport, PromptTemplateSet::Defaults(), dir.path());
  ASSERT_EQ(t.status, CotStatus::kComplete);
  ASSERT_EQ(t.steps.size(), 7u);
  for (int k = 0; k < 7; ++k) {
    EXPECT_EQ(t.steps[k].index, k + 1);
    EXPECT_EQ(t.steps[k].prompt.audio.size(), k < 2 ? 2u : 0u);
    EXPECT_TRUE(t.steps[k].response.audio.empty());
  }
  EXPECT_EQ(t.steps[0].prompt.audio[0].uri, "orig/s1.wav");
  EXPECT_EQ(t.steps[0].prompt.audio[1].uri, "edit/s1.wav");
  EXPECT_NE(t.steps[2].prompt.text.find("add heavy rain"), std::string::npos);
  EXPECT_NE(t.steps[3].prompt.text.find("a dog barks"), std::string::npos);
  ASSERT_TRUE(t.assessment);
  EXPECT_EQ(t.assessment->e_overall, "good edit, slightly loud");

  // Step k sees exactly the system turn and steps 1..k-1.
  ASSERT_EQ(transport.requests.size(), 7u);
  for (std::size_t k = 0; k < 7; ++k) {
    const Json& msgs = transport.requests[k]["messages"];
    ASSERT_EQ(msgs.size(), 1 + 2 * k + 1);
    EXPECT_EQ(msgs[0]["role"], "system");
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_EQ(msgs[1 + 2 * j]["text"], t.steps[j].prompt.text);
      EXPECT_EQ(msgs[2 + 2 * j]["role"], "assistant");
      EXPECT_EQ(msgs[2 + 2 * j]["text"], t.steps[j].response.text);
    }
    EXPECT_EQ(msgs.back()["text"], t.steps[k].prompt.text);
    for (std::size_t j = 0; j < msgs.size(); ++j) {
      bool audio_turn = j == 1 || j == 3;
      EXPECT_EQ(msgs[j]["audio"].size(), audio_turn ? 2u : 0u) << k << "," << j;
    }
  }

  // Persisted transcript round-trips.
  CotTranscript loaded = LoadTranscript(TranscriptPath(dir.path(), "s1"));
  EXPECT_EQ(TranscriptToJson(loaded, false), TranscriptToJson(t, false));
  EXPECT_EQ(loaded.Response(1), "rain was added");
  EXPECT_EQ(loaded.Response(2), "a dog barks in both");
}

TEST(RunCot, BackendFailureAtStepOne) {
  Json script = Script();
  script["fail_steps"] = {{"1", 503}};
  MockTransport mock(script);
  CotTranscript t = RunCot(Sample(), Config(), mock, PromptTemplateSet::Defaults());
  EXPECT_EQ(t.status, CotStatus::kBackendError);
  EXPECT_TRUE(t.steps.empty());
  EXPECT_FALSE(t.assessment);
  EXPECT_FALSE(t.error.empty());
}

TEST(RunCot, BackendFailureKeepsPartialSteps) {
  Json script = Script();
  script["fail_steps"] = {{"5", 500}};
  MockTransport mock(script);
  CotTranscript t = RunCot(Sample(), Config(), mock, PromptTemplateSet::Defaults());
  EXPECT_EQ(t.status, CotStatus::kBackendError);
  EXPECT_EQ(t.steps.size(), 4u);
}

TEST(RunCot, MissingSentinelIsMalformed) {
  Json script = Script();
  script["chat"][6] = "EDITING EVALUATION: ok\nPRESERVATION EVALUATION: ok\nIn summary it is fine.";
  MockTransport mock(script);
  CotTranscript t = RunCot(Sample(), Config(), mock, PromptTemplateSet::Defaults());
  EXPECT_EQ(t.status, CotStatus::kMalformed);
  EXPECT_EQ(t.steps.size(), 7u);
  EXPECT_EQ(t.raw_final_text, script["chat"][6].get<std::string>());
  EXPECT_NE(t.error.find("OVERALL ASSESSMENT:"), std::string::npos);
}

TEST(RunCot, RejectsIncompleteSamples) {
  MockTransport mock(Script());
  EditingSample s = Sample();
  s.operation.reset();
  EXPECT_THROW(RunCot(s, Config(), mock, PromptTemplateSet::Defaults()), Error);
  s = Sample();
  s.audio_edit.uri.clear();
  EXPECT_THROW(RunCot(s, Config(), mock, PromptTemplateSet::Defaults()), Error);
}

TEST(RunCotBatch, ParallelDeterministicAndOrdered) {
  std::vector<EditingSample> samples;
  for (int i = 0; i < 24; ++i) samples.push_back(Sample("id/" + std::to_string(i)));
  samples[5].operation.reset();
  MockTransport mock(Script());
  testutil::TempDir d1, d2;
  auto a = RunCotBatch(samples, Config(), mock, PromptTemplateSet::Defaults(), d1.path(), 8);
  auto b = RunCotBatch(samples, Config(), mock, PromptTemplateSet::Defaults(), d2.path(), 1);
  ASSERT_EQ(a.transcripts.size(), 23u);
  ASSERT_EQ(a.rejected.size(), 1u);
  EXPECT_EQ(a.rejected[0].first, "id/5");
  for (std::size_t i = 0; i < a.transcripts.size(); ++i) {
    EXPECT_EQ(TranscriptToJson(a.transcripts[i], false), TranscriptToJson(b.transcripts[i], false));
  }
  EXPECT_EQ(a.transcripts[0].sample_id, "id/0");
  EXPECT_TRUE(std::filesystem::exists(d1 / "id_0.json"));
}
