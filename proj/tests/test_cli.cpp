#include <gtest/gtest.h>

#include <sstream>

#include "editeval/cli.hpp"
#include "editeval/corpus.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace editeval;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Call(std::vector<std::string> args) {
  args.insert(args.begin(), "editeval");
  std::ostringstream out, err;
  int code = Dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<Json> ReadJsonl(const std::filesystem::path& p) {
  std::vector<Json> out;
  std::istringstream in(testutil::ReadText(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

const char* kCotScript = R"({"chat": ["rain added", "dog in both", "difference", "commonality",
  "effective", "preserved",
  "EDITING EVALUATION: fine\nPRESERVATION EVALUATION: fine\nOVERALL ASSESSMENT: fine"]})";

}  // namespace

TEST(Cli, IngestCountsSamples) {
  testutil::TempDir dir;
  auto m = synth::MakePlantedManifest(1, {3, 2, false});
  testutil::WriteText(dir / "m.jsonl", EmitManifest(m));
  CliRun r = Call({"ingest", "--manifest", (dir / "m.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok: 6 samples, 3 systems"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(Call({"ingest", "--manifest", "/nonexistent/m.jsonl"}).code, kExitUsage);
  EXPECT_EQ(Call({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Call({}).code, kExitUsage);
  testutil::TempDir dir;
  testutil::WriteText(dir / "bad.jsonl", "{\"id\": \"x\"}\n");
  CliRun r = Call({"ingest", "--manifest", (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST(Cli, CotRunWritesOneTranscriptPerSample) {
  testutil::TempDir dir;
  auto m = synth::MakePlantedManifest(2, {2, 3, false});
  testutil::WriteText(dir / "m.jsonl", EmitManifest(m));
  testutil::WriteText(dir / "mock.json", kCotScript);
  CliRun r = Call({"cot-run", "--manifest", (dir / "m.jsonl").string(), "--backend",
                "mock:" + (dir / "mock.json").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "out" / "transcripts")) n += e.is_regular_file();
  EXPECT_EQ(n, 6u);
  Json summary = Json::parse(testutil::ReadText(dir / "out" / "cot_summary.json"));
  EXPECT_EQ(summary["complete"], 6);

  testutil::WriteText(dir / "fail.json", R"({"chat": ["x"], "fail_steps": {"3": 400}})");
  CliRun bad = Call({"cot-run", "--manifest", (dir / "m.jsonl").string(), "--backend",
                  "mock:" + (dir / "fail.json").string(), "--out", (dir / "out2").string()});
  EXPECT_EQ(bad.code, kExitPartial);
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  testutil::TempDir dir;
  auto m = synth::MakePlantedManifest(3, {2, 2, true});
  testutil::WriteText(dir / "m.jsonl", EmitManifest(m));
  std::string out = (dir / "out").string();
  ASSERT_EQ(Call({"score-captions", "--manifest", (dir / "m.jsonl").string(), "--out", out}).code, 0);
  testutil::WriteText(dir / "cfg.json", "{\"flip_faith_sign\": true, \"out\": \"" + out + "\"}");
  ASSERT_EQ(Call({"composite", "--config", (dir / "cfg.json").string()}).code, 0);
  auto rows = ReadJsonl(dir / "out" / "composite.jsonl");
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r["faith_score"].is_number());
    EXPECT_GT(r["faith_score"].get<double>(), 0.0);
  }
  // The command line wins over the file.
  std::filesystem::create_directories(dir / "o2");
  std::filesystem::copy_file(dir / "out" / "metrics.jsonl", dir / "o2" / "metrics.jsonl");
  ASSERT_EQ(Call({"composite", "--config", (dir / "cfg.json").string(), "--out", (dir / "o2").string()}).code,
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "o2" / "composite.jsonl"));
}

TEST(Cli, FullPipeline) {
  testutil::TempDir dir;
  auto m = synth::MakePlantedManifest(4, {8, 4, true});
  testutil::WriteText(dir / "m.jsonl", EmitManifest(m));
  std::string manifest = (dir / "m.jsonl").string(), out = (dir / "out").string();
  ASSERT_EQ(Call({"ingest", "--manifest", manifest, "--out", out}).code, 0);
  ASSERT_EQ(Call({"score-captions", "--manifest", manifest, "--out", out}).code, 0);
  auto metrics = ReadJsonl(dir / "out" / "metrics.jsonl");
  ASSERT_EQ(metrics.size(), 32u);
  EXPECT_TRUE(metrics[0]["difference"]["spice"].is_number());
  ASSERT_EQ(Call({"composite", "--out", out}).code, 0);
  CliRun corr = Call({"correlate", "--manifest", manifest, "--out", out, "--level", "both", "--baseline",
                   "FENSE=D_fense,C_fense", "--format", "csv"});
  ASSERT_EQ(corr.code, 0) << corr.err;
  EXPECT_NE(corr.out.find("FENSE"), std::string::npos);
  for (const char* f : {"matrix_system_lcc.csv", "matrix_sample_ktau.csv", "ratings_system.csv", "ratings_system.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "correlation" / f)) << f;
  }
  Json t2 = Json::parse(testutil::ReadText(dir / "out" / "correlation" / "ratings_system.json"));
  EXPECT_EQ(t2["n"], 8);
  EXPECT_EQ(t2["rows"].size(), 3u);

  ASSERT_EQ(Call({"export-tune", "--manifest", manifest, "--out", out, "--batch-size", "4"}).code, 0);
  EXPECT_EQ(ReadJsonl(dir / "out" / "tune" / "caption_records.jsonl").size(), 64u);

  CliRun rep = Call({"report", "--manifest", manifest, "--out", out, "--format", "text"});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("Edit_score"), std::string::npos);
  Json report = Json::parse(testutil::ReadText(dir / "out" / "report.json"));
  EXPECT_TRUE(report.contains("rating_table"));
}

TEST(Cli, AbtestFromItems) {
  testutil::TempDir dir;
  std::string items;
  for (int i = 0; i < 6; ++i) {
    items += Json{{"sample_id", "s" + std::to_string(i)}, {"response_a", "a"}, {"response_b", "b"},
                  {"source_a", "X"}, {"source_b", "Y"}}.dump() + "\n";
  }
  testutil::WriteText(dir / "items.jsonl", items);
  testutil::WriteText(dir / "judge.json",
                      R"({"chat": ["COMPLETENESS: first\nACCURACY: first\nRICHNESS: first\nWINNER: first"]})");
  CliRun r = Call({"abtest", "--items", (dir / "items.jsonl").string(), "--backend",
                "mock:" + (dir / "judge.json").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  Json rep = Json::parse(testutil::ReadText(dir / "out" / "abtest" / "report.json"));
  EXPECT_EQ(rep["pairs"][0]["overall"]["win_rate"]["X"], 0.5);
  EXPECT_EQ(rep["pairs"][0]["overall"]["win_rate"]["Y"], 0.5);
  EXPECT_EQ(ReadJsonl(dir / "out" / "abtest" / "votes.jsonl").size(), 6u);
}
