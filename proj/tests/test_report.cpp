#include <gtest/gtest.h>

#include "editeval/report.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace editeval;

namespace {

EditingSample Rated(const std::string& id, const std::string& sys, double rel, double faith) {
  EditingSample s;
  s.id = id;
  s.system_id = sys;
  s.subjective = SubjectiveRatings{3, rel, faith};
  return s;
}

}  // namespace

TEST(ColumnSamples, CollectsEveryColumn) {
  auto s = Rated("a", "sys", 4, 2);
  s.objective["clap"] = 0.3;
  SampleScores sc;
  sc.id = "a";
  sc.difference = MetricVector{};
  sc.difference->bleu1 = 0.5;
  sc.difference->spice = 0.25;
  sc.edit_score = 0.7;
  auto cols = BuildColumnSamples({s, Rated("b", "sys", 1, 1)}, {{"a", sc}});
  ASSERT_EQ(cols.size(), 2u);
  const auto& c = cols[0].columns;
  EXPECT_EQ(c.at("D_bleu1"), 0.5);
  EXPECT_EQ(c.at("D_spice"), 0.25);
  EXPECT_EQ(c.count("D_fense"), 0u);
  EXPECT_EQ(c.count("C_bleu1"), 0u);
  EXPECT_EQ(c.at("edit_score"), 0.7);
  EXPECT_EQ(c.count("faith_score"), 0u);
  EXPECT_EQ(c.at("relevance"), 4);
  EXPECT_EQ(c.at("clap"), 0.3);
  EXPECT_EQ(cols[1].columns.count("D_bleu1"), 0u);
  EXPECT_EQ(cols[1].columns.at("faithfulness"), 1);
}

TEST(ColumnSamples, ColumnLists) {
  auto s = Rated("a", "sys", 4, 2);
  s.objective["fad"] = 1.0;
  SampleScores sc;
  sc.commonality = MetricVector{};
  sc.difference = MetricVector{};
  auto units = AggregateBySystem(BuildColumnSamples({s}, {{"a", sc}}));
  auto metrics = CaptionMetricColumns(units);
  ASSERT_EQ(metrics.size(), 14u);
  EXPECT_EQ(metrics.front(), "D_bleu1");
  EXPECT_EQ(metrics.back(), "C_cider_d");
  EXPECT_EQ(RatingColumns(units), (std::vector<std::string>{"quality", "relevance", "faithfulness", "fad"}));
}

TEST(RatingTable, MatchesDirectCorrelation) {
  std::vector<EditingSample> manifest;
  std::map<std::string, SampleScores> scores;
  std::vector<double> edit, rel, faith_s, faith;
  for (int i = 0; i < 12; ++i) {
    double r = 1 + (i * 7) % 5, f = 1 + (i * 3) % 5;
    std::string id = "s" + std::to_string(i);
    manifest.push_back(Rated(id, "sys" + std::to_string(i % 6), r, f));
    SampleScores sc;
    sc.edit_score = 0.1 * i + 0.05 * r;
    sc.faith_score = -0.2 * f + 0.01 * i;
    scores[id] = sc;
  }
  auto samples = BuildColumnSamples(manifest, scores);
  auto units = SampleLevelUnits(samples);
  for (const auto& u : units) {
    edit.push_back(u.columns.at("edit_score"));
    faith_s.push_back(u.columns.at("faith_score"));
    rel.push_back(u.columns.at("relevance"));
    faith.push_back(u.columns.at("faithfulness"));
  }
  RatingTable t = ComputeRatingTable(units, DefaultRatingTableRows(), "sample");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.n, 12u);
  EXPECT_NEAR(*t.values[0].at(CorrelationMethod::kLcc).first, oracle::Pearson(edit, rel), 1e-12);
  EXPECT_NEAR(*t.values[0].at(CorrelationMethod::kSrcc).second, oracle::Spearman(edit, faith), 1e-12);
  EXPECT_NEAR(*t.values[1].at(CorrelationMethod::kKtau).second, oracle::KendallTauB(faith_s, faith), 1e-12);

  auto sys = AggregateBySystem(samples);
  RatingTable ts = ComputeRatingTable(sys, DefaultRatingTableRows(), "system");
  EXPECT_EQ(ts.n, 6u);
}

TEST(RatingTable, Serializations) {
  auto m = synth::MakePlantedManifest(5, {6, 4, true});
  auto units = AggregateBySystem(BuildColumnSamples(m, synth::ScoreManifest(m)));
  auto rows = DefaultRatingTableRows();
  rows.push_back({"FENSE", "D_fense", "C_fense"});
  rows.push_back({"missing", "nope", "nope"});
  RatingTable t = ComputeRatingTable(units, rows, "system");
  Json j = RatingTableToJson(t);
  EXPECT_EQ(j["level"], "system");
  EXPECT_EQ(j["rows"].size(), 4u);
  EXPECT_TRUE(j["rows"][2]["lcc"]["edit"].is_number());
  EXPECT_TRUE(j["rows"][3]["ktau"]["presv"].is_null());
  std::string csv = RatingTableToCsv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,lcc_edit,lcc_presv,srcc_edit,srcc_presv,ktau_edit,ktau_presv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  std::string text = RatingTableToText(t);
  EXPECT_NE(text.find("Edit_score"), std::string::npos);
  EXPECT_NE(text.find("FENSE"), std::string::npos);
  EXPECT_NE(text.find("n=6"), std::string::npos);
}

TEST(MatrixText, HasEveryName) {
  auto m = synth::PlantedMatrix(3, CorrelationMethod::kSrcc);
  std::string text = CorrelationMatrixToText(m);
  for (const auto& r : m.row_names) EXPECT_NE(text.find(r), std::string::npos);
  for (const auto& c : m.col_names) EXPECT_NE(text.find(c), std::string::npos);
}
