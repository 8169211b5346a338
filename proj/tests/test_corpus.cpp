#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "editeval/corpus.hpp"
#include "editeval/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace editeval;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

std::string Line(const std::string& id, const std::string& extra = "") {
  return R"({"id":")" + id +
         R"(","system_id":"s1","audio_orig":"a.wav","audio_edit":"b.wav","caption_orig":"a dog barks","instruction":"add rain")" +
         extra + "}";
}

std::vector<EditingSample> Samples(int n) {
  std::vector<EditingSample> out;
  for (int i = 0; i < n; ++i) {
    EditingSample s;
    s.id = "x" + std::to_string(i);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(DeriveTargets, AdditionUsesOriginalCaption) {
  auto t = DeriveTargets("a dog barks", std::nullopt, "add rain", EditOperation::kAddition);
  EXPECT_EQ(t.expected_difference, "add rain");
  EXPECT_EQ(t.expected_commonality, "a dog barks");
  EXPECT_FALSE(t.empty_intersection);
}

TEST(DeriveTargets, DeletionUsesEditedCaption) {
  auto t = DeriveTargets("a dog barks and rain falls", std::string("rain falls"), "remove the dog",
                         EditOperation::kDeletion);
  EXPECT_EQ(t.expected_difference, "remove the dog");
  EXPECT_EQ(t.expected_commonality, "rain falls");
}

TEST(DeriveTargets, ReplacementIdenticalCaptions) {
  const std::string x = "a dog barks, rain falls and a car passes";
  auto t = DeriveTargets(x, x, "swap", EditOperation::kReplacement);
  EXPECT_EQ(t.expected_commonality, "a dog barks and rain falls and a car passes");
  EXPECT_EQ(DeriveTargets("a dog barks", std::string("a dog barks"), "i", EditOperation::kReplacement)
                .expected_commonality,
            "a dog barks");
}

TEST(DeriveTargets, ReplacementSharedClause) {
  auto t = DeriveTargets("a dog barks and rain falls", std::string("a cat meows and rain falls"),
                         "replace the dog with a cat", EditOperation::kReplacement);
  EXPECT_EQ(t.expected_commonality, "rain falls");
  EXPECT_EQ(t.expected_commonality, oracle::ClauseIntersection("a dog barks and rain falls",
                                                               "a cat meows and rain falls"));
}

TEST(DeriveTargets, ReplacementMatchesTokenMultisets) {
  auto t = DeriveTargets("Rain falls; a DOG barks loudly", std::string("loudly barks a dog, thunder"),
                         "i", EditOperation::kReplacement);
  EXPECT_EQ(t.expected_commonality, "a DOG barks loudly");
}

TEST(DeriveTargets, EmptyIntersectionIsFlaggedNotThrown) {
  auto t = DeriveTargets("a dog barks", std::string("a cat meows"), "i", EditOperation::kReplacement);
  EXPECT_EQ(t.expected_commonality, "");
  EXPECT_TRUE(t.empty_intersection);
}

TEST(DeriveTargets, MissingCaption) {
  EXPECT_EQ(CodeOf([] { DeriveTargets("", std::nullopt, "i", EditOperation::kAddition); }),
            ErrorCode::kMissingCaption);
  EXPECT_EQ(CodeOf([] { DeriveTargets("a", std::nullopt, "i", EditOperation::kDeletion); }),
            ErrorCode::kMissingCaption);
  EXPECT_EQ(CodeOf([] { DeriveTargets("", std::string("x"), "i", EditOperation::kReplacement); }),
            ErrorCode::kMissingCaption);
  EXPECT_EQ(CodeOf([] { DeriveTargets("x", std::nullopt, "i", EditOperation::kReplacement); }),
            ErrorCode::kMissingCaption);
}

TEST(DeriveTargets, ReplacementAgreesWithOracleOnRandomCaptions) {
  const std::vector<std::string> clauses = {"a dog barks", "rain falls", "a car passes", "birds sing",
                                            "wind blows",  "a man speaks", "dog a barks"};
  const std::vector<std::string> joins = {" and ", ", ", "; ", " then ", " while ", " followed by "};
  std::mt19937_64 rng(11);
  auto caption = [&] {
    std::uniform_int_distribution<int> n(1, 4);
    std::uniform_int_distribution<std::size_t> c(0, clauses.size() - 1), j(0, joins.size() - 1);
    std::string out = clauses[c(rng)];
    for (int k = n(rng); k > 1; --k) out += joins[j(rng)] + clauses[c(rng)];
    return out;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::string a = caption(), b = caption();
    auto t = DeriveTargets(a, b, "i", EditOperation::kReplacement);
    EXPECT_EQ(t.expected_commonality, oracle::ClauseIntersection(a, b)) << a << " | " << b;
    // Every emitted clause is a clause of both captions.
    for (const auto& c : SplitClauses(t.expected_commonality)) {
      auto in = [&](const std::string& cap) {
        auto key = [](const std::string& s) {
          auto v = Tokenize(s).tokens();
          std::sort(v.begin(), v.end());
          return v;
        };
        for (const auto& x : SplitClauses(cap)) {
          if (key(x) == key(c)) return true;
        }
        return false;
      };
      EXPECT_TRUE(in(a) && in(b)) << c;
    }
  }
}

TEST(SplitClauses, Delimiters) {
  EXPECT_EQ(SplitClauses("A then B, C; D while E followed by F and G"),
            (std::vector<std::string>{"A", "B", "C", "D", "E", "F", "G"}));
  EXPECT_EQ(NormalizeClause("  A  Dog, BARKS! "), "a dog barks");
}

TEST(FillDerivedTargets, KeepsGivenTargets) {
  EditingSample s;
  s.caption_orig = "a dog barks";
  s.instruction = "add rain";
  s.operation = EditOperation::kAddition;
  s.expected_commonality = "given";
  FillDerivedTargets(s);
  EXPECT_EQ(*s.expected_commonality, "given");
  EXPECT_EQ(*s.expected_difference, "add rain");
}

TEST(Manifest, EmptyFile) { EXPECT_TRUE(ParseManifest("").empty()); }

TEST(Manifest, TwoLinesInOrder) {
  auto v = ParseManifest(Line("b") + "\n" + Line("a") + "\n");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].id, "b");
  EXPECT_EQ(v[1].id, "a");
  EXPECT_EQ(v[0].audio_orig.uri, "a.wav");
}

TEST(Manifest, MalformedLineReportsLineNumber) {
  try {
    ParseManifest(Line("a") + "\n{not json\n" + Line("c"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(Manifest, DuplicateId) {
  EXPECT_EQ(CodeOf([] { ParseManifest(Line("a") + "\n" + Line("a")); }), ErrorCode::kDuplicateId);
}

TEST(Manifest, SchemaErrorNamesField) {
  try {
    ParseManifest(R"({"id":"a","system_id":"s","audio_orig":"x","audio_edit":"y","instruction":"i"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
    EXPECT_NE(std::string(e.what()).find("caption_orig"), std::string::npos);
  }
  EXPECT_EQ(CodeOf([] { ParseManifest(Line("a", R"(,"operation":"replacement")")); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseManifest(Line("a", R"(,"operation":"swap")")); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] {
              ParseManifest(Line("a", R"(,"subjective":{"quality":6,"relevance":3,"faithfulness":3})"));
            }),
            ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseManifest(R"({"id":"a","system_id":"s","audio_orig":"","audio_edit":"y","caption_orig":"c","instruction":"i"})"); }),
            ErrorCode::kSchema);
}

TEST(Manifest, UnknownFieldsRoundTrip) {
  std::string text = Line("a", R"(,"operation":"addition","objective":{"clap":0.3},"my_column":[1,2],"audio_note":"x")") +
                     "\n" +
                     R"({"id":"b","system_id":"s2","audio_orig":{"uri":"o.wav","duration_s":4.5},"audio_edit":"e.wav","caption_orig":"c","instruction":"i","caption_edit":"d","operation":"replacement","subjective":{"quality":1,"relevance":5,"faithfulness":2.5}})";
  auto v = ParseManifest(text);
  EXPECT_EQ(v[0].extras["my_column"], Json::array({1, 2}));
  EXPECT_DOUBLE_EQ(v[0].objective.at("clap"), 0.3);
  EXPECT_EQ(v[1].audio_orig.duration_s, 4.5);
  EXPECT_EQ(ParseManifest(EmitManifest(v)), v);
}

TEST(Manifest, LoadMissingFileIsIoError) {
  EXPECT_EQ(CodeOf([] { LoadManifest("/nonexistent/editeval/manifest.jsonl"); }), ErrorCode::kIo);
}

TEST(Manifest, LoadFromDisk) {
  testutil::TempDir dir;
  testutil::WriteText(dir / "m.jsonl", Line("a") + "\n\n" + Line("b") + "\n");
  EXPECT_EQ(LoadManifest(dir / "m.jsonl").size(), 2u);
}

TEST(SplitDataset, EightOneOne) {
  auto s = SplitDataset(Samples(10), {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(SplitDataset, EmptyInput) {
  auto s = SplitDataset({}, {0.8, 0.1, 0.1}, 7);
  EXPECT_TRUE(s.train.empty() && s.val.empty() && s.test.empty());
}

TEST(SplitDataset, Deterministic) {
  auto a = SplitDataset(Samples(57), {0.8, 0.1, 0.1}, 99);
  auto b = SplitDataset(Samples(57), {0.8, 0.1, 0.1}, 99);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  auto c = SplitDataset(Samples(57), {0.8, 0.1, 0.1}, 100);
  EXPECT_NE(a.train, c.train);
}

TEST(SplitDataset, BadRatios) {
  EXPECT_EQ(CodeOf([] { SplitDataset(Samples(3), {0.8, 0.1, 0.2}, 1); }), ErrorCode::kBadRatios);
  EXPECT_EQ(CodeOf([] { SplitDataset(Samples(3), {1.0, 0.0, 0.0}, 1); }), ErrorCode::kBadRatios);
  EXPECT_EQ(CodeOf([] { SplitDataset(Samples(3), {1.2, -0.1, -0.1}, 1); }), ErrorCode::kBadRatios);
}

TEST(SplitDataset, PartitionProperty) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> n(0, 200);
  std::uniform_real_distribution<double> r(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    double a = r(rng), b = r(rng), c = r(rng), sum = a + b + c;
    std::array<double, 3> ratios{a / sum, b / sum, 1.0 - a / sum - b / sum};
    int count = n(rng);
    auto split = SplitDataset(Samples(count), ratios, rng());
    std::multiset<std::string> seen;
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (const auto& s : *part) seen.insert(s.id);
    }
    ASSERT_EQ(seen.size(), std::size_t(count));
    ASSERT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), std::size_t(count));
    EXPECT_EQ(split.val.size(), std::size_t(std::floor(count * ratios[1] + 1e-9)));
    EXPECT_EQ(split.test.size(), std::size_t(std::floor(count * ratios[2] + 1e-9)));
  }
}
