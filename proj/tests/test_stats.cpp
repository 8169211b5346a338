#include <gtest/gtest.h>

#include <random>

#include "editeval/error.hpp"
#include "editeval/stats.hpp"
#include "oracles.hpp"

using namespace editeval;
using V = std::vector<double>;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

V RandomVector(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  V v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool Constant(const V& v) { return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; }); }

}  // namespace

TEST(Pearson, Examples) {
  EXPECT_NEAR(PearsonLcc(V{1, 2, 3}, V{2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(PearsonLcc(V{1, 2, 3}, V{3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(PearsonLcc(V{1, 2, 3}, V{6, 4, 5}), -0.5, 1e-12);
}

TEST(Pearson, Errors) {
  EXPECT_EQ(CodeOf([] { PearsonLcc(V{1, 2}, V{1, 2, 3}); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(CodeOf([] { PearsonLcc(V{1}, V{1}); }), ErrorCode::kDegenerateVariance);
  EXPECT_EQ(CodeOf([] { PearsonLcc(V{1, 1, 1}, V{1, 2, 3}); }), ErrorCode::kDegenerateVariance);
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(SpearmanSrcc(V{1, 2, 3}, V{1, 4, 9}), 1.0, 1e-12);
  EXPECT_NEAR(SpearmanSrcc(V{1, 2, 3}, V{9, 4, 1}), -1.0, 1e-12);
  V x{1, 2, 2, 3}, y{1, 2, 3, 4};
  EXPECT_NEAR(SpearmanSrcc(x, y), oracle::Spearman(x, y), 1e-12);
  EXPECT_EQ(AverageRanks(x), (V{1, 2.5, 2.5, 4}));
}

TEST(Kendall, Examples) {
  EXPECT_NEAR(KendallTauB(V{1, 2, 3}, V{1, 2, 3}), 1.0, 1e-12);
  EXPECT_NEAR(KendallTauB(V{1, 2, 3}, V{3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(KendallTauB(V{1, 2, 3}, V{6, 4, 5}), oracle::KendallTauB(V{1, 2, 3}, V{6, 4, 5}), 1e-12);
  EXPECT_EQ(CodeOf([] { KendallTauB(V{2, 2, 2}, V{1, 2, 3}); }), ErrorCode::kDegenerateVariance);
  EXPECT_EQ(CodeOf([] { KendallTauB(V{1, 2}, V{1}); }), ErrorCode::kLengthMismatch);
}

TEST(Correlations, AgainstOraclesOnRandomVectors) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    std::size_t n = 2 + trial % 7;  // lengths 2..8
    int levels = 2 + trial % 5;     // heavy ties at low levels
    V x = RandomVector(rng, n, levels), y = RandomVector(rng, n, levels);
    if (Constant(x) || Constant(y)) continue;
    ++checked;
    ASSERT_NEAR(KendallTauB(x, y), oracle::KendallTauB(x, y), 1e-12);
    ASSERT_NEAR(PearsonLcc(x, y), oracle::Pearson(x, y), 1e-12);
    ASSERT_NEAR(SpearmanSrcc(x, y), oracle::Spearman(x, y), 1e-12);
  }
  EXPECT_GT(checked, 3000);
}

TEST(Correlations, ContinuousVectorsAgainstOracles) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    V x(2 + trial % 40), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = 0.5 * x[i] + g(rng);
    }
    ASSERT_NEAR(PearsonLcc(x, y), oracle::Pearson(x, y), 1e-12);
    ASSERT_NEAR(SpearmanSrcc(x, y), oracle::Spearman(x, y), 1e-12);
    ASSERT_NEAR(KendallTauB(x, y), oracle::KendallTauB(x, y), 1e-12);
  }
}

TEST(Correlations, Invariances) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    V x(10), y(10);
    for (int i = 0; i < 10; ++i) {
      x[i] = g(rng);
      y[i] = x[i] + g(rng);
    }
    V affine, mono, neg;
    for (double v : x) {
      affine.push_back(3.0 * v + 7.0);
      mono.push_back(std::exp(v));
      neg.push_back(-v);
    }
    EXPECT_NEAR(PearsonLcc(affine, y), PearsonLcc(x, y), 1e-12);
    EXPECT_NEAR(SpearmanSrcc(mono, y), SpearmanSrcc(x, y), 1e-12);
    EXPECT_NEAR(KendallTauB(mono, y), KendallTauB(x, y), 1e-12);
    EXPECT_NEAR(PearsonLcc(x, neg), -1.0, 1e-12);
    EXPECT_NEAR(SpearmanSrcc(x, neg), -1.0, 1e-12);
    EXPECT_NEAR(KendallTauB(x, neg), -1.0, 1e-12);
  }
}

TEST(Aggregate, MeansAndCoverage) {
  std::vector<ColumnSample> s = {{"a", {{"m", 1.0}, {"r", 2.0}}},
                                 {"b", {{"m", 5.0}}},
                                 {"a", {{"m", 3.0}}}};
  auto agg = AggregateBySystem(s);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].system_id, "a");
  EXPECT_EQ(agg[0].sample_count, 2u);
  EXPECT_DOUBLE_EQ(agg[0].columns.at("m"), 2.0);
  EXPECT_DOUBLE_EQ(agg[0].columns.at("r"), 2.0);
  EXPECT_EQ(agg[0].coverage.at("r"), 1u);
  EXPECT_EQ(agg[1].columns.at("m"), 5.0);
  EXPECT_EQ(agg[1].columns.count("r"), 0u);

  auto single = AggregateBySystem({{"z", {{"m", 4.0}}}});
  EXPECT_EQ(single[0].columns, (std::map<std::string, double>{{"m", 4.0}}));
}

TEST(Aggregate, TwentyThreeSystems) {
  std::vector<ColumnSample> s;
  for (int i = 0; i < 23 * 5; ++i) s.push_back({"sys" + std::to_string(i % 23), {{"m", double(i)}}});
  EXPECT_EQ(AggregateBySystem(s).size(), 23u);
  EXPECT_EQ(SampleLevelUnits(s).size(), 115u);
}

TEST(Matrix, SelfAndNegation) {
  std::vector<SystemAggregate> units;
  for (int i = 0; i < 5; ++i) {
    SystemAggregate u;
    u.system_id = std::to_string(i);
    u.sample_count = 1;
    u.columns = {{"x", double(i * i)}, {"neg", -double(i * i)}, {"flat", 1.0}};
    units.push_back(u);
  }
  for (auto m : {CorrelationMethod::kLcc, CorrelationMethod::kSrcc, CorrelationMethod::kKtau}) {
    auto self = ComputeCorrelationMatrix(units, {"x"}, {"x"}, m);
    EXPECT_NEAR(*self.Get("x", "x"), 1.0, 1e-12);
    auto neg = ComputeCorrelationMatrix(units, {"x"}, {"neg", "flat"}, m);
    EXPECT_NEAR(*neg.Get("x", "neg"), -1.0, 1e-12);
    EXPECT_FALSE(neg.Get("x", "flat").has_value());
    EXPECT_EQ(neg.cells[0][1].reason, "zero_variance");
    EXPECT_EQ(neg.n, 5u);
  }
  EXPECT_THROW(ComputeCorrelationMatrix(units, {"x"}, {"missing"}, CorrelationMethod::kLcc), Error);
}

TEST(Matrix, InsufficientPairs) {
  std::vector<SystemAggregate> units(3);
  for (int i = 0; i < 3; ++i) {
    units[i].system_id = std::to_string(i);
    units[i].columns["x"] = i;
  }
  units[0].columns["y"] = 1;
  auto m = ComputeCorrelationMatrix(units, {"x"}, {"y"}, CorrelationMethod::kLcc);
  EXPECT_FALSE(m.Get("x", "y"));
  EXPECT_EQ(m.cells[0][0].reason, "insufficient_pairs");
}

TEST(Matrix, Exports) {
  std::vector<SystemAggregate> units(3);
  for (int i = 0; i < 3; ++i) {
    units[i].system_id = std::to_string(i);
    units[i].columns = {{"x", double(i)}, {"y", double(2 * i)}, {"c", 0.0}};
  }
  auto m = ComputeCorrelationMatrix(units, {"x"}, {"y", "c"}, CorrelationMethod::kSrcc);
  EXPECT_EQ(CorrelationMatrixToCsv(m), "srcc,y,c\nx,1,\n");
  Json j = CorrelationMatrixToJson(m);
  EXPECT_EQ(j["rows"], Json::array({"x"}));
  EXPECT_EQ(j["cols"], Json::array({"y", "c"}));
  EXPECT_EQ(j["values"][0][0], 1.0);
  EXPECT_TRUE(j["values"][0][1].is_null());
  EXPECT_EQ(j["n"], 3);
  EXPECT_EQ(j["method"], "srcc");
}

TEST(Method, Names) {
  EXPECT_EQ(ParseCorrelationMethod("ktau"), CorrelationMethod::kKtau);
  EXPECT_FALSE(ParseCorrelationMethod("tau"));
  EXPECT_STREQ(CorrelationMethodName(CorrelationMethod::kLcc), "lcc");
}
