#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace editeval {

using Json = nlohmann::ordered_json;

double PearsonLcc(std::span<const double> x, std::span<const double> y);

// Pearson over average ranks.
double SpearmanSrcc(std::span<const double> x, std::span<const double> y);

// Tie-corrected tau-b, O(n log n) (Knight's merge-sort count).
double KendallTauB(std::span<const double> x, std::span<const double> y);

// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> values);

enum class CorrelationMethod { kLcc, kSrcc, kKtau };

const char* CorrelationMethodName(CorrelationMethod m);
std::optional<CorrelationMethod> ParseCorrelationMethod(std::string_view name);
double Correlate(CorrelationMethod m, std::span<const double> x, std::span<const double> y);

struct ColumnSample {
  std::string system_id;
  std::map<std::string, double> columns;
};

struct SystemAggregate {
  std::string system_id;
  std::size_t sample_count = 0;
  std::map<std::string, double> columns;  // mean over samples carrying the column
  std::map<std::string, std::size_t> coverage;
};

// One aggregate per distinct system, in order of first appearance.
std::vector<SystemAggregate> AggregateBySystem(const std::vector<ColumnSample>& samples);

// Treats every sample as its own unit, for sample-level correlation.
std::vector<SystemAggregate> SampleLevelUnits(const std::vector<ColumnSample>& samples);

struct CorrelationCell {
  std::optional<double> value;
  std::size_t n = 0;    // units where both columns are present
  std::string reason;   // set when value is absent
};

struct CorrelationMatrix {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<std::vector<CorrelationCell>> cells;
  std::size_t n = 0;  // number of aggregation units
  CorrelationMethod method = CorrelationMethod::kLcc;

  const CorrelationCell& at(std::size_t r, std::size_t c) const { return cells[r][c]; }
  std::optional<double> Get(std::string_view row, std::string_view col) const;
};

// Cells with fewer than two paired units or zero variance are left absent
// with a reason instead of failing the whole matrix. Throws
// Error(kUnknownColumn) for a name no unit carries.
CorrelationMatrix ComputeCorrelationMatrix(const std::vector<SystemAggregate>& units,
                                           const std::vector<std::string>& rows,
                                           const std::vector<std::string>& cols,
                                           CorrelationMethod method);

std::string CorrelationMatrixToCsv(const CorrelationMatrix& m);
Json CorrelationMatrixToJson(const CorrelationMatrix& m);

}  // namespace editeval
