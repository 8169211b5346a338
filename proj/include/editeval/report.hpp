#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "editeval/corpus.hpp"
#include "editeval/stats.hpp"
#include "editeval/textmetrics.hpp"

namespace editeval {

// Per-sample results gathered from metrics.jsonl and composite.jsonl.
struct SampleScores {
  std::string id;
  std::string system_id;
  std::optional<MetricVector> difference;
  std::optional<MetricVector> commonality;
  std::optional<double> edit_score;
  std::optional<double> faith_score;
};

// Column names: D_<metric> and C_<metric> for caption accuracy, edit_score,
// faith_score, the subjective ratings (quality, relevance, faithfulness) and
// every objective column under its own name. Absent values stay absent.
std::vector<ColumnSample> BuildColumnSamples(const std::vector<EditingSample>& manifest,
                                             const std::map<std::string, SampleScores>& scores);

std::vector<std::string> CaptionMetricColumns(const std::vector<SystemAggregate>& units);
std::vector<std::string> RatingColumns(const std::vector<SystemAggregate>& units);

struct RatingTableRow {
  std::string name;
  std::string edit_column;   // correlated with the editing rating
  std::string presv_column;  // correlated with the preservation rating
};

struct RatingTable {
  std::string level;  // "system" or "sample"
  std::string edit_rating = "relevance";
  std::string presv_rating = "faithfulness";
  std::vector<RatingTableRow> rows;
  // values[row][method] = {edit, presv}
  std::vector<std::map<CorrelationMethod, std::pair<std::optional<double>, std::optional<double>>>> values;
  std::size_t n = 0;
};

std::vector<RatingTableRow> DefaultRatingTableRows();

RatingTable ComputeRatingTable(const std::vector<SystemAggregate>& units, const std::vector<RatingTableRow>& rows,
                     const std::string& level);

Json RatingTableToJson(const RatingTable& t);
std::string RatingTableToText(const RatingTable& t);
std::string RatingTableToCsv(const RatingTable& t);

std::string CorrelationMatrixToText(const CorrelationMatrix& m);

}  // namespace editeval
