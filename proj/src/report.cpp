#include "editeval/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "editeval/error.hpp"

namespace editeval {
namespace {

std::optional<double> CorrelateColumns(const std::vector<SystemAggregate>& units, const std::string& a,
                                       const std::string& b, CorrelationMethod method) {
  std::vector<double> xs, ys;
  for (const auto& u : units) {
    auto x = u.columns.find(a);
    auto y = u.columns.find(b);
    if (x != u.columns.end() && y != u.columns.end()) {
      xs.push_back(x->second);
      ys.push_back(y->second);
    }
  }
  if (xs.size() < 2) return std::nullopt;
  try {
    return Correlate(method, xs, ys);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateVariance) return std::nullopt;
    throw;
  }
}

std::string Cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string CsvCell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

constexpr CorrelationMethod kMethods[] = {CorrelationMethod::kLcc, CorrelationMethod::kSrcc,
                                          CorrelationMethod::kKtau};

}  // namespace

std::vector<ColumnSample> BuildColumnSamples(const std::vector<EditingSample>& manifest,
                                             const std::map<std::string, SampleScores>& scores) {
  std::vector<ColumnSample> out;
  out.reserve(manifest.size());
  for (const auto& s : manifest) {
    ColumnSample row{s.system_id, {}};
    if (s.subjective) {
      row.columns["quality"] = s.subjective->quality;
      row.columns["relevance"] = s.subjective->relevance;
      row.columns["faithfulness"] = s.subjective->faithfulness;
    }
    for (const auto& [name, v] : s.objective) row.columns[name] = v;
    if (auto it = scores.find(s.id); it != scores.end()) {
      const SampleScores& sc = it->second;
      auto add = [&](const char* prefix, const std::optional<MetricVector>& mv) {
        if (!mv) return;
        for (auto name : kMetricNames) {
          if (auto v = mv->Get(name)) row.columns[std::string(prefix) + std::string(name)] = *v;
        }
      };
      add("D_", sc.difference);
      add("C_", sc.commonality);
      if (sc.edit_score) row.columns["edit_score"] = *sc.edit_score;
      if (sc.faith_score) row.columns["faith_score"] = *sc.faith_score;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> CaptionMetricColumns(const std::vector<SystemAggregate>& units) {
  std::set<std::string> present;
  for (const auto& u : units) {
    for (const auto& [name, v] : u.columns) present.insert(name);
  }
  std::vector<std::string> out;
  for (const char* prefix : {"D_", "C_"}) {
    for (auto name : kMetricNames) {
      std::string col = std::string(prefix) + std::string(name);
      if (present.count(col)) out.push_back(col);
    }
  }
  return out;
}

std::vector<std::string> RatingColumns(const std::vector<SystemAggregate>& units) {
  std::set<std::string> present;
  for (const auto& u : units) {
    for (const auto& [name, v] : u.columns) present.insert(name);
  }
  std::vector<std::string> out;
  for (const char* r : {"quality", "relevance", "faithfulness"}) {
    if (present.count(r)) out.push_back(r);
  }
  for (const auto& name : present) {
    bool caption = name.rfind("D_", 0) == 0 || name.rfind("C_", 0) == 0;
    bool known = name == "quality" || name == "relevance" || name == "faithfulness" ||
                 name == "edit_score" || name == "faith_score";
    if (!caption && !known) out.push_back(name);
  }
  return out;
}

std::vector<RatingTableRow> DefaultRatingTableRows() {
  return {{"Edit_score", "edit_score", "edit_score"}, {"Faith_score", "faith_score", "faith_score"}};
}

RatingTable ComputeRatingTable(const std::vector<SystemAggregate>& units, const std::vector<RatingTableRow>& rows,
                     const std::string& level) {
  RatingTable t;
  t.level = level;
  t.rows = rows;
  t.n = units.size();
  for (const auto& row : rows) {
    std::map<CorrelationMethod, std::pair<std::optional<double>, std::optional<double>>> cells;
    for (auto m : kMethods) {
      cells[m] = {CorrelateColumns(units, row.edit_column, t.edit_rating, m),
                  CorrelateColumns(units, row.presv_column, t.presv_rating, m)};
    }
    t.values.push_back(std::move(cells));
  }
  return t;
}

Json RatingTableToJson(const RatingTable& t) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Json r{{"name", t.rows[i].name},
           {"edit_column", t.rows[i].edit_column},
           {"presv_column", t.rows[i].presv_column}};
    for (auto m : kMethods) {
      const auto& [e, p] = t.values[i].at(m);
      r[CorrelationMethodName(m)] = {{"edit", e ? Json(*e) : Json(nullptr)},
                                     {"presv", p ? Json(*p) : Json(nullptr)}};
    }
    rows.push_back(std::move(r));
  }
  return Json{{"level", t.level},
              {"edit_rating", t.edit_rating},
              {"presv_rating", t.presv_rating},
              {"n", t.n},
              {"rows", rows}};
}

std::string RatingTableToText(const RatingTable& t) {
  std::ostringstream os;
  char buf[256];
  os << "Correlation with ratings (" << t.level << " level, n=" << t.n << ")\n";
  std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s %9s %9s\n", "", "LCC", "", "SRCC", "", "KTAU", "");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s %9s %9s\n", "Model", "Edit.", "Presv.", "Edit.",
                "Presv.", "Edit.", "Presv.");
  os << buf;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& v = t.values[i];
    std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s %9s %9s\n", t.rows[i].name.c_str(),
                  Cell(v.at(CorrelationMethod::kLcc).first).c_str(),
                  Cell(v.at(CorrelationMethod::kLcc).second).c_str(),
                  Cell(v.at(CorrelationMethod::kSrcc).first).c_str(),
                  Cell(v.at(CorrelationMethod::kSrcc).second).c_str(),
                  Cell(v.at(CorrelationMethod::kKtau).first).c_str(),
                  Cell(v.at(CorrelationMethod::kKtau).second).c_str());
    os << buf;
  }
  return os.str();
}

std::string RatingTableToCsv(const RatingTable& t) {
  std::ostringstream os;
  os << "model,lcc_edit,lcc_presv,srcc_edit,srcc_presv,ktau_edit,ktau_presv\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    os << t.rows[i].name;
    for (auto m : kMethods) {
      os << ',' << CsvCell(t.values[i].at(m).first) << ',' << CsvCell(t.values[i].at(m).second);
    }
    os << '\n';
  }
  return os.str();
}

std::string CorrelationMatrixToText(const CorrelationMatrix& m) {
  std::ostringstream os;
  os << CorrelationMethodName(m.method) << " (n=" << m.n << ")\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-14s", "");
  os << buf;
  for (const auto& c : m.col_names) {
    std::snprintf(buf, sizeof buf, " %12s", c.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t r = 0; r < m.row_names.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%-14s", m.row_names[r].c_str());
    os << buf;
    for (std::size_t c = 0; c < m.col_names.size(); ++c) {
      std::snprintf(buf, sizeof buf, " %12s", Cell(m.cells[r][c].value).c_str());
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace editeval
