#include "editeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "editeval/error.hpp"

namespace editeval {
namespace {

void CheckPaired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "correlation inputs differ in length");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::kDegenerateVariance, "correlation needs at least two points");
  }
}

// Number of tied pairs within runs of equal keys of a sorted sequence.
template <typename Eq>
long long TiedPairs(std::size_t n, Eq equal) {
  long long total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

long long MergeCountSwaps(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = MergeCountSwaps(v, buf, lo, mid) + MergeCountSwaps(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double PearsonLcc(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw Error(ErrorCode::kDegenerateVariance, "zero variance in correlation input");
  }
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double SpearmanSrcc(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  auto rx = AverageRanks(x);
  auto ry = AverageRanks(y);
  return PearsonLcc(rx, ry);
}

double KendallTauB(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  long long tied_x = TiedPairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]];
  });
  long long tied_xy = TiedPairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  long long swaps = MergeCountSwaps(ys, buf, 0, n);
  long long tied_y = TiedPairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const long long denom_x = n0 - tied_x;
  const long long denom_y = n0 - tied_y;
  if (denom_x == 0 || denom_y == 0) {
    throw Error(ErrorCode::kDegenerateVariance, "all pairs tied in one input");
  }
  // concordant - discordant
  const long long s = n0 - tied_x - tied_y + tied_xy - 2 * swaps;
  double tau = static_cast<double>(s) /
               std::sqrt(static_cast<double>(denom_x) * static_cast<double>(denom_y));
  return std::clamp(tau, -1.0, 1.0);
}

const char* CorrelationMethodName(CorrelationMethod m) {
  switch (m) {
    case CorrelationMethod::kLcc: return "lcc";
    case CorrelationMethod::kSrcc: return "srcc";
    case CorrelationMethod::kKtau: return "ktau";
  }
  return "";
}

std::optional<CorrelationMethod> ParseCorrelationMethod(std::string_view name) {
  if (name == "lcc") return CorrelationMethod::kLcc;
  if (name == "srcc") return CorrelationMethod::kSrcc;
  if (name == "ktau") return CorrelationMethod::kKtau;
  return std::nullopt;
}

double Correlate(CorrelationMethod m, std::span<const double> x, std::span<const double> y) {
  switch (m) {
    case CorrelationMethod::kLcc: return PearsonLcc(x, y);
    case CorrelationMethod::kSrcc: return SpearmanSrcc(x, y);
    case CorrelationMethod::kKtau: return KendallTauB(x, y);
  }
  return 0;
}

std::vector<SystemAggregate> AggregateBySystem(const std::vector<ColumnSample>& samples) {
  std::vector<SystemAggregate> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<std::string, double>> sums;
  for (const auto& s : samples) {
    auto [it, inserted] = index.emplace(s.system_id, out.size());
    if (inserted) {
      out.push_back(SystemAggregate{s.system_id, 0, {}, {}});
      sums.emplace_back();
    }
    auto& agg = out[it->second];
    ++agg.sample_count;
    for (const auto& [name, value] : s.columns) {
      sums[it->second][name] += value;
      ++agg.coverage[name];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (const auto& [name, total] : sums[i]) {
      out[i].columns[name] = total / static_cast<double>(out[i].coverage[name]);
    }
  }
  return out;
}

std::vector<SystemAggregate> SampleLevelUnits(const std::vector<ColumnSample>& samples) {
  std::vector<SystemAggregate> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    SystemAggregate a{s.system_id, 1, s.columns, {}};
    for (const auto& [name, v] : s.columns) a.coverage[name] = 1;
    out.push_back(std::move(a));
  }
  return out;
}

std::optional<double> CorrelationMatrix::Get(std::string_view row, std::string_view col) const {
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    if (row_names[r] != row) continue;
    for (std::size_t c = 0; c < col_names.size(); ++c) {
      if (col_names[c] == col) return cells[r][c].value;
    }
  }
  return std::nullopt;
}

CorrelationMatrix ComputeCorrelationMatrix(const std::vector<SystemAggregate>& units,
                                           const std::vector<std::string>& rows,
                                           const std::vector<std::string>& cols,
                                           CorrelationMethod method) {
  auto check_known = [&](const std::string& name) {
    for (const auto& u : units) {
      if (u.columns.count(name)) return;
    }
    throw Error(ErrorCode::kUnknownColumn, "no aggregate carries column '" + name + "'");
  };
  for (const auto& r : rows) check_known(r);
  for (const auto& c : cols) check_known(c);

  CorrelationMatrix m;
  m.row_names = rows;
  m.col_names = cols;
  m.n = units.size();
  m.method = method;
  m.cells.assign(rows.size(), std::vector<CorrelationCell>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::vector<double> xs, ys;
      for (const auto& u : units) {
        auto a = u.columns.find(rows[r]);
        auto b = u.columns.find(cols[c]);
        if (a != u.columns.end() && b != u.columns.end()) {
          xs.push_back(a->second);
          ys.push_back(b->second);
        }
      }
      CorrelationCell& cell = m.cells[r][c];
      cell.n = xs.size();
      if (xs.size() < 2) {
        cell.reason = "insufficient_pairs";
        continue;
      }
      try {
        cell.value = Correlate(method, xs, ys);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateVariance) throw;
        cell.reason = "zero_variance";
      }
    }
  }
  return m;
}

std::string CorrelationMatrixToCsv(const CorrelationMatrix& m) {
  std::ostringstream os;
  os << CorrelationMethodName(m.method);
  for (const auto& c : m.col_names) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < m.row_names.size(); ++r) {
    os << m.row_names[r];
    for (std::size_t c = 0; c < m.col_names.size(); ++c) {
      os << ',';
      if (m.cells[r][c].value) os << FormatDouble(*m.cells[r][c].value);
    }
    os << '\n';
  }
  return os.str();
}

Json CorrelationMatrixToJson(const CorrelationMatrix& m) {
  Json values = Json::array();
  Json reasons = Json::array();
  for (const auto& row : m.cells) {
    Json vr = Json::array(), rr = Json::array();
    for (const auto& cell : row) {
      vr.push_back(cell.value ? Json(*cell.value) : Json(nullptr));
      rr.push_back(cell.value ? Json(nullptr) : Json(cell.reason));
    }
    values.push_back(std::move(vr));
    reasons.push_back(std::move(rr));
  }
  return Json{{"rows", m.row_names}, {"cols", m.col_names}, {"values", values},
              {"n", m.n},           {"method", CorrelationMethodName(m.method)},
              {"absent_reasons", reasons}};
}

}  // namespace editeval
