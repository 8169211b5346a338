#include "editeval/abtest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "editeval/error.hpp"
#include "editeval/parallel.hpp"
#include "editeval/text.hpp"

namespace editeval {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<Choice> ChoiceFromName(std::string_view name) {
  if (name == "first") return Choice::kFirst;
  if (name == "second") return Choice::kSecond;
  if (name == "tie") return Choice::kTie;
  return std::nullopt;
}

std::optional<Criterion> CriterionFromName(std::string_view name) {
  for (auto c : kCriteria) {
    if (name == CriterionName(c)) return c;
  }
  return std::nullopt;
}

void Count(Tally& t, const std::string& winner, const PairReport& pair) {
  if (winner == pair.source_1) ++t.wins_first;
  else if (winner == pair.source_2) ++t.wins_second;
  else ++t.ties;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Json TallyJson(const Tally& t, const PairReport& p) {
  return Json{{"wins", {{p.source_1, t.wins_first}, {p.source_2, t.wins_second}}},
              {"ties", t.ties},
              {"win_rate", {{p.source_1, t.rate_first()}, {p.source_2, t.rate_second()}}},
              {"tie_rate", t.tie_rate()},
              {"votes", t.total()}};
}

}  // namespace

void AbItem::Validate() const {
  if (Trim(response_a).empty() || Trim(response_b).empty()) {
    throw Error(ErrorCode::kInvalidItem, "item '" + sample_id + "' has an empty response");
  }
  if (source_a == source_b) {
    throw Error(ErrorCode::kInvalidItem, "item '" + sample_id + "' compares a source with itself");
  }
  if (source_a == kTieLabel || source_b == kTieLabel) {
    throw Error(ErrorCode::kInvalidItem, "'tie' is reserved and cannot label a source");
  }
}

AbItem AbItemFromJson(const Json& j) {
  AbItem item;
  try {
    item.sample_id = j.at("sample_id").get<std::string>();
    item.response_a = j.at("response_a").get<std::string>();
    item.response_b = j.at("response_b").get<std::string>();
    item.source_a = j.at("source_a").get<std::string>();
    item.source_b = j.at("source_b").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad A/B item: ") + e.what());
  }
  item.Validate();
  return item;
}

Json AbItemToJson(const AbItem& item) {
  return Json{{"sample_id", item.sample_id}, {"response_a", item.response_a},
              {"response_b", item.response_b}, {"source_a", item.source_a},
              {"source_b", item.source_b}};
}

const char* PresentedOrderName(PresentedOrder o) { return o == PresentedOrder::kAB ? "AB" : "BA"; }

const char* ChoiceName(Choice c) {
  switch (c) {
    case Choice::kFirst: return "first";
    case Choice::kSecond: return "second";
    case Choice::kTie: return "tie";
  }
  return "";
}

std::optional<Choice> ParseChoice(std::string_view text) {
  std::string s = Lower(Trim(text));
  while (!s.empty() && (s.back() == '.' || s.back() == '*' || std::isspace(static_cast<unsigned char>(s.back())))) {
    s.pop_back();
  }
  while (!s.empty() && (s.front() == '*' || std::isspace(static_cast<unsigned char>(s.front())))) {
    s.erase(s.begin());
  }
  if (s == "first" || s == "1" || s == "response 1" || s == "response1") return Choice::kFirst;
  if (s == "second" || s == "2" || s == "response 2" || s == "response2") return Choice::kSecond;
  if (s == "tie" || s == "draw" || s == "equal") return Choice::kTie;
  return std::nullopt;
}

const char* CriterionName(Criterion c) {
  switch (c) {
    case Criterion::kCompleteness: return "completeness";
    case Criterion::kAccuracy: return "accuracy";
    case Criterion::kRichness: return "richness";
  }
  return "";
}

std::vector<std::pair<AbItem, PresentedOrder>> AssignOrder(const std::vector<AbItem>& items) {
  std::vector<std::pair<AbItem, PresentedOrder>> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.emplace_back(items[i], i % 2 == 0 ? PresentedOrder::kAB : PresentedOrder::kBA);
  }
  return out;
}

std::string DeAlias(PresentedOrder order, Choice choice, const AbItem& item) {
  if (choice == Choice::kTie) return std::string(kTieLabel);
  bool first_is_a = order == PresentedOrder::kAB;
  bool picked_a = (choice == Choice::kFirst) == first_is_a;
  return picked_a ? item.source_a : item.source_b;
}

Choice ReAlias(PresentedOrder order, std::string_view label, const AbItem& item) {
  if (label == kTieLabel) return Choice::kTie;
  bool is_a = label == item.source_a;
  if (!is_a && label != item.source_b) {
    throw Error(ErrorCode::kInvalidItem, "label '" + std::string(label) + "' not in item");
  }
  bool first_is_a = order == PresentedOrder::kAB;
  return is_a == first_is_a ? Choice::kFirst : Choice::kSecond;
}

const char* VoteStatusName(VoteStatus s) {
  switch (s) {
    case VoteStatus::kOk: return "ok";
    case VoteStatus::kMalformed: return "malformed";
    case VoteStatus::kBackendError: return "backend_error";
  }
  return "";
}

ParsedVote ParseVote(std::string_view text) {
  std::map<std::string, std::string> fields;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string s = Trim(line);
    std::size_t b = 0;
    while (b < s.size() && (s[b] == '*' || s[b] == '-' || s[b] == '#' || s[b] == ' ')) ++b;
    auto colon = s.find(':', b);
    if (colon == std::string::npos) continue;
    std::string key = Lower(s.substr(b, colon - b));
    while (!key.empty() && (key.back() == '*' || key.back() == ' ')) key.pop_back();
    if (key == "completeness" || key == "accuracy" || key == "richness" || key == "winner") {
      if (!fields.count(key)) fields[key] = s.substr(colon + 1);
    }
  }
  auto read = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      std::string upper = key;
      for (char& ch : upper) ch = char(std::toupper(static_cast<unsigned char>(ch)));
      throw Error(ErrorCode::kMalformedVote, "missing '" + upper + ":' line");
    }
    auto c = ParseChoice(it->second);
    if (!c) throw Error(ErrorCode::kMalformedVote, "unreadable '" + key + ":' value: " + it->second);
    return *c;
  };
  ParsedVote v;
  for (auto c : kCriteria) v.criteria[c] = read(CriterionName(c));
  v.winner = read("winner");
  return v;
}

Json JudgeVoteToJson(const JudgeVote& v) {
  Json criteria = Json::object(), criteria_true = Json::object();
  for (const auto& [c, choice] : v.criteria_presented) criteria[CriterionName(c)] = ChoiceName(choice);
  for (const auto& [c, label] : v.criteria_true) criteria_true[CriterionName(c)] = label;
  return Json{{"sample_id", v.sample_id},
              {"source_a", v.source_a},
              {"source_b", v.source_b},
              {"presented_order", PresentedOrderName(v.order)},
              {"status", VoteStatusName(v.status)},
              {"winner_presented", v.winner_presented ? Json(ChoiceName(*v.winner_presented)) : Json(nullptr)},
              {"winner_true", v.status == VoteStatus::kOk ? Json(v.winner_true) : Json(nullptr)},
              {"criteria", criteria},
              {"criteria_true", criteria_true},
              {"raw", v.raw},
              {"error", v.error}};
}

JudgeVote JudgeVoteFromJson(const Json& j) {
  JudgeVote v;
  try {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.source_a = j.at("source_a").get<std::string>();
    v.source_b = j.at("source_b").get<std::string>();
    v.order = j.at("presented_order").get<std::string>() == "BA" ? PresentedOrder::kBA : PresentedOrder::kAB;
    std::string status = j.at("status").get<std::string>();
    v.status = status == "ok" ? VoteStatus::kOk
               : status == "malformed" ? VoteStatus::kMalformed : VoteStatus::kBackendError;
    if (auto w = j.find("winner_presented"); w != j.end() && !w->is_null()) {
      v.winner_presented = ChoiceFromName(w->get<std::string>());
    }
    if (auto w = j.find("winner_true"); w != j.end() && !w->is_null()) v.winner_true = w->get<std::string>();
    const Json criteria = j.value("criteria", Json::object());
    const Json criteria_true = j.value("criteria_true", Json::object());
    for (const auto& [name, choice] : criteria.items()) {
      auto c = CriterionFromName(name);
      auto ch = ChoiceFromName(choice.get<std::string>());
      if (c && ch) v.criteria_presented[*c] = *ch;
    }
    for (const auto& [name, label] : criteria_true.items()) {
      if (auto c = CriterionFromName(name)) v.criteria_true[*c] = label.get<std::string>();
    }
    v.raw = j.value("raw", std::string());
    v.error = j.value("error", std::string());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad vote: ") + e.what());
  }
  return v;
}

JudgeTemplate JudgeTemplate::Defaults() {
  return JudgeTemplate{
      "Two assistants wrote an evaluation of the same audio edit. Read both and decide which "
      "evaluation is better.\n\n"
      "Response 1:\n{response_1}\n\n"
      "Response 2:\n{response_2}\n\n"
      "Judge them on three criteria:\n"
      "- completeness: does it address both the editing and the preservation of the original "
      "content, and give an overall verdict?\n"
      "- accuracy: are the described edits, the preserved content and the sound events right, "
      "and is the reasoning consistent?\n"
      "- richness: does it mention acoustic detail, explain its reasoning and suggest "
      "improvements?\n\n"
      "Answer each line with first, second or tie, using exactly this format:\n"
      "COMPLETENESS: <first|second|tie>\n"
      "ACCURACY: <first|second|tie>\n"
      "RICHNESS: <first|second|tie>\n"
      "WINNER: <first|second|tie>"};
}

std::string RenderJudgePrompt(const JudgeTemplate& tmpl, const AbItem& item, PresentedOrder order) {
  const std::string& first = order == PresentedOrder::kAB ? item.response_a : item.response_b;
  const std::string& second = order == PresentedOrder::kAB ? item.response_b : item.response_a;
  // Replace the later placeholder first so the earlier offset stays valid and
  // response text is never re-expanded.
  std::string s = tmpl.prompt;
  auto p1 = s.find("{response_1}");
  auto p2 = s.find("{response_2}");
  if (p1 == std::string::npos || p2 == std::string::npos) {
    throw Error(ErrorCode::kInvalidTemplate, "judge template needs {response_1} and {response_2}");
  }
  if (p1 < p2) {
    s.replace(p2, 12, second);
    s.replace(p1, 12, first);
  } else {
    s.replace(p1, 12, first);
    s.replace(p2, 12, second);
  }
  return s;
}

JudgeVote JudgeItem(const AbItem& item, PresentedOrder order, const BackendConfig& config,
                    Transport& transport, const JudgeTemplate& tmpl) {
  item.Validate();
  JudgeVote v;
  v.sample_id = item.sample_id;
  v.source_a = item.source_a;
  v.source_b = item.source_b;
  v.order = order;
  ChatTurn reply;
  try {
    reply = QueryBackend(config, transport, {ChatTurn{Role::kUser, RenderJudgePrompt(tmpl, item, order), {}}});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidTemplate) throw;
    v.status = VoteStatus::kBackendError;
    v.error = e.what();
    return v;
  }
  v.raw = reply.text;
  try {
    ParsedVote parsed = ParseVote(reply.text);
    v.winner_presented = parsed.winner;
    v.winner_true = DeAlias(order, parsed.winner, item);
    v.criteria_presented = parsed.criteria;
    for (const auto& [c, choice] : parsed.criteria) v.criteria_true[c] = DeAlias(order, choice, item);
  } catch (const Error& e) {
    v.status = VoteStatus::kMalformed;
    v.error = e.what();
  }
  return v;
}

std::vector<JudgeVote> JudgeAll(const std::vector<AbItem>& items, const BackendConfig& config,
                                Transport& transport, const JudgeTemplate& tmpl, int parallelism) {
  auto ordered = AssignOrder(items);
  std::vector<JudgeVote> votes(ordered.size());
  ParallelFor(ordered.size(), parallelism, [&](std::size_t i) {
    votes[i] = JudgeItem(ordered[i].first, ordered[i].second, config, transport, tmpl);
  });
  return votes;
}

AbReport AggregateVotes(const std::vector<JudgeVote>& votes) {
  AbReport report;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& v : votes) {
    auto key = std::minmax(v.source_a, v.source_b);
    auto [it, inserted] = index.emplace(std::make_pair(key.first, key.second), report.pairs.size());
    if (inserted) {
      PairReport p;
      p.source_1 = key.first;
      p.source_2 = key.second;
      for (auto c : kCriteria) p.criteria[c] = Tally{};
      report.pairs.push_back(std::move(p));
    }
    PairReport& p = report.pairs[it->second];
    if (v.status == VoteStatus::kMalformed) {
      ++p.malformed;
      continue;
    }
    if (v.status == VoteStatus::kBackendError) {
      ++p.backend_errors;
      continue;
    }
    Count(p.overall, v.winner_true, p);
    for (const auto& [c, label] : v.criteria_true) Count(p.criteria[c], label, p);
  }
  std::sort(report.pairs.begin(), report.pairs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.source_1, a.source_2) < std::tie(b.source_1, b.source_2);
  });
  return report;
}

Json AbReportToJson(const AbReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    Json criteria = Json::object();
    for (const auto& [c, t] : p.criteria) criteria[CriterionName(c)] = TallyJson(t, p);
    pairs.push_back(Json{{"sources", {p.source_1, p.source_2}},
                         {"overall", TallyJson(p.overall, p)},
                         {"criteria", criteria},
                         {"malformed", p.malformed},
                         {"backend_errors", p.backend_errors}});
  }
  return Json{{"pairs", pairs}};
}

std::string AbReportToText(const AbReport& r) {
  std::ostringstream os;
  for (const auto& p : r.pairs) {
    os << p.source_1 << " vs " << p.source_2 << "  (malformed " << p.malformed
       << ", backend errors " << p.backend_errors << ")\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-13s %8s %8s %8s %6s\n", "criterion", "win_1", "win_2", "tie", "votes");
    os << buf;
    auto row = [&](const char* name, const Tally& t) {
      std::snprintf(buf, sizeof buf, "  %-13s %8s %8s %8s %6ld\n", name, Fixed(t.rate_first()).c_str(),
                    Fixed(t.rate_second()).c_str(), Fixed(t.tie_rate()).c_str(), t.total());
      os << buf;
    };
    row("overall", p.overall);
    for (const auto& [c, t] : p.criteria) row(CriterionName(c), t);
  }
  return os.str();
}

std::string AbReportToCsv(const AbReport& r) {
  std::ostringstream os;
  os << "source_1,source_2,criterion,wins_1,wins_2,ties,win_rate_1,win_rate_2,tie_rate,malformed,backend_errors\n";
  for (const auto& p : r.pairs) {
    auto row = [&](const char* name, const Tally& t) {
      os << p.source_1 << ',' << p.source_2 << ',' << name << ',' << t.wins_first << ','
         << t.wins_second << ',' << t.ties << ',' << Fixed(t.rate_first()) << ','
         << Fixed(t.rate_second()) << ',' << Fixed(t.tie_rate()) << ',' << p.malformed << ','
         << p.backend_errors << '\n';
    };
    row("overall", p.overall);
    for (const auto& [c, t] : p.criteria) row(CriterionName(c), t);
  }
  return os.str();
}

}  // namespace editeval
