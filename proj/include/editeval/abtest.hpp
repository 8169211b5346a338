#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editeval/backend.hpp"

namespace editeval {

struct AbItem {
  std::string sample_id;
  std::string response_a;
  std::string response_b;
  std::string source_a;
  std::string source_b;

  // Throws Error(kInvalidItem) for empty responses or equal source labels.
  void Validate() const;
};

AbItem AbItemFromJson(const Json& j);
Json AbItemToJson(const AbItem& item);

enum class PresentedOrder { kAB, kBA };
enum class Choice { kFirst, kSecond, kTie };

const char* PresentedOrderName(PresentedOrder o);
const char* ChoiceName(Choice c);
std::optional<Choice> ParseChoice(std::string_view text);

enum class Criterion { kCompleteness, kAccuracy, kRichness };
inline constexpr std::array<Criterion, 3> kCriteria = {Criterion::kCompleteness, Criterion::kAccuracy,
                                                       Criterion::kRichness};
const char* CriterionName(Criterion c);

inline constexpr std::string_view kTieLabel = "tie";

// Even index -> AB, odd index -> BA.
std::vector<std::pair<AbItem, PresentedOrder>> AssignOrder(const std::vector<AbItem>& items);

// Maps a presented-slot choice to the true source label (or "tie").
std::string DeAlias(PresentedOrder order, Choice choice, const AbItem& item);
// Inverse of DeAlias.
Choice ReAlias(PresentedOrder order, std::string_view label, const AbItem& item);

enum class VoteStatus { kOk, kMalformed, kBackendError };
const char* VoteStatusName(VoteStatus s);

struct ParsedVote {
  Choice winner = Choice::kTie;
  std::map<Criterion, Choice> criteria;
};

// Reads the COMPLETENESS/ACCURACY/RICHNESS/WINNER lines in any order.
// Throws Error(kMalformedVote) naming the first missing or unreadable line.
ParsedVote ParseVote(std::string_view text);

struct JudgeVote {
  std::string sample_id;
  std::string source_a;
  std::string source_b;
  PresentedOrder order = PresentedOrder::kAB;
  VoteStatus status = VoteStatus::kOk;
  std::optional<Choice> winner_presented;
  std::string winner_true;  // source label or "tie"; empty unless status is ok
  std::map<Criterion, Choice> criteria_presented;
  std::map<Criterion, std::string> criteria_true;
  std::string raw;
  std::string error;
};

Json JudgeVoteToJson(const JudgeVote& v);
JudgeVote JudgeVoteFromJson(const Json& j);

struct JudgeTemplate {
  // Placeholders {response_1} and {response_2}.
  std::string prompt;
  static JudgeTemplate Defaults();
};

std::string RenderJudgePrompt(const JudgeTemplate& tmpl, const AbItem& item, PresentedOrder order);

// Backend and parse failures are reported through the vote status.
JudgeVote JudgeItem(const AbItem& item, PresentedOrder order, const BackendConfig& config,
                    Transport& transport, const JudgeTemplate& tmpl = JudgeTemplate::Defaults());

std::vector<JudgeVote> JudgeAll(const std::vector<AbItem>& items, const BackendConfig& config,
                                Transport& transport, const JudgeTemplate& tmpl, int parallelism);

struct Tally {
  long wins_first = 0;   // source listed first in the pair report
  long wins_second = 0;
  long ties = 0;

  long total() const { return wins_first + wins_second + ties; }
  double rate_first() const { return total() ? double(wins_first) / double(total()) : 0.0; }
  double rate_second() const { return total() ? double(wins_second) / double(total()) : 0.0; }
  double tie_rate() const { return total() ? double(ties) / double(total()) : 0.0; }
};

struct PairReport {
  std::string source_1;  // lexicographically smaller label
  std::string source_2;
  long malformed = 0;
  long backend_errors = 0;
  Tally overall;
  std::map<Criterion, Tally> criteria;
};

struct AbReport {
  std::vector<PairReport> pairs;
};

// Malformed and failed votes are counted but excluded from every rate.
AbReport AggregateVotes(const std::vector<JudgeVote>& votes);

Json AbReportToJson(const AbReport& r);
std::string AbReportToText(const AbReport& r);
std::string AbReportToCsv(const AbReport& r);

}  // namespace editeval
