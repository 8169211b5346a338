#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "editeval/text.hpp"

namespace editeval {

using Json = nlohmann::ordered_json;

// Caption-accuracy values for one candidate against its references.
struct MetricVector {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double rouge_l = 0;
  double meteor = 0;
  double cider_d = 0;
  std::optional<double> spice;
  std::optional<double> fense;
  std::optional<double> spider;
  // Set when an external metric was requested but could not be obtained.
  bool external_warning = false;

  // Looks a metric up by its report name ("bleu1" ... "spider").
  std::optional<double> Get(std::string_view name) const;

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

inline constexpr std::string_view kMetricNames[] = {"bleu1", "bleu2",   "bleu3", "bleu4",
                                                   "rouge_l", "meteor", "cider_d", "spice",
                                                   "fense", "spider"};

Json MetricVectorToJson(const MetricVector& m);
MetricVector MetricVectorFromJson(const Json& j);

// Sentence-level BLEU-n, no smoothing: zero as soon as one k-gram order has
// no clipped match.
double BleuN(const TokenSequence& candidate, const std::vector<TokenSequence>& references, int n);

// ROUGE-L F-measure with beta = 1.2, best reference.
double RougeL(const TokenSequence& candidate, const std::vector<TokenSequence>& references);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  int matches = 0;
  int exact_matches = 0;
  int chunks = 0;
};

// Alignment used by METEOR: the one-to-one matching with the most exact
// matches, then the most exact-or-stem matches, then the fewest chunks.
MeteorAlignment AlignForMeteor(const TokenSequence& candidate, const TokenSequence& reference);

double MeteorFromAlignment(const MeteorAlignment& a, std::size_t candidate_len,
                           std::size_t reference_len, const MeteorParams& params = {});

double Meteor(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              const MeteorParams& params = {});

// Document frequencies of 1..4-grams over a set of reference sets. Each
// reference set counts as one document.
class CiderCorpus {
 public:
  explicit CiderCorpus(const std::vector<std::vector<TokenSequence>>& reference_sets);

  std::size_t num_documents() const { return num_documents_; }
  double DocumentFrequency(const std::string& ngram) const;
  double Idf(const std::string& ngram) const;

 private:
  std::size_t num_documents_;
  std::map<std::string, double> df_;
};

struct CiderParams {
  double sigma = 6.0;
  double scale = 10.0;
};

double CiderD(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              const CiderCorpus& corpus, const CiderParams& params = {});

// Space-joined n-grams of a token sequence, keyed by the joined string.
std::map<std::string, int> CountNgrams(const TokenSequence& tokens, int n);

// Source of metrics this engine does not compute natively (SPICE, FENSE).
// Implementations throw Error(kExternalScorerUnavailable) when the service
// cannot be reached.
class ExternalScorer {
 public:
  virtual ~ExternalScorer() = default;
  virtual double Score(std::string_view metric, std::string_view candidate,
                       const std::vector<std::string>& references) = 0;
};

struct ScorePairOptions {
  ExternalScorer* external = nullptr;
  // Values supplied with the sample (e.g. precomputed manifest columns);
  // these take precedence over the external scorer.
  std::optional<double> precomputed_spice;
  std::optional<double> precomputed_fense;
};

MetricVector ScorePair(std::string_view candidate, const std::vector<std::string>& references,
                       const CiderCorpus& corpus, const ScorePairOptions& options = {});

}  // namespace editeval
