#include "editeval/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "editeval/error.hpp"

namespace editeval {
namespace {

std::vector<const TokenSequence*> NonEmpty(const std::vector<TokenSequence>& refs) {
  std::vector<const TokenSequence*> out;
  for (const auto& r : refs) {
    if (!r.empty()) out.push_back(&r);
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyReferences, "no non-empty reference");
  return out;
}

std::size_t LcsLength(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Branch-and-bound search for the alignment that minimizes chunks among all
// alignments with the maximal exact and total match counts. Chunks equal
// matches minus "adjacent links" (i -> j followed by i+1 -> j+1), so the
// search maximizes links.
class MeteorAligner {
 public:
  MeteorAligner(const TokenSequence& cand, const TokenSequence& ref) {
    std::unordered_map<std::string, int> type_ids, class_ids;
    auto type_of = [&](const std::string& t) {
      return type_ids.emplace(t, static_cast<int>(type_ids.size())).first->second;
    };
    auto class_of = [&](const std::string& t) {
      return class_ids.emplace(PorterStem(t), static_cast<int>(class_ids.size())).first->second;
    };
    for (const auto& t : cand) {
      cand_type_.push_back(type_of(t));
      cand_class_.push_back(class_of(t));
    }
    for (const auto& t : ref) {
      ref_type_.push_back(type_of(t));
      ref_class_.push_back(class_of(t));
    }
    const std::size_t types = type_ids.size(), classes = class_ids.size();
    std::vector<int> ct(types, 0), rt(types, 0), cc(classes, 0), rc(classes, 0);
    for (int t : cand_type_) ++ct[t];
    for (int t : ref_type_) ++rt[t];
    for (int c : cand_class_) ++cc[c];
    for (int c : ref_class_) ++rc[c];

    need_exact_.assign(types, 0);
    need_stem_.assign(classes, 0);
    std::vector<int> exact_in_class(classes, 0);
    // Each type lives in exactly one stem class.
    std::vector<int> class_of_type(types, 0);
    for (std::size_t i = 0; i < cand_type_.size(); ++i) class_of_type[cand_type_[i]] = cand_class_[i];
    for (std::size_t j = 0; j < ref_type_.size(); ++j) class_of_type[ref_type_[j]] = ref_class_[j];
    for (std::size_t w = 0; w < types; ++w) {
      need_exact_[w] = std::min(ct[w], rt[w]);
      exact_in_class[class_of_type[w]] += need_exact_[w];
      result_.exact_matches += need_exact_[w];
    }
    for (std::size_t s = 0; s < classes; ++s) {
      int total = std::min(cc[s], rc[s]);
      need_stem_[s] = total - exact_in_class[s];
      result_.matches += total;
    }
    cand_left_type_ = ct;
    ref_free_type_ = rt;
    ref_used_.assign(ref_type_.size(), false);
  }

  MeteorAlignment Run() {
    if (result_.matches == 0) return result_;
    Search(0, -1, 0, 0);
    // Budget exhausted before any complete alignment: report the worst case.
    result_.chunks = best_links_ < 0 ? result_.matches : result_.matches - best_links_;
    return result_;
  }

 private:
  static constexpr long kNodeBudget = 20'000'000;

  void Search(std::size_t i, int prev_j, int matched, int links) {
    if (done_ || ++nodes_ > kNodeBudget) return;
    if (links + (result_.matches - matched) <= best_links_) return;
    if (i == cand_type_.size()) {
      if (matched == result_.matches) {
        best_links_ = links;
        if (best_links_ == result_.matches - 1) done_ = true;
      }
      return;
    }
    const int w = cand_type_[i];
    const int s = cand_class_[i];
    --cand_left_type_[w];

    auto try_ref = [&](int j) {
      if (j < 0 || j >= static_cast<int>(ref_type_.size()) || ref_used_[j]) return;
      bool exact = ref_type_[j] == w;
      if (exact) {
        if (need_exact_[w] == 0) return;
      } else {
        if (ref_class_[j] != s || need_stem_[s] == 0) return;
        // Stem matches must not consume tokens an exact match still needs.
        if (ref_free_type_[ref_type_[j]] - 1 < need_exact_[ref_type_[j]]) return;
      }
      ref_used_[j] = true;
      --ref_free_type_[ref_type_[j]];
      if (exact) --need_exact_[w]; else --need_stem_[s];
      if (Feasible()) {
        int gained = (prev_j >= 0 && j == prev_j + 1) ? 1 : 0;
        Search(i + 1, j, matched + 1, links + gained);
      }
      if (exact) ++need_exact_[w]; else ++need_stem_[s];
      ++ref_free_type_[ref_type_[j]];
      ref_used_[j] = false;
    };

    // Extending the current chunk first finds good bounds early.
    if (prev_j >= 0) try_ref(prev_j + 1);
    for (int j = 0; j < static_cast<int>(ref_type_.size()) && !done_; ++j) {
      if (prev_j >= 0 && j == prev_j + 1) continue;
      try_ref(j);
    }
    if (!done_ && Feasible()) Search(i + 1, -1, matched, links);
    ++cand_left_type_[w];
  }

  // Every type still needing exact matches has enough candidate tokens left.
  bool Feasible() const {
    for (std::size_t w = 0; w < need_exact_.size(); ++w) {
      if (cand_left_type_[w] < need_exact_[w]) return false;
    }
    return true;
  }

  std::vector<int> cand_type_, cand_class_, ref_type_, ref_class_;
  std::vector<int> need_exact_, need_stem_, cand_left_type_, ref_free_type_;
  std::vector<bool> ref_used_;
  MeteorAlignment result_;
  int best_links_ = -1;
  long nodes_ = 0;
  bool done_ = false;
};

std::map<std::string, double> TfIdf(const TokenSequence& tokens, int n, const CiderCorpus& corpus,
                                    double* norm) {
  std::map<std::string, double> vec;
  for (const auto& [gram, count] : CountNgrams(tokens, n)) {
    vec[gram] = static_cast<double>(count) * corpus.Idf(gram);
  }
  double sq = 0;
  for (const auto& [gram, v] : vec) sq += v * v;
  *norm = std::sqrt(sq);
  return vec;
}

}  // namespace

std::optional<double> MetricVector::Get(std::string_view name) const {
  if (name == "bleu1") return bleu1;
  if (name == "bleu2") return bleu2;
  if (name == "bleu3") return bleu3;
  if (name == "bleu4") return bleu4;
  if (name == "rouge_l") return rouge_l;
  if (name == "meteor") return meteor;
  if (name == "cider_d") return cider_d;
  if (name == "spice") return spice;
  if (name == "fense") return fense;
  if (name == "spider") return spider;
  return std::nullopt;
}

Json MetricVectorToJson(const MetricVector& m) {
  Json j;
  for (auto name : kMetricNames) {
    auto v = m.Get(name);
    j[std::string(name)] = v ? Json(*v) : Json(nullptr);
  }
  j["external_warning"] = m.external_warning;
  return j;
}

MetricVector MetricVectorFromJson(const Json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
  };
  MetricVector m;
  m.bleu1 = opt("bleu1").value_or(0);
  m.bleu2 = opt("bleu2").value_or(0);
  m.bleu3 = opt("bleu3").value_or(0);
  m.bleu4 = opt("bleu4").value_or(0);
  m.rouge_l = opt("rouge_l").value_or(0);
  m.meteor = opt("meteor").value_or(0);
  m.cider_d = opt("cider_d").value_or(0);
  m.spice = opt("spice");
  m.fense = opt("fense");
  m.spider = opt("spider");
  m.external_warning = j.value("external_warning", false);
  return m;
}

std::map<std::string, int> CountNgrams(const TokenSequence& tokens, int n) {
  std::map<std::string, int> counts;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (int k = 1; k < n; ++k) {
      gram.push_back(' ');
      gram += tokens[i + k];
    }
    ++counts[gram];
  }
  return counts;
}

double BleuN(const TokenSequence& candidate, const std::vector<TokenSequence>& references, int n) {
  if (n < 1 || n > 4) throw Error(ErrorCode::kSchema, "BLEU order must be in 1..4");
  auto refs = NonEmpty(references);
  if (candidate.empty()) return 0.0;

  double log_sum = 0;
  for (int k = 1; k <= n; ++k) {
    auto cand_counts = CountNgrams(candidate, k);
    std::map<std::string, int> max_ref;
    for (const auto* r : refs) {
      for (const auto& [gram, c] : CountNgrams(*r, k)) max_ref[gram] = std::max(max_ref[gram], c);
    }
    long matched = 0, total = 0;
    for (const auto& [gram, c] : cand_counts) {
      total += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
  }

  const double c = static_cast<double>(candidate.size());
  std::size_t closest = refs.front()->size();
  for (const auto* r : refs) {
    auto diff = [&](std::size_t len) { return std::abs(static_cast<double>(len) - c); };
    if (diff(r->size()) < diff(closest) || (diff(r->size()) == diff(closest) && r->size() < closest)) {
      closest = r->size();
    }
  }
  const double r = static_cast<double>(closest);
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / n);
}

double RougeL(const TokenSequence& candidate, const std::vector<TokenSequence>& references) {
  constexpr double kBeta = 1.2;
  auto refs = NonEmpty(references);
  if (candidate.empty()) return 0.0;
  double best = 0;
  for (const auto* r : refs) {
    auto lcs = static_cast<double>(LcsLength(candidate, *r));
    if (lcs == 0) continue;
    double p = lcs / static_cast<double>(candidate.size());
    double rec = lcs / static_cast<double>(r->size());
    double f = (1 + kBeta * kBeta) * p * rec / (rec + kBeta * kBeta * p);
    best = std::max(best, f);
  }
  return best;
}

MeteorAlignment AlignForMeteor(const TokenSequence& candidate, const TokenSequence& reference) {
  return MeteorAligner(candidate, reference).Run();
}

double MeteorFromAlignment(const MeteorAlignment& a, std::size_t candidate_len,
                           std::size_t reference_len, const MeteorParams& params) {
  if (a.matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  double m = a.matches;
  double p = m / static_cast<double>(candidate_len);
  double r = m / static_cast<double>(reference_len);
  double f_mean = p * r / (params.alpha * p + (1 - params.alpha) * r);
  double penalty = params.gamma * std::pow(a.chunks / m, params.beta);
  return f_mean * (1 - penalty);
}

double Meteor(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              const MeteorParams& params) {
  auto refs = NonEmpty(references);
  double best = 0;
  for (const auto* r : refs) {
    auto a = AlignForMeteor(candidate, *r);
    best = std::max(best, MeteorFromAlignment(a, candidate.size(), r->size(), params));
  }
  return best;
}

CiderCorpus::CiderCorpus(const std::vector<std::vector<TokenSequence>>& reference_sets)
    : num_documents_(reference_sets.size()) {
  if (reference_sets.empty()) throw Error(ErrorCode::kEmptyCorpus, "CIDEr-D corpus is empty");
  for (const auto& set : reference_sets) {
    std::set<std::string> seen;
    for (const auto& ref : set) {
      for (int n = 1; n <= 4; ++n) {
        for (const auto& [gram, c] : CountNgrams(ref, n)) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) df_[gram] += 1.0;
  }
}

double CiderCorpus::DocumentFrequency(const std::string& ngram) const {
  auto it = df_.find(ngram);
  return it == df_.end() ? 0.0 : it->second;
}

double CiderCorpus::Idf(const std::string& ngram) const {
  // Add-one on the document count keeps a single-document corpus informative.
  return std::log(static_cast<double>(num_documents_) + 1.0) -
         std::log(std::max(1.0, DocumentFrequency(ngram)));
}

double CiderD(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              const CiderCorpus& corpus, const CiderParams& params) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferences, "no reference");
  double total = 0;
  for (const auto& ref : references) {
    const double delta = static_cast<double>(candidate.size()) - static_cast<double>(ref.size());
    const double length_penalty = std::exp(-(delta * delta) / (2 * params.sigma * params.sigma));
    double per_ref = 0;
    for (int n = 1; n <= 4; ++n) {
      double cand_norm = 0, ref_norm = 0;
      auto vc = TfIdf(candidate, n, corpus, &cand_norm);
      auto vr = TfIdf(ref, n, corpus, &ref_norm);
      if (cand_norm == 0 || ref_norm == 0) continue;
      double dot = 0;
      for (const auto& [gram, v] : vc) {
        auto it = vr.find(gram);
        if (it != vr.end()) dot += std::min(v, it->second) * it->second;
      }
      per_ref += dot / (cand_norm * ref_norm) * length_penalty;
    }
    total += per_ref / 4.0;
  }
  return params.scale * total / static_cast<double>(references.size());
}

MetricVector ScorePair(std::string_view candidate, const std::vector<std::string>& references,
                       const CiderCorpus& corpus, const ScorePairOptions& options) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferences, "no reference");
  TokenSequence cand = Tokenize(candidate);
  std::vector<TokenSequence> refs;
  for (const auto& r : references) refs.push_back(Tokenize(r));

  MetricVector m;
  m.bleu1 = BleuN(cand, refs, 1);
  m.bleu2 = BleuN(cand, refs, 2);
  m.bleu3 = BleuN(cand, refs, 3);
  m.bleu4 = BleuN(cand, refs, 4);
  m.rouge_l = RougeL(cand, refs);
  m.meteor = Meteor(cand, refs);
  std::vector<TokenSequence> nonempty;
  for (const auto& r : refs) {
    if (!r.empty()) nonempty.push_back(r);
  }
  m.cider_d = CiderD(cand, nonempty, corpus);

  auto external = [&](const char* metric, const std::optional<double>& given) -> std::optional<double> {
    if (given) return given;
    if (!options.external) return std::nullopt;
    try {
      double v = options.external->Score(metric, candidate, references);
      if (std::isfinite(v) && v >= 0.0 && v <= 1.0) return v;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kExternalScorerUnavailable) throw;
    }
    m.external_warning = true;
    return std::nullopt;
  };
  m.spice = external("spice", options.precomputed_spice);
  m.fense = external("fense", options.precomputed_fense);
  if (m.spice) m.spider = (*m.spice + m.cider_d) / 2.0;
  return m;
}

}  // namespace editeval
