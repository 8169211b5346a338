#include "editeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "editeval/error.hpp"
#include "editeval/text.hpp"

namespace editeval {
namespace {

constexpr std::array<std::string_view, 6> kClauseDelimiters = {
    " followed by ", " while ", " then ", " and ", ",", ";"};

bool Present(const std::optional<std::string>& s) {
  return s.has_value() && !Trim(*s).empty();
}

std::string StripClauseEdges(std::string_view clause) {
  std::size_t b = 0, e = clause.size();
  auto junk = [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isspace(u) || (std::ispunct(u) && c != '\'');
  };
  while (b < e && junk(clause[b])) ++b;
  while (e > b && junk(clause[e - 1])) --e;
  return std::string(clause.substr(b, e - b));
}

std::vector<std::string> SortedTokens(std::string_view clause) {
  std::vector<std::string> t = Tokenize(clause).tokens();
  std::sort(t.begin(), t.end());
  return t;
}

std::string RequireString(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw Error(ErrorCode::kSchema, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kSchema, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kSchema, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

AudioRef AudioFromJson(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw Error(ErrorCode::kSchema, std::string("missing field '") + key + "'");
  }
  AudioRef ref;
  if (it->is_string()) {
    ref.uri = it->get<std::string>();
  } else if (it->is_object()) {
    ref.uri = RequireString(*it, "uri");
    if (auto d = it->find("duration_s"); d != it->end() && !d->is_null()) {
      if (!d->is_number() || d->get<double>() < 0) {
        throw Error(ErrorCode::kSchema, std::string(key) + ".duration_s must be >= 0");
      }
      ref.duration_s = d->get<double>();
    }
  } else {
    throw Error(ErrorCode::kSchema, std::string("field '") + key + "' must be a string or object");
  }
  if (ref.uri.empty()) throw Error(ErrorCode::kSchema, std::string(key) + ".uri is empty");
  return ref;
}

Json AudioToJson(const AudioRef& ref) {
  if (!ref.duration_s) return ref.uri;
  return Json{{"uri", ref.uri}, {"duration_s", *ref.duration_s}};
}

double Rating(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::kSchema, std::string("missing field 'subjective.") + key + "'");
  }
  double v = it->get<double>();
  if (!(v >= 1.0 && v <= 5.0)) {
    throw Error(ErrorCode::kSchema, std::string("subjective.") + key + " outside [1,5]");
  }
  return v;
}

const std::set<std::string>& KnownKeys() {
  static const std::set<std::string> keys = {
      "id", "system_id", "audio_orig", "audio_edit", "caption_orig", "instruction",
      "caption_edit", "operation", "expected_difference", "expected_commonality",
      "subjective", "objective"};
  return keys;
}

}  // namespace

const char* EditOperationName(EditOperation op) {
  switch (op) {
    case EditOperation::kAddition: return "addition";
    case EditOperation::kDeletion: return "deletion";
    case EditOperation::kReplacement: return "replacement";
  }
  return "";
}

std::optional<EditOperation> ParseEditOperation(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "addition") return EditOperation::kAddition;
  if (lower == "deletion") return EditOperation::kDeletion;
  if (lower == "replacement") return EditOperation::kReplacement;
  return std::nullopt;
}

std::vector<std::string> SplitClauses(std::string_view caption) {
  std::string lower(caption);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::vector<std::string> clauses;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < lower.size()) {
    std::size_t matched = 0;
    for (auto delim : kClauseDelimiters) {
      if (std::string_view(lower).substr(i, delim.size()) == delim) {
        matched = delim.size();
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    std::string clause = StripClauseEdges(caption.substr(start, i - start));
    if (!clause.empty()) clauses.push_back(std::move(clause));
    i += matched;
    start = i;
  }
  std::string tail = StripClauseEdges(caption.substr(start));
  if (!tail.empty()) clauses.push_back(std::move(tail));
  return clauses;
}

std::string NormalizeClause(std::string_view clause) { return Tokenize(clause).Join(); }

DerivedTargets DeriveTargets(std::string_view caption_orig,
                             const std::optional<std::string>& caption_edit,
                             std::string_view instruction, EditOperation op) {
  DerivedTargets out;
  out.expected_difference = std::string(instruction);
  bool has_orig = !Trim(caption_orig).empty();
  bool has_edit = Present(caption_edit);

  switch (op) {
    case EditOperation::kAddition:
      if (!has_orig) throw Error(ErrorCode::kMissingCaption, "addition needs caption_orig");
      out.expected_commonality = std::string(caption_orig);
      break;
    case EditOperation::kDeletion:
      if (!has_edit) throw Error(ErrorCode::kMissingCaption, "deletion needs caption_edit");
      out.expected_commonality = *caption_edit;
      break;
    case EditOperation::kReplacement: {
      if (!has_orig) throw Error(ErrorCode::kMissingCaption, "replacement needs caption_orig");
      if (!has_edit) throw Error(ErrorCode::kMissingCaption, "replacement needs caption_edit");
      std::vector<std::vector<std::string>> edit_keys;
      for (const auto& c : SplitClauses(*caption_edit)) {
        auto key = SortedTokens(c);
        if (!key.empty()) edit_keys.push_back(std::move(key));
      }
      std::vector<bool> used(edit_keys.size(), false);
      std::string joined;
      for (const auto& clause : SplitClauses(caption_orig)) {
        auto key = SortedTokens(clause);
        if (key.empty()) continue;
        for (std::size_t k = 0; k < edit_keys.size(); ++k) {
          if (!used[k] && edit_keys[k] == key) {
            used[k] = true;
            if (!joined.empty()) joined += " and ";
            joined += clause;
            break;
          }
        }
      }
      out.empty_intersection = joined.empty();
      out.expected_commonality = std::move(joined);
      break;
    }
  }
  return out;
}

bool FillDerivedTargets(EditingSample& sample) {
  if (!sample.expected_difference) sample.expected_difference = sample.instruction;
  if (sample.expected_commonality || !sample.operation) return false;
  DerivedTargets t = DeriveTargets(sample.caption_orig, sample.caption_edit, sample.instruction,
                                   *sample.operation);
  sample.expected_commonality = t.expected_commonality;
  return t.empty_intersection;
}

EditingSample SampleFromJson(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "record is not a JSON object");
  EditingSample s;
  s.id = RequireString(j, "id");
  if (s.id.empty()) throw Error(ErrorCode::kSchema, "field 'id' is empty");
  s.system_id = RequireString(j, "system_id");
  s.audio_orig = AudioFromJson(j, "audio_orig");
  s.audio_edit = AudioFromJson(j, "audio_edit");
  s.caption_orig = RequireString(j, "caption_orig");
  s.instruction = RequireString(j, "instruction");
  s.caption_edit = OptionalString(j, "caption_edit");
  if (auto op = OptionalString(j, "operation")) {
    s.operation = ParseEditOperation(*op);
    if (!s.operation) throw Error(ErrorCode::kSchema, "unknown operation '" + *op + "'");
  }
  s.expected_difference = OptionalString(j, "expected_difference");
  s.expected_commonality = OptionalString(j, "expected_commonality");
  if (auto it = j.find("subjective"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(ErrorCode::kSchema, "field 'subjective' must be an object");
    s.subjective = SubjectiveRatings{Rating(*it, "quality"), Rating(*it, "relevance"),
                                     Rating(*it, "faithfulness")};
  }
  if (auto it = j.find("objective"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(ErrorCode::kSchema, "field 'objective' must be an object");
    for (const auto& [name, value] : it->items()) {
      if (!value.is_number()) {
        throw Error(ErrorCode::kSchema, "objective." + name + " must be a number");
      }
      s.objective[name] = value.get<double>();
    }
  }
  if (s.operation == EditOperation::kReplacement && !s.caption_edit) {
    throw Error(ErrorCode::kSchema, "missing field 'caption_edit' (required for replacement)");
  }
  for (const auto& [key, value] : j.items()) {
    if (!KnownKeys().count(key)) s.extras[key] = value;
  }
  return s;
}

Json SampleToJson(const EditingSample& s) {
  Json j;
  j["id"] = s.id;
  j["system_id"] = s.system_id;
  j["audio_orig"] = AudioToJson(s.audio_orig);
  j["audio_edit"] = AudioToJson(s.audio_edit);
  j["caption_orig"] = s.caption_orig;
  j["instruction"] = s.instruction;
  if (s.caption_edit) j["caption_edit"] = *s.caption_edit;
  if (s.operation) j["operation"] = EditOperationName(*s.operation);
  if (s.expected_difference) j["expected_difference"] = *s.expected_difference;
  if (s.expected_commonality) j["expected_commonality"] = *s.expected_commonality;
  if (s.subjective) {
    j["subjective"] = {{"quality", s.subjective->quality},
                       {"relevance", s.subjective->relevance},
                       {"faithfulness", s.subjective->faithfulness}};
  }
  if (!s.objective.empty()) {
    Json obj = Json::object();
    for (const auto& [k, v] : s.objective) obj[k] = v;
    j["objective"] = obj;
  }
  for (const auto& [k, v] : s.extras.items()) j[k] = v;
  return j;
}

std::vector<EditingSample> ParseManifest(std::string_view text) {
  std::vector<EditingSample> samples;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    EditingSample s;
    try {
      s = SampleFromJson(j);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<EditingSample> LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseManifest(buf.str());
}

std::string EmitManifest(const std::vector<EditingSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += SampleToJson(s).dump();
    out.push_back('\n');
  }
  return out;
}

DatasetSplit SplitDataset(const std::vector<EditingSample>& samples,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0) || !std::isfinite(r)) throw Error(ErrorCode::kBadRatios, "ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kBadRatios, "ratios must sum to 1");

  const std::size_t n = samples.size();
  // The 1e-9 slack keeps e.g. 0.29 * 100 from flooring to 28.
  auto floor_count = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  std::size_t n_val = floor_count(ratios[1]);
  std::size_t n_test = floor_count(ratios[2]);
  std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[order[i]];
    if (i < n_train) {
      split.train.push_back(s);
    } else if (i < n_train + n_val) {
      split.val.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

}  // namespace editeval
