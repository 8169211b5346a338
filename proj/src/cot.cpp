#include "editeval/cot.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "editeval/error.hpp"
#include "editeval/fsutil.hpp"
#include "editeval/parallel.hpp"
#include "editeval/text.hpp"

namespace editeval {
namespace {

constexpr std::string_view kPrevPrefix = "prev_response_";

// Calls visit(name, begin, end) for every {placeholder} in a template.
template <typename Visit>
void ForEachPlaceholder(std::string_view tmpl, Visit visit) {
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string_view::npos) {
    auto close = tmpl.find('}', pos);
    if (close == std::string_view::npos) return;
    std::string_view name = tmpl.substr(pos + 1, close - pos - 1);
    bool identifier = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
    if (identifier) {
      visit(name, pos, close + 1);
      pos = close + 1;
    } else {
      ++pos;
    }
  }
}

std::optional<int> PrevResponseIndex(std::string_view name) {
  if (name.substr(0, kPrevPrefix.size()) != kPrevPrefix) return std::nullopt;
  auto digits = name.substr(kPrevPrefix.size());
  if (digits.size() != 1 || digits[0] < '1' || digits[0] > '7') return std::nullopt;
  return digits[0] - '0';
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string CleanSection(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto lead = [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '*'; };
  auto tail = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '#';
  };
  while (b < e && lead(s[b])) ++b;
  while (e > b && tail(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

double MillisSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void PromptTemplateSet::Validate() const {
  for (int step = 1; step <= kCotSteps; ++step) {
    const auto& tmpl = steps[step - 1];
    if (Trim(tmpl).empty()) {
      throw Error(ErrorCode::kInvalidTemplate, "step " + std::to_string(step) + " is empty");
    }
    ForEachPlaceholder(tmpl, [&](std::string_view name, std::size_t, std::size_t) {
      if (name == "caption_orig" || name == "instruction" || name == "expected_difference" ||
          name == "expected_commonality") {
        return;
      }
      auto k = PrevResponseIndex(name);
      if (!k) {
        throw Error(ErrorCode::kInvalidTemplate,
                    "step " + std::to_string(step) + ": unknown placeholder {" + std::string(name) + "}");
      }
      if (*k >= step) {
        throw Error(ErrorCode::kInvalidTemplate,
                    "step " + std::to_string(step) + " refers to a later response {" + std::string(name) + "}");
      }
    });
  }
  for (auto sentinel : {kEditingSentinel, kPreservationSentinel, kOverallSentinel}) {
    if (steps[kCotSteps - 1].find(sentinel) == std::string::npos) {
      throw Error(ErrorCode::kInvalidTemplate,
                  "step 7 must request the '" + std::string(sentinel) + "' header");
    }
  }
}

PromptTemplateSet PromptTemplateSet::Defaults() {
  PromptTemplateSet t;
  t.system =
      "You are an expert evaluator of audio editing. You will be given an original audio clip "
      "and its edited version and will judge how well the edit was carried out.";
  t.steps = {
      "The first audio is the original clip and the second audio is the edited clip. Describe "
      "the difference between the two clips: which sound events were added, removed or replaced.",
      "Describe the commonality between the two clips: which sound content is preserved in both.",
      "The original audio is described as: \"{caption_orig}\". The editing instruction was: "
      "\"{instruction}\". The expected difference between the original and the edited audio "
      "is: \"{expected_difference}\". Repeat the expected difference.",
      "The expected commonality between the original and the edited audio is: "
      "\"{expected_commonality}\". Repeat the expected commonality.",
      "Compare the difference you described (\"{prev_response_1}\") with the expected "
      "difference (\"{expected_difference}\"). Evaluate the editing effectiveness: were the "
      "requested changes applied accurately and completely?",
      "Compare the commonality you described (\"{prev_response_2}\") with the expected "
      "commonality (\"{expected_commonality}\"). Evaluate the preservation: was the unedited "
      "content and character of the original audio kept intact?",
      "Combine your editing evaluation and your preservation evaluation into a comprehensive "
      "assessment with a detailed analysis and suggestions for improvement. Answer with "
      "exactly these three headers, each starting a new line:\n"
      "EDITING EVALUATION: <evaluation of the editing effectiveness>\n"
      "PRESERVATION EVALUATION: <evaluation of the preservation>\n"
      "OVERALL ASSESSMENT: <overall quality, analysis and suggestions>",
  };
  return t;
}

PromptTemplateSet PromptTemplateSet::FromJson(const Json& j) {
  PromptTemplateSet t;
  try {
    t.system = j.value("system", std::string());
    const Json& steps = j.at("steps");
    if (!steps.is_array() || steps.size() != kCotSteps) {
      throw Error(ErrorCode::kInvalidTemplate, "template file needs exactly 7 steps");
    }
    for (int i = 0; i < kCotSteps; ++i) t.steps[i] = steps[i].get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidTemplate, e.what());
  }
  t.Validate();
  return t;
}

PromptTemplateSet PromptTemplateSet::Load(const std::filesystem::path& path) {
  Json j = Json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "template file is not JSON: " + path.string());
  return FromJson(j);
}

Json PromptTemplateSet::ToJson() const {
  return Json{{"system", system}, {"steps", steps}};
}

std::string RenderTemplate(std::string_view tmpl, const PromptContext& ctx) {
  std::string out;
  std::size_t last = 0;
  ForEachPlaceholder(tmpl, [&](std::string_view name, std::size_t begin, std::size_t end) {
    std::optional<std::string> value;
    if (name == "caption_orig") value = ctx.caption_orig;
    else if (name == "instruction") value = ctx.instruction;
    else if (name == "expected_difference") value = ctx.expected_difference;
    else if (name == "expected_commonality") value = ctx.expected_commonality;
    else if (auto k = PrevResponseIndex(name)) {
      value = static_cast<std::size_t>(*k) <= ctx.previous_responses.size()
                  ? ctx.previous_responses[*k - 1]
                  : "(response to step " + std::to_string(*k) + ")";
    }
    if (!value) return;
    out.append(tmpl.substr(last, begin - last));
    out += *value;
    last = end;
  });
  out.append(tmpl.substr(last));
  return out;
}

Assessment ParseAssessment(std::string_view text) {
  const std::string upper = Upper(text);
  struct Found {
    std::string_view sentinel;
    std::size_t pos;
  };
  std::vector<Found> found;
  for (auto sentinel : {kEditingSentinel, kPreservationSentinel, kOverallSentinel}) {
    auto pos = upper.find(sentinel);
    if (pos == std::string::npos) {
      throw Error(ErrorCode::kMalformedResponse, "missing sentinel '" + std::string(sentinel) + "'");
    }
    found.push_back({sentinel, pos});
  }
  std::vector<Found> ordered = found;
  std::sort(ordered.begin(), ordered.end(), [](auto& a, auto& b) { return a.pos < b.pos; });

  auto section = [&](std::string_view sentinel) {
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (ordered[i].sentinel != sentinel) continue;
      std::size_t begin = ordered[i].pos + sentinel.size();
      std::size_t end = i + 1 < ordered.size() ? ordered[i + 1].pos : text.size();
      std::string s = CleanSection(text.substr(begin, end - begin));
      if (s.empty()) {
        throw Error(ErrorCode::kMalformedResponse, "empty section '" + std::string(sentinel) + "'");
      }
      return s;
    }
    return std::string();
  };
  Assessment a;
  a.e_editing = section(kEditingSentinel);
  a.e_preservation = section(kPreservationSentinel);
  a.e_overall = section(kOverallSentinel);
  return a;
}

const char* CotStatusName(CotStatus s) {
  switch (s) {
    case CotStatus::kComplete: return "complete";
    case CotStatus::kMalformed: return "malformed";
    case CotStatus::kBackendError: return "backend_error";
  }
  return "";
}

std::optional<std::string> CotTranscript::Response(int step) const {
  for (const auto& s : steps) {
    if (s.index == step) return s.response.text;
  }
  return std::nullopt;
}

Json TranscriptToJson(const CotTranscript& t, bool include_latency) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json js{{"step", s.index}, {"prompt", ChatTurnToJson(s.prompt)},
            {"response", ChatTurnToJson(s.response)}};
    if (include_latency) js["latency_ms"] = s.latency_ms;
    steps.push_back(std::move(js));
  }
  Json j{{"sample_id", t.sample_id}, {"status", CotStatusName(t.status)},
         {"system", t.system_prompt}, {"steps", steps}};
  if (t.assessment) {
    j["assessment"] = {{"e_overall", t.assessment->e_overall},
                       {"e_editing", t.assessment->e_editing},
                       {"e_preservation", t.assessment->e_preservation}};
  } else {
    j["assessment"] = nullptr;
  }
  j["error"] = t.error;
  j["raw_final_text"] = t.raw_final_text;
  return j;
}

CotTranscript TranscriptFromJson(const Json& j) {
  CotTranscript t;
  try {
    t.sample_id = j.at("sample_id").get<std::string>();
    std::string status = j.at("status").get<std::string>();
    if (status == "complete") t.status = CotStatus::kComplete;
    else if (status == "malformed") t.status = CotStatus::kMalformed;
    else if (status == "backend_error") t.status = CotStatus::kBackendError;
    else throw Error(ErrorCode::kSchema, "unknown transcript status '" + status + "'");
    t.system_prompt = j.value("system", std::string());
    for (const auto& s : j.at("steps")) {
      CotStep step;
      step.index = s.at("step").get<int>();
      step.prompt = ChatTurnFromJson(s.at("prompt"));
      step.response = ChatTurnFromJson(s.at("response"));
      step.latency_ms = s.value("latency_ms", 0.0);
      t.steps.push_back(std::move(step));
    }
    if (auto a = j.find("assessment"); a != j.end() && !a->is_null()) {
      t.assessment = Assessment{a->at("e_overall").get<std::string>(),
                                a->at("e_editing").get<std::string>(),
                                a->at("e_preservation").get<std::string>()};
    }
    t.error = j.value("error", std::string());
    t.raw_final_text = j.value("raw_final_text", std::string());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad transcript: ") + e.what());
  }
  return t;
}

std::filesystem::path TranscriptPath(const std::filesystem::path& dir, std::string_view sample_id) {
  return dir / (SafeFileStem(sample_id) + ".json");
}

CotTranscript LoadTranscript(const std::filesystem::path& path) {
  Json j = Json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "transcript is not JSON: " + path.string());
  return TranscriptFromJson(j);
}

std::pair<std::string, std::string> ResolveExpectedCaptions(const EditingSample& sample) {
  EditingSample s = sample;
  try {
    FillDerivedTargets(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMissingTargets, "sample '" + sample.id + "': " + e.what());
  }
  if (!s.expected_commonality) {
    throw Error(ErrorCode::kMissingTargets,
                "sample '" + sample.id + "' has no expected_commonality and no operation");
  }
  return {*s.expected_difference, *s.expected_commonality};
}

CotTranscript RunCot(const EditingSample& sample, const BackendConfig& config, Transport& transport,
                     const PromptTemplateSet& templates,
                     const std::optional<std::filesystem::path>& out_dir) {
  if (sample.audio_orig.uri.empty() || sample.audio_edit.uri.empty()) {
    throw Error(ErrorCode::kSchema, "sample '" + sample.id + "' lacks audio references");
  }
  if (Trim(sample.caption_orig).empty() || Trim(sample.instruction).empty()) {
    throw Error(ErrorCode::kSchema, "sample '" + sample.id + "' lacks caption_orig or instruction");
  }
  auto [expected_difference, expected_commonality] = ResolveExpectedCaptions(sample);

  CotTranscript t;
  t.sample_id = sample.id;
  t.system_prompt = templates.system;
  PromptContext ctx{sample.caption_orig, sample.instruction, expected_difference,
                    expected_commonality, {}};

  std::vector<ChatTurn> conversation;
  if (!templates.system.empty()) conversation.push_back({Role::kSystem, templates.system, {}});

  t.status = CotStatus::kComplete;
  for (int step = 1; step <= kCotSteps; ++step) {
    ChatTurn prompt{Role::kUser, RenderTemplate(templates.steps[step - 1], ctx), {}};
    if (step <= 2) prompt.audio = {sample.audio_orig, sample.audio_edit};
    conversation.push_back(prompt);

    auto start = std::chrono::steady_clock::now();
    ChatTurn response;
    try {
      response = QueryBackend(config, transport, conversation);
    } catch (const Error& e) {
      t.status = CotStatus::kBackendError;
      t.error = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    t.steps.push_back(CotStep{step, prompt, response, MillisSince(start)});
    conversation.push_back(response);
    ctx.previous_responses.push_back(response.text);
  }

  if (t.status == CotStatus::kComplete) {
    const std::string& final_text = t.steps.back().response.text;
    try {
      t.assessment = ParseAssessment(final_text);
    } catch (const Error& e) {
      t.status = CotStatus::kMalformed;
      t.error = e.what();
      t.raw_final_text = final_text;
    }
  }

  if (out_dir) {
    WriteFileAtomic(TranscriptPath(*out_dir, t.sample_id), TranscriptToJson(t).dump(2) + "\n");
  }
  return t;
}

CotBatchResult RunCotBatch(const std::vector<EditingSample>& samples, const BackendConfig& config,
                           Transport& transport, const PromptTemplateSet& templates,
                           const std::optional<std::filesystem::path>& out_dir, int parallelism) {
  templates.Validate();
  std::vector<std::optional<CotTranscript>> results(samples.size());
  std::vector<std::string> reasons(samples.size());
  ParallelFor(samples.size(), parallelism, [&](std::size_t i) {
    try {
      results[i] = RunCot(samples[i], config, transport, templates, out_dir);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIo) throw;
      reasons[i] = e.what();
    }
  });
  CotBatchResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (results[i]) {
      out.transcripts.push_back(std::move(*results[i]));
    } else {
      out.rejected.emplace_back(samples[i].id, reasons[i]);
    }
  }
  return out;
}

}  // namespace editeval
