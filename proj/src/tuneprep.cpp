#include "editeval/tuneprep.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "editeval/error.hpp"
#include "editeval/fsutil.hpp"

namespace editeval {
namespace {

Json AudioJson(const AudioRef& a) {
  if (!a.duration_s) return a.uri;
  return Json{{"uri", a.uri}, {"duration_s", *a.duration_s}};
}

AudioRef AudioFrom(const Json& j) {
  if (j.is_string()) return AudioRef{j.get<std::string>(), std::nullopt};
  AudioRef a{j.at("uri").get<std::string>(), std::nullopt};
  if (auto d = j.find("duration_s"); d != j.end() && !d->is_null()) a.duration_s = d->get<double>();
  return a;
}

bool Contains(const std::string& haystack, const std::string& needle) {
  return !needle.empty() && haystack.find(needle) != std::string::npos;
}

}  // namespace

const char* TuneTaskName(TuneTask t) {
  switch (t) {
    case TuneTask::kDifferenceCaption: return "difference_caption";
    case TuneTask::kCommonalityCaption: return "commonality_caption";
    case TuneTask::kCotInstruction: return "cot_instruction";
  }
  return "";
}

std::optional<TuneTask> ParseTuneTask(std::string_view name) {
  if (name == "difference_caption") return TuneTask::kDifferenceCaption;
  if (name == "commonality_caption") return TuneTask::kCommonalityCaption;
  if (name == "cot_instruction") return TuneTask::kCotInstruction;
  return std::nullopt;
}

Json TuneRecordToJson(const TuneRecord& r) {
  return Json{{"id", r.sample_id},
              {"task", TuneTaskName(r.task)},
              {"audio", Json::array({AudioJson(r.audio_orig), AudioJson(r.audio_edit)})},
              {"prompt", r.prompt},
              {"target", r.target},
              {"reference_in_prompt", r.reference_in_prompt}};
}

TuneRecord TuneRecordFromJson(const Json& j) {
  TuneRecord r;
  try {
    r.sample_id = j.value("id", std::string());
    auto task = ParseTuneTask(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorCode::kSchema, "unknown task");
    r.task = *task;
    const Json& audio = j.at("audio");
    if (!audio.is_array() || audio.size() != 2) {
      throw Error(ErrorCode::kSchema, "audio must list exactly two entries");
    }
    r.audio_orig = AudioFrom(audio[0]);
    r.audio_edit = AudioFrom(audio[1]);
    r.prompt = j.at("prompt").get<std::string>();
    r.target = j.at("target").get<std::string>();
    r.reference_in_prompt = j.value("reference_in_prompt", false);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad tune record: ") + e.what());
  }
  if (r.target.empty()) throw Error(ErrorCode::kSchema, "tune record target is empty");
  return r;
}

std::string EmitTuneRecords(const std::vector<TuneRecord>& records) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(TuneRecordToJson(r));
  return EmitJsonl(rows);
}

std::vector<TuneRecord> ParseTuneRecords(std::string_view jsonl) {
  std::vector<TuneRecord> out;
  for (const auto& j : ParseJsonl(jsonl)) out.push_back(TuneRecordFromJson(j));
  return out;
}

CaptionPromptSet CaptionPromptSet::WithTextContext() {
  return CaptionPromptSet{
      "The first audio is the original clip, described as \"{caption_orig}\". The second audio "
      "was produced from it with the instruction \"{instruction}\". Describe the difference "
      "between the two clips.",
      "The first audio is the original clip, described as \"{caption_orig}\". The second audio "
      "was produced from it with the instruction \"{instruction}\". Describe the content the "
      "two clips have in common."};
}

CaptionPromptSet CaptionPromptSet::AudioOnly() {
  return CaptionPromptSet{
      "The first audio is the original clip and the second audio is its edited version. "
      "Describe the difference between the two clips.",
      "The first audio is the original clip and the second audio is its edited version. "
      "Describe the content the two clips have in common."};
}

std::vector<TuneRecord> BuildCaptionRecords(const std::vector<EditingSample>& samples,
                                            const CaptionPromptSet& prompts) {
  std::vector<TuneRecord> out;
  out.reserve(samples.size() * 2);
  for (const auto& s : samples) {
    if (!s.expected_difference || s.expected_difference->empty() || !s.expected_commonality ||
        s.expected_commonality->empty()) {
      throw Error(ErrorCode::kMissingTargets, "sample '" + s.id + "' lacks derived targets");
    }
    PromptContext ctx{s.caption_orig, s.instruction, *s.expected_difference,
                      *s.expected_commonality, {}};
    auto make = [&](TuneTask task, const std::string& tmpl, const std::string& target) {
      TuneRecord r{s.id, task, s.audio_orig, s.audio_edit, RenderTemplate(tmpl, ctx), target, false};
      r.reference_in_prompt = Contains(r.prompt, *s.expected_difference) ||
                              Contains(r.prompt, *s.expected_commonality);
      return r;
    };
    out.push_back(make(TuneTask::kDifferenceCaption, prompts.difference, *s.expected_difference));
    out.push_back(make(TuneTask::kCommonalityCaption, prompts.commonality, *s.expected_commonality));
  }
  return out;
}

std::vector<TuneRecord> ShuffleTargetsWithinBatch(std::vector<TuneRecord> records,
                                                  const ShuffleOptions& options) {
  if (options.batch_size == 0) throw Error(ErrorCode::kSchema, "batch_size must be >= 1");
  std::mt19937_64 rng(options.seed);
  for (std::size_t start = 0; start < records.size(); start += options.batch_size) {
    const std::size_t end = std::min(records.size(), start + options.batch_size);
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = start; i < end; ++i) {
      if (!records[i].reference_in_prompt) continue;
      int key = options.cross_task ? 0 : static_cast<int>(records[i].task);
      groups[key].push_back(i);
    }
    for (auto& [key, idx] : groups) {
      std::vector<std::string> targets;
      targets.reserve(idx.size());
      for (auto i : idx) targets.push_back(std::move(records[i].target));
      std::shuffle(targets.begin(), targets.end(), rng);
      for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].target = std::move(targets[k]);
    }
  }
  return records;
}

OneShotResult BuildOneShotSet(const std::vector<std::pair<EditingSample, std::string>>& assessments,
                              const PromptTemplateSet& templates) {
  if (assessments.empty()) throw Error(ErrorCode::kEmptyInput, "no gold assessments");
  templates.Validate();
  OneShotResult out;
  out.truncated = assessments.size() > kOneShotSetSize;
  const std::size_t n = std::min(assessments.size(), kOneShotSetSize);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [sample, gold] = assessments[i];
    if (Trim(gold).empty()) {
      throw Error(ErrorCode::kSchema, "sample '" + sample.id + "' has an empty gold assessment");
    }
    auto [diff, common] = ResolveExpectedCaptions(sample);
    PromptContext ctx{sample.caption_orig, sample.instruction, diff, common, {}};
    std::string prompt;
    if (!templates.system.empty()) prompt = templates.system + "\n\n";
    for (int step = 1; step <= kCotSteps; ++step) {
      prompt += "Step " + std::to_string(step) + ": " +
                RenderTemplate(templates.steps[step - 1], ctx) + "\n";
    }
    TuneRecord r{sample.id, TuneTask::kCotInstruction, sample.audio_orig, sample.audio_edit,
                 std::move(prompt), gold, false};
    r.reference_in_prompt = Contains(r.prompt, diff) || Contains(r.prompt, common);
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace editeval
