#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editeval/corpus.hpp"
#include "editeval/cot.hpp"

namespace editeval {

enum class TuneTask { kDifferenceCaption, kCommonalityCaption, kCotInstruction };

const char* TuneTaskName(TuneTask t);
std::optional<TuneTask> ParseTuneTask(std::string_view name);

struct TuneRecord {
  std::string sample_id;
  TuneTask task = TuneTask::kDifferenceCaption;
  AudioRef audio_orig;
  AudioRef audio_edit;
  std::string prompt;
  std::string target;
  // The prompt carries the sample's expected captions, so the target is
  // exposed to the model; such records take part in target shuffling.
  bool reference_in_prompt = false;

  friend bool operator==(const TuneRecord&, const TuneRecord&) = default;
};

Json TuneRecordToJson(const TuneRecord& r);
TuneRecord TuneRecordFromJson(const Json& j);
std::string EmitTuneRecords(const std::vector<TuneRecord>& records);
std::vector<TuneRecord> ParseTuneRecords(std::string_view jsonl);

struct CaptionPromptSet {
  // Placeholders as in PromptTemplateSet (no {prev_response_k}).
  std::string difference;
  std::string commonality;

  // Prompts that give the textual context next to the audio pair.
  static CaptionPromptSet WithTextContext();
  // Audio-only prompts: nothing to leak, nothing to shuffle.
  static CaptionPromptSet AudioOnly();
};

// Two records per sample (difference, then commonality), so every window of
// two consecutive records holds both tasks. Throws Error(kMissingTargets)
// naming the first sample without derived targets.
std::vector<TuneRecord> BuildCaptionRecords(
    const std::vector<EditingSample>& samples,
    const CaptionPromptSet& prompts = CaptionPromptSet::WithTextContext());

struct ShuffleOptions {
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  // Shuffle difference and commonality targets together instead of
  // separately per task.
  bool cross_task = false;
};

// Splits records into consecutive batches and, inside each batch, permutes
// the targets of reference_in_prompt records uniformly at random (per task
// unless cross_task). Inputs and record order stay put.
std::vector<TuneRecord> ShuffleTargetsWithinBatch(std::vector<TuneRecord> records,
                                                  const ShuffleOptions& options);

inline constexpr std::size_t kOneShotSetSize = 40;

struct OneShotResult {
  std::vector<TuneRecord> records;
  bool truncated = false;
};

// One cot_instruction record per (sample, gold assessment); the prompt is
// the full seven-step instruction. Only the first 40 pairs are kept.
// Throws Error(kEmptyInput) for an empty list.
OneShotResult BuildOneShotSet(const std::vector<std::pair<EditingSample, std::string>>& assessments,
                              const PromptTemplateSet& templates = PromptTemplateSet::Defaults());

}  // namespace editeval
