#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editeval/backend.hpp"
#include "editeval/corpus.hpp"

namespace editeval {

inline constexpr int kCotSteps = 7;

inline constexpr std::string_view kEditingSentinel = "EDITING EVALUATION:";
inline constexpr std::string_view kPreservationSentinel = "PRESERVATION EVALUATION:";
inline constexpr std::string_view kOverallSentinel = "OVERALL ASSESSMENT:";

// Prompts for the seven steps:
//   1 describe the difference (both audios attached)
//   2 describe the commonality (both audios attached)
//   3 restate the expected difference
//   4 restate the expected commonality
//   5 compare differences -> editing effectiveness
//   6 compare commonalities -> preservation
//   7 synthesize, answering under the three sentinel headers
// Placeholders: {caption_orig} {instruction} {expected_difference}
// {expected_commonality} {prev_response_k} (k < current step).
struct PromptTemplateSet {
  std::string system;
  std::array<std::string, kCotSteps> steps;

  // Throws Error(kInvalidTemplate) for unknown placeholders, forward
  // references, or a step 7 that does not ask for all three sentinels.
  void Validate() const;

  static PromptTemplateSet Defaults();
  static PromptTemplateSet FromJson(const Json& j);
  static PromptTemplateSet Load(const std::filesystem::path& path);
  Json ToJson() const;
};

struct PromptContext {
  std::string caption_orig;
  std::string instruction;
  std::string expected_difference;
  std::string expected_commonality;
  std::vector<std::string> previous_responses;  // responses of steps 1..k-1
};

// Substitutes placeholders; a {prev_response_k} without a response renders
// as "(response to step k)".
std::string RenderTemplate(std::string_view tmpl, const PromptContext& ctx);

struct Assessment {
  std::string e_overall;
  std::string e_editing;
  std::string e_preservation;

  friend bool operator==(const Assessment&, const Assessment&) = default;
};

// Sections are located by sentinel name, in any order. Throws
// Error(kMalformedResponse) naming the first missing or empty section.
Assessment ParseAssessment(std::string_view step7_text);

enum class CotStatus { kComplete, kMalformed, kBackendError };

const char* CotStatusName(CotStatus s);

struct CotStep {
  int index = 0;
  ChatTurn prompt;
  ChatTurn response;
  double latency_ms = 0;
};

struct CotTranscript {
  std::string sample_id;
  std::string system_prompt;
  std::vector<CotStep> steps;
  std::optional<Assessment> assessment;
  CotStatus status = CotStatus::kBackendError;
  std::string error;
  // Step-7 text kept verbatim when it could not be parsed.
  std::string raw_final_text;

  // Response text of a step (1-based), if that step ran.
  std::optional<std::string> Response(int step) const;
};

Json TranscriptToJson(const CotTranscript& t, bool include_latency = true);
CotTranscript TranscriptFromJson(const Json& j);
std::filesystem::path TranscriptPath(const std::filesystem::path& dir, std::string_view sample_id);
CotTranscript LoadTranscript(const std::filesystem::path& path);

// Expected captions of a sample, derived when the manifest leaves them out.
// Throws Error(kMissingTargets) when the commonality cannot be derived.
std::pair<std::string, std::string> ResolveExpectedCaptions(const EditingSample& sample);

// Runs the seven steps in one conversation. Backend failures and unparsable
// final answers are reported through the transcript status, never thrown.
// When out_dir is given the transcript is written there before returning.
CotTranscript RunCot(const EditingSample& sample, const BackendConfig& config, Transport& transport,
                     const PromptTemplateSet& templates,
                     const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct CotBatchResult {
  std::vector<CotTranscript> transcripts;  // manifest order, accepted samples only
  std::vector<std::pair<std::string, std::string>> rejected;  // (sample id, reason)
};

CotBatchResult RunCotBatch(const std::vector<EditingSample>& samples, const BackendConfig& config,
                           Transport& transport, const PromptTemplateSet& templates,
                           const std::optional<std::filesystem::path>& out_dir,
                           int parallelism);

}  // namespace editeval
