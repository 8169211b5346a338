#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace editeval {

using Json = nlohmann::ordered_json;

struct AudioRef {
  std::string uri;
  std::optional<double> duration_s;

  friend bool operator==(const AudioRef&, const AudioRef&) = default;
};

enum class EditOperation { kAddition, kDeletion, kReplacement };

const char* EditOperationName(EditOperation op);
std::optional<EditOperation> ParseEditOperation(std::string_view name);

// Expert 1-5 ratings: overall quality, editing relevance, preservation.
struct SubjectiveRatings {
  double quality = 0;
  double relevance = 0;
  double faithfulness = 0;

  friend bool operator==(const SubjectiveRatings&, const SubjectiveRatings&) = default;
};

struct EditingSample {
  std::string id;
  std::string system_id;
  AudioRef audio_orig;
  AudioRef audio_edit;
  std::string caption_orig;
  std::string instruction;
  std::optional<std::string> caption_edit;
  std::optional<EditOperation> operation;
  std::optional<std::string> expected_difference;
  std::optional<std::string> expected_commonality;
  std::optional<SubjectiveRatings> subjective;
  std::map<std::string, double> objective;
  // Manifest keys this version does not interpret, kept verbatim.
  Json extras = Json::object();

  friend bool operator==(const EditingSample&, const EditingSample&) = default;
};

struct DerivedTargets {
  std::string expected_difference;
  std::string expected_commonality;
  // Set when a replacement shares no clause between the two captions.
  bool empty_intersection = false;
};

// Target captions for the joint difference/commonality tasks. The difference
// target is always the instruction. The commonality target is the original
// caption for additions, the edited caption for deletions, and the shared
// clauses for replacements.
DerivedTargets DeriveTargets(std::string_view caption_orig,
                             const std::optional<std::string>& caption_edit,
                             std::string_view instruction, EditOperation op);

// Clause splitting and normalization used by the replacement rule.
std::vector<std::string> SplitClauses(std::string_view caption);
std::string NormalizeClause(std::string_view clause);

// Fills expected_difference / expected_commonality from DeriveTargets when
// they are absent and the sample carries an operation. Returns true when the
// commonality came out empty.
bool FillDerivedTargets(EditingSample& sample);

EditingSample SampleFromJson(const Json& j);
Json SampleToJson(const EditingSample& sample);

std::vector<EditingSample> ParseManifest(std::string_view text);
std::vector<EditingSample> LoadManifest(const std::filesystem::path& path);
std::string EmitManifest(const std::vector<EditingSample>& samples);

struct DatasetSplit {
  std::vector<EditingSample> train;
  std::vector<EditingSample> val;
  std::vector<EditingSample> test;
};

DatasetSplit SplitDataset(const std::vector<EditingSample>& samples,
                          const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace editeval
