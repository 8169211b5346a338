#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace editeval {

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target, creating
// parent directories as needed.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

// One JSON value per non-blank line; ParseError carries the line number.
std::vector<nlohmann::ordered_json> ReadJsonl(const std::filesystem::path& path);
std::vector<nlohmann::ordered_json> ParseJsonl(std::string_view text);
std::string EmitJsonl(const std::vector<nlohmann::ordered_json>& rows);

// Maps an id to a file-name-safe stem.
std::string SafeFileStem(std::string_view id);

}  // namespace editeval
