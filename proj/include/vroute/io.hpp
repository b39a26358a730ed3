#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vroute/core.hpp"
#include "vroute/prompt.hpp"
#include "vroute/world.hpp"

namespace vroute {

using json = nlohmann::json;

void to_json(json& j, const Sample& s);
void from_json(const json& j, Sample& s);
void to_json(json& j, const MetadataSummary& m);
void from_json(const json& j, MetadataSummary& m);
void to_json(json& j, const ExecutionRecord& r);
void from_json(const json& j, ExecutionRecord& r);
void to_json(json& j, const DatasetPromptConfig& c);
void from_json(const json& j, DatasetPromptConfig& c);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

std::vector<ExecutionRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<ExecutionRecord>& records);

std::map<std::string, DatasetPromptConfig> read_prompt_configs(const std::filesystem::path& path);
void write_prompt_configs(const std::filesystem::path& path, const std::map<std::string, DatasetPromptConfig>& configs);

/// World directory layout:
///   models.json  datasets.jsonl  samples.jsonl  prompt_configs.json
///   metadata.jsonl  records.jsonl  [images/...]
/// Images without a metadata line are summarized from `<dir>/<image_ref>` (PNM).
World load_world(const std::filesystem::path& dir);
void save_world(const World& world, const std::filesystem::path& dir);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace vroute
