#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vlct {

using json = nlohmann::json;

/// Reads a line-delimited JSON file; blank lines are skipped.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes records one per line. Overwrites.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t size);
std::vector<char> read_binary_file(const std::filesystem::path& path);

}  // namespace vlct
