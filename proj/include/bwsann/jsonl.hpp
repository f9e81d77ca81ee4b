#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bwsann/model.hpp"

namespace bwsann {

/// Parses one JSON value per non-blank line into an array. Throws
/// Error(kParseError) naming the 1-based line on malformed input.
nlohmann::json parse_jsonl(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<Item> items_from_jsonl(std::string_view text);
std::string items_to_jsonl(const std::vector<Item>& items);

}  // namespace bwsann
