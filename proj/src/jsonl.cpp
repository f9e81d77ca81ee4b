#include "bwsann/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "bwsann/error.hpp"

namespace bwsann {

nlohmann::json parse_jsonl(std::string_view text) {
  auto out = nlohmann::json::array();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::kParseError, "line " + std::to_string(line_no), e.what());
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, path.string(), "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoError, path.string(), "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::kIoError, path.string(), "write failed");
}

std::vector<Item> items_from_jsonl(std::string_view text) {
  std::vector<Item> items;
  for (const auto& row : parse_jsonl(text)) items.push_back(row.get<Item>());
  check_items(items);
  return items;
}

std::string items_to_jsonl(const std::vector<Item>& items) {
  std::string out;
  for (const auto& item : items) out += nlohmann::json(item).dump() + "\n";
  return out;
}

}  // namespace bwsann
