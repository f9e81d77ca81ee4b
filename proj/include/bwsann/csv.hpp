#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bwsann {

// Minimal RFC 4180 reader/writer: fields quoted when they contain a comma,
// quote, or line break; embedded quotes doubled.

class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields);
  const std::string& str() const noexcept { return out_; }

 private:
  std::string out_;
};

std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace bwsann
