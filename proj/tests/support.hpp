#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include <ostream>

#include "bwsann/model.hpp"
#include "bwsann/taxonomy.hpp"

namespace bwsann {

inline void PrintTo(const Ratio& r, std::ostream* os) { *os << r.str(); }

}  // namespace bwsann

namespace bwsann::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bwsann-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Two-group registry used across tests: transgender (gender) and muslim (religion).
inline IdentityRegistry small_registry(int version = 1) {
  return IdentityRegistry(version, {
                                       {"muslim", "Muslims", Basis::kReligion, {"muzzie"}, {"mosque", "ramadan"}},
                                       {"transgender", "Transgender people", Basis::kGender, {"tranny"},
                                        {"pride parade", "trans rights"}},
                                   });
}

inline SubjectMatterLabel personal() { return {TopCategory::kPeople, Reference::kPersonal, {}, {}, {}}; }
inline SubjectMatterLabel other_label() { return {}; }
inline SubjectMatterLabel identity(Basis basis, std::string group) {
  return {TopCategory::kPeople, Reference::kIdentityGroupRelated, basis, std::move(group), {}};
}
inline SubjectMatterLabel entity(std::optional<std::string> group = std::nullopt) {
  return {TopCategory::kEntities, {}, {}, {}, std::move(group)};
}

}  // namespace bwsann::testing
