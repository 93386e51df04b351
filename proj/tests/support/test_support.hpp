#pragma once

#include <filesystem>
#include <string>

namespace testing_support {

std::filesystem::path fixture(const std::string& rel);
std::string read_fixture(const std::string& rel);

/// Fresh directory removed on destruction.
class ScratchDir {
 public:
  ScratchDir();
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
