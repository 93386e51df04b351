#pragma once

// Case tables used by both the unit tests and the acceptance binary.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mitiforge/behavior_classifier.hpp"

namespace testing_support {

struct GoldenCase {
  std::string file;  // name under the golden directory
  std::string rendered;
};

/// Every prompt kind rendered from fixed inputs.
std::vector<GoldenCase> golden_cases();
std::filesystem::path golden_path(const std::string& file);

/// Behavior labels and their consolidated type, including the usual
/// abbreviations.
const std::vector<std::pair<std::string, mitiforge::classify::VulnerabilityType>>&
behavior_labels();

}  // namespace testing_support
