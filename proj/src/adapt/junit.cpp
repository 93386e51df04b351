#include <fnmatch.h>

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "mitiforge/adaptation.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::adapt {

namespace pt = boost::property_tree;

std::set<std::string> TestReport::failed_ids() const {
  std::set<std::string> ids;
  for (const auto& f : failed) ids.insert(f.test_id);
  return ids;
}

bool TestReport::passed(const std::string& test_id) const {
  return std::none_of(failed.begin(), failed.end(),
                      [&](const TestFailure& f) { return f.test_id == test_id; });
}

std::vector<TestFailure> TestReport::new_failures(const TestReport& after,
                                                  const TestReport& baseline) {
  const auto before = baseline.failed_ids();
  std::vector<TestFailure> out;
  for (const auto& f : after.failed) {
    if (!before.count(f.test_id)) out.push_back(f);
  }
  return out;
}

namespace {

void walk(const pt::ptree& node, TestReport& report) {
  for (const auto& [name, child] : node) {
    if (name != "testcase") {
      if (name != "<xmlattr>") walk(child, report);
      continue;
    }
    ++report.total;
    const auto cls = child.get<std::string>("<xmlattr>.classname", "");
    const auto test = child.get<std::string>("<xmlattr>.name", "");
    const std::string id = cls.empty() ? test : cls + "." + test;
    for (const char* tag : {"failure", "error"}) {
      auto f = child.get_child_optional(tag);
      if (!f) continue;
      std::string message = f->get<std::string>("<xmlattr>.message", "");
      if (message.empty()) message = std::string(text::trim(f->get_value<std::string>()));
      report.failed.push_back({id, message});
      break;
    }
  }
}

bool glob_match(const std::string& pattern, const std::string& rel) {
  if (fnmatch(pattern.c_str(), rel.c_str(), 0) == 0) return true;
  return pattern.rfind("**/", 0) == 0 && fnmatch(pattern.c_str() + 3, rel.c_str(), 0) == 0;
}

}  // namespace

TestReport parse_junit_xml(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::HarnessError, std::string("unreadable JUnit report: ") + e.what());
  }
  TestReport report;
  walk(tree, report);
  return report;
}

TestReport collect_junit_reports(const std::filesystem::path& workspace, std::string_view glob) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::exists(workspace)) {
    for (const auto& e : fs::recursive_directory_iterator(workspace)) {
      if (!e.is_regular_file()) continue;
      auto rel = fs::relative(e.path(), workspace).generic_string();
      if (glob_match(std::string(glob), rel)) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  TestReport merged;
  for (const auto& f : files) {
    auto r = parse_junit_xml(text::read_file(f.string()));
    merged.total += r.total;
    merged.failed.insert(merged.failed.end(), r.failed.begin(), r.failed.end());
  }
  return merged;
}

}  // namespace mitiforge::adapt
