#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "json.hpp"
#include "mitiforge/adaptation.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::adapt {

namespace fs = std::filesystem;

namespace {

std::atomic<std::size_t> g_spawned{0};

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;
};

ProcessResult run_shell(const std::string& cmd, const fs::path& cwd, int timeout_seconds) {
  std::string log_path = (fs::temp_directory_path() / "mitiforge-harness-XXXXXX").string();
  int fd = mkstemp(log_path.data());
  if (fd < 0) throw Error(ErrorCode::HarnessError, "cannot create a harness log file");

  ++g_spawned;
  pid_t pid = fork();
  if (pid < 0) {
    close(fd);
    unlink(log_path.c_str());
    throw Error(ErrorCode::HarnessError, "fork failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    if (chdir(cwd.c_str()) != 0) _exit(126);
    dup2(fd, STDOUT_FILENO);
    dup2(fd, STDERR_FILENO);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fd);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
  int status = 0;
  for (;;) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  if (!result.timed_out) result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  try {
    result.output = text::read_file(log_path);
  } catch (const Error&) {
  }
  unlink(log_path.c_str());
  return result;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string junit_xml(const std::vector<std::string>& tests,
                      const std::vector<TestFailure>& failures) {
  std::string xml = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  xml += "<testsuite name=\"scripted\" tests=\"" + std::to_string(tests.size()) + "\" failures=\"" +
         std::to_string(failures.size()) + "\">\n";
  for (const auto& id : tests) {
    auto dot = id.rfind('.');
    std::string cls = dot == std::string::npos ? "" : id.substr(0, dot);
    std::string name = dot == std::string::npos ? id : id.substr(dot + 1);
    xml += "  <testcase classname=\"" + xml_escape(cls) + "\" name=\"" + xml_escape(name) + "\"";
    auto f = std::find_if(failures.begin(), failures.end(),
                          [&](const TestFailure& t) { return t.test_id == id; });
    if (f == failures.end()) {
      xml += "/>\n";
    } else {
      xml += ">\n    <failure message=\"" + xml_escape(f->message) + "\"/>\n  </testcase>\n";
    }
  }
  xml += "</testsuite>\n";
  return xml;
}

}  // namespace

std::size_t process_spawn_count() { return g_spawned.load(); }

std::string expand_command(std::string_view tmpl, const fs::path& workspace) {
  std::string quoted = "'";
  for (char c : workspace.string()) {
    if (c == '\'') quoted += "'\\''";
    else quoted += c;
  }
  quoted += "'";
  std::string out(tmpl);
  static constexpr std::string_view slot = "{workspace}";
  for (auto pos = out.find(slot); pos != std::string::npos; pos = out.find(slot, pos + quoted.size())) {
    out.replace(pos, slot.size(), quoted);
  }
  return out;
}

// --- process harness ----------------------------------------------------------

ProcessHarness::ProcessHarness(ProcessHarnessConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.compile_cmd.empty() || cfg_.test_cmd.empty()) {
    throw Error(ErrorCode::InvalidConfig, "harness needs compile_cmd and test_cmd");
  }
  if (!fs::is_directory(cfg_.workspace)) {
    throw Error(ErrorCode::HarnessError, "workspace " + cfg_.workspace.string() + " is not a directory");
  }
}

CompileResult ProcessHarness::do_compile() {
  auto r = run_shell(expand_command(cfg_.compile_cmd, cfg_.workspace), cfg_.workspace,
                     cfg_.timeout_seconds);
  if (r.timed_out) throw Error(ErrorCode::HarnessError, "compile command timed out");
  if (r.exit_code == 126 || r.exit_code == 127) {
    throw Error(ErrorCode::HarnessError, "compile command could not run: " + r.output);
  }
  return CompileResult{r.exit_code == 0, r.output};
}

TestReport ProcessHarness::do_run_tests() {
  auto r = run_shell(expand_command(cfg_.test_cmd, cfg_.workspace), cfg_.workspace,
                     cfg_.timeout_seconds);
  if (r.timed_out) throw Error(ErrorCode::HarnessError, "test command timed out");
  if (r.exit_code == 126 || r.exit_code == 127) {
    throw Error(ErrorCode::HarnessError, "test command could not run: " + r.output);
  }
  auto report = collect_junit_reports(cfg_.workspace, cfg_.test_report_glob);
  if (report.total == 0 && r.exit_code != 0) {
    throw Error(ErrorCode::HarnessError,
                "test command failed without writing reports matching " + cfg_.test_report_glob);
  }
  return report;
}

// --- scripted harness ---------------------------------------------------------

ScriptedHarness::ScriptedHarness(std::string_view script_json, fs::path workspace,
                                 fs::path target_file, std::string function_name)
    : workspace_(std::move(workspace)),
      target_(target_file.is_absolute() ? std::move(target_file) : workspace_ / target_file),
      function_name_(std::move(function_name)) {
  try {
    auto doc = nlohmann::json::parse(script_json);
    const auto compile = doc.value("compile", nlohmann::json::object());
    if (compile.contains("exit_codes")) {
      parse_mode_ = false;
      exit_codes_ = compile.at("exit_codes").get<std::vector<int>>();
      compile_log_ = compile.value("log", std::string("compilation failed"));
      if (exit_codes_.empty()) throw Error(ErrorCode::InvalidConfig, "exit_codes is empty");
    } else if (compile.value("mode", std::string("parse")) != "parse") {
      throw Error(ErrorCode::InvalidConfig, "compile.mode must be \"parse\"");
    }
    const auto tests = doc.value("tests", nlohmann::json::object());
    if (tests.contains("runs")) {
      runs_total_ = tests.value("total", 0);
      for (const auto& run : tests.at("runs")) {
        std::vector<TestFailure> failures;
        for (const auto& f : run) {
          failures.push_back({f.at("test_id").get<std::string>(), f.value("message", std::string())});
        }
        runs_.push_back(std::move(failures));
      }
      if (runs_.empty()) throw Error(ErrorCode::InvalidConfig, "tests.runs is empty");
    } else {
      for (const auto& r : tests.value("rules", nlohmann::json::array())) {
        Rule rule;
        rule.test_id = r.at("test_id").get<std::string>();
        rule.message = r.value("message", std::string("assertion failed"));
        if (r.contains("fail_if_contains")) {
          rule.needle = r.at("fail_if_contains").get<std::string>();
          rule.fail_if_present = true;
        } else if (r.contains("fail_unless_contains")) {
          rule.needle = r.at("fail_unless_contains").get<std::string>();
          rule.fail_if_present = false;
        }
        rules_.push_back(std::move(rule));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("harness script: ") + e.what());
  }
}

std::string ScriptedHarness::target_text() const { return text::read_file(target_.string()); }

CompileResult ScriptedHarness::do_compile() {
  if (!parse_mode_) {
    int code = exit_codes_[std::min(compile_step_, exit_codes_.size() - 1)];
    ++compile_step_;
    return CompileResult{code == 0, code == 0 ? "" : compile_log_};
  }
  try {
    auto loc = context::locate_function(target_text(), function_name_);
    context::parse_function(loc.text);
    return CompileResult{true, ""};
  } catch (const PositionedError& e) {
    return CompileResult{false, e.what()};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FunctionNotFound || e.code() == ErrorCode::ParseError) {
      return CompileResult{false, e.what()};
    }
    throw Error(ErrorCode::HarnessError, e.what());
  }
}

TestReport ScriptedHarness::do_run_tests() {
  std::vector<std::string> ids;
  std::vector<TestFailure> failures;
  if (!runs_.empty()) {
    failures = runs_[std::min(run_step_, runs_.size() - 1)];
    ++run_step_;
    for (const auto& f : failures) ids.push_back(f.test_id);
    for (int i = static_cast<int>(ids.size()); i < runs_total_; ++i) {
      ids.push_back("Scripted.pass" + std::to_string(i));
    }
  } else {
    const auto content = target_text();
    for (const auto& r : rules_) {
      ids.push_back(r.test_id);
      const bool present = !r.needle.empty() && content.find(r.needle) != std::string::npos;
      if (!r.needle.empty() && present == r.fail_if_present) failures.push_back({r.test_id, r.message});
    }
  }
  const auto dir = workspace_ / "mitiforge-reports";
  fs::remove_all(dir);
  fs::create_directories(dir);
  text::write_file_atomic((dir / "TEST-scripted.xml").string(), junit_xml(ids, failures));
  return collect_junit_reports(workspace_, report_glob());
}

}  // namespace mitiforge::adapt
