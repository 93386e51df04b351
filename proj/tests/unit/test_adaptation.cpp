#include <gtest/gtest.h>

#include "mitiforge/adaptation.hpp"
#include "mitiforge/text_util.hpp"
#include "test_support.hpp"

using namespace mitiforge;
using namespace mitiforge::adapt;
using generate::FailureReason;
using generate::MitigationPatch;
using generate::PatchStatus;

namespace {

const char* kFile =
    "package demo;\r\n"
    "\r\n"
    "public class Decryptor {\r\n"
    "    private final Helper helper = new Helper();\r\n"
    "\r\n"
    "    public String decrypt(String token) {\r\n"
    "        return helper.payload(token);\r\n"
    "    }\r\n"
    "\r\n"
    "    public int size() { return 1; }\r\n"
    "}\r\n";

const char* kGood = "public String decrypt(String token) {\n    return helper.safePayload(token);\n}";
const char* kBroken = "public String decrypt(String token) {\n    return helper.safePayload(token)\n}";

std::string fenced(const std::string& code) { return "```java\n" + code + "\n```"; }

MitigationPatch candidate(const std::string& text) {
  MitigationPatch p;
  p.function_text = text;
  return p;
}

struct Workspace {
  testing_support::ScratchDir dir;
  std::filesystem::path file = dir / "Decryptor.java";
  Workspace() { text::write_file_atomic(file.string(), kFile); }
  std::string contents() const { return text::read_file(file.string()); }
};

}  // namespace

TEST(Patcher, ReplacesOnlyTheFunctionAndRestoresBitExact) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  patcher.apply(kGood);
  auto patched = ws.contents();
  EXPECT_NE(patched.find("        return helper.safePayload(token);\r\n"), std::string::npos);
  EXPECT_NE(patched.find("    public String decrypt(String token) {\r\n"), std::string::npos);
  EXPECT_NE(patched.find("    public int size() { return 1; }\r\n"), std::string::npos);
  EXPECT_EQ(patched.find("helper.payload(token)"), std::string::npos);
  patcher.apply(kBroken);
  patcher.restore();
  EXPECT_EQ(ws.contents(), kFile);
}

TEST(Patcher, MissingFunctionIsRejected) {
  Workspace ws;
  try {
    WorkspacePatcher(ws.file, "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FunctionNotFound);
  }
}

TEST(AdaptSyntax, CompilesFirstRound) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness("{}", ws.dir.path(), ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  auto out = adapt_syntax(candidate(kGood), {harness, patcher, mock});
  EXPECT_EQ(out.status, PatchStatus::SyntaxOk);
  EXPECT_EQ(out.rounds.syntax, 1);
  EXPECT_EQ(harness.compile_count(), 1);
  EXPECT_EQ(mock.call_count(), 0u);
}

TEST(AdaptSyntax, FailFailFixTakesThreeRounds) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness("{}", ws.dir.path(), ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  // the first repair is still broken, the second one parses
  const std::string broken2 = "public String decrypt(String token) {\n    return (helper.safePayload(token);\n}";
  harness.compile();  // warm the counter so the bound below is relative
  const int before = harness.compile_count();
  patcher.apply(kBroken);
  mock.add(build_syntax_prompt(harness.compile().log, kBroken), fenced(broken2));
  patcher.apply(broken2);
  mock.add(build_syntax_prompt(harness.compile().log, broken2), fenced(kGood));
  patcher.restore();

  const int base = harness.compile_count();
  auto out = adapt_syntax(candidate(kBroken), {harness, patcher, mock});
  EXPECT_EQ(out.status, PatchStatus::SyntaxOk);
  EXPECT_EQ(out.rounds.syntax, 3);
  EXPECT_EQ(harness.compile_count() - base, 3);
  EXPECT_EQ(mock.call_count(), 2u);
  EXPECT_EQ(out.function_text, kGood);
  EXPECT_GT(base, before);
}

TEST(AdaptSyntax, FiveFailuresExhaustAndRestore) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(R"({"compile": {"exit_codes": [1], "log": "error: ';' expected"}})",
                          ws.dir.path(), ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  mock.add(build_syntax_prompt("error: ';' expected", kBroken), fenced(kBroken));
  auto out = adapt_syntax(candidate(kBroken), {harness, patcher, mock});
  EXPECT_EQ(out.status, PatchStatus::Failed);
  EXPECT_EQ(out.reason, FailureReason::SyntaxExhausted);
  EXPECT_EQ(out.status_label(), "Failed(SyntaxExhausted)");
  EXPECT_EQ(harness.compile_count(), 5);
  EXPECT_EQ(mock.call_count(), 4u);
  EXPECT_EQ(ws.contents(), kFile);
}

TEST(AdaptSyntax, UnparseableRepairKeepsCurrentText) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(R"({"compile": {"exit_codes": [1, 0], "log": "boom"}})", ws.dir.path(),
                          ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  mock.add(build_syntax_prompt("boom", kGood), "Sorry, I cannot help.");
  auto out = adapt_syntax(candidate(kGood), {harness, patcher, mock});
  EXPECT_EQ(out.status, PatchStatus::SyntaxOk);
  EXPECT_EQ(out.rounds.syntax, 2);
  EXPECT_EQ(out.function_text, kGood);
}

TEST(AdaptSyntax, RequiresCandidate) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness("{}", ws.dir.path(), ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  auto p = candidate(kGood);
  p.status = PatchStatus::SyntaxOk;
  EXPECT_THROW(adapt_syntax(p, {harness, patcher, mock}), Error);
}

namespace {

MitigationPatch syntax_ok(const std::string& text) {
  auto p = candidate(text);
  p.status = PatchStatus::SyntaxOk;
  p.rounds.syntax = 1;
  return p;
}

}  // namespace

TEST(AdaptFunctionality, BaselineFailuresNeverBlock) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(
      R"({"tests": {"runs": [[{"test_id": "demo.Flaky.alwaysRed", "message": "red"}]], "total": 4}})",
      ws.dir.path(), ws.file, "decrypt");
  llm::ScriptedMockBackend mock;
  auto baseline = harness.run_tests();
  EXPECT_EQ(baseline.total, 4);
  ASSERT_EQ(baseline.failed.size(), 1u);
  patcher.apply(kGood);
  TestReport last;
  auto out = adapt_functionality(syntax_ok(kGood), {harness, patcher, mock}, baseline, "GEN", &last);
  EXPECT_EQ(out.status, PatchStatus::Validated);
  EXPECT_EQ(out.rounds.functionality, 1);
  EXPECT_EQ(last.failed.size(), 1u);
  EXPECT_EQ(mock.call_count(), 0u);
}

TEST(AdaptFunctionality, RegressionFixedOnSecondRound) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(
      R"J({"tests": {"rules": [{"test_id": "demo.DecryptorTest.roundTrip",
                                "fail_if_contains": "safePayload(token)",
                                "message": "expected:<hello> but was:<null>"}]}})J",
      ws.dir.path(), ws.file, "decrypt");
  auto baseline = harness.run_tests();
  EXPECT_TRUE(baseline.failed.empty());
  const std::string fixed =
      "public String decrypt(String token) {\n    return helper.safePayload(token, true);\n}";
  llm::ScriptedMockBackend mock;
  mock.add(build_functionality_prompt(
               "GEN", {"demo.DecryptorTest.roundTrip", "expected:<hello> but was:<null>"}),
           fenced(fixed));
  patcher.apply(kGood);
  const int runs_before = harness.test_count();
  auto out = adapt_functionality(syntax_ok(kGood), {harness, patcher, mock}, baseline, "GEN");
  EXPECT_EQ(out.status, PatchStatus::Validated);
  EXPECT_EQ(out.rounds.functionality, 2);
  EXPECT_EQ(out.function_text, fixed);
  EXPECT_EQ(harness.test_count() - runs_before, 2);
  EXPECT_NE(ws.contents().find("safePayload(token, true)"), std::string::npos);
}

TEST(AdaptFunctionality, PersistentRegressionExhaustsAfterFiveRuns) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(
      R"({"tests": {"rules": [{"test_id": "demo.DecryptorTest.roundTrip",
                               "fail_if_contains": "safePayload", "message": "broken"}]}})",
      ws.dir.path(), ws.file, "decrypt");
  auto baseline = harness.run_tests();
  llm::ScriptedMockBackend mock;
  mock.add(build_functionality_prompt("GEN", {"demo.DecryptorTest.roundTrip", "broken"}), fenced(kGood));
  patcher.apply(kGood);
  auto out = adapt_functionality(syntax_ok(kGood), {harness, patcher, mock}, baseline, "GEN");
  EXPECT_EQ(out.status, PatchStatus::Failed);
  EXPECT_EQ(out.reason, FailureReason::FunctionalityExhausted);
  EXPECT_EQ(out.rounds.functionality, 5);
  EXPECT_EQ(harness.test_count(), 1 + 5);
  EXPECT_EQ(mock.call_count(), 4u);
  EXPECT_EQ(ws.contents(), kFile);
}

TEST(AdaptFunctionality, RegenerationThatNeverCompilesEndsSyntaxExhausted) {
  Workspace ws;
  WorkspacePatcher patcher(ws.file, "decrypt");
  ScriptedHarness harness(
      R"({"tests": {"rules": [{"test_id": "demo.T.t", "fail_if_contains": "safePayload", "message": "m"}]}})",
      ws.dir.path(), ws.file, "decrypt");
  auto baseline = harness.run_tests();
  llm::ScriptedMockBackend mock;
  mock.add(build_functionality_prompt("GEN", {"demo.T.t", "m"}), fenced(kBroken));
  patcher.apply(kGood);
  // every syntax repair returns the same broken text
  patcher.apply(kBroken);
  mock.add(build_syntax_prompt(harness.compile().log, kBroken), fenced(kBroken));
  patcher.apply(kGood);
  auto out = adapt_functionality(syntax_ok(kGood), {harness, patcher, mock}, baseline, "GEN");
  EXPECT_EQ(out.status_label(), "Failed(SyntaxExhausted)");
  EXPECT_EQ(out.rounds.functionality, 1);
  EXPECT_LE(out.rounds.syntax, kMaxSyntaxRounds);
  EXPECT_EQ(ws.contents(), kFile);
}

TEST(NewFailures, StrictSetDifferenceOnIds) {
  TestReport baseline{5, {{"a", "x"}, {"b", "y"}}};
  TestReport after{5, {{"b", "other message"}, {"c", "z"}, {"a", ""}}};
  auto fresh = TestReport::new_failures(after, baseline);
  ASSERT_EQ(fresh.size(), 1u);
  EXPECT_EQ(fresh[0].test_id, "c");
  EXPECT_TRUE(TestReport::new_failures(baseline, after).empty());
  EXPECT_TRUE(after.passed("d"));
  EXPECT_FALSE(after.passed("c"));
}

TEST(JUnit, ParsesFailuresAndErrors) {
  auto r = parse_junit_xml(R"(<?xml version="1.0"?>
<testsuites>
  <testsuite name="s1" tests="3">
    <testcase classname="demo.ATest" name="ok"/>
    <testcase classname="demo.ATest" name="bad"><failure message="expected 1">trace</failure></testcase>
    <testcase classname="demo.ATest" name="boom"><error>NullPointerException</error></testcase>
  </testsuite>
  <testsuite name="s2"><testcase name="bare"/><testcase name="skipped"><skipped/></testcase></testsuite>
</testsuites>)");
  EXPECT_EQ(r.total, 5);
  ASSERT_EQ(r.failed.size(), 2u);
  EXPECT_EQ(r.failed[0], (TestFailure{"demo.ATest.bad", "expected 1"}));
  EXPECT_EQ(r.failed[1], (TestFailure{"demo.ATest.boom", "NullPointerException"}));
  EXPECT_LE(r.failed.size(), static_cast<std::size_t>(r.total));
  auto single = parse_junit_xml(R"(<testsuite><testcase classname="X" name="y"/></testsuite>)");
  EXPECT_EQ(single.total, 1);
  EXPECT_THROW(parse_junit_xml("<testsuite><testcase"), Error);
}

TEST(JUnit, CollectsReportsByGlob) {
  testing_support::ScratchDir dir;
  std::filesystem::create_directories(dir / "target/surefire-reports");
  text::write_file_atomic((dir / "target/surefire-reports/TEST-a.xml").string(),
                          R"(<testsuite><testcase classname="A" name="x"/></testsuite>)");
  text::write_file_atomic((dir / "TEST-b.xml").string(),
                          R"(<testsuite><testcase classname="B" name="y"><failure/></testcase></testsuite>)");
  text::write_file_atomic((dir / "target/other.xml").string(), "<junk");
  auto r = collect_junit_reports(dir.path(), "**/TEST-*.xml");
  EXPECT_EQ(r.total, 2);
  ASSERT_EQ(r.failed.size(), 1u);
  EXPECT_EQ(r.failed[0].test_id, "B.y");
}

TEST(ProcessHarness, RunsShellCommandsInWorkspace) {
  testing_support::ScratchDir dir;
  const auto spawned = process_spawn_count();
  ProcessHarness h({"test -d {workspace} && echo compiled", 
                    "printf '<testsuite><testcase classname=\"P\" name=\"q\"><failure message=\"no\"/></testcase></testsuite>' > TEST-p.xml",
                    dir.path(), 30, "**/TEST-*.xml"});
  auto c = h.compile();
  EXPECT_TRUE(c.ok);
  EXPECT_NE(c.log.find("compiled"), std::string::npos);
  auto r = h.run_tests();
  EXPECT_EQ(r.total, 1);
  ASSERT_EQ(r.failed.size(), 1u);
  EXPECT_EQ(r.failed[0].message, "no");
  EXPECT_EQ(process_spawn_count() - spawned, 2u);
}

TEST(ProcessHarness, FailuresAndUnrunnableCommands) {
  testing_support::ScratchDir dir;
  ProcessHarness failing({"echo 'Foo.java:3: error' >&2; exit 1", "true", dir.path(), 30, "**/TEST-*.xml"});
  auto c = failing.compile();
  EXPECT_FALSE(c.ok);
  EXPECT_NE(c.log.find("Foo.java:3: error"), std::string::npos);
  ProcessHarness missing({"definitely-not-a-command-xyz", "exit 3", dir.path(), 30, "**/TEST-*.xml"});
  for (int step = 0; step < 2; ++step) {
    try {
      step == 0 ? (void)missing.compile() : (void)missing.run_tests();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::HarnessError);
    }
  }
  EXPECT_THROW(ProcessHarness({"", "true", dir.path(), 30, "x"}), Error);
}

TEST(ProcessHarness, ExpandsQuotedWorkspace) {
  EXPECT_EQ(expand_command("mvn -f {workspace}/pom.xml", "/tmp/it's here"),
            "mvn -f '/tmp/it'\\''s here'/pom.xml");
}
