#include <gtest/gtest.h>

#include "json.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/strategy_catalog.hpp"

using namespace mitiforge;
using namespace mitiforge::strategy;
using classify::InfoKind;
using classify::MitigatingInfo;
using classify::Provenance;
using VT = classify::VulnerabilityType;

namespace {

MitigatingInfo info(InfoKind k, std::string v) { return {k, std::move(v), Provenance::Description}; }

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

nlohmann::json builtin_catalog_json() {
  const auto& cat = StrategyCatalog::builtin();
  nlohmann::json doc = {{"version", cat.version()}, {"default_timeout_seconds", 10}};
  const char* types[] = {"UncaughtException", "ResourceExhaustion", "MaliciousCodeExecution",
                         "WrongReturnValue"};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = cat.strategies()[i];
    doc["strategies"].push_back({{"name", std::string(to_string(s.name))},
                                 {"vulnerability_type", types[i]},
                                 {"required_info_kind", std::string(to_string(*s.required_info_kind))},
                                 {"description", s.description},
                                 {"snippet", s.snippet}});
  }
  for (const auto& f : cat.few_shots()) doc["few_shots"].push_back({{"label", f.label}, {"text", f.text}});
  return doc;
}

void expect_malformed(const nlohmann::json& doc) {
  try {
    StrategyCatalog::from_json(doc.dump());
    FAIL() << doc.dump();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCatalog);
  }
}

}  // namespace

TEST(StrategyMapping, IsABijectionOverTheFourTypes) {
  std::set<StrategyName> seen;
  for (auto t : classify::kClassifiedTypes) {
    auto name = strategy_for(t);
    EXPECT_NE(name, StrategyName::Resembling);
    seen.insert(name);
    const auto& s = select_type_strategy(t);
    EXPECT_EQ(s.name, name);
    EXPECT_EQ(s.required_info_kind, classify::required_info_kind(t));
  }
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_EQ(strategy_for(VT::UncaughtException), StrategyName::ExceptionCatching);
  EXPECT_EQ(strategy_for(VT::ResourceExhaustion), StrategyName::ThreadMonitoring);
  EXPECT_EQ(strategy_for(VT::MaliciousCodeExecution), StrategyName::InputValidation);
  EXPECT_EQ(strategy_for(VT::WrongReturnValue), StrategyName::ExceptionThrowing);
}

TEST(StrategyMapping, UnclassifiedIsAnError) {
  try {
    select_type_strategy(VT::Unclassified);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnclassifiedType);
  }
}

TEST(StrategyCatalog, ShippedSnippetsParseOnceRendered) {
  const std::map<InfoKind, std::string> values = {
      {InfoKind::UncaughtExceptionType, "java.lang.StackOverflowError"},
      {InfoKind::ExhaustedResourceType, "CPU"},
      {InfoKind::VulnerableInputFeature, "jndi"},
      {InfoKind::HandleableExceptionType, "java.io.IOException"},
  };
  for (const auto& s : StrategyCatalog::builtin().strategies()) {
    auto code = render_snippet(s, info(*s.required_info_kind, values.at(*s.required_info_kind)));
    EXPECT_NO_THROW(context::parse_function(code)) << code;
  }
}

TEST(RenderStrategy, ExceptionCatchingNamesTheException) {
  const auto& s = select_type_strategy(VT::UncaughtException);
  auto block = render_strategy(s, info(InfoKind::UncaughtExceptionType, "java.lang.StackOverflowError"));
  EXPECT_NE(block.find("catch (java.lang.StackOverflowError e)"), std::string::npos);
  EXPECT_EQ(block.rfind("Strategy: Exception Catching\n", 0), 0u);
}

TEST(RenderStrategy, InputValidationGuardsTheFeature) {
  const auto& s = select_type_strategy(VT::MaliciousCodeExecution);
  auto block = render_strategy(s, info(InfoKind::VulnerableInputFeature, "jndi"));
  EXPECT_NE(block.find("contains(\"jndi\")"), std::string::npos);
  auto quoted = render_snippet(s, info(InfoKind::VulnerableInputFeature, "a\"b\\c"));
  EXPECT_NE(quoted.find(R"(contains("a\"b\\c"))"), std::string::npos);
  EXPECT_NO_THROW(context::parse_function(quoted));
}

TEST(RenderStrategy, ThreadMonitoringUsesTimeout) {
  const auto& s = select_type_strategy(VT::ResourceExhaustion);
  auto block = render_strategy(s, info(InfoKind::ExhaustedResourceType, "CPU time"), {25});
  EXPECT_NE(block.find("future.get(25, TimeUnit.SECONDS)"), std::string::npos);
  EXPECT_NE(block.find("25 seconds"), std::string::npos);
  EXPECT_EQ(block.find("{{"), std::string::npos);
  EXPECT_EQ(StrategyCatalog::builtin().default_timeout_seconds(), 10);
}

TEST(RenderStrategy, KindMismatchIsRejected) {
  const auto& s = select_type_strategy(VT::ResourceExhaustion);
  for (auto call : {0, 1}) {
    try {
      if (call) {
        render_snippet(s, info(InfoKind::VulnerableInputFeature, "jndi"));
      } else {
        render_strategy(s, info(InfoKind::VulnerableInputFeature, "jndi"));
      }
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InfoKindMismatch);
    }
  }
}

TEST(RenderStrategyProperties, ValueAppearsExactlyOnce) {
  for (const auto& s : StrategyCatalog::builtin().strategies()) {
    for (const char* v : {"ZqxUniqueValue1", "zq.ww.Marker2Error", "qqFeature"}) {
      auto block = render_strategy(s, info(*s.required_info_kind, v));
      EXPECT_EQ(occurrences(block, v), 1u) << to_string(s.name) << " " << v;
      EXPECT_EQ(block.find("{{info}}"), std::string::npos);
    }
  }
}

TEST(VersionPrompt, NamesLibraryAndVersion) {
  retrieval::MitigationEntry hist;
  hist.cve_id = "CVE-2021-44228";
  hist.workarounds = {{"u", "Mitigation", "Set formatMsgNoLookups.\n\nOr remove JndiLookup.", {0, 1}},
                      {"u", "Workaround", "Upgrade to 2.16.0.", {0, 1}}};
  ingest::VulnRecord target;
  target.cve_id = "CVE-2021-45046";
  target.description = "Incomplete fix in some configurations.";
  auto p = build_version_retrieval_prompt(hist, target,
                                          context::Dependency::parse("org.apache.logging.log4j:log4j:2.14.1"));
  EXPECT_NE(p.find("in log4j, 2.14.1"), std::string::npos);
  EXPECT_NE(p.find("Set formatMsgNoLookups.\n\nOr remove JndiLookup.\n\nUpgrade to 2.16.0."),
            std::string::npos);
  EXPECT_NE(p.find("CVE-2021-44228"), std::string::npos);
  EXPECT_NE(p.find("Incomplete fix in some configurations."), std::string::npos);
}

TEST(VersionRetrieval, ReplyBecomesInstructionWithSample) {
  retrieval::MitigationEntry hist;
  hist.cve_id = "CVE-2021-44228";
  hist.workarounds = {{"u", "Mitigation", "Set formatMsgNoLookups.", {0, 1}}};
  ingest::VulnRecord target{"CVE-2021-45046", "desc", {}, {}, ""};
  auto dep = context::Dependency::parse("org.apache.logging.log4j:log4j-core:2.14.1");
  llm::ScriptedMockBackend mock;
  mock.add(build_version_retrieval_prompt(hist, target, dep),
           "Disable lookups.\n```java\nSystem.setProperty(\"log4j2.formatMsgNoLookups\", \"true\");\n```\n");
  auto w = retrieve_versioned_workaround(hist, target, dep, mock);
  EXPECT_EQ(w.cve_id, "CVE-2021-44228");
  EXPECT_EQ(w.dependency_version, "2.14.1");
  ASSERT_TRUE(w.sample_code);
  EXPECT_EQ(*w.sample_code, "System.setProperty(\"log4j2.formatMsgNoLookups\", \"true\");");
  auto block = render_resembling(w);
  EXPECT_NE(block.find("Disable lookups."), std::string::npos);
}

TEST(StrategyCatalog, BuiltinRoundTripsThroughJson) {
  auto cat = StrategyCatalog::from_json(builtin_catalog_json().dump());
  EXPECT_EQ(cat.strategies().size(), 4u);
  EXPECT_EQ(cat.few_shots().size(), 2u);
}

TEST(StrategyCatalog, ValidationRejectsBrokenCatalogs) {
  auto doc = builtin_catalog_json();
  auto two_holes = doc; two_holes["strategies"][0]["description"] = "{{info}} and {{info}}";
  auto no_hole = doc; no_hole["strategies"][0]["snippet"] = "void f() {}";
  auto wrong_type = doc; wrong_type["strategies"][0]["vulnerability_type"] = "ResourceExhaustion";
  auto missing = doc; missing["strategies"].erase(3);
  auto shots = doc; shots["few_shots"].erase(0);
  for (const auto& bad : {two_holes, no_hole, wrong_type, missing, shots}) expect_malformed(bad);
  try {
    StrategyCatalog::from_json("not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCatalog);
  }
}

TEST(JavaEscape, EscapesQuotesAndControls) {
  EXPECT_EQ(java_string_escape("a\"b\\c\nd\te"), "a\\\"b\\\\c\\nd\\te");
  EXPECT_EQ(java_string_escape("ldap://addr"), "ldap://addr");
}
