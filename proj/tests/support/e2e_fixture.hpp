#pragma once

// Six-entry evaluation fixture: one type-based entry per vulnerability type
// plus two entries that resemble an indexed historical record. Everything is
// written to disk so the CLI can run it with llm = mock and the scripted
// harness.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mitiforge/chat_backend.hpp"

namespace testing_support {

struct E2eEntrySpec {
  std::string cve_id;
  std::string description;
  std::string cwe;
  std::string dependency;
  std::string api;
  std::string class_name;
  std::string function;        // method name
  std::string original;        // impacted method, 4-space indented
  std::string mitigated;       // what the cooperative responder returns
  std::string marker;          // exploit test passes iff the file contains it
  std::string invariant;       // functionality test fails unless the file contains it
  std::string type_reply;      // classification reply, empty for resembling entries
  std::string info_reply;      // extraction reply
  std::string resembles;       // historical CVE id for resembling entries
  std::string workaround_reply;
};

const std::vector<E2eEntrySpec>& e2e_entries();

/// Answers every prompt kind the pipeline sends for the fixture entries.
class CooperativeResponder final : public mitiforge::llm::ChatBackend {
 public:
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "cooperative"; }
};

/// Wraps a backend and records every exchange into a scripted mock.
class RecordingBackend final : public mitiforge::llm::ChatBackend {
 public:
  explicit RecordingBackend(std::unique_ptr<mitiforge::llm::ChatBackend> inner)
      : inner_(std::move(inner)) {}
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "recording"; }
  const mitiforge::llm::ScriptedMockBackend& recorded() const { return recorded_; }

 private:
  std::unique_ptr<mitiforge::llm::ChatBackend> inner_;
  mitiforge::llm::ScriptedMockBackend recorded_;
};

struct E2eFixture {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path config;
  std::filesystem::path index;
  std::filesystem::path mock;
};

/// Writes feeds, workspaces, harness scripts, the index, the config and a
/// recorded mock under `dir`.
E2eFixture write_e2e_fixture(const std::filesystem::path& dir);

}  // namespace testing_support
