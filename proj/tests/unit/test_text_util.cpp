#include <gtest/gtest.h>

#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"
#include "test_support.hpp"

using namespace mitiforge;

TEST(TextUtil, TrimStripsAsciiWhitespace) {
  EXPECT_EQ(text::trim("  a b \t\n"), "a b");
  EXPECT_EQ(text::trim(""), "");
  EXPECT_EQ(text::trim(" \r\n "), "");
}

TEST(TextUtil, SplitLinesKeepsTrailingEmptyPiece) {
  auto lines = text::split_lines("a\nb\n");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(text::join({"a", "b", ""}, "\n"), "a\nb\n");
}

TEST(TextUtil, CaseInsensitiveHelpers) {
  EXPECT_EQ(text::to_lower("XStream"), "xstream");
  EXPECT_TRUE(text::starts_with_icase("Workaround: x", "WORK"));
  EXPECT_FALSE(text::starts_with_icase("Wo", "Work"));
  EXPECT_EQ(text::find_icase("The Mitigation", "mitigation"), 4u);
  EXPECT_EQ(text::find_icase("abcabc", "ABC", 1), 3u);
  EXPECT_EQ(text::find_icase("abc", "x"), std::string::npos);
}

TEST(TextUtil, NormalizeNewlines) {
  EXPECT_EQ(text::normalize_newlines("a\r\nb\rc\n"), "a\nb\nc\n");
}

TEST(TextUtil, Sha256KnownVectors) {
  EXPECT_EQ(text::sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(text::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(TextUtil, AtomicWriteThenRead) {
  testing_support::ScratchDir dir;
  auto p = (dir / "f.txt").string();
  text::write_file_atomic(p, "first");
  text::write_file_atomic(p, std::string("second\0bytes", 12));
  EXPECT_EQ(text::read_file(p), std::string("second\0bytes", 12));
  try {
    text::read_file((dir / "missing").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
