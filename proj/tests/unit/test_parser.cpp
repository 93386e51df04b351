#include <gtest/gtest.h>

#include <algorithm>

#include "mitiforge/context_extractor.hpp"
#include "mitiforge/error.hpp"

using namespace mitiforge;
using namespace mitiforge::context;

namespace {

int count_kind(const FunctionAst& ast, NodeKind k) {
  return static_cast<int>(std::count_if(ast.nodes.begin(), ast.nodes.end(),
                                        [k](const Node& n) { return n.kind == k; }));
}

void expect_parse_error(const std::string& src, int line) {
  try {
    parse_function(src);
    FAIL() << src;
  } catch (const PositionedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    if (line > 0) EXPECT_EQ(e.line(), line) << e.what();
  }
}

}  // namespace

TEST(Parser, MethodHeaderFields) {
  auto ast = parse_function(
      "@Override\npublic static <T extends Comparable<T>> List<T> sortAll(final List<T> in, int... more)\n"
      "    throws IOException {\n  return in;\n}");
  EXPECT_EQ(ast.name, "sortAll");
  EXPECT_EQ(ast.return_type, "List<T>");
  EXPECT_EQ(ast.signature_first_line, 1);
  EXPECT_EQ(ast.signature_last_line, 3);
  EXPECT_EQ(ast.line_count(), 5);
  EXPECT_EQ(count_kind(ast, NodeKind::ReturnStatement), 1);
}

TEST(Parser, ConstructorHasNoReturnType) {
  auto ast = parse_function("public Loader(String path) {\n  this.path = path;\n}");
  EXPECT_EQ(ast.name, "Loader");
  EXPECT_EQ(ast.return_type, "");
  EXPECT_EQ(count_kind(ast, NodeKind::Assignment), 1);
}

TEST(Parser, StatementKinds) {
  auto ast = parse_function(
      "int f(int[] xs, Map<String, List<Integer>> m) {\n"
      "  int total = 0, count;\n"
      "  for (int i = 0; i < xs.length; i++) { total += xs[i]; }\n"
      "  for (String k : m.keySet()) total++;\n"
      "  while (total > 100) total /= 2;\n"
      "  do { total--; } while (total > 50);\n"
      "  if (total < 0) { return -1; } else if (total == 0) return 0; else { count = 1; }\n"
      "  try (var r = open()) { r.read(); } catch (IOException | RuntimeException e) { log(e); }"
      " finally { close(); }\n"
      "  switch (total) { case 1: case 2 -> total++; default: break; }\n"
      "  synchronized (this) { total = total * 2; }\n"
      "  label: for (;;) { break label; }\n"
      "  return total > 10 ? total : (int) Math.max(total, 1L);\n"
      "}");
  EXPECT_EQ(count_kind(ast, NodeKind::Loop), 5);
  EXPECT_EQ(count_kind(ast, NodeKind::If), 2);
  EXPECT_EQ(count_kind(ast, NodeKind::Try), 1);
  EXPECT_GE(count_kind(ast, NodeKind::ReturnStatement), 3);
  EXPECT_GE(count_kind(ast, NodeKind::VariableDeclaration), 4);
}

TEST(Parser, ExpressionsLambdasAndAnonymousClasses) {
  auto ast = parse_function(
      "Object g(List<String> items) {\n"
      "  Runnable r = () -> System.out.println(\"hi\");\n"
      "  Comparator<String> c = (a, b) -> { return a.compareTo(b); };\n"
      "  Function<String, Integer> len = String::length;\n"
      "  Object o = new Object() { public String toString() { return \"x\"; } };\n"
      "  int[][] grid = new int[3][];\n"
      "  String[] names = {\"a\", \"b\"};\n"
      "  boolean b = items instanceof ArrayList && !items.isEmpty();\n"
      "  char ch = '\\'';\n"
      "  String block = \"\"\"\n    text block\n    \"\"\";\n"
      "  long big = 0x7fff_ffffL + 1_000;\n"
      "  return items.stream().map(s -> s.trim()).filter(s -> !s.isEmpty()).toList();\n"
      "}");
  EXPECT_GE(count_kind(ast, NodeKind::MethodInvocation), 8);
}

TEST(Parser, InvocationNodesCarryNamePosition) {
  auto ast = parse_function("void f(XStream xs, String s) {\n  Object o = xs.fromXML(s.trim());\n}");
  const Node* call = nullptr;
  for (const auto& n : ast.nodes) {
    if (n.kind == NodeKind::MethodInvocation && n.text == "fromXML") call = &n;
  }
  ASSERT_NE(call, nullptr);
  EXPECT_EQ(call->name_line, 2);
  EXPECT_EQ(call->name_col, 17);
  ASSERT_GE(call->receiver, 0);
  EXPECT_EQ(ast.at(call->receiver).text, "xs");
  ASSERT_EQ(call->args.size(), 1u);
  EXPECT_EQ(ast.at(call->args[0]).kind, NodeKind::MethodInvocation);
}

TEST(Parser, SymbolsDistinguishLocalsAndFreeNames) {
  auto ast = parse_function(
      "String f(String p) {\n  String local = p + suffix;\n  return this.cache.get(local);\n}");
  auto find = [&](const std::string& name) -> const Symbol* {
    for (const auto& s : ast.symbols) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };
  ASSERT_TRUE(find("p"));
  EXPECT_FALSE(find("p")->free);
  EXPECT_EQ(find("p")->type, "String");
  ASSERT_TRUE(find("local"));
  EXPECT_FALSE(find("local")->free);
  ASSERT_TRUE(find("suffix"));
  EXPECT_TRUE(find("suffix")->free);
}

TEST(Parser, CrlfInputIsNormalized) {
  auto ast = parse_function("void f() {\r\n  g();\r\n}\r\n");
  EXPECT_EQ(ast.source.find('\r'), std::string::npos);
  EXPECT_EQ(count_kind(ast, NodeKind::MethodInvocation), 1);
}

TEST(Parser, SyntaxErrorsArePositioned) {
  expect_parse_error("void f() {\n  int x = ;\n}", 2);
  expect_parse_error("void f() {\n  g(;\n}", 2);
  expect_parse_error("void f() {\n  g();\n", 0);
  expect_parse_error("void f() {\n  String s = \"unterminated;\n}", 2);
  expect_parse_error("", 0);
  expect_parse_error("class A { void f() {} }", 0);
}

TEST(Parser, UnsupportedDeclarationsAreParseErrors) {
  expect_parse_error("void f() {\n  enum Color { RED }\n}", 2);
  expect_parse_error("void f() {\n  record P(int x) {}\n}", 2);
}

TEST(Parser, TrailingContentAfterBodyIsRejected) {
  expect_parse_error("void f() {\n}\nvoid g() {}", 3);
}

TEST(Parser, SubtreeAndEnclosingStatement) {
  auto ast = parse_function("void f(String s) {\n  if (s != null) {\n    use(s);\n  }\n}");
  int call = -1;
  for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
    if (ast.nodes[i].kind == NodeKind::MethodInvocation) call = static_cast<int>(i);
  }
  ASSERT_GE(call, 0);
  int stmt = ast.enclosing_statement(call);
  ASSERT_GE(stmt, 0);
  EXPECT_EQ(ast.at(stmt).span.first_line, 3);
  EXPECT_TRUE(ast.contains(ast.body, call));
  auto sub = ast.subtree(ast.root);
  EXPECT_EQ(sub.size(), ast.nodes.size());
  EXPECT_EQ(sub.front(), ast.root);
}
