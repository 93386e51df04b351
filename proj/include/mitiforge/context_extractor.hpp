#pragma once

// Method-body parsing and the call-site context slice handed to the generator.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mitiforge::context {

struct Dependency {
  std::string group;
  std::string artifact;
  std::string version;

  /// "group:artifact:version"; group may be omitted ("artifact:version").
  static Dependency parse(std::string_view coordinate);
  std::string coordinate() const;
  bool operator==(const Dependency&) const = default;
};

struct VulnerableApi {
  std::optional<std::string> type_or_receiver;
  std::string method_name;

  /// Accepts "Type#method", "receiver.method" or a bare "method".
  static VulnerableApi parse(std::string_view spec);
  std::string to_string() const;
  bool operator==(const VulnerableApi&) const = default;
};

struct ImpactedFunction {
  std::filesystem::path file_path;
  std::string function_name;
  std::string source_text;
  VulnerableApi api;
  Dependency dependency;
};

enum class NodeKind {
  MethodInvocation,
  Assignment,
  VariableDeclaration,
  ReturnStatement,
  Block,
  If,
  Loop,
  Try,
  Other,
};

std::string_view to_string(NodeKind k);

struct Span {
  std::size_t begin = 0;  // byte offsets, end exclusive
  std::size_t end = 0;
  int first_line = 0;  // 1-based
  int first_col = 0;
  int last_line = 0;
};

struct Node {
  NodeKind kind = NodeKind::Other;
  std::string syntax;  // fine-grained tag, e.g. "Name", "ExpressionStatement", "ForEach"
  std::string text;    // identifier, method name, operator or declared type
  Span span;
  int parent = -1;
  std::vector<int> children;
  int symbol = -1;          // referenced or declared symbol
  int receiver = -1;        // MethodInvocation target expression
  std::vector<int> args;    // MethodInvocation / New arguments
  std::optional<Span> header;  // control statements: the part before the body
  bool statement = false;
  int name_line = 0;  // MethodInvocation: position of the method name
  int name_col = 0;
};

struct Symbol {
  std::string name;
  std::string type;  // empty for free names and untyped lambda parameters
  int decl_node = -1;
  bool free = false;  // not declared inside the function (field, class name)
};

struct FunctionAst {
  std::string source;  // newline-normalized
  std::vector<std::string> lines;
  std::string name;
  std::string return_type;  // empty for constructors
  int root = -1;
  int body = -1;
  int signature_first_line = 0;
  int signature_last_line = 0;  // line holding the body's opening brace
  std::vector<Node> nodes;
  std::vector<Symbol> symbols;

  const Node& at(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
  int line_count() const { return static_cast<int>(lines.size()); }
  bool contains(int ancestor, int node) const;
  /// `id` and every node below it, in pre-order.
  std::vector<int> subtree(int id) const;
  /// Nearest enclosing statement, or -1.
  int enclosing_statement(int id) const;
  bool is_variable_ref(int id) const;
};

/// Parses one method or constructor declaration. Throws PositionedError(ParseError).
FunctionAst parse_function(std::string_view source_text);

struct CallSite {
  int line = 0;
  int col = 0;
  int node = -1;
  bool operator==(const CallSite& o) const { return line == o.line && col == o.col; }
};

/// Invocations of `api` in source order. Throws Error(NoCallSite) when none
/// are found and `strict` is set.
std::vector<CallSite> find_call_sites(const FunctionAst& ast, const VulnerableApi& api,
                                      bool strict = true);

using NodeSet = std::set<int>;

/// Definitions feeding the call arguments, traced through the arguments of
/// invocations inside each definition.
NodeSet collect_param_context(const FunctionAst& ast, const std::vector<CallSite>& sites);

/// Statements consuming a call's result, plus one forward step of uses of a
/// variable assigned from it.
NodeSet collect_return_context(const FunctionAst& ast, const std::vector<CallSite>& sites);

struct ContextSlice {
  std::vector<int> lines;  // sorted, unique, 1-based
  std::vector<CallSite> call_sites;
  std::string slice_text;

  std::string to_json() const;
};

ContextSlice build_slice(const FunctionAst& ast, const NodeSet& param_ctx,
                         const NodeSet& ret_ctx, const std::vector<CallSite>& sites);

/// parse_function + find_call_sites + both collectors + build_slice.
ContextSlice extract_context(const ImpactedFunction& fn, bool strict = true);

struct FunctionLocation {
  int first_line = 0;  // 1-based, inclusive
  int last_line = 0;
  std::string text;  // whole lines first..last joined by '\n'
};

/// Finds the first member method named `name` in a class file. Leading
/// annotations belong to the method. Throws Error(FunctionNotFound).
FunctionLocation locate_function(std::string_view file_text, std::string_view name);

}  // namespace mitiforge::context
