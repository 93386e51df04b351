#include <algorithm>
#include <deque>

#include "json.hpp"
#include "lexer.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::context {

// --- coordinates --------------------------------------------------------------

Dependency Dependency::parse(std::string_view coordinate) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    auto colon = coordinate.find(':', start);
    parts.emplace_back(text::trim(coordinate.substr(start, colon - start)));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  Dependency d;
  if (parts.size() == 3) {
    d = {parts[0], parts[1], parts[2]};
  } else if (parts.size() == 2) {
    d = {"", parts[0], parts[1]};
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "dependency must be group:artifact:version, got '" + std::string(coordinate) + "'");
  }
  if (d.artifact.empty() || d.version.empty()) {
    throw Error(ErrorCode::InvalidArgument, "dependency needs an artifact and a version");
  }
  return d;
}

std::string Dependency::coordinate() const {
  return (group.empty() ? "" : group + ":") + artifact + ":" + version;
}

VulnerableApi VulnerableApi::parse(std::string_view spec) {
  spec = text::trim(spec);
  VulnerableApi api;
  auto sep = spec.find('#');
  if (sep == std::string_view::npos) sep = spec.rfind('.');
  if (sep == std::string_view::npos) {
    api.method_name = std::string(spec);
  } else {
    api.type_or_receiver = std::string(spec.substr(0, sep));
    api.method_name = std::string(spec.substr(sep + 1));
  }
  if (api.method_name.empty()) throw Error(ErrorCode::InvalidArgument, "API method name is empty");
  if (api.type_or_receiver && api.type_or_receiver->empty()) api.type_or_receiver.reset();
  return api;
}

std::string VulnerableApi::to_string() const {
  return type_or_receiver ? *type_or_receiver + "#" + method_name : method_name;
}

// --- tree queries -------------------------------------------------------------

bool FunctionAst::contains(int ancestor, int node) const {
  for (int n = node; n >= 0; n = at(n).parent) {
    if (n == ancestor) return true;
  }
  return false;
}

std::vector<int> FunctionAst::subtree(int id) const {
  std::vector<int> out;
  std::vector<int> stack{id};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = at(n).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

int FunctionAst::enclosing_statement(int id) const {
  for (int n = at(id).parent; n >= 0; n = at(n).parent) {
    if (at(n).statement) return n;
  }
  return -1;
}

bool FunctionAst::is_variable_ref(int id) const {
  const auto& n = at(id);
  return n.symbol >= 0 && (n.syntax == "Name" || n.syntax == "FieldAccess");
}

// --- call sites ---------------------------------------------------------------

namespace {

std::string simple_type_name(std::string_view type) {
  auto lt = type.find('<');
  if (lt != std::string_view::npos) type = type.substr(0, lt);
  while (!type.empty() && (type.back() == ']' || type.back() == '[')) type.remove_suffix(1);
  auto dot = type.rfind('.');
  if (dot != std::string_view::npos) type = type.substr(dot + 1);
  return std::string(text::trim(type));
}

bool receiver_matches(const FunctionAst& ast, int receiver, const std::string& want) {
  if (receiver < 0) return false;
  const Node& r = ast.at(receiver);
  const std::string want_simple = simple_type_name(want);
  std::string_view rtext =
      std::string_view(ast.source).substr(r.span.begin, r.span.end - r.span.begin);
  if (rtext == want || rtext == want_simple) return true;
  if (r.syntax == "Name" && r.symbol >= 0) {
    const Symbol& s = ast.symbols[static_cast<std::size_t>(r.symbol)];
    if (!s.type.empty() && simple_type_name(s.type) == want_simple) return true;
  }
  if (r.syntax == "New" || r.syntax == "Cast") return simple_type_name(r.text) == want_simple;
  if (r.syntax == "Parens" && !r.children.empty()) {
    return receiver_matches(ast, r.children.front(), want);
  }
  return false;
}

}  // namespace

std::vector<CallSite> find_call_sites(const FunctionAst& ast, const VulnerableApi& api,
                                      bool strict) {
  std::vector<CallSite> sites;
  for (int id : ast.subtree(ast.root)) {
    const Node& n = ast.at(id);
    if (n.kind != NodeKind::MethodInvocation || n.text != api.method_name) continue;
    if (api.type_or_receiver && !receiver_matches(ast, n.receiver, *api.type_or_receiver)) continue;
    sites.push_back(CallSite{n.name_line, n.name_col, id});
  }
  std::sort(sites.begin(), sites.end(), [&](const CallSite& a, const CallSite& b) {
    return std::pair(a.line, a.col) < std::pair(b.line, b.col);
  });
  if (sites.empty() && strict) {
    throw Error(ErrorCode::NoCallSite,
                "no invocation of " + api.to_string() + " in " + ast.name);
  }
  return sites;
}

// --- collectors ---------------------------------------------------------------

namespace {

struct Definition {
  int collected;  // node reported in the context set
  int traced;     // subtree searched for further invocations
  std::size_t begin;
};

std::vector<std::vector<Definition>> definitions(const FunctionAst& ast) {
  std::vector<std::vector<Definition>> defs(ast.symbols.size());
  for (int id : ast.subtree(ast.root)) {
    const Node& n = ast.at(id);
    if (n.symbol < 0) continue;
    if (n.syntax == "VariableDeclarator" && n.parent >= 0) {
      defs[static_cast<std::size_t>(n.symbol)].push_back({n.parent, id, n.span.begin});
    } else if (n.kind == NodeKind::Assignment) {
      defs[static_cast<std::size_t>(n.symbol)].push_back({id, id, n.span.begin});
    }
  }
  return defs;
}

void push_refs(const FunctionAst& ast, int expr, std::deque<int>& work) {
  for (int id : ast.subtree(expr)) {
    if (ast.is_variable_ref(id)) work.push_back(ast.at(id).symbol);
  }
}

int site_node(const FunctionAst& ast, const CallSite& site) {
  if (site.node >= 0) return site.node;
  for (int id : ast.subtree(ast.root)) {
    const Node& n = ast.at(id);
    if (n.kind == NodeKind::MethodInvocation && n.name_line == site.line && n.name_col == site.col) {
      return id;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "call site " + std::to_string(site.line) + ":" +
                                              std::to_string(site.col) + " is not an invocation");
}

}  // namespace

NodeSet collect_param_context(const FunctionAst& ast, const std::vector<CallSite>& sites) {
  const auto defs = definitions(ast);
  NodeSet out;
  for (const auto& site : sites) {
    const int call = site_node(ast, site);
    const std::size_t limit = ast.at(call).span.begin;
    std::vector<bool> visited(ast.symbols.size(), false);
    std::deque<int> work;
    for (int arg : ast.at(call).args) push_refs(ast, arg, work);
    while (!work.empty()) {
      const int sym = work.front();
      work.pop_front();
      if (visited[static_cast<std::size_t>(sym)]) continue;
      visited[static_cast<std::size_t>(sym)] = true;
      for (const auto& d : defs[static_cast<std::size_t>(sym)]) {
        if (d.begin >= limit) continue;
        out.insert(d.collected);
        for (int id : ast.subtree(d.traced)) {
          if (ast.at(id).kind != NodeKind::MethodInvocation) continue;
          for (int arg : ast.at(id).args) push_refs(ast, arg, work);
        }
      }
    }
  }
  return out;
}

NodeSet collect_return_context(const FunctionAst& ast, const std::vector<CallSite>& sites) {
  NodeSet out;
  for (const auto& site : sites) {
    const int call = site_node(ast, site);
    for (int n = ast.at(call).parent; n >= 0; n = ast.at(n).parent) {
      const Node& node = ast.at(n);
      int assigned = -1;
      std::size_t after = node.span.end;
      if (node.kind == NodeKind::ReturnStatement) {
        out.insert(n);
      } else if (node.kind == NodeKind::Assignment) {
        out.insert(n);
        assigned = node.symbol;
      } else if (node.syntax == "VariableDeclarator") {
        out.insert(node.parent);
        assigned = node.symbol;
        after = ast.at(node.parent).span.end;
      }
      if (assigned < 0) continue;
      for (int id : ast.subtree(ast.root)) {
        if (!ast.is_variable_ref(id) || ast.at(id).symbol != assigned) continue;
        if (ast.at(id).span.begin < after) continue;
        int stmt = ast.enclosing_statement(id);
        if (stmt >= 0) out.insert(stmt);
      }
    }
  }
  return out;
}

// --- slice --------------------------------------------------------------------

namespace {

void add_range(std::set<int>& lines, int first, int last) {
  for (int l = first; l <= last; ++l) lines.insert(l);
}

void add_node_lines(const FunctionAst& ast, std::set<int>& lines, int id) {
  const Node& n = ast.at(id);
  if (n.header) {
    add_range(lines, n.header->first_line, n.header->last_line);
  } else {
    add_range(lines, n.span.first_line, n.span.last_line);
  }
}

}  // namespace

ContextSlice build_slice(const FunctionAst& ast, const NodeSet& param_ctx,
                         const NodeSet& ret_ctx, const std::vector<CallSite>& sites) {
  std::set<int> lines;
  add_range(lines, ast.signature_first_line, ast.signature_last_line);
  for (int id : param_ctx) add_node_lines(ast, lines, id);
  for (int id : ret_ctx) add_node_lines(ast, lines, id);
  for (const auto& site : sites) {
    lines.insert(site.line);
    int stmt = ast.enclosing_statement(site_node(ast, site));
    if (stmt >= 0) add_node_lines(ast, lines, stmt);
  }
  ContextSlice slice;
  slice.call_sites = sites;
  std::vector<std::string> rendered;
  for (int l : lines) {
    if (l < 1 || l > ast.line_count()) continue;
    slice.lines.push_back(l);
    rendered.push_back(ast.lines[static_cast<std::size_t>(l - 1)]);
  }
  slice.slice_text = text::join(rendered, "\n");
  return slice;
}

std::string ContextSlice::to_json() const {
  nlohmann::ordered_json sites = nlohmann::ordered_json::array();
  for (const auto& s : call_sites) sites.push_back({{"line", s.line}, {"col", s.col}});
  return nlohmann::ordered_json{{"lines", lines}, {"call_sites", sites}, {"slice_text", slice_text}}
      .dump();
}

ContextSlice extract_context(const ImpactedFunction& fn, bool strict) {
  auto ast = parse_function(fn.source_text);
  auto sites = find_call_sites(ast, fn.api, strict);
  if (sites.empty()) return build_slice(ast, {}, {}, sites);
  return build_slice(ast, collect_param_context(ast, sites), collect_return_context(ast, sites),
                     sites);
}

// --- locating a method inside a class file ------------------------------------

FunctionLocation locate_function(std::string_view file_text, std::string_view name) {
  using detail::Tok;
  const std::string src = text::normalize_newlines(file_text);
  const auto toks = detail::lex(src);
  int depth = 0;
  std::size_t member_start = 0;  // first token of the current member declaration
  for (std::size_t i = 0; i < toks.size() && toks[i].kind != Tok::End; ++i) {
    const auto& t = toks[i];
    if (t.is("{")) {
      ++depth;
      member_start = i + 1;
      continue;
    }
    if (t.is("}")) {
      --depth;
      member_start = i + 1;
      continue;
    }
    if (t.is(";")) {
      member_start = i + 1;
      continue;
    }
    if (depth != 1 || t.kind != Tok::Ident || t.text != name || !toks[i + 1].is("(")) continue;
    // the name must follow a type or modifier, not a '.' or an operator
    if (i > member_start && (toks[i - 1].kind == Tok::Op && !toks[i - 1].is(">") &&
                             !toks[i - 1].is("]"))) {
      continue;
    }
    std::size_t j = i + 1;
    int parens = 0;
    for (; toks[j].kind != Tok::End; ++j) {
      if (toks[j].is("(")) ++parens;
      if (toks[j].is(")") && --parens == 0) break;
    }
    for (; toks[j].kind != Tok::End && !toks[j].is("{") && !toks[j].is(";"); ++j) {
    }
    if (!toks[j].is("{")) continue;  // abstract or interface method
    int braces = 0;
    for (; toks[j].kind != Tok::End; ++j) {
      if (toks[j].is("{")) ++braces;
      if (toks[j].is("}") && --braces == 0) break;
    }
    if (toks[j].kind == Tok::End) break;
    FunctionLocation loc;
    loc.first_line = toks[member_start].line;
    loc.last_line = toks[j].line;
    auto lines = text::split_lines(src);
    std::vector<std::string> picked;
    for (int l = loc.first_line; l <= loc.last_line; ++l) {
      picked.emplace_back(lines[static_cast<std::size_t>(l - 1)]);
    }
    loc.text = text::join(picked, "\n");
    return loc;
  }
  throw Error(ErrorCode::FunctionNotFound, "method '" + std::string(name) + "' not found");
}

}  // namespace mitiforge::context
