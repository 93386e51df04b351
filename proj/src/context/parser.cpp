#include <algorithm>
#include <map>
#include <string>

#include "lexer.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::context {

using detail::Tok;
using detail::Token;

namespace {

bool is_modifier(std::string_view w) {
  return w == "public" || w == "protected" || w == "private" || w == "static" || w == "final" ||
         w == "abstract" || w == "synchronized" || w == "native" || w == "strictfp" ||
         w == "transient" || w == "volatile" || w == "default";
}

bool is_literal(const Token& t) {
  return t.kind == Tok::Number || t.kind == Tok::String || t.kind == Tok::Char ||
         (t.kind == Tok::Keyword && (t.text == "true" || t.text == "false" || t.text == "null"));
}

class Parser {
 public:
  Parser(FunctionAst& ast, std::vector<Token> toks) : ast_(ast), toks_(std::move(toks)) {}

  void parse_top() {
    scopes_.emplace_back();
    const std::size_t start = pos_;
    skip_modifiers();
    if (at("<")) skip_balanced("<", ">");
    int root = make(NodeKind::Other, "MethodDeclaration", tok(start));
    ast_.root = root;
    ast_.signature_first_line = tok(start).line;
    if (peek().kind == Tok::Ident && peek(1).is("(")) {
      ast_.name = std::string(take().text);
    } else {
      ast_.return_type = type_text();
      if (peek().kind != Tok::Ident) fail(peek(), "expected method name");
      ast_.name = std::string(take().text);
    }
    ast_.nodes[root].text = ast_.name;
    parameters(root);
    while (at("[")) {
      take();
      expect("]");
    }
    if (at("throws")) {
      take();
      do {
        type_text();
      } while (accept(","));
    }
    if (!at("{")) fail(peek(), "expected method body");
    ast_.signature_last_line = peek().line;
    ast_.body = block();
    adopt(root, ast_.body);
    finish(root);
    if (peek().kind != Tok::End) fail(peek(), "unexpected tokens after method body");
  }

 private:
  // --- token plumbing ---------------------------------------------------------

  const Token& tok(std::size_t i) const { return toks_[std::min(i, toks_.size() - 1)]; }
  const Token& peek(std::size_t k = 0) const { return tok(pos_ + k); }
  bool at(std::string_view s) const { return peek().is(s); }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }
  bool accept(std::string_view s) {
    if (!at(s)) return false;
    take();
    return true;
  }
  const Token& expect(std::string_view s) {
    if (!at(s)) fail(peek(), "expected '" + std::string(s) + "'");
    return take();
  }
  const Token& prev() const { return tok(pos_ == 0 ? 0 : pos_ - 1); }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string found = t.kind == Tok::End ? "end of input" : "'" + std::string(t.text) + "'";
    throw PositionedError(ErrorCode::ParseError,
                          msg + ", found " + found + " at " + std::to_string(t.line) + ":" +
                              std::to_string(t.col),
                          t.line, t.col, t.begin);
  }

  // adjacent '>' tokens, starting at the current one
  std::size_t gt_run() const {
    std::size_t n = 0;
    while (peek(n).is(">") && (n == 0 || peek(n).begin == peek(n - 1).end)) ++n;
    return n;
  }
  bool adjacent_eq(std::size_t k) const {
    return peek(k).is("=") && peek(k).begin == peek(k - 1).end;
  }

  // --- nodes and scopes -------------------------------------------------------

  int make(NodeKind kind, std::string syntax, const Token& first) {
    Node n;
    n.kind = kind;
    n.syntax = std::move(syntax);
    n.span.begin = first.begin;
    n.span.end = first.end;
    n.span.first_line = first.line;
    n.span.first_col = first.col;
    n.span.last_line = first.line;
    ast_.nodes.push_back(std::move(n));
    return static_cast<int>(ast_.nodes.size() - 1);
  }

  int make_from(NodeKind kind, std::string syntax, int first_node) {
    Node n;
    n.kind = kind;
    n.syntax = std::move(syntax);
    n.span = ast_.nodes[first_node].span;
    ast_.nodes.push_back(std::move(n));
    return static_cast<int>(ast_.nodes.size() - 1);
  }

  void finish(int id) {
    const Token& p = prev();
    auto& s = ast_.nodes[id].span;
    if (p.end > s.begin) {
      s.end = p.end;
      s.last_line = p.line + static_cast<int>(std::count(p.text.begin(), p.text.end(), '\n'));
    }
  }

  Span header_until_prev(int id) const {
    Span h = ast_.nodes[id].span;
    const Token& p = prev();
    h.end = p.end;
    h.last_line = p.line;
    return h;
  }

  void adopt(int parent, int child) {
    if (child < 0) return;
    ast_.nodes[child].parent = parent;
    ast_.nodes[parent].children.push_back(child);
  }

  int declare(const std::string& name, const std::string& type, int decl_node) {
    ast_.symbols.push_back(Symbol{name, type, decl_node, false});
    int id = static_cast<int>(ast_.symbols.size() - 1);
    scopes_.back()[name] = id;
    return id;
  }

  int free_symbol(const std::string& name) {
    auto it = free_.find(name);
    if (it != free_.end()) return it->second;
    ast_.symbols.push_back(Symbol{name, "", -1, true});
    int id = static_cast<int>(ast_.symbols.size() - 1);
    free_[name] = id;
    return id;
  }

  int resolve(const std::string& name) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return free_symbol(name);
  }

  struct ScopeGuard {
    Parser& p;
    explicit ScopeGuard(Parser& parser) : p(parser) { p.scopes_.emplace_back(); }
    ~ScopeGuard() { p.scopes_.pop_back(); }
  };

  // --- skipping helpers -------------------------------------------------------

  void skip_balanced(std::string_view open, std::string_view close) {
    const Token& start = expect(open);
    int depth = 1;
    while (depth > 0) {
      if (peek().kind == Tok::End) fail(start, "unbalanced '" + std::string(open) + "'");
      if (at(open)) ++depth;
      else if (at(close)) --depth;
      take();
    }
  }

  void skip_annotation() {
    expect("@");
    if (peek().kind != Tok::Ident) fail(peek(), "expected annotation name");
    take();
    while (at(".") && peek(1).kind == Tok::Ident) {
      take();
      take();
    }
    if (at("(")) skip_balanced("(", ")");
  }

  void skip_modifiers() {
    for (;;) {
      if (at("@") && !peek(1).is("interface")) {
        skip_annotation();
      } else if (peek().kind == Tok::Keyword && is_modifier(peek().text)) {
        take();
      } else if (peek().kind == Tok::Ident &&
                 (peek().text == "sealed" || peek().text == "non") && peek(1).kind == Tok::Ident) {
        take();
      } else {
        return;
      }
    }
  }

  bool skip_type_args() {
    if (!accept("<")) return true;
    if (accept(">")) return true;  // diamond
    do {
      while (at("@")) skip_annotation();
      if (accept("?")) {
        if (accept("extends") || accept("super")) {
          if (!skip_type(true)) return false;
        }
      } else if (!skip_type(true)) {
        return false;
      }
    } while (accept(","));
    return accept(">");
  }

  /// Advances over a type; returns false (position unspecified) on failure.
  bool skip_type(bool allow_dims) {
    while (at("@")) skip_annotation();
    const Token& t = peek();
    if (t.kind == Tok::Keyword && detail::is_primitive(t.text)) {
      take();
    } else if (t.kind == Tok::Ident) {
      take();
      if (!skip_type_args()) return false;
      while (at(".") && peek(1).kind == Tok::Ident) {
        take();
        take();
        if (!skip_type_args()) return false;
      }
    } else {
      return false;
    }
    while (allow_dims && at("[") && peek(1).is("]")) {
      take();
      take();
    }
    return true;
  }

  std::string type_text() {
    const std::size_t start = pos_;
    if (!skip_type(true)) fail(peek(), "expected a type");
    accept("...");
    return std::string(ast_.source.substr(tok(start).begin, prev().end - tok(start).begin));
  }

  bool looks_like_decl(bool allow_colon) {
    const std::size_t save = pos_;
    bool ok = false;
    try {
      while (at("final") || at("@")) {
        if (at("@")) skip_annotation(); else take();
      }
      if (skip_type(true) && peek().kind == Tok::Ident) {
        const Token& after = peek(1);
        ok = after.is("=") || after.is(";") || after.is(",") || after.is("[") ||
             (allow_colon && after.is(":"));
      }
    } catch (const PositionedError&) {
      ok = false;
    }
    pos_ = save;
    return ok;
  }

  // --- declarations -----------------------------------------------------------

  void parameters(int owner) {
    expect("(");
    if (!at(")")) {
      do {
        const Token& first = peek();
        skip_modifiers();
        std::string type = type_text();
        if (peek().kind == Tok::Keyword && peek().text == "this") {
          take();  // receiver parameter
          continue;
        }
        if (peek().kind != Tok::Ident) fail(peek(), "expected parameter name");
        int p = make(NodeKind::Other, "Parameter", first);
        std::string name(take().text);
        while (at("[")) {
          take();
          expect("]");
          type += "[]";
        }
        ast_.nodes[p].text = type;
        ast_.nodes[p].symbol = declare(name, type, p);
        finish(p);
        adopt(owner, p);
      } while (accept(","));
    }
    expect(")");
  }

  /// Declarators after a type; returns the VariableDeclaration node.
  int variable_declaration(const Token& first, const std::string& type, bool statement) {
    int decl = make(NodeKind::VariableDeclaration, "LocalVariableDeclaration", first);
    ast_.nodes[decl].text = type;
    ast_.nodes[decl].statement = statement;
    do {
      if (peek().kind != Tok::Ident) fail(peek(), "expected variable name");
      const Token& name_tok = take();
      int d = make(NodeKind::Other, "VariableDeclarator", name_tok);
      std::string dtype = type;
      while (at("[")) {
        take();
        expect("]");
        dtype += "[]";
      }
      if (accept("=")) adopt(d, at("{") ? array_init() : expr());
      finish(d);
      ast_.nodes[d].text = std::string(name_tok.text);
      ast_.nodes[d].symbol = declare(std::string(name_tok.text), dtype, d);
      adopt(decl, d);
    } while (accept(","));
    finish(decl);
    return decl;
  }

  int local_var_statement() {
    const Token& first = peek();
    while (at("final") || at("@")) {
      if (at("@")) skip_annotation(); else take();
    }
    std::string type = type_text();
    int decl = variable_declaration(first, type, true);
    expect(";");
    finish(decl);
    return decl;
  }

  int class_body(int owner) {
    int body = make(NodeKind::Other, "ClassBody", peek());
    expect("{");
    ScopeGuard scope(*this);
    while (!at("}")) {
      if (peek().kind == Tok::End) fail(peek(), "unbalanced '{' in class body");
      if (accept(";")) continue;
      const Token& first = peek();
      skip_modifiers();
      if (at("{")) {
        adopt(body, block());
        continue;
      }
      if (at("class") || at("interface")) {
        adopt(body, local_class(first));
        continue;
      }
      if (at("enum")) fail(peek(), "enum declarations are not supported");
      if (at("<")) skip_balanced("<", ">");
      if (peek().kind == Tok::Ident && peek(1).is("(")) {
        adopt(body, member_method(first, ""));
        continue;
      }
      std::string type = type_text();
      if (peek().kind == Tok::Ident && peek(1).is("(")) {
        adopt(body, member_method(first, type));
        continue;
      }
      int field = variable_declaration(first, type, true);
      ast_.nodes[field].syntax = "FieldDeclaration";
      ast_.nodes[field].kind = NodeKind::Other;
      expect(";");
      finish(field);
      adopt(body, field);
    }
    expect("}");
    finish(body);
    adopt(owner, body);
    return body;
  }

  int member_method(const Token& first, const std::string& return_type) {
    int m = make(NodeKind::Other, "MethodDeclaration", first);
    ast_.nodes[m].text = std::string(take().text);
    (void)return_type;
    ScopeGuard scope(*this);
    parameters(m);
    while (at("[")) {
      take();
      expect("]");
    }
    if (accept("throws")) {
      do {
        type_text();
      } while (accept(","));
    }
    if (!accept(";")) adopt(m, block());
    finish(m);
    return m;
  }

  int local_class(const Token& first) {
    int c = make(NodeKind::Other, "LocalClass", first);
    ast_.nodes[c].statement = true;
    take();  // class | interface
    if (peek().kind != Tok::Ident) fail(peek(), "expected class name");
    ast_.nodes[c].text = std::string(take().text);
    if (at("<")) skip_balanced("<", ">");
    while (!at("{")) {
      if (peek().kind == Tok::End || at(";")) fail(peek(), "expected class body");
      take();
    }
    class_body(c);
    finish(c);
    return c;
  }

  // --- statements -------------------------------------------------------------

  int block() {
    int b = make(NodeKind::Block, "Block", peek());
    ast_.nodes[b].statement = true;
    const Token& open = expect("{");
    ScopeGuard scope(*this);
    while (!at("}")) {
      if (peek().kind == Tok::End) fail(open, "unbalanced braces: no matching '}'");
      adopt(b, statement());
    }
    expect("}");
    finish(b);
    return b;
  }

  int simple(const char* syntax, NodeKind kind = NodeKind::Other) {
    int s = make(kind, syntax, peek());
    ast_.nodes[s].statement = true;
    return s;
  }

  int statement() {
    const Token& t = peek();
    if (t.is("{")) return block();
    if (t.is(";")) {
      int s = simple("Empty");
      take();
      finish(s);
      return s;
    }
    if (t.is("if")) return if_statement();
    if (t.is("while")) {
      int s = simple("While", NodeKind::Loop);
      take();
      expect("(");
      adopt(s, expr());
      expect(")");
      ast_.nodes[s].header = header_until_prev(s);
      adopt(s, statement());
      finish(s);
      return s;
    }
    if (t.is("do")) {
      int s = simple("DoWhile", NodeKind::Loop);
      take();
      adopt(s, statement());
      const Token& w = expect("while");
      expect("(");
      adopt(s, expr());
      expect(")");
      Span h;
      h.begin = w.begin;
      h.first_line = w.line;
      h.first_col = w.col;
      h.end = prev().end;
      h.last_line = prev().line;
      ast_.nodes[s].header = h;
      expect(";");
      finish(s);
      return s;
    }
    if (t.is("for")) return for_statement();
    if (t.is("try")) return try_statement();
    if (t.is("switch")) {
      int s = switch_construct(true);
      return s;
    }
    if (t.is("return")) {
      int s = simple("Return", NodeKind::ReturnStatement);
      take();
      if (!at(";")) adopt(s, expr());
      expect(";");
      finish(s);
      return s;
    }
    if (t.is("throw")) {
      int s = simple("Throw");
      take();
      adopt(s, expr());
      expect(";");
      finish(s);
      return s;
    }
    if (t.is("break") || t.is("continue")) {
      int s = simple(t.is("break") ? "Break" : "Continue");
      take();
      if (peek().kind == Tok::Ident) take();
      expect(";");
      finish(s);
      return s;
    }
    if (t.is("synchronized")) {
      int s = simple("Synchronized");
      take();
      expect("(");
      adopt(s, expr());
      expect(")");
      ast_.nodes[s].header = header_until_prev(s);
      adopt(s, block());
      finish(s);
      return s;
    }
    if (t.is("assert")) {
      int s = simple("Assert");
      take();
      adopt(s, expr());
      if (accept(":")) adopt(s, expr());
      expect(";");
      finish(s);
      return s;
    }
    if (t.is("class") || t.is("interface") || t.is("abstract") || t.is("static") ||
        (t.is("final") && (peek(1).is("class") || peek(1).is("interface")))) {
      const Token& first = peek();
      skip_modifiers();
      if (!(at("class") || at("interface"))) fail(peek(), "expected local class declaration");
      return local_class(first);
    }
    if (t.is("enum")) fail(t, "enum declarations are not supported");
    if (t.kind == Tok::Ident && t.text == "yield" && !peek(1).is("=") && !peek(1).is(".") &&
        !peek(1).is("(") && !peek(1).is("[") && !peek(1).is("++") && !peek(1).is("--")) {
      int s = simple("Yield");
      take();
      adopt(s, expr());
      expect(";");
      finish(s);
      return s;
    }
    if (t.kind == Tok::Ident && t.text == "record" && peek(1).kind == Tok::Ident) {
      fail(t, "record declarations are not supported");
    }
    if (t.kind == Tok::Ident && peek(1).is(":") && !peek(1).is("::")) {
      int s = simple("Labeled");
      ast_.nodes[s].text = std::string(take().text);
      take();
      adopt(s, statement());
      finish(s);
      return s;
    }
    if (looks_like_decl(false)) return local_var_statement();
    int s = simple("ExpressionStatement");
    adopt(s, expr());
    expect(";");
    finish(s);
    return s;
  }

  int if_statement() {
    int s = simple("If", NodeKind::If);
    take();
    expect("(");
    adopt(s, expr());
    expect(")");
    ast_.nodes[s].header = header_until_prev(s);
    adopt(s, statement());
    if (accept("else")) adopt(s, statement());
    finish(s);
    return s;
  }

  int for_statement() {
    int s = simple("For", NodeKind::Loop);
    take();
    expect("(");
    ScopeGuard scope(*this);
    if (looks_like_decl(true)) {
      const Token& first = peek();
      while (at("final") || at("@")) {
        if (at("@")) skip_annotation(); else take();
      }
      std::string type = type_text();
      if (peek(1).is(":")) {
        ast_.nodes[s].syntax = "ForEach";
        int decl = make(NodeKind::VariableDeclaration, "LocalVariableDeclaration", first);
        ast_.nodes[decl].text = type;
        const Token& name_tok = take();
        int d = make(NodeKind::Other, "VariableDeclarator", name_tok);
        ast_.nodes[d].text = std::string(name_tok.text);
        expect(":");
        adopt(d, expr());
        finish(d);
        ast_.nodes[d].symbol = declare(std::string(name_tok.text), type, d);
        adopt(decl, d);
        finish(decl);
        adopt(s, decl);
        expect(")");
        ast_.nodes[s].header = header_until_prev(s);
        adopt(s, statement());
        finish(s);
        return s;
      }
      adopt(s, variable_declaration(first, type, false));
    } else if (!at(";")) {
      do {
        adopt(s, expr());
      } while (accept(","));
    }
    expect(";");
    if (!at(";")) adopt(s, expr());
    expect(";");
    if (!at(")")) {
      do {
        adopt(s, expr());
      } while (accept(","));
    }
    expect(")");
    ast_.nodes[s].header = header_until_prev(s);
    adopt(s, statement());
    finish(s);
    return s;
  }

  int try_statement() {
    int s = simple("Try", NodeKind::Try);
    take();
    ScopeGuard scope(*this);
    bool resources = false;
    if (accept("(")) {
      resources = true;
      while (!at(")")) {
        if (looks_like_decl(false)) {
          const Token& first = peek();
          while (at("final") || at("@")) {
            if (at("@")) skip_annotation(); else take();
          }
          std::string type = type_text();
          adopt(s, variable_declaration(first, type, false));
        } else {
          adopt(s, expr());
        }
        if (!accept(";")) break;
      }
      expect(")");
    }
    ast_.nodes[s].header = header_until_prev(s);
    adopt(s, block());
    bool handlers = false;
    while (at("catch")) {
      handlers = true;
      int c = make(NodeKind::Other, "CatchClause", take());
      ScopeGuard catch_scope(*this);
      expect("(");
      const Token& pfirst = peek();
      skip_modifiers();
      std::string type = type_text();
      while (accept("|")) type += " | " + type_text();
      if (peek().kind != Tok::Ident) fail(peek(), "expected catch parameter name");
      int p = make(NodeKind::Other, "Parameter", pfirst);
      std::string name(take().text);
      ast_.nodes[p].text = type;
      ast_.nodes[p].symbol = declare(name, type, p);
      finish(p);
      adopt(c, p);
      expect(")");
      adopt(c, block());
      finish(c);
      adopt(s, c);
    }
    if (accept("finally")) {
      handlers = true;
      adopt(s, block());
    }
    if (!handlers && !resources) fail(peek(), "expected 'catch' or 'finally'");
    finish(s);
    return s;
  }

  int switch_construct(bool as_statement) {
    int s = as_statement ? simple("Switch") : make(NodeKind::Other, "SwitchExpression", peek());
    take();
    expect("(");
    adopt(s, expr());
    expect(")");
    ast_.nodes[s].header = header_until_prev(s);
    expect("{");
    ScopeGuard scope(*this);
    while (!at("}")) {
      if (peek().kind == Tok::End) fail(peek(), "unbalanced '{' in switch");
      if (accept("default")) {
      } else if (accept("case")) {
        do {
          adopt(s, conditional());
        } while (accept(","));
      } else {
        adopt(s, statement());
        continue;
      }
      if (accept("->")) {
        if (at("{")) {
          adopt(s, block());
        } else if (at("throw")) {
          adopt(s, statement());
        } else {
          int e = simple("ExpressionStatement");
          adopt(e, expr());
          expect(";");
          finish(e);
          adopt(s, e);
        }
      } else {
        expect(":");
      }
    }
    expect("}");
    finish(s);
    return s;
  }

  // --- expressions ------------------------------------------------------------

  int target_symbol(int e) const {
    const Node& n = ast_.nodes[e];
    if (n.syntax == "Name" || n.syntax == "FieldAccess") return n.symbol;
    if ((n.syntax == "ArrayAccess" || n.syntax == "Parens") && !n.children.empty()) {
      return target_symbol(n.children.front());
    }
    return -1;
  }

  // assignment operator at the current position: token count, or 0
  std::size_t assign_op(std::string& op) const {
    static constexpr std::string_view ops[] = {"=",  "+=", "-=", "*=", "/=",
                                               "%=", "&=", "|=", "^=", "<<="};
    for (auto o : ops) {
      if (at(o)) {
        op = std::string(o);
        return 1;
      }
    }
    std::size_t n = gt_run();
    if ((n == 2 || n == 3) && adjacent_eq(n)) {
      op = std::string(n, '>') + "=";
      return n + 1;
    }
    return 0;
  }

  bool lambda_ahead() const {
    if (peek().kind == Tok::Ident && peek(1).is("->")) return true;
    if (!at("(")) return false;
    int depth = 0;
    for (std::size_t k = 0;; ++k) {
      const Token& t = peek(k);
      if (t.kind == Tok::End) return false;
      if (t.is("(")) ++depth;
      if (t.is(")") && --depth == 0) return peek(k + 1).is("->");
    }
  }

  int expr() {
    if (lambda_ahead()) return lambda();
    int lhs = conditional();
    std::string op;
    if (std::size_t n = assign_op(op)) {
      for (std::size_t i = 0; i < n; ++i) take();
      int rhs = expr();
      int a = make_from(NodeKind::Assignment, "Assignment", lhs);
      ast_.nodes[a].text = op;
      ast_.nodes[a].symbol = target_symbol(lhs);
      adopt(a, lhs);
      adopt(a, rhs);
      finish(a);
      return a;
    }
    return lhs;
  }

  int lambda() {
    int l = make(NodeKind::Other, "Lambda", peek());
    ScopeGuard scope(*this);
    auto param = [&](const Token& first, const std::string& type) {
      if (peek().kind != Tok::Ident) fail(peek(), "expected lambda parameter");
      int p = make(NodeKind::Other, "Parameter", first);
      std::string name(take().text);
      ast_.nodes[p].text = type;
      ast_.nodes[p].symbol = declare(name, type, p);
      finish(p);
      adopt(l, p);
    };
    if (peek().kind == Tok::Ident) {
      param(peek(), "");
    } else {
      expect("(");
      if (!at(")")) {
        do {
          const Token& first = peek();
          skip_modifiers();
          if (peek().kind == Tok::Ident && (peek(1).is(",") || peek(1).is(")"))) {
            param(first, "");
          } else {
            std::string type = type_text();
            param(first, type);
          }
        } while (accept(","));
      }
      expect(")");
    }
    expect("->");
    adopt(l, at("{") ? block() : expr());
    finish(l);
    return l;
  }

  int conditional() {
    int c = binary(1);
    if (!at("?")) return c;
    take();
    int q = make_from(NodeKind::Other, "Conditional", c);
    adopt(q, c);
    adopt(q, expr());
    expect(":");
    adopt(q, lambda_ahead() ? lambda() : conditional());
    finish(q);
    return q;
  }

  // binary operator at the current position: precedence and token count
  int binop(std::string& op, std::size_t& ntok) const {
    ntok = 1;
    const Token& t = peek();
    if (t.is(">")) {
      std::size_t n = gt_run();
      if (n >= 2) {
        std::size_t shift = std::min<std::size_t>(n, 3);
        if (adjacent_eq(shift)) return 0;  // >>= / >>>=
        op = std::string(shift, '>');
        ntok = shift;
        return 8;
      }
      if (adjacent_eq(1)) {
        op = ">=";
        ntok = 2;
        return 7;
      }
      op = ">";
      return 7;
    }
    if (t.kind != Tok::Op && !t.is("instanceof")) return 0;
    static const std::map<std::string_view, int> prec = {
        {"||", 1}, {"&&", 2}, {"|", 3},  {"^", 4},  {"&", 5},  {"==", 6}, {"!=", 6},
        {"<", 7},  {"<=", 7}, {"<<", 8}, {"+", 9},  {"-", 9},  {"*", 10}, {"/", 10},
        {"%", 10}, {"instanceof", 7}};
    auto it = prec.find(t.text);
    if (it == prec.end()) return 0;
    op = std::string(t.text);
    return it->second;
  }

  int binary(int min_prec) {
    int lhs = unary();
    for (;;) {
      std::string op;
      std::size_t ntok = 1;
      int p = binop(op, ntok);
      if (p == 0 || p < min_prec) return lhs;
      for (std::size_t i = 0; i < ntok; ++i) take();
      if (op == "instanceof") {
        int n = make_from(NodeKind::Other, "InstanceOf", lhs);
        adopt(n, lhs);
        accept("final");
        std::string type = type_text();
        ast_.nodes[n].text = type;
        if (peek().kind == Tok::Ident) {
          int pat = make(NodeKind::Other, "Parameter", peek());
          std::string name(take().text);
          ast_.nodes[pat].text = type;
          ast_.nodes[pat].symbol = declare(name, type, pat);
          finish(pat);
          adopt(n, pat);
        }
        finish(n);
        lhs = n;
        continue;
      }
      int rhs = binary(p + 1);
      int n = make_from(NodeKind::Other, "Binary", lhs);
      ast_.nodes[n].text = op;
      adopt(n, lhs);
      adopt(n, rhs);
      finish(n);
      lhs = n;
    }
  }

  bool cast_follows(const Token& t) const {
    if (t.kind == Tok::Ident || is_literal(t)) return true;
    return t.is("(") || t.is("!") || t.is("~") || t.is("this") || t.is("super") || t.is("new") ||
           t.is("switch") || (t.kind == Tok::Keyword && detail::is_primitive(t.text));
  }

  // returns the cast node, or -1 after restoring the position
  int try_cast() {
    const std::size_t save = pos_;
    const Token& open = take();
    bool primitive = peek().kind == Tok::Keyword && detail::is_primitive(peek().text);
    bool ok = false;
    try {
      ok = skip_type(true);
      while (ok && accept("&")) ok = skip_type(true);
      ok = ok && at(")");
    } catch (const PositionedError&) {
      ok = false;
    }
    if (ok) {
      const std::size_t type_end = peek().begin;
      take();  // ')'
      if (primitive ? true : cast_follows(peek())) {
        int c = make(NodeKind::Other, "Cast", open);
        ast_.nodes[c].text =
            std::string(text::trim(ast_.source.substr(open.end, type_end - open.end)));
        adopt(c, lambda_ahead() ? lambda() : unary());
        finish(c);
        return c;
      }
    }
    pos_ = save;
    return -1;
  }

  int unary() {
    const Token& t = peek();
    if (t.is("+") || t.is("-") || t.is("!") || t.is("~") || t.is("++") || t.is("--")) {
      int u = make(NodeKind::Other, "Unary", take());
      ast_.nodes[u].text = std::string(t.text);
      adopt(u, unary());
      finish(u);
      return u;
    }
    if (t.is("(") && !lambda_ahead()) {
      int c = try_cast();
      if (c >= 0) return c;
    }
    return postfix(primary());
  }

  std::vector<int> arguments(int owner) {
    std::vector<int> args;
    expect("(");
    if (!at(")")) {
      do {
        int a = expr();
        args.push_back(a);
        adopt(owner, a);
      } while (accept(","));
    }
    expect(")");
    return args;
  }

  int invocation(const Token& name_tok, int receiver, int begin_node) {
    int m = begin_node >= 0 ? make_from(NodeKind::MethodInvocation, "MethodInvocation", begin_node)
                            : make(NodeKind::MethodInvocation, "MethodInvocation", name_tok);
    auto& n = ast_.nodes[m];
    n.text = std::string(name_tok.text);
    n.name_line = name_tok.line;
    n.name_col = name_tok.col;
    n.receiver = receiver;
    adopt(m, receiver);
    auto args = arguments(m);
    ast_.nodes[m].args = std::move(args);
    finish(m);
    return m;
  }

  int postfix(int e) {
    for (;;) {
      if (at(".")) {
        take();
        if (at("<")) {
          if (!skip_type_args()) fail(peek(), "malformed type arguments");
        }
        const Token& t = peek();
        if (t.kind == Tok::Ident) {
          take();
          if (at("(")) {
            e = invocation(t, e, e);
          } else {
            int f = make_from(NodeKind::Other, "FieldAccess", e);
            ast_.nodes[f].text = std::string(t.text);
            if (ast_.nodes[e].syntax == "This") ast_.nodes[f].symbol = free_symbol(ast_.nodes[f].text);
            adopt(f, e);
            finish(f);
            e = f;
          }
        } else if (t.is("class") || t.is("this")) {
          take();
          int f = make_from(NodeKind::Other, t.is("class") ? "ClassLiteral" : "FieldAccess", e);
          ast_.nodes[f].text = std::string(t.text);
          adopt(f, e);
          finish(f);
          e = f;
        } else if (t.is("new")) {
          fail(t, "qualified instance creation is not supported");
        } else {
          fail(t, "expected member name");
        }
      } else if (at("[") && peek(1).is("]")) {
        while (at("[") && peek(1).is("]")) {
          take();
          take();
        }
        if (at("::")) continue;
        expect(".");
        const Token& c = expect("class");
        int f = make_from(NodeKind::Other, "ClassLiteral", e);
        ast_.nodes[f].text = std::string(c.text);
        adopt(f, e);
        finish(f);
        e = f;
      } else if (at("[")) {
        take();
        int a = make_from(NodeKind::Other, "ArrayAccess", e);
        adopt(a, e);
        adopt(a, expr());
        expect("]");
        finish(a);
        e = a;
      } else if (at("::")) {
        take();
        int r = make_from(NodeKind::Other, "MethodRef", e);
        if (at("<") && !skip_type_args()) fail(peek(), "malformed type arguments");
        if (peek().kind == Tok::Ident || at("new")) {
          ast_.nodes[r].text = std::string(take().text);
        } else {
          fail(peek(), "expected method reference name");
        }
        adopt(r, e);
        finish(r);
        e = r;
      } else if (at("++") || at("--")) {
        int p = make_from(NodeKind::Other, "Postfix", e);
        ast_.nodes[p].text = std::string(take().text);
        adopt(p, e);
        finish(p);
        e = p;
      } else {
        return e;
      }
    }
  }

  int array_init() {
    int a = make(NodeKind::Other, "ArrayInit", peek());
    expect("{");
    while (!at("}")) {
      adopt(a, at("{") ? array_init() : expr());
      if (!accept(",")) break;
    }
    expect("}");
    finish(a);
    return a;
  }

  int creator() {
    int n = make(NodeKind::Other, "New", take());
    if (at("<") && !skip_type_args()) fail(peek(), "malformed type arguments");
    const std::size_t type_start = pos_;
    if (!skip_type(false)) fail(peek(), "expected a type after 'new'");
    ast_.nodes[n].text = std::string(
        ast_.source.substr(tok(type_start).begin, prev().end - tok(type_start).begin));
    if (at("[")) {
      ast_.nodes[n].syntax = "NewArray";
      bool sized = false;
      while (at("[")) {
        take();
        if (at("]")) {
          take();
        } else {
          sized = true;
          adopt(n, expr());
          expect("]");
        }
      }
      if (!sized) {
        if (!at("{")) fail(peek(), "expected array initializer");
        adopt(n, array_init());
      }
      finish(n);
      return n;
    }
    ast_.nodes[n].args = arguments(n);
    if (at("{")) class_body(n);
    finish(n);
    return n;
  }

  int primary() {
    const Token& t = peek();
    if (is_literal(t)) {
      int l = make(NodeKind::Other, "Literal", take());
      ast_.nodes[l].text = std::string(t.text);
      return l;
    }
    if (t.is("this") || t.is("super")) {
      take();
      if (at("(")) return invocation(t, -1, -1);
      int n = make(NodeKind::Other, t.is("this") ? "This" : "Super", t);
      ast_.nodes[n].text = std::string(t.text);
      return n;
    }
    if (t.is("new")) return creator();
    if (t.is("switch")) return switch_construct(false);
    if (t.is("(")) {
      int p = make(NodeKind::Other, "Parens", take());
      adopt(p, expr());
      expect(")");
      finish(p);
      return p;
    }
    if (t.kind == Tok::Ident) {
      take();
      if (at("(")) return invocation(t, -1, -1);
      int n = make(NodeKind::Other, "Name", t);
      ast_.nodes[n].text = std::string(t.text);
      ast_.nodes[n].symbol = resolve(ast_.nodes[n].text);
      return n;
    }
    if (t.kind == Tok::Keyword && detail::is_primitive(t.text)) {
      int n = make(NodeKind::Other, "TypeName", take());
      ast_.nodes[n].text = std::string(t.text);
      if (!(at("[") || at(".") || at("::"))) fail(peek(), "expected class literal");
      return n;
    }
    fail(t, "expected an expression");
  }

  FunctionAst& ast_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::map<std::string, int>> scopes_;
  std::map<std::string, int> free_;
};

}  // namespace

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::MethodInvocation: return "MethodInvocation";
    case NodeKind::Assignment: return "Assignment";
    case NodeKind::VariableDeclaration: return "VariableDeclaration";
    case NodeKind::ReturnStatement: return "ReturnStatement";
    case NodeKind::Block: return "Block";
    case NodeKind::If: return "If";
    case NodeKind::Loop: return "Loop";
    case NodeKind::Try: return "Try";
    case NodeKind::Other: return "Other";
  }
  return "Other";
}

FunctionAst parse_function(std::string_view source_text) {
  FunctionAst ast;
  ast.source = text::normalize_newlines(source_text);
  for (auto line : text::split_lines(ast.source)) ast.lines.emplace_back(line);
  if (!ast.lines.empty() && ast.lines.back().empty()) ast.lines.pop_back();
  Parser parser(ast, detail::lex(ast.source));
  parser.parse_top();
  return ast;
}

}  // namespace mitiforge::context
