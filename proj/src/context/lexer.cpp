#include "lexer.hpp"

#include <array>
#include <cctype>
#include <string>

#include "mitiforge/error.hpp"

namespace mitiforge::context::detail {

namespace {

constexpr std::array<std::string_view, 50> kKeywords = {
    "abstract", "assert",    "boolean",  "break",      "byte",      "case",
    "catch",    "char",      "class",    "const",      "continue",  "default",
    "do",       "double",    "else",     "enum",       "extends",   "final",
    "finally",  "float",     "for",      "goto",       "if",        "implements",
    "import",   "instanceof", "int",     "interface",  "long",      "native",
    "new",      "package",   "private",  "protected",  "public",    "return",
    "short",    "static",    "strictfp", "super",      "switch",    "synchronized",
    "this",     "throw",     "throws",   "transient",  "try",       "void",
    "volatile", "while"};

// longest first; '>' is deliberately absent from every multi-char entry
constexpr std::array<std::string_view, 20> kMultiOps = {
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",  "<<",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="};

constexpr std::string_view kSingleOps = "(){}[];,.@=<>!~?:+-*/&|^%";

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    out.push_back(Token{Tok::End, {}, src_.size(), src_.size(), line_, col_});
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, int line, int col) const {
    throw PositionedError(ErrorCode::ParseError,
                          msg + " at " + std::to_string(line) + ":" + std::to_string(col), line,
                          col, pos_);
  }

  char cur(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = cur();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && cur(1) == '/') {
        while (pos_ < src_.size() && cur() != '\n') advance();
      } else if (c == '/' && cur(1) == '*') {
        int l = line_, co = col_;
        advance(2);
        while (pos_ < src_.size() && !(cur() == '*' && cur(1) == '/')) advance();
        if (pos_ >= src_.size()) fail("unterminated comment", l, co);
        advance(2);
      } else {
        break;
      }
    }
  }

  Token make(Tok kind, std::size_t begin, int line, int col) const {
    return Token{kind, src_.substr(begin, pos_ - begin), begin, pos_, line, col};
  }

  Token next() {
    const std::size_t begin = pos_;
    const int line = line_, col = col_;
    const auto c = static_cast<unsigned char>(cur());

    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(cur()))) advance();
      auto tok = make(Tok::Ident, begin, line, col);
      if (is_keyword(tok.text)) tok.kind = Tok::Keyword;
      return tok;
    }
    if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(cur(1))))) {
      lex_number();
      return make(Tok::Number, begin, line, col);
    }
    if (c == '"') {
      if (cur(1) == '"' && cur(2) == '"') {
        advance(3);
        while (pos_ < src_.size() && !(cur() == '"' && cur(1) == '"' && cur(2) == '"')) {
          if (cur() == '\\') advance();
          advance();
        }
        if (pos_ >= src_.size()) fail("unterminated text block", line, col);
        advance(3);
      } else {
        lex_quoted('"', line, col);
      }
      return make(Tok::String, begin, line, col);
    }
    if (c == '\'') {
      lex_quoted('\'', line, col);
      return make(Tok::Char, begin, line, col);
    }
    for (auto op : kMultiOps) {
      if (src_.substr(pos_, op.size()) == op) {
        advance(op.size());
        return make(Tok::Op, begin, line, col);
      }
    }
    if (kSingleOps.find(static_cast<char>(c)) != std::string_view::npos) {
      advance();
      return make(Tok::Op, begin, line, col);
    }
    fail(std::string("unexpected character '") + static_cast<char>(c) + "'", line, col);
  }

  void lex_quoted(char quote, int line, int col) {
    advance();
    while (pos_ < src_.size() && cur() != quote) {
      if (cur() == '\n') fail("unterminated literal", line, col);
      if (cur() == '\\') advance();
      advance();
    }
    if (pos_ >= src_.size()) fail("unterminated literal", line, col);
    advance();
  }

  void lex_number() {
    if (cur() == '0' && (cur(1) == 'x' || cur(1) == 'X' || cur(1) == 'b' || cur(1) == 'B')) {
      advance(2);
      while (std::isxdigit(static_cast<unsigned char>(cur())) || cur() == '_') advance();
    } else {
      while (std::isdigit(static_cast<unsigned char>(cur())) || cur() == '_') advance();
      if (cur() == '.' && std::isdigit(static_cast<unsigned char>(cur(1)))) advance();
      else if (cur() == '.' && !std::isalpha(static_cast<unsigned char>(cur(1))) && cur(1) != '.')
        advance();
      while (std::isdigit(static_cast<unsigned char>(cur())) || cur() == '_') advance();
      if (cur() == 'e' || cur() == 'E') {
        advance();
        if (cur() == '+' || cur() == '-') advance();
        while (std::isdigit(static_cast<unsigned char>(cur()))) advance();
      }
    }
    if (std::string_view("lLfFdD").find(cur()) != std::string_view::npos && cur() != '\0') advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return word == "true" || word == "false" || word == "null";
}

bool is_primitive(std::string_view word) {
  return word == "int" || word == "long" || word == "short" || word == "byte" ||
         word == "char" || word == "boolean" || word == "float" || word == "double" ||
         word == "void";
}

std::vector<Token> lex(std::string_view src) { return Lexer(src).run(); }

}  // namespace mitiforge::context::detail
