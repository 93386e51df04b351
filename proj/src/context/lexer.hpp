#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace mitiforge::context::detail {

enum class Tok { Ident, Keyword, Number, Char, String, Op, End };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t begin;
  std::size_t end;
  int line;
  int col;

  bool is(std::string_view op) const {
    return (kind == Tok::Op || kind == Tok::Keyword) && text == op;
  }
};

/// '>' is always emitted alone so nested generics close one bracket per
/// token; the parser reassembles shift and comparison operators.
std::vector<Token> lex(std::string_view src);

bool is_keyword(std::string_view word);
bool is_primitive(std::string_view word);

}  // namespace mitiforge::context::detail
