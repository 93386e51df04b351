#include <cctype>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::ingest {

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF) || cp == 0) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::unordered_set<std::string>& block_tags() {
  static const std::unordered_set<std::string> tags = {
      "address", "article", "aside",  "blockquote", "br",     "caption", "center", "dd",
      "details", "div",     "dl",     "dt",         "fieldset", "figcaption", "figure", "footer",
      "form",    "h1",      "h2",     "h3",         "h4",     "h5",      "h6",     "header",
      "hr",      "li",      "main",   "nav",        "ol",     "option",  "p",      "pre",
      "section", "summary", "table",  "tbody",      "td",     "tfoot",   "th",     "thead",
      "title",   "tr",      "ul",     "body",       "html",   "head",    "dialog", "legend"};
  return tags;
}

const std::unordered_set<std::string>& dropped_tags() {
  static const std::unordered_set<std::string> tags = {"script", "style", "noscript", "template"};
  return tags;
}

const std::unordered_map<std::string, char32_t>& named_entities() {
  static const std::unordered_map<std::string, char32_t> m = {
      {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
      {"apos", '\''},    {"nbsp", ' '},     {"copy", 0xA9},    {"reg", 0xAE},
      {"trade", 0x2122}, {"mdash", 0x2014}, {"ndash", 0x2013}, {"hellip", 0x2026},
      {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
      {"laquo", 0xAB},   {"raquo", 0xBB},   {"middot", 0xB7},  {"bull", 0x2022},
      {"sect", 0xA7},    {"para", 0xB6},    {"times", 0xD7},   {"euro", 0x20AC}};
  return m;
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

class LineBuilder {
 public:
  void text(std::string_view s, bool preformatted) {
    for (char c : s) {
      if (is_ws(c)) {
        if (preformatted && c == '\n') {
          break_line();
        } else if (!cur_.empty()) {
          pending_space_ = true;
        }
      } else {
        if (pending_space_) cur_.push_back(' ');
        pending_space_ = false;
        cur_.push_back(c);
      }
    }
  }

  void break_line() {
    if (!cur_.empty()) lines_.push_back(std::move(cur_));
    cur_.clear();
    pending_space_ = false;
  }

  std::string finish() {
    break_line();
    std::string out;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      if (i) out.push_back('\n');
      const auto& line = lines_[i];
      for (std::size_t j = 0; j < line.size(); ++j) {
        out.push_back(line[j]);
        // decoded "&lt;" must not read back as markup
        if (line[j] == '<' && j + 1 < line.size() && (is_alpha(line[j + 1]) || line[j + 1] == '/')) out.push_back(' ');
      }
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
  std::string cur_;
  bool pending_space_ = false;
};

// Decodes one entity starting at s[pos] == '&'. Returns consumed length, 0
// when the text is not an entity.
std::size_t decode_entity(std::string_view s, std::size_t pos, std::string& out) {
  auto semi = s.find(';', pos);
  if (semi == std::string_view::npos || semi - pos > 12 || semi == pos + 1) return 0;
  auto body = s.substr(pos + 1, semi - pos - 1);
  char32_t cp = 0;
  if (body[0] == '#') {
    bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
    auto digits = body.substr(hex ? 2 : 1);
    if (digits.empty()) return 0;
    for (char c : digits) {
      int v;
      if (c >= '0' && c <= '9') {
        v = c - '0';
      } else if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
        v = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
      } else {
        return 0;
      }
      cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
      if (cp > 0x10FFFF) cp = 0xFFFD;
    }
  } else {
    auto it = named_entities().find(std::string(body));
    if (it == named_entities().end()) return 0;
    cp = it->second;
  }
  append_utf8(out, cp);
  return semi - pos + 1;
}

// Index just past the '>' that closes a tag opened at `pos`, honouring quoted
// attribute values.
std::size_t tag_end(std::string_view s, std::size_t pos) {
  char quote = 0;
  for (std::size_t i = pos; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    }
  }
  return s.size();
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const auto n = bytes.size();
  while (i < n) {
    auto b = static_cast<unsigned char>(bytes[i]);
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
      ++i;
      continue;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b & 0xE0) == 0xC0) {
      len = 2;
      cp = b & 0x1F;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4;
      cp = b & 0x07;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      auto c = static_cast<unsigned char>(bytes[i + k]);
      if ((c & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (c & 0x3F);
      }
    }
    if (ok) {
      static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
      ok = cp >= min_for_len[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      append_utf8(out, 0xFFFD);
      ++i;
    }
  }
  return out;
}

bool is_ascii_dominant(std::string_view text) {
  std::size_t ascii_letters = 0;
  std::size_t non_ascii = 0;
  for (unsigned char c : text) {
    if (c < 0x80) {
      if (std::isalpha(c)) ++ascii_letters;
    } else if ((c & 0xC0) != 0x80) {
      ++non_ascii;  // lead byte of a multi-byte code point
    }
  }
  return ascii_letters >= non_ascii;
}

std::string html_to_text(std::string_view page) {
  const std::string src = sanitize_utf8(page);
  const std::string_view s(src);
  LineBuilder out;
  int pre_depth = 0;
  std::string run;
  auto flush_run = [&] {
    out.text(run, pre_depth > 0);
    run.clear();
  };

  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '&') {
      if (auto used = decode_entity(s, i, run)) {
        i += used;
        continue;
      }
      run.push_back(c);
      ++i;
      continue;
    }
    if (c != '<') {
      run.push_back(c);
      ++i;
      continue;
    }
    // markup
    if (s.compare(i, 4, "<!--") == 0) {
      auto end = s.find("-->", i + 4);
      i = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
      i = tag_end(s, i + 2);
      continue;
    }
    bool closing = i + 1 < s.size() && s[i + 1] == '/';
    std::size_t name_start = i + (closing ? 2 : 1);
    if (name_start >= s.size() || !is_alpha(s[name_start])) {
      run.push_back(c);
      ++i;
      continue;
    }
    std::size_t name_end = name_start;
    while (name_end < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[name_end])) || s[name_end] == '-' ||
            s[name_end] == ':')) {
      ++name_end;
    }
    std::string name = text::to_lower(s.substr(name_start, name_end - name_start));
    std::size_t after = tag_end(s, name_end);
    bool self_closing = after >= 2 && s[after - 2] == '/';
    i = after;

    if (!closing && !self_closing && dropped_tags().count(name)) {
      // skip raw text up to the matching close tag
      std::size_t close = text::find_icase(s, "</" + name, i);
      i = close == std::string_view::npos ? s.size() : tag_end(s, close);
      continue;
    }
    if (block_tags().count(name)) {
      flush_run();
      out.break_line();
      if (name == "pre") pre_depth = closing ? std::max(0, pre_depth - 1) : pre_depth + 1;
    } else {
      // void elements separate words; other inline tags do not
      if (name == "img" || name == "input" || name == "wbr") run.push_back(' ');
    }
  }
  flush_run();
  return out.finish();
}

}  // namespace mitiforge::ingest
