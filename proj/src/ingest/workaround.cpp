#include <algorithm>
#include <cctype>

#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::ingest {

namespace {

constexpr std::size_t kMaxHeadingLength = 80;

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Position of the earliest whole-phrase occurrence of `keyword` in `line`,
// accepting a plural "s" suffix.
std::size_t find_phrase(std::string_view line, std::string_view keyword) {
  std::size_t from = 0;
  for (;;) {
    auto pos = text::find_icase(line, keyword, from);
    if (pos == std::string_view::npos) return pos;
    auto end = pos + keyword.size();
    bool left_ok = pos == 0 || !is_word_char(line[pos - 1]);
    if (end < line.size() && (line[end] == 's' || line[end] == 'S')) ++end;
    bool right_ok = end >= line.size() || !is_word_char(line[end]);
    if (left_ok && right_ok) return pos;
    from = pos + 1;
  }
}

struct Heading {
  std::size_t line_index;
  std::string keyword;
};

std::optional<std::string> heading_keyword(std::string_view line) {
  auto trimmed = text::trim(line);
  if (trimmed.empty() || trimmed.size() > kMaxHeadingLength) return std::nullopt;
  std::optional<std::string> best;
  std::size_t best_pos = std::string_view::npos;
  for (const auto& kw : keyword_roster()) {
    auto pos = find_phrase(trimmed, kw);
    if (pos == std::string_view::npos) continue;
    if (pos < best_pos || (pos == best_pos && kw.size() > best->size())) {
      best_pos = pos;
      best = kw;
    }
  }
  return best;
}

}  // namespace

const std::vector<std::string>& keyword_roster() {
  static const std::vector<std::string> roster = {
      "Workaround",    "Work Around",        "Workout Around", "How to Prevent",
      "Mitigation",    "Remediation",        "Recommended Action",
      "Recommendation", "Actions to Take",   "Solution"};
  return roster;
}

std::vector<WorkaroundSection> extract_workaround_sections(std::string_view page_text,
                                                           std::string_view source_url) {
  std::vector<WorkaroundSection> sections;
  if (page_text.empty() || !is_ascii_dominant(page_text)) return sections;

  auto lines = text::split_lines(page_text);
  std::vector<std::size_t> offsets(lines.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    offsets[i] = off;
    off += lines[i].size() + 1;
  }

  std::vector<Heading> headings;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto kw = heading_keyword(lines[i])) headings.push_back({i, *kw});
  }

  for (std::size_t h = 0; h < headings.size(); ++h) {
    std::size_t first = headings[h].line_index + 1;
    std::size_t last = h + 1 < headings.size() ? headings[h + 1].line_index : lines.size();
    if (first >= last) continue;
    std::size_t start = offsets[first];
    std::size_t end = offsets[last - 1] + lines[last - 1].size();
    while (start < end && std::isspace(static_cast<unsigned char>(page_text[start]))) ++start;
    while (end > start && std::isspace(static_cast<unsigned char>(page_text[end - 1]))) --end;
    if (start >= end) continue;
    sections.push_back({std::string(source_url), headings[h].keyword,
                        std::string(page_text.substr(start, end - start)), {start, end}});
  }

  std::sort(sections.begin(), sections.end(), [](const auto& a, const auto& b) {
    return a.char_span.start < b.char_span.start;
  });
  std::vector<WorkaroundSection> merged;
  for (auto& s : sections) {
    if (!merged.empty() && s.char_span.start < merged.back().char_span.end) {
      auto& prev = merged.back();
      prev.char_span.end = std::max(prev.char_span.end, s.char_span.end);
      prev.text = std::string(
          page_text.substr(prev.char_span.start, prev.char_span.end - prev.char_span.start));
      continue;
    }
    merged.push_back(std::move(s));
  }
  return merged;
}

}  // namespace mitiforge::ingest
