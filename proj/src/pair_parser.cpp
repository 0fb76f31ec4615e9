#include "medrex/pair_parser.hpp"

#include <set>

#include "medrex/text.hpp"

namespace medrex {

std::string_view severity_name(Severity severity) {
  switch (severity) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::error: return "error";
  }
  return "info";
}

bool ParseOutcome::clean() const {
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::error) return false;
  }
  return true;
}

namespace {

struct Element {
  std::string value;
  bool quoted = false;
};

// Reads a quoted element starting at pos (which must sit on an opening
// quote); returns false when the quote never closes.
bool read_quoted(std::string_view raw, std::size_t& pos, std::string& out) {
  bool open_double = false;
  std::size_t open_len = quote_length_at(raw, pos, &open_double);
  pos += open_len;
  out.clear();
  while (pos < raw.size()) {
    if (raw[pos] == '\\' && pos + 1 < raw.size()) {
      char c = raw[pos + 1];
      switch (c) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(c); break;
      }
      pos += 2;
      continue;
    }
    bool is_double = false;
    std::size_t qlen = quote_length_at(raw, pos, &is_double);
    if (qlen > 0 && is_double == open_double) {
      pos += qlen;
      return true;
    }
    out.push_back(raw[pos]);
    ++pos;
  }
  return false;
}

// Reads an unquoted element; stops before ',' or ')'. Rejects nested '('
// so ordinary prose parentheses do not masquerade as tuples.
bool read_bare(std::string_view raw, std::size_t& pos, std::string& out) {
  std::size_t start = pos;
  while (pos < raw.size() && raw[pos] != ',' && raw[pos] != ')') {
    if (raw[pos] == '(') return false;
    ++pos;
  }
  if (pos >= raw.size()) return false;
  out = std::string(trim(raw.substr(start, pos - start)));
  return !out.empty();
}

void skip_spaces(std::string_view raw, std::size_t& pos) {
  while (pos < raw.size() && is_space_char(raw[pos])) ++pos;
}

// Attempts to read a parenthesized tuple at pos (which sits on '(').
// On success pos advances past the closing ')' and elements are filled;
// otherwise pos is left unchanged.
bool read_tuple(std::string_view raw, std::size_t& pos, std::vector<Element>& elements) {
  std::size_t cursor = pos + 1;
  elements.clear();
  for (;;) {
    skip_spaces(raw, cursor);
    if (cursor >= raw.size()) return false;
    if (raw[cursor] == ')' && !elements.empty()) {  // trailing comma before ')'
      ++cursor;
      break;
    }
    Element element;
    if (quote_length_at(raw, cursor) > 0) {
      if (!read_quoted(raw, cursor, element.value)) return false;
      element.quoted = true;
    } else {
      if (!read_bare(raw, cursor, element.value)) return false;
    }
    elements.push_back(std::move(element));
    skip_spaces(raw, cursor);
    if (cursor >= raw.size()) return false;
    if (raw[cursor] == ',') {
      ++cursor;
      continue;
    }
    if (raw[cursor] == ')') {
      ++cursor;
      break;
    }
    return false;
  }
  pos = cursor;
  return true;
}

bool any_quoted(const std::vector<Element>& elements) {
  for (const auto& e : elements) {
    if (e.quoted) return true;
  }
  return false;
}

}  // namespace

ParseOutcome parse_pairs(std::string_view raw, std::string_view doc_id, RelationType rtype, PromptMode mode,
                         const ParseOptions& options) {
  ParseOutcome outcome;
  std::vector<Element> elements;
  std::size_t arity_rejects = 0;
  std::size_t empty_rejects = 0;

  std::size_t pos = 0;
  while (pos < raw.size()) {
    if (raw[pos] != '(') {
      ++pos;
      continue;
    }
    std::size_t tuple_pos = pos;
    if (!read_tuple(raw, tuple_pos, elements) || !any_quoted(elements)) {
      ++pos;
      continue;
    }
    pos = tuple_pos;
    if (elements.size() != 2) {
      ++arity_rejects;
      continue;
    }
    std::string head(trim(elements[0].value));
    std::string tail(trim(elements[1].value));
    if (head.empty() || tail.empty()) {
      ++empty_rejects;
      continue;
    }
    outcome.pairs.push_back(
        {std::move(head), std::move(tail), std::string(doc_id), rtype, mode});
  }

  if (options.deduplicate) {
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<ExtractedPair> unique;
    unique.reserve(outcome.pairs.size());
    for (auto& pair : outcome.pairs) {
      if (seen.insert({normalize_surface(pair.head), normalize_surface(pair.tail)}).second) {
        unique.push_back(std::move(pair));
      }
    }
    outcome.pairs = std::move(unique);
  }

  if (arity_rejects > 0) {
    outcome.diagnostics.push_back(
        {Severity::warning, std::to_string(arity_rejects) + " tuple(s) ignored: not 2 elements"});
  }
  if (empty_rejects > 0) {
    outcome.diagnostics.push_back(
        {Severity::warning, std::to_string(empty_rejects) + " tuple(s) ignored: empty element"});
  }
  if (outcome.pairs.empty()) {
    std::string body(trim(raw));
    bool empty_list = body == "[]" || body == "[ ]";
    if (!empty_list) {
      outcome.diagnostics.push_back({Severity::error, "no pair tuples recognized in completion"});
    }
  }
  return outcome;
}

std::string serialize_pairs(const std::vector<ExtractedPair>& pairs) {
  auto escape = [](const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
      // backtick closes a single-class quote when read back, so escape it too
      if (c == '\\' || c == '\'' || c == '`') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  };
  std::string out = "[";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0) out += ", ";
    out += "('" + escape(pairs[i].head) + "', '" + escape(pairs[i].tail) + "')";
  }
  out += "]";
  return out;
}

}  // namespace medrex
