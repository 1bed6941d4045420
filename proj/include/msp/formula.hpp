#pragma once

// Inorganic chemical formula parsing: canonical compositions, Hill-order
// canonical strings and fixed-dimension composition vectors.
//
// Grammar notes (the text-mined corpus is inconsistent, so the rules are
// deliberately forgiving):
//  - element tokens with integer/decimal subscripts, default 1
//  - nested () and [] groups with multipliers
//  - hydrate segments joined by Unicode middle dots, '*' or '.'; a '.' counts
//    as a decimal point when flanked by digits on both sides and as a hydrate
//    separator otherwise; a leading number on a segment multiplies the whole
//    trailing unit
//  - whitespace, trailing phase annotations ((s),(l),(g),(aq)) and trailing
//    charge annotations (2+, (3-), ^2+) are stripped before parsing
//  - alphabetic subscripts ("x", "3-x", ...) are rejected as variable
//    compositions

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msp/elements.hpp"

namespace msp::formula {

inline constexpr double kCountTolerance = 1e-9;

enum class ErrorKind {
  empty_formula,
  unknown_element,
  unbalanced_brackets,
  variable_subscript,
  malformed_number,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::empty_formula: return "EmptyFormula";
    case ErrorKind::unknown_element: return "UnknownElement";
    case ErrorKind::unbalanced_brackets: return "UnbalancedBrackets";
    case ErrorKind::variable_subscript: return "VariableSubscript";
    case ErrorKind::malformed_number: return "MalformedNumber";
  }
  return "UnknownError";
}

class FormulaError : public std::runtime_error {
 public:
  FormulaError(ErrorKind kind, std::string formula, std::string detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail +
                           " in \"" + formula + "\""),
        kind_(kind),
        formula_(std::move(formula)),
        detail_(std::move(detail)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& formula() const { return formula_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string formula_;
  std::string detail_;
};

// Element -> stoichiometric count map. Zero-count entries are never stored.
class Composition {
 public:
  using Map = std::map<std::string, double>;

  Composition() = default;
  explicit Composition(Map counts) : counts_(std::move(counts)) { prune(); }

  const Map& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }
  std::size_t size() const { return counts_.size(); }

  double count(std::string_view element) const {
    auto it = counts_.find(std::string(element));
    return it == counts_.end() ? 0.0 : it->second;
  }

  bool contains(std::string_view element) const {
    return counts_.find(std::string(element)) != counts_.end();
  }

  double total() const {
    double t = 0.0;
    for (const auto& [sym, n] : counts_) t += n;
    return t;
  }

  void add(std::string_view element, double n) {
    if (n == 0.0) return;
    counts_[std::string(element)] += n;
    if (std::abs(counts_[std::string(element)]) == 0.0)
      counts_.erase(std::string(element));
  }

  friend bool approx_equal(const Composition& a, const Composition& b,
                           double tol) {
    auto ia = a.counts_.begin();
    auto ib = b.counts_.begin();
    while (ia != a.counts_.end() || ib != b.counts_.end()) {
      if (ia == a.counts_.end()) {
        if (std::abs(ib->second) > tol) return false;
        ++ib;
      } else if (ib == b.counts_.end()) {
        if (std::abs(ia->second) > tol) return false;
        ++ia;
      } else if (ia->first < ib->first) {
        if (std::abs(ia->second) > tol) return false;
        ++ia;
      } else if (ib->first < ia->first) {
        if (std::abs(ib->second) > tol) return false;
        ++ib;
      } else {
        if (std::abs(ia->second - ib->second) > tol) return false;
        ++ia;
        ++ib;
      }
    }
    return true;
  }

 private:
  void prune() {
    for (auto it = counts_.begin(); it != counts_.end();)
      it = (it->second == 0.0) ? counts_.erase(it) : std::next(it);
  }

  Map counts_;
};

inline bool approx_equal(const Composition& a, const Composition& b) {
  return approx_equal(a, b, kCountTolerance);
}

// One element token in written order, all enclosing multipliers applied.
// "(NH4)2HPO4" yields [N:2, H:8, H:1, P:1, O:4]. The composition merges
// these; the run list keeps the written structure for consumers that care
// about token order.
struct ElementRun {
  std::string element;
  double count = 1.0;
};

struct ParsedFormula {
  Composition composition;
  std::vector<ElementRun> runs;
};

namespace detail {

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Strips whitespace, trailing phase annotations and trailing charges.
inline std::string preprocess(std::string_view text) {
  std::string s;
  s.reserve(text.size());
  for (char c : text)
    if (!is_ascii_space(c)) s.push_back(c);

  auto ends_with_nocase = [&](std::string_view suffix) {
    if (s.size() < suffix.size()) return false;
    for (std::size_t i = 0; i < suffix.size(); ++i) {
      char a = s[s.size() - suffix.size() + i];
      char b = suffix[i];
      if (std::tolower(static_cast<unsigned char>(a)) != b) return false;
    }
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view phase : {"(s)", "(l)", "(g)", "(aq)"}) {
      if (ends_with_nocase(phase)) {
        s.resize(s.size() - phase.size());
        changed = true;
      }
    }
    // Bracketed charge: "(2+)", "(3-)".
    if (s.size() >= 3 && s.back() == ')') {
      std::size_t open = s.rfind('(');
      if (open != std::string::npos && open + 1 < s.size() - 1) {
        std::string_view inner(s.data() + open + 1, s.size() - open - 2);
        bool digits_then_sign = !inner.empty();
        std::size_t i = 0;
        while (i < inner.size() && is_ascii_digit(inner[i])) ++i;
        if (i == 0 || i >= inner.size()) digits_then_sign = false;
        for (std::size_t j = i; digits_then_sign && j < inner.size(); ++j)
          if (inner[j] != '+' && inner[j] != '-') digits_then_sign = false;
        if (digits_then_sign) {
          s.resize(open);
          changed = true;
        }
      }
    }
    // Bare trailing charge: "2+", "+", "^2+".
    if (!s.empty() && (s.back() == '+' || s.back() == '-')) {
      std::size_t end = s.size();
      while (end > 0 && (s[end - 1] == '+' || s[end - 1] == '-')) --end;
      while (end > 0 && is_ascii_digit(s[end - 1])) --end;
      if (end > 0 && s[end - 1] == '^') --end;
      s.resize(end);
      changed = true;
    }
  }
  return s;
}

struct Separator {
  std::size_t pos;   // byte offset of separator start
  std::size_t len;   // byte length
};

// Finds hydrate separators: '*', Unicode middle dots, and '.' not flanked by
// digits on both sides.
inline std::vector<Separator> find_separators(std::string_view s) {
  std::vector<Separator> seps;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == '*') {
      seps.push_back({i, 1});
      ++i;
    } else if (c == '.') {
      bool prev_digit = i > 0 && is_ascii_digit(s[i - 1]);
      bool next_digit = i + 1 < s.size() && is_ascii_digit(s[i + 1]);
      if (!(prev_digit && next_digit)) seps.push_back({i, 1});
      ++i;
    } else if (c == 0xC2 && i + 1 < s.size() &&
               static_cast<unsigned char>(s[i + 1]) == 0xB7) {
      seps.push_back({i, 2});  // U+00B7 middle dot
      i += 2;
    } else if (c == 0xE2 && i + 2 < s.size()) {
      unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      unsigned char c2 = static_cast<unsigned char>(s[i + 2]);
      if ((c1 == 0x88 && c2 == 0x99) ||   // U+2219 bullet operator
          (c1 == 0x8B && c2 == 0x85)) {   // U+22C5 dot operator
        seps.push_back({i, 3});
        i += 3;
      } else {
        ++i;
      }
    } else {
      ++i;
    }
  }
  return seps;
}

class SegmentParser {
 public:
  SegmentParser(std::string_view segment, const std::string& whole)
      : s_(segment), whole_(whole) {}

  // Appends runs (segment multiplier applied) to out.
  void parse(std::vector<ElementRun>& out) {
    double multiplier = 1.0;
    if (!s_.empty() && is_ascii_digit(s_[0])) multiplier = read_number();
    if (at_end())
      fail(ErrorKind::malformed_number,
           "hydrate multiplier with no formula unit");

    frames_.emplace_back();
    while (!at_end()) parse_unit();
    if (frames_.size() != 1)
      fail(ErrorKind::unbalanced_brackets, "missing closing bracket");

    for (ElementRun& run : frames_.back()) {
      run.count *= multiplier;
      if (run.count != 0.0) out.push_back(std::move(run));
    }
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  [[noreturn]] void fail(ErrorKind kind, std::string detail) const {
    throw FormulaError(kind, whole_, std::move(detail));
  }

  double read_number() {
    std::size_t start = pos_;
    while (!at_end() && is_ascii_digit(peek())) ++pos_;
    if (!at_end() && peek() == '.') {
      ++pos_;
      if (at_end() || !is_ascii_digit(peek()))
        fail(ErrorKind::malformed_number, "dangling decimal point");
      while (!at_end() && is_ascii_digit(peek())) ++pos_;
    }
    double value = 0.0;
    auto [ptr, ec] =
        std::from_chars(s_.data() + start, s_.data() + pos_, value);
    if (ec != std::errc() || ptr != s_.data() + pos_)
      fail(ErrorKind::malformed_number,
           "unreadable number \"" + std::string(s_.substr(start, pos_ - start)) +
               "\"");
    return value;
  }

  // Subscript position: a number, possibly followed by "+x"/"-x" style
  // variable notation which we reject.
  double read_subscript() {
    double value = 1.0;
    if (!at_end() && is_ascii_digit(peek())) value = read_number();
    if (!at_end() && (peek() == '+' || peek() == '-')) {
      std::size_t look = pos_ + 1;
      if (look < s_.size() &&
          (is_ascii_lower(s_[look]) || is_ascii_upper(s_[look]) ||
           is_ascii_digit(s_[look]) ||
           static_cast<unsigned char>(s_[look]) >= 0x80))
        fail(ErrorKind::variable_subscript,
             "arithmetic subscript expression at \"" +
                 std::string(s_.substr(pos_)) + "\"");
    }
    return value;
  }

  void parse_unit() {
    char c = peek();
    if (c == '(' || c == '[') {
      ++pos_;
      frames_.emplace_back();
      openers_.push_back(c);
    } else if (c == ')' || c == ']') {
      if (frames_.size() < 2)
        fail(ErrorKind::unbalanced_brackets, "unexpected closing bracket");
      char opener = openers_.back();
      if ((c == ')' && opener != '(') || (c == ']' && opener != '['))
        fail(ErrorKind::unbalanced_brackets, "mismatched bracket kinds");
      openers_.pop_back();
      ++pos_;
      double mult = read_subscript();
      std::vector<ElementRun> group = std::move(frames_.back());
      frames_.pop_back();
      for (ElementRun& run : group) {
        run.count *= mult;
        frames_.back().push_back(std::move(run));
      }
    } else if (is_ascii_upper(c)) {
      std::string symbol(1, c);
      ++pos_;
      if (!at_end() && is_ascii_lower(peek())) {
        std::string two = symbol + peek();
        if (elements::is_element_symbol(two)) {
          symbol = two;
          ++pos_;
        } else if (!elements::is_element_symbol(symbol)) {
          // Neither the 2-letter nor the 1-letter token is an element.
          while (!at_end() && is_ascii_lower(peek())) {
            symbol.push_back(peek());
            ++pos_;
          }
          fail(ErrorKind::unknown_element,
               "unknown element \"" + symbol + "\"");
        }
      }
      if (!elements::is_element_symbol(symbol))
        fail(ErrorKind::unknown_element, "unknown element \"" + symbol + "\"");
      double count = read_subscript();
      frames_.back().push_back({symbol, count});
    } else if (is_ascii_lower(c)) {
      fail(ErrorKind::variable_subscript,
           "alphabetic subscript \"" + std::string(1, c) + "\"");
    } else if (is_ascii_digit(c)) {
      fail(ErrorKind::malformed_number,
           "number without a preceding element or group");
    } else {
      fail(ErrorKind::unknown_element,
           "unexpected character \"" + std::string(1, c) + "\"");
    }
  }

  std::string_view s_;
  const std::string& whole_;
  std::size_t pos_ = 0;
  std::vector<std::vector<ElementRun>> frames_;
  std::vector<char> openers_;
};

}  // namespace detail

// Parses into both a composition and the written-order element runs.
// Throws FormulaError; never aborts. See file header for the grammar.
inline ParsedFormula parse_formula_detailed(std::string_view text) {
  std::string cleaned = detail::preprocess(text);
  if (cleaned.empty())
    throw FormulaError(ErrorKind::empty_formula, std::string(text),
                       "empty after stripping annotations");

  std::vector<detail::Separator> seps = detail::find_separators(cleaned);
  std::vector<std::string_view> segments;
  std::size_t start = 0;
  for (const auto& sep : seps) {
    segments.push_back(
        std::string_view(cleaned).substr(start, sep.pos - start));
    start = sep.pos + sep.len;
  }
  segments.push_back(std::string_view(cleaned).substr(start));

  ParsedFormula result;
  for (std::string_view segment : segments) {
    if (segment.empty())
      throw FormulaError(ErrorKind::malformed_number, cleaned,
                         "empty hydrate segment");
    detail::SegmentParser parser(segment, cleaned);
    parser.parse(result.runs);
  }
  for (const ElementRun& run : result.runs)
    result.composition.add(run.element, run.count);
  return result;
}

inline Composition parse_formula(std::string_view text) {
  return parse_formula_detailed(text).composition;
}

struct ParseOutcome {
  std::optional<ParsedFormula> parsed;
  std::optional<ErrorKind> error;
  std::string error_detail;

  bool ok() const { return parsed.has_value(); }
};

inline ParseOutcome try_parse_formula(std::string_view text) noexcept {
  ParseOutcome out;
  try {
    out.parsed = parse_formula_detailed(text);
  } catch (const FormulaError& e) {
    out.error = e.kind();
    out.error_detail = e.detail();
  } catch (const std::exception& e) {
    out.error = ErrorKind::malformed_number;
    out.error_detail = e.what();
  }
  return out;
}

// Trailing-zero-free decimal with 9 digits of precision; "" for count 1.
inline std::string format_count(double v) {
  double rounded = std::round(v * 1e9) / 1e9;
  if (rounded == 1.0) return "";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.9f", rounded);
  std::string s(buf);
  std::size_t last = s.find_last_not_of('0');
  if (last != std::string::npos && s[last] == '.') --last;
  s.resize(last + 1);
  return s;
}

// Hill order: C first, H second, rest alphabetical; fully alphabetical when
// no carbon is present.
inline std::string canonicalize(const Composition& comp) {
  std::vector<std::pair<std::string, double>> entries(comp.counts().begin(),
                                                      comp.counts().end());
  bool has_carbon = comp.contains("C");
  std::sort(entries.begin(), entries.end(), [&](const auto& a, const auto& b) {
    auto rank = [&](const std::string& sym) {
      if (has_carbon && sym == "C") return 0;
      if (has_carbon && sym == "H") return 1;
      return 2;
    };
    int ra = rank(a.first), rb = rank(b.first);
    if (ra != rb) return ra < rb;
    return a.first < b.first;
  });
  std::string out;
  for (const auto& [sym, count] : entries) {
    out += sym;
    out += format_count(count);
  }
  return out;
}

inline std::string canonicalize(std::string_view text) {
  return canonicalize(parse_formula(text));
}

class EmptyCompositionError : public std::runtime_error {
 public:
  EmptyCompositionError() : std::runtime_error("EmptyComposition") {}
};

// Fraction-normalized 118-slot vector in the frozen periodic ordering.
struct CompositionVector {
  std::array<double, elements::kElementCount> values{};

  double dot(const CompositionVector& other) const {
    double d = 0.0;
    for (int i = 0; i < elements::kElementCount; ++i)
      d += values[i] * other.values[i];
    return d;
  }

  double norm() const { return std::sqrt(dot(*this)); }
};

inline CompositionVector composition_vector(const Composition& comp) {
  if (comp.empty()) throw EmptyCompositionError();
  CompositionVector vec;
  double total = comp.total();
  for (const auto& [sym, count] : comp.counts()) {
    auto idx = elements::symbol_index(sym);
    if (idx) vec.values[*idx] = count / total;
  }
  return vec;
}

inline double cosine_similarity(const CompositionVector& a,
                                const CompositionVector& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

// Formula-unit comparison as written, no reduction: "Mn2O4" != "MnO2".
// Parse failures compare false; *parse_failed reports them when non-null.
inline bool formulas_equal(std::string_view a, std::string_view b,
                           bool* parse_failed = nullptr) {
  if (parse_failed) *parse_failed = false;
  ParseOutcome pa = try_parse_formula(a);
  ParseOutcome pb = try_parse_formula(b);
  if (!pa.ok() || !pb.ok()) {
    if (parse_failed) *parse_failed = true;
    return false;
  }
  return approx_equal(pa.parsed->composition, pb.parsed->composition);
}

}  // namespace msp::formula
