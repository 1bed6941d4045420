#pragma once

// Prompt and training-target construction for the two planning stages, plus
// tolerant parsers that map arbitrary model completions back into structure.
//
// Targets use a labeled-line grammar so they stay machine-checkable and
// round-trippable:
//
//   precursor stage   Material group: <G>
//                     Precursors: <p1>, <p2>, ...
//
//   operation stage   Material group: <G>
//     (explicit)      Precursor types: <t1>, <t2>, ...
//                     Precursors: <p1>, <p2>, ...
//                     Operations: <o1> -> <o2> -> ...
//
// The explicit operation-stage target serializes G, then Z = (Types, P),
// then O — the factorization order p(G) p(Z|G) p(O|G,Z) made literal.
// Implicit / target-only targets omit the Z block (ablations).

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "msp/corpus.hpp"
#include "msp/formula.hpp"
#include "msp/taxonomy.hpp"

namespace msp::prompt {

using corpus::Operation;
using corpus::OperationSequence;
using corpus::SynthesisContext;
using taxonomy::PrecursorInfo;
using taxonomy::PrecursorType;

enum class ConditioningMode { target_only, implicit, explicit_pcf };

inline std::string_view to_string(ConditioningMode mode) {
  switch (mode) {
    case ConditioningMode::target_only: return "target_only";
    case ConditioningMode::implicit: return "implicit";
    case ConditioningMode::explicit_pcf: return "explicit";
  }
  return "";
}

inline std::optional<ConditioningMode> mode_from_string(std::string_view s) {
  if (s == "target_only" || s == "target-only")
    return ConditioningMode::target_only;
  if (s == "implicit") return ConditioningMode::implicit;
  if (s == "explicit" || s == "explicit_pcf")
    return ConditioningMode::explicit_pcf;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Template store
// ---------------------------------------------------------------------------

// Versioned prompt wording. Placeholders: {target}, {context}, {precursors},
// {types}, {title}. Files named <key>.txt in a template directory override
// the built-in defaults.
class TemplateStore {
 public:
  TemplateStore() : templates_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"pp_prompt",
         "You are an expert inorganic materials synthesis planner.\n"
         "Task: propose the set of precursor compounds for synthesizing the "
         "target material.\n"
         "Important: first classify its material group, then list the "
         "precursors.\n"
         "\n"
         "Target material: {target}\n"
         "{context}"
         "\n"
         "Respond exactly in the form:\n"
         "Material group: <group>\n"
         "Precursors: <formula 1>, <formula 2>, ...\n"},
        {"sop_prompt_target_only",
         "You are an expert inorganic materials synthesis planner.\n"
         "Task: predict the ordered sequence of synthesis operations for the "
         "target material.\n"
         "Important: first classify its material group, then give the "
         "operation sequence.\n"
         "Allowed operations: mixing, heating, sintering, annealing, "
         "quenching, drying, shaping.\n"
         "\n"
         "Target material: {target}\n"
         "{context}"
         "\n"
         "Respond exactly in the form:\n"
         "Material group: <group>\n"
         "Operations: <operation 1> -> <operation 2> -> ...\n"},
        {"sop_prompt_implicit",
         "You are an expert inorganic materials synthesis planner.\n"
         "Task: predict the ordered sequence of synthesis operations for the "
         "target material.\n"
         "Important: first classify its material group, then give the "
         "operation sequence.\n"
         "Allowed operations: mixing, heating, sintering, annealing, "
         "quenching, drying, shaping.\n"
         "\n"
         "Target material: {target}\n"
         "Precursors: {precursors}\n"
         "{context}"
         "\n"
         "Respond exactly in the form:\n"
         "Material group: <group>\n"
         "Operations: <operation 1> -> <operation 2> -> ...\n"},
        {"sop_prompt_explicit",
         "You are an expert inorganic materials synthesis planner.\n"
         "Task: predict the ordered sequence of synthesis operations for the "
         "target material.\n"
         "Important: first classify its material group, then restate the "
         "precursor information, then give the operation sequence.\n"
         "Allowed operations: mixing, heating, sintering, annealing, "
         "quenching, drying, shaping.\n"
         "\n"
         "Target material: {target}\n"
         "Precursor types: {types}\n"
         "Precursors: {precursors}\n"
         "{context}"
         "\n"
         "Respond exactly in the form:\n"
         "Material group: <group>\n"
         "Precursor types: <type 1>, <type 2>, ...\n"
         "Precursors: <formula 1>, <formula 2>, ...\n"
         "Operations: <operation 1> -> <operation 2> -> ...\n"},
        {"context_extract",
         "Extract synthesis-context fields from the title of a materials "
         "science paper.\n"
         "Title: {title}\n"
         "Return a single JSON object with exactly these keys: "
         "\"host_material\", \"dopant_or_substitution\", \"material_class\", "
         "\"functional_property\", \"composition_control\", "
         "\"processing_or_stimulus\".\n"
         "Use JSON null for every field the title does not mention. Return "
         "only the JSON object.\n"}};
    return d;
  }

  const std::string& get(const std::string& key) const {
    auto it = templates_.find(key);
    if (it == templates_.end())
      throw std::runtime_error("unknown template \"" + key + "\"");
    return it->second;
  }

  void set(const std::string& key, std::string text) {
    templates_[key] = std::move(text);
  }

  // Loads <key>.txt overrides from a directory.
  void load_overrides(const std::string& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt")
        continue;
      std::ifstream in(entry.path());
      std::ostringstream text;
      text << in.rdbuf();
      templates_[entry.path().stem().string()] = text.str();
    }
  }

  void dump(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [key, text] : templates_) {
      std::ofstream out(std::filesystem::path(dir) / (key + ".txt"));
      out << text;
    }
  }

 private:
  std::map<std::string, std::string> templates_;
};

namespace detail {

inline std::string substitute(std::string text,
                              const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return text;
}

// Context block, one "Label: value" line per present field.
// processing_or_stimulus is excluded by contract: it leaks operation wording.
inline std::string render_context(const SynthesisContext& ctx) {
  std::string out;
  auto field = [&](std::string_view label,
                   const std::optional<std::string>& value) {
    if (value) {
      out += label;
      out += ": ";
      out += *value;
      out += "\n";
    }
  };
  field("Host material", ctx.host_material);
  field("Dopant or substitution", ctx.dopant_or_substitution);
  field("Material class", ctx.material_class);
  field("Functional property", ctx.functional_property);
  field("Composition control", ctx.composition_control);
  return out;
}

inline std::string join(const std::vector<std::string>& items,
                        std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string join_types(const std::set<PrecursorType>& types) {
  // Set order follows the enum declaration: carbonate, nitrate, ammonium,
  // phosphate, oxide, other.
  std::vector<std::string> names;
  for (PrecursorType t : types) names.emplace_back(taxonomy::to_string(t));
  return join(names);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

class EmptyPrecursorSetError : public std::runtime_error {
 public:
  EmptyPrecursorSetError() : std::runtime_error("EmptyPrecursorSet") {}
};

class MissingPrecursorsError : public std::runtime_error {
 public:
  MissingPrecursorsError()
      : std::runtime_error(
            "MissingPrecursors: implicit/explicit conditioning requires a "
            "nonempty precursor set") {}
};

class EmptyOperationsError : public std::runtime_error {
 public:
  EmptyOperationsError() : std::runtime_error("EmptyOperations") {}
};

inline std::string render_pp_prompt(const std::string& target_formula,
                                    const SynthesisContext& context,
                                    const TemplateStore& store = {}) {
  formula::parse_formula(target_formula);  // propagate parse errors
  return detail::substitute(store.get("pp_prompt"),
                            {{"target", target_formula},
                             {"context", detail::render_context(context)}});
}

inline std::string render_pp_target(const std::string& group,
                                    const std::vector<std::string>& precursors) {
  if (precursors.empty()) throw EmptyPrecursorSetError();
  std::vector<std::string> canonical;
  canonical.reserve(precursors.size());
  for (const auto& p : precursors)
    canonical.push_back(formula::canonicalize(p));
  return "Material group: " + group +
         "\nPrecursors: " + detail::join(canonical);
}

inline std::string render_sop_prompt(const std::string& target_formula,
                                     const SynthesisContext& context,
                                     const PrecursorInfo& z_in,
                                     ConditioningMode mode,
                                     const TemplateStore& store = {}) {
  formula::parse_formula(target_formula);
  std::string context_block = detail::render_context(context);
  switch (mode) {
    case ConditioningMode::target_only:
      return detail::substitute(store.get("sop_prompt_target_only"),
                                {{"target", target_formula},
                                 {"context", context_block}});
    case ConditioningMode::implicit:
      if (z_in.precursors.empty()) throw MissingPrecursorsError();
      return detail::substitute(store.get("sop_prompt_implicit"),
                                {{"target", target_formula},
                                 {"context", context_block},
                                 {"precursors",
                                  detail::join(z_in.precursors)}});
    case ConditioningMode::explicit_pcf:
      if (z_in.precursors.empty()) throw MissingPrecursorsError();
      return detail::substitute(store.get("sop_prompt_explicit"),
                                {{"target", target_formula},
                                 {"context", context_block},
                                 {"precursors", detail::join(z_in.precursors)},
                                 {"types", detail::join_types(z_in.types)}});
  }
  throw std::logic_error("unreachable");
}

inline std::string render_sop_target(const std::string& group,
                                     const PrecursorInfo& z,
                                     const OperationSequence& operations,
                                     ConditioningMode mode) {
  if (operations.empty()) throw EmptyOperationsError();
  std::string ops = corpus::join_operations(operations);
  if (mode != ConditioningMode::explicit_pcf)
    return "Material group: " + group + "\nOperations: " + ops;
  return "Material group: " + group +
         "\nPrecursor types: " + detail::join_types(z.types) +
         "\nPrecursors: " + detail::join(z.precursors) +
         "\nOperations: " + ops;
}

inline std::string render_context_extract_prompt(const std::string& title,
                                                 const TemplateStore& store = {}) {
  return detail::substitute(store.get("context_extract"), {{"title", title}});
}

// ---------------------------------------------------------------------------
// Completion parsing
// ---------------------------------------------------------------------------

// Structured decode of a model completion. `error` is set instead of
// throwing: the parsers must be total over arbitrary text.
struct ParsedModelOutput {
  std::optional<std::string> group;
  std::optional<std::set<PrecursorType>> types;   // as restated by the model
  std::optional<std::vector<std::string>> precursors;  // canonical forms
  std::optional<OperationSequence> operations;
  std::vector<std::string> diagnostics;
  std::optional<std::string> error;  // NoPrecursorsFound | NoOperationsFound

  bool ok() const { return !error.has_value(); }

  // Z as the completion stated it (types are NOT recomputed from the
  // precursors, so constraint violations stay observable).
  std::optional<PrecursorInfo> z() const {
    if (!types || !precursors) return std::nullopt;
    return PrecursorInfo{*types, *precursors};
  }
};

namespace detail {

inline std::string to_lower_copy(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Strips list-item decorations: "1.", "2)", "-", "*", "Step 3:".
inline std::string strip_enumeration(std::string s) {
  std::string low = to_lower_copy(s);
  if (low.rfind("step", 0) == 0) {
    std::size_t i = 4;
    while (i < s.size() && (std::isdigit((unsigned char)s[i]) || s[i] == ' '))
      ++i;
    if (i < s.size() && (s[i] == ':' || s[i] == '.' || s[i] == ')')) ++i;
    s = s.substr(std::min(i, s.size()));
  }
  std::size_t i = 0;
  while (i < s.size() && (std::isdigit((unsigned char)s[i]))) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':'))
    s = s.substr(i + 1);
  else if (!s.empty() && (s[0] == '-' || s[0] == '*'))
    s = s.substr(1);
  return trim(s);
}

struct LabeledLines {
  std::optional<std::string> group;
  std::optional<std::string> types;
  std::optional<std::string> precursors;
  std::optional<std::string> operations;
  std::vector<std::string> unlabeled;
};

// Case-insensitive labeled-line scan. The value of a label runs to the end
// of its line plus any following lines up to the next label or blank line.
inline LabeledLines split_labeled_lines(std::string_view text) {
  LabeledLines out;
  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    lines.push_back(cur);
  }

  auto match_label =
      [](const std::string& line) -> std::optional<std::pair<int, std::string>> {
    static const std::vector<std::pair<std::string, int>> labels = {
        {"material group", 0},
        {"precursor types", 1},
        {"precursor type", 1},
        {"precursors", 2},
        {"precursor", 2},
        {"operations", 3},
        {"operation sequence", 3},
        {"operation", 3},
        {"synthesis operations", 3}};
    std::string low = to_lower_copy(line);
    std::size_t start = low.find_first_not_of(" \t-*#");
    if (start == std::string::npos) return std::nullopt;
    for (const auto& [label, kind] : labels) {
      if (low.compare(start, label.size(), label) == 0) {
        std::size_t after = start + label.size();
        // Require a ':' separator (possibly after an "s" we did not match).
        std::size_t colon = low.find(':', after);
        if (colon == std::string::npos || colon > after + 2) continue;
        return std::make_pair(kind, trim(line.substr(colon + 1)));
      }
    }
    return std::nullopt;
  };

  int active = -1;
  std::optional<std::string>* slots[4] = {&out.group, &out.types,
                                          &out.precursors, &out.operations};
  for (const auto& line : lines) {
    auto m = match_label(line);
    if (m) {
      active = m->first;
      auto& slot = *slots[active];
      if (!slot)
        slot = m->second;
      else
        *slot += "\n" + m->second;
      continue;
    }
    if (trim(line).empty()) {
      active = -1;
      continue;
    }
    if (active >= 0)
      *slots[active] = (*slots[active] ? **slots[active] + "\n" : "") + line;
    else
      out.unlabeled.push_back(line);
  }
  return out;
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ';' || c == '\n') {
      items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  items.push_back(cur);
  std::vector<std::string> cleaned;
  for (auto& item : items) {
    std::string t = strip_enumeration(trim(item));
    // Drop trailing sentence punctuation.
    while (!t.empty() && (t.back() == '.' || t.back() == ':')) t.pop_back();
    t = trim(t);
    if (!t.empty()) cleaned.push_back(std::move(t));
  }
  return cleaned;
}

// Operation-step segmentation for prose outputs: arrows, commas, semicolons,
// newlines and numbered items all delimit steps.
inline std::vector<std::string> split_steps(std::string_view text) {
  std::string normalized(text);
  auto replace_all = [&](std::string_view needle, std::string_view with) {
    std::size_t pos = 0;
    while ((pos = normalized.find(needle, pos)) != std::string::npos) {
      normalized.replace(pos, needle.size(), with);
      pos += with.size();
    }
  };
  replace_all("->", "\n");
  replace_all("\xE2\x86\x92", "\n");  // U+2192 rightwards arrow
  replace_all(",", "\n");
  replace_all(";", "\n");
  // "1. Mix powders 2. Sinter" -> break before inline step numbers.
  std::string out;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    char c = normalized[i];
    if (std::isdigit((unsigned char)c) && i + 1 < normalized.size() &&
        (normalized[i + 1] == '.' || normalized[i + 1] == ')') && i > 0 &&
        normalized[i - 1] == ' ')
      out.push_back('\n');
    out.push_back(c);
  }
  std::vector<std::string> steps;
  std::string cur;
  for (char c : out) {
    if (c == '\n') {
      steps.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  steps.push_back(cur);
  std::vector<std::string> cleaned;
  for (auto& s : steps) {
    std::string t = strip_enumeration(trim(s));
    if (!t.empty()) cleaned.push_back(std::move(t));
  }
  return cleaned;
}

// Stem synonym table mapping free-text steps onto the 7-token vocabulary.
// Baseline models answer in prose; scoring needs closed-vocabulary tokens.
inline const std::vector<std::pair<std::string, Operation>>& synonym_stems() {
  static const std::vector<std::pair<std::string, Operation>> stems = {
      {"sinter", Operation::sintering}, {"anneal", Operation::annealing},
      {"quench", Operation::quenching}, {"mix", Operation::mixing},
      {"grind", Operation::mixing},     {"mill", Operation::mixing},
      {"blend", Operation::mixing},     {"dry", Operation::drying},
      {"drie", Operation::drying},      {"shape", Operation::shaping},
      {"shaping", Operation::shaping},  {"press", Operation::shaping},
      {"pellet", Operation::shaping},   {"mold", Operation::shaping},
      {"cast", Operation::shaping},     {"heat", Operation::heating},
      {"calcin", Operation::heating},   {"fire", Operation::heating},
      {"fir", Operation::heating}};
  return stems;
}

// Maps one step onto a token: exact vocabulary match first, then the stem
// whose first occurrence in the step text comes earliest.
inline std::optional<Operation> match_operation(const std::string& step) {
  std::string low = to_lower_copy(step);
  if (auto op = corpus::operation_from_string(low)) return op;
  std::size_t best_pos = std::string::npos;
  std::optional<Operation> best;
  for (const auto& [stem, op] : synonym_stems()) {
    std::size_t pos = low.find(stem);
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best = op;
    }
  }
  return best;
}

inline void parse_precursor_list(
    const std::string& text, ParsedModelOutput& out) {
  std::vector<std::string> formulas;
  std::set<std::string> seen;
  for (const auto& token : split_list(text)) {
    auto outcome = formula::try_parse_formula(token);
    if (!outcome.ok()) {
      out.diagnostics.push_back("unparseable precursor token \"" + token +
                                "\"");
      continue;
    }
    std::string canonical =
        formula::canonicalize(outcome.parsed->composition);
    if (!seen.insert(canonical).second) {
      out.diagnostics.push_back("duplicate precursor \"" + canonical +
                                "\" dropped");
      continue;
    }
    formulas.push_back(std::move(canonical));
  }
  if (!formulas.empty()) out.precursors = std::move(formulas);
}

}  // namespace detail

// Total over arbitrary text. Success requires at least one extractable
// precursor; everything else degrades to diagnostics.
inline ParsedModelOutput parse_pp_output(std::string_view text) {
  ParsedModelOutput out;
  detail::LabeledLines lines = detail::split_labeled_lines(text);
  if (lines.group) {
    std::string g = detail::to_lower_copy(detail::trim(*lines.group));
    if (!g.empty()) out.group = g;
  }
  if (!out.group)
    out.diagnostics.push_back("no material-group label found");
  if (lines.precursors) detail::parse_precursor_list(*lines.precursors, out);
  if (!out.precursors) {
    // Fallback: any unlabeled line made of formula-looking tokens.
    for (const auto& line : lines.unlabeled) {
      detail::parse_precursor_list(line, out);
      if (out.precursors) {
        out.diagnostics.push_back("precursors taken from unlabeled line");
        break;
      }
    }
  }
  if (!out.precursors) out.error = "NoPrecursorsFound";
  return out;
}

// Total over arbitrary text. Success requires at least one operation token.
inline ParsedModelOutput parse_sop_output(std::string_view text) {
  ParsedModelOutput out;
  detail::LabeledLines lines = detail::split_labeled_lines(text);
  if (lines.group) {
    std::string g = detail::to_lower_copy(detail::trim(*lines.group));
    if (!g.empty()) out.group = g;
  }
  if (lines.types) {
    std::set<PrecursorType> types;
    for (const auto& token : detail::split_list(*lines.types)) {
      auto t = taxonomy::precursor_type_from_string(
          detail::to_lower_copy(token));
      if (t)
        types.insert(*t);
      else
        out.diagnostics.push_back("unknown precursor type \"" + token + "\"");
    }
    if (!types.empty()) out.types = std::move(types);
  }
  if (lines.precursors) detail::parse_precursor_list(*lines.precursors, out);

  OperationSequence ops;
  if (lines.operations) {
    for (const auto& step : detail::split_steps(*lines.operations)) {
      auto op = detail::match_operation(step);
      if (op)
        ops.push_back(*op);
      else
        out.diagnostics.push_back("unmatched operation step \"" + step +
                                  "\"");
    }
  }
  if (ops.empty()) {
    // Prose fallback: scan the whole completion for step-like segments.
    for (const auto& step : detail::split_steps(text)) {
      auto op = detail::match_operation(step);
      if (op) ops.push_back(*op);
    }
    if (!ops.empty())
      out.diagnostics.push_back(
          "operations recovered from prose (no labeled line)");
  }
  if (ops.empty())
    out.error = "NoOperationsFound";
  else
    out.operations = std::move(ops);
  return out;
}

// ---------------------------------------------------------------------------
// Fine-tuning export
// ---------------------------------------------------------------------------

enum class Task { pp, sop };

inline std::string_view to_string(Task task) {
  return task == Task::pp ? "pp" : "sop";
}

struct PromptPair {
  std::string input_text;
  std::string target_text;
  Task task = Task::pp;
  ConditioningMode mode = ConditioningMode::explicit_pcf;
};

// Builds the training pair for one record. The group label comes from the
// configured taxonomy; the operation stage conditions on the ground-truth
// precursor set.
inline PromptPair build_prompt_pair(
    const corpus::SynthesisRecord& record, Task task, ConditioningMode mode,
    const TemplateStore& store = {},
    const taxonomy::MaterialTaxonomy& tax = taxonomy::default_taxonomy()) {
  PromptPair pair;
  pair.task = task;
  pair.mode = mode;
  std::string group =
      tax.classify(formula::parse_formula(record.target));
  if (task == Task::pp) {
    pair.input_text = render_pp_prompt(record.target, record.context, store);
    pair.target_text = render_pp_target(group, record.precursors);
  } else {
    PrecursorInfo z = taxonomy::make_precursor_info(record.precursors);
    pair.input_text =
        render_sop_prompt(record.target, record.context, z, mode, store);
    pair.target_text = render_sop_target(group, z, record.operations, mode);
  }
  return pair;
}

inline std::size_t export_finetune_jsonl(
    const std::vector<corpus::SynthesisRecord>& records, Task task,
    ConditioningMode mode, std::ostream& out, const TemplateStore& store = {},
    const taxonomy::MaterialTaxonomy& tax = taxonomy::default_taxonomy()) {
  std::size_t count = 0;
  for (const auto& record : records) {
    PromptPair pair = build_prompt_pair(record, task, mode, store, tax);
    nlohmann::json j = {{"id", record.id},
                        {"input", pair.input_text},
                        {"output", pair.target_text},
                        {"task", std::string(to_string(task))},
                        {"mode", std::string(to_string(mode))}};
    out << j.dump() << "\n";
    ++count;
  }
  return count;
}

inline std::size_t export_finetune_jsonl(
    const std::vector<corpus::SynthesisRecord>& records, Task task,
    ConditioningMode mode, const std::string& path,
    const TemplateStore& store = {},
    const taxonomy::MaterialTaxonomy& tax = taxonomy::default_taxonomy()) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  return export_finetune_jsonl(records, task, mode, out, store, tax);
}

}  // namespace msp::prompt
