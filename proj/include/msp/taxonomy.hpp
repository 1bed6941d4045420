#pragma once

// Material-group classification (the discrete decision-chain variable) and
// the rule-based precursor-type mapping tau.
//
// The group taxonomy is a priority-ordered rule list loaded from JSON and
// swappable without code changes; the built-in default has the 11 labels
// oxide, phosphate, carbonate, nitride, sulfide, sulfate, fluoride, halide,
// borate, silicate, other. Precursor types are a closed 6-label vocabulary.

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "msp/elements.hpp"
#include "msp/formula.hpp"

namespace msp::taxonomy {

// ---------------------------------------------------------------------------
// Precursor types
// ---------------------------------------------------------------------------

enum class PrecursorType {
  carbonate,
  nitrate,
  ammonium,
  phosphate,
  oxide,
  other,
};

inline constexpr std::array<PrecursorType, 6> kAllPrecursorTypes = {
    PrecursorType::carbonate, PrecursorType::nitrate, PrecursorType::ammonium,
    PrecursorType::phosphate, PrecursorType::oxide,   PrecursorType::other};

inline std::string_view to_string(PrecursorType t) {
  switch (t) {
    case PrecursorType::carbonate: return "carbonate";
    case PrecursorType::nitrate: return "nitrate";
    case PrecursorType::ammonium: return "ammonium";
    case PrecursorType::phosphate: return "phosphate";
    case PrecursorType::oxide: return "oxide";
    case PrecursorType::other: return "other";
  }
  return "other";
}

inline std::optional<PrecursorType> precursor_type_from_string(
    std::string_view name) {
  for (PrecursorType t : kAllPrecursorTypes)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

namespace detail {

// Anion-unit detection from stoichiometry. The tests are deliberately
// composition-determined (identical for any spelling of the same formula,
// Hill-canonical included) so that stored type sets stay recomputable from
// canonical precursor strings.
//
// Oxygen bound in water of crystallization would inflate the per-head O
// ratios (FeC2O4*2H2O carries O6 over C2), so each test discounts one O per
// two H before comparing: carbonate needs O >= 3 C, nitrate O >= 3 N,
// phosphate O >= 3 P after the discount. The ratio floor keeps oxalates
// (C2O4: ratio 2) out of carbonate and nitrites (NO2) out of nitrate.
inline double oxygen_less_water(const formula::Composition& comp) {
  return comp.count("O") - std::floor((comp.count("H") + 1e-9) / 2.0);
}

inline bool head_oxygen_ratio(const formula::Composition& comp,
                              const char* head, double min_ratio) {
  double n = comp.count(head);
  return n > 0.0 && oxygen_less_water(comp) >= min_ratio * n - 1e-9;
}

// Ammonium salts carry more H than O (NH4NO3: H4 O3); hydrated nitrates
// carry at least as much O as H (Fe(NO3)3*9H2O: O18 H18), which separates
// the two without structural information.
inline bool looks_ammonium(const formula::Composition& comp) {
  return comp.count("N") > 0.0 && comp.count("H") >= 4.0 - 1e-9 &&
         comp.count("O") < comp.count("H") - 1e-9;
}

inline bool is_metals_plus_oxygen(const formula::Composition& comp) {
  if (!comp.contains("O")) return false;
  for (const auto& [sym, count] : comp.counts()) {
    (void)count;
    if (sym == "O") continue;
    if (!elements::is_metal_like(sym)) return false;
  }
  return comp.size() >= 2;
}

}  // namespace detail

// Fixed tie-break priority: ammonium > carbonate > nitrate > phosphate >
// oxide > other. Each precursor gets exactly one type.
struct PrecursorTypeRules {
  std::vector<PrecursorType> priority = {
      PrecursorType::ammonium, PrecursorType::carbonate,
      PrecursorType::nitrate, PrecursorType::phosphate, PrecursorType::oxide};
};

inline bool matches_precursor_type(const formula::Composition& comp,
                                   PrecursorType type) {
  switch (type) {
    case PrecursorType::ammonium:
      return detail::looks_ammonium(comp);
    case PrecursorType::carbonate:
      return detail::head_oxygen_ratio(comp, "C", 3.0);
    case PrecursorType::nitrate:
      return detail::head_oxygen_ratio(comp, "N", 3.0);
    case PrecursorType::phosphate:
      return detail::head_oxygen_ratio(comp, "P", 3.0);
    case PrecursorType::oxide:
      return detail::is_metals_plus_oxygen(comp);
    case PrecursorType::other:
      return true;
  }
  return false;
}

inline PrecursorType precursor_type(const formula::Composition& comp,
                                    const PrecursorTypeRules& rules = {}) {
  for (PrecursorType t : rules.priority)
    if (matches_precursor_type(comp, t)) return t;
  return PrecursorType::other;
}

inline PrecursorType precursor_type(std::string_view formula_text,
                                    const PrecursorTypeRules& rules = {}) {
  return precursor_type(formula::parse_formula(formula_text), rules);
}

class EmptyPrecursorSetError : public std::runtime_error {
 public:
  EmptyPrecursorSetError() : std::runtime_error("EmptySet") {}
};

class PrecursorParseError : public std::runtime_error {
 public:
  PrecursorParseError(std::size_t index, const formula::FormulaError& cause)
      : std::runtime_error("precursor " + std::to_string(index) +
                           " failed to parse: " + cause.what()),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// tau: unique type set of a precursor set. Permutation-invariant.
inline std::set<PrecursorType> precursor_types_of_set(
    const std::vector<std::string>& precursors,
    const PrecursorTypeRules& rules = {}) {
  if (precursors.empty()) throw EmptyPrecursorSetError();
  std::set<PrecursorType> types;
  for (std::size_t i = 0; i < precursors.size(); ++i) {
    try {
      types.insert(precursor_type(precursors[i], rules));
    } catch (const formula::FormulaError& e) {
      throw PrecursorParseError(i, e);
    }
  }
  return types;
}

// Z = (Types, P): unique type set plus the precursor formulas in canonical
// form, input order preserved.
struct PrecursorInfo {
  std::set<PrecursorType> types;
  std::vector<std::string> precursors;

  bool operator==(const PrecursorInfo&) const = default;
};

inline PrecursorInfo make_precursor_info(
    const std::vector<std::string>& precursors,
    const PrecursorTypeRules& rules = {}) {
  PrecursorInfo info;
  info.types = precursor_types_of_set(precursors, rules);
  info.precursors.reserve(precursors.size());
  for (const auto& p : precursors)
    info.precursors.push_back(formula::canonicalize(p));
  return info;
}

// ---------------------------------------------------------------------------
// Material groups
// ---------------------------------------------------------------------------

// Rule predicates over a target composition. The JSON rule file uses the
// spellings "has_element(E)", "lacks_element(E)", "has_group(G)" and
// "has_metal"; a rule is the conjunction of its predicates and the first
// matching rule in priority order wins.
struct GroupPredicate {
  enum class Kind { has_element, lacks_element, has_group, has_metal };
  Kind kind;
  std::string arg;
};

struct GroupRule {
  std::string label;
  std::vector<GroupPredicate> predicates;
};

class TaxonomyError : public std::runtime_error {
 public:
  explicit TaxonomyError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Composition-level anion signatures for has_group (count-ratio tests; no
// token adjacency is available for a bare composition).
inline bool composition_has_group(const formula::Composition& comp,
                                  std::string_view group) {
  auto ratio = [&](const char* head, const char* tail, double r) {
    return comp.count(head) > 0.0 &&
           comp.count(tail) >= r * comp.count(head) - 1e-9;
  };
  if (group == "CO3") return ratio("C", "O", 3.0);
  if (group == "NO3") return ratio("N", "O", 3.0);
  if (group == "SO4") return ratio("S", "O", 4.0);
  if (group == "SO3") return ratio("S", "O", 3.0);
  if (group == "PO4") return ratio("P", "O", 4.0);
  if (group == "PO3") return ratio("P", "O", 3.0);
  if (group == "NH4") return ratio("N", "H", 4.0);
  if (group == "OH") return comp.count("O") > 0.0 && comp.count("H") > 0.0;
  throw TaxonomyError("unknown group signature \"" + std::string(group) +
                      "\"");
}

inline bool composition_has_metal(const formula::Composition& comp) {
  for (const auto& [sym, count] : comp.counts()) {
    (void)count;
    if (elements::is_metal_like(sym)) return true;
  }
  return false;
}

}  // namespace detail

inline bool evaluate_predicate(const GroupPredicate& pred,
                               const formula::Composition& comp) {
  switch (pred.kind) {
    case GroupPredicate::Kind::has_element: return comp.contains(pred.arg);
    case GroupPredicate::Kind::lacks_element: return !comp.contains(pred.arg);
    case GroupPredicate::Kind::has_group:
      return detail::composition_has_group(comp, pred.arg);
    case GroupPredicate::Kind::has_metal:
      return detail::composition_has_metal(comp);
  }
  return false;
}

inline GroupPredicate parse_predicate(std::string_view text) {
  auto parse_arg = [&](std::string_view prefix) -> std::optional<std::string> {
    if (text.size() > prefix.size() + 1 && text.substr(0, prefix.size()) == prefix &&
        text[prefix.size()] == '(' && text.back() == ')')
      return std::string(
          text.substr(prefix.size() + 1, text.size() - prefix.size() - 2));
    return std::nullopt;
  };
  if (text == "has_metal")
    return {GroupPredicate::Kind::has_metal, ""};
  if (auto arg = parse_arg("has_element"))
    return {GroupPredicate::Kind::has_element, *arg};
  if (auto arg = parse_arg("lacks_element"))
    return {GroupPredicate::Kind::lacks_element, *arg};
  if (auto arg = parse_arg("has_group"))
    return {GroupPredicate::Kind::has_group, *arg};
  throw TaxonomyError("unreadable rule predicate \"" + std::string(text) +
                      "\"");
}

inline std::string predicate_to_string(const GroupPredicate& pred) {
  switch (pred.kind) {
    case GroupPredicate::Kind::has_element:
      return "has_element(" + pred.arg + ")";
    case GroupPredicate::Kind::lacks_element:
      return "lacks_element(" + pred.arg + ")";
    case GroupPredicate::Kind::has_group: return "has_group(" + pred.arg + ")";
    case GroupPredicate::Kind::has_metal: return "has_metal";
  }
  return "";
}

// Priority-ordered material-group taxonomy. Multiple rule rows may share one
// label (the default expresses halide = Cl|Br|I as three conjunctive rows);
// "other" is the mandatory final catch-all.
class MaterialTaxonomy {
 public:
  explicit MaterialTaxonomy(std::vector<GroupRule> rules)
      : rules_(std::move(rules)) {
    validate();
  }

  const std::vector<GroupRule>& rules() const { return rules_; }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& rule : rules_)
      if (std::find(out.begin(), out.end(), rule.label) == out.end())
        out.push_back(rule.label);
    return out;
  }

  std::string classify(const formula::Composition& target) const {
    if (target.empty())
      throw formula::EmptyCompositionError();
    for (const auto& rule : rules_) {
      bool all = true;
      for (const auto& pred : rule.predicates)
        if (!evaluate_predicate(pred, target)) {
          all = false;
          break;
        }
      if (all) return rule.label;
    }
    return "other";  // totality even for rule files without a catch-all
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rule : rules_) {
      nlohmann::json preds = nlohmann::json::array();
      for (const auto& pred : rule.predicates)
        preds.push_back(predicate_to_string(pred));
      arr.push_back({{"label", rule.label}, {"rule", preds}});
    }
    return arr;
  }

  static MaterialTaxonomy from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw TaxonomyError("taxonomy file must be an array");
    std::vector<GroupRule> rules;
    for (const auto& entry : arr) {
      GroupRule rule;
      rule.label = entry.at("label").get<std::string>();
      for (const auto& pred : entry.at("rule"))
        rule.predicates.push_back(parse_predicate(pred.get<std::string>()));
      rules.push_back(std::move(rule));
    }
    return MaterialTaxonomy(std::move(rules));
  }

  static MaterialTaxonomy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TaxonomyError("cannot open taxonomy file " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

 private:
  void validate() const {
    if (rules_.empty()) throw TaxonomyError("taxonomy has no rules");
    std::vector<std::string> seen = labels();
    auto other = std::find(seen.begin(), seen.end(), "other");
    if (other != seen.end() && other + 1 != seen.end())
      throw TaxonomyError("\"other\" must be the last taxonomy label");
    for (std::size_t i = 0; i < rules_.size(); ++i)
      if (rules_[i].label == "other" && i + 1 != rules_.size())
        throw TaxonomyError("\"other\" rule must come last");
  }

  std::vector<GroupRule> rules_;
};

// The default 11-label taxonomy. The underlying paper names only a few of
// its 11 classes, so these anion-signature rules are a configurable stand-in.
inline const MaterialTaxonomy& default_taxonomy() {
  static const MaterialTaxonomy taxonomy = [] {
    using K = GroupPredicate::Kind;
    auto he = [](std::string e) {
      return GroupPredicate{K::has_element, std::move(e)};
    };
    auto le = [](std::string e) {
      return GroupPredicate{K::lacks_element, std::move(e)};
    };
    auto hg = [](std::string g) {
      return GroupPredicate{K::has_group, std::move(g)};
    };
    GroupPredicate hm{K::has_metal, ""};
    std::vector<GroupRule> rules = {
        {"phosphate", {he("P"), he("O")}},
        {"carbonate", {he("C"), he("O"), hm}},
        {"sulfate", {he("S"), hg("SO4")}},
        {"silicate", {he("Si"), he("O")}},
        {"borate", {he("B"), he("O")}},
        {"oxide", {he("O")}},
        {"nitride", {he("N"), le("O")}},
        {"sulfide", {he("S"), le("O")}},
        {"fluoride", {he("F"), le("O")}},
        {"halide", {he("Cl"), le("O")}},
        {"halide", {he("Br"), le("O")}},
        {"halide", {he("I"), le("O")}},
        {"other", {}},
    };
    return MaterialTaxonomy(std::move(rules));
  }();
  return taxonomy;
}

inline std::string classify_material_group(
    const formula::Composition& target,
    const MaterialTaxonomy& taxonomy = default_taxonomy()) {
  return taxonomy.classify(target);
}

}  // namespace msp::taxonomy
