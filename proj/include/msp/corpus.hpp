#pragma once

// Synthesis-record corpus: JSONL ingest with schema validation, the
// preprocessing pipeline (compositional-system removal, single-precursor
// removal, frequency filtering to fixpoint, dedup) and the two dataset
// splits (random and target-disjoint, both 8:1:1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "msp/formula.hpp"

namespace msp::corpus {

// ---------------------------------------------------------------------------
// Operation vocabulary (7 tokens)
// ---------------------------------------------------------------------------

enum class Operation {
  mixing,
  heating,
  sintering,
  annealing,
  quenching,
  drying,
  shaping,
};

inline constexpr std::array<Operation, 7> kAllOperations = {
    Operation::mixing,    Operation::heating, Operation::sintering,
    Operation::annealing, Operation::quenching, Operation::drying,
    Operation::shaping};

inline std::string_view to_string(Operation op) {
  switch (op) {
    case Operation::mixing: return "mixing";
    case Operation::heating: return "heating";
    case Operation::sintering: return "sintering";
    case Operation::annealing: return "annealing";
    case Operation::quenching: return "quenching";
    case Operation::drying: return "drying";
    case Operation::shaping: return "shaping";
  }
  return "";
}

inline std::optional<Operation> operation_from_string(std::string_view name) {
  for (Operation op : kAllOperations)
    if (to_string(op) == name) return op;
  return std::nullopt;
}

using OperationSequence = std::vector<Operation>;

inline std::string join_operations(const OperationSequence& ops,
                                   std::string_view sep = " -> ") {
  std::string out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out += sep;
    out += to_string(ops[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct SynthesisContext {
  std::optional<std::string> host_material;
  std::optional<std::string> dopant_or_substitution;
  std::optional<std::string> material_class;
  std::optional<std::string> functional_property;
  std::optional<std::string> composition_control;
  // Carries operation-adjacent wording; stored but never rendered into
  // prompts.
  std::optional<std::string> processing_or_stimulus;

  bool operator==(const SynthesisContext&) const = default;

  bool all_null() const {
    return !host_material && !dopant_or_substitution && !material_class &&
           !functional_property && !composition_control &&
           !processing_or_stimulus;
  }
};

struct SynthesisRecord {
  std::string id;
  std::string target;
  std::vector<std::string> precursors;
  OperationSequence operations;
  SynthesisContext context;
  std::string source_title;

  bool operator==(const SynthesisRecord&) const = default;
};

namespace detail {

inline nlohmann::json opt_to_json(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<std::string> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

}  // namespace detail

inline nlohmann::json context_to_json(const SynthesisContext& ctx) {
  return {{"host_material", detail::opt_to_json(ctx.host_material)},
          {"dopant_or_substitution",
           detail::opt_to_json(ctx.dopant_or_substitution)},
          {"material_class", detail::opt_to_json(ctx.material_class)},
          {"functional_property", detail::opt_to_json(ctx.functional_property)},
          {"composition_control", detail::opt_to_json(ctx.composition_control)},
          {"processing_or_stimulus",
           detail::opt_to_json(ctx.processing_or_stimulus)}};
}

inline SynthesisContext context_from_json(const nlohmann::json& j) {
  SynthesisContext ctx;
  auto get = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    return detail::opt_from_json(j.at(key));
  };
  ctx.host_material = get("host_material");
  ctx.dopant_or_substitution = get("dopant_or_substitution");
  ctx.material_class = get("material_class");
  ctx.functional_property = get("functional_property");
  ctx.composition_control = get("composition_control");
  ctx.processing_or_stimulus = get("processing_or_stimulus");
  return ctx;
}

inline nlohmann::json record_to_json(const SynthesisRecord& rec) {
  nlohmann::json ops = nlohmann::json::array();
  for (Operation op : rec.operations) ops.push_back(std::string(to_string(op)));
  return {{"id", rec.id},
          {"target", rec.target},
          {"precursors", rec.precursors},
          {"operations", ops},
          {"context", context_to_json(rec.context)},
          {"source_title", rec.source_title}};
}

// ---------------------------------------------------------------------------
// Heating refinement (raw-ingest path)
// ---------------------------------------------------------------------------

struct RawOperation {
  std::string category;  // heating | mixing | shaping | quenching | drying
  std::vector<std::string> subkeywords;
};

class UnknownCategoryError : public std::runtime_error {
 public:
  explicit UnknownCategoryError(const std::string& category)
      : std::runtime_error("UnknownCategory: \"" + category + "\"") {}
};

namespace detail {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline bool contains_stem(const std::vector<std::string>& subkeywords,
                          std::string_view stem) {
  for (const auto& kw : subkeywords)
    if (to_lower(kw).find(stem) != std::string::npos) return true;
  return false;
}

}  // namespace detail

// Heating entries split into sintering / annealing / generic heating by
// subkeyword stems; the other four base categories pass through.
inline Operation refine_heating_ops(const RawOperation& raw) {
  std::string category = detail::to_lower(raw.category);
  if (category == "heating") {
    if (detail::contains_stem(raw.subkeywords, "sinter"))
      return Operation::sintering;
    if (detail::contains_stem(raw.subkeywords, "anneal"))
      return Operation::annealing;
    return Operation::heating;
  }
  if (category == "mixing") return Operation::mixing;
  if (category == "shaping") return Operation::shaping;
  if (category == "quenching") return Operation::quenching;
  if (category == "drying") return Operation::drying;
  throw UnknownCategoryError(raw.category);
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

struct SchemaViolation {
  std::size_t line;  // 1-based
  std::string reason;
};

struct IngestResult {
  std::vector<SynthesisRecord> records;
  std::vector<SchemaViolation> errors;
};

class FileNotFoundError : public std::runtime_error {
 public:
  explicit FileNotFoundError(const std::string& path)
      : std::runtime_error("FileNotFound: " + path) {}
};

namespace detail {

inline SynthesisRecord record_from_json(const nlohmann::json& j) {
  SynthesisRecord rec;
  if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
  rec.id = j.at("id").get<std::string>();
  rec.target = j.at("target").get<std::string>();
  for (const auto& p : j.at("precursors"))
    rec.precursors.push_back(p.get<std::string>());

  if (j.contains("operations_raw")) {
    for (const auto& entry : j.at("operations_raw")) {
      RawOperation raw;
      raw.category = entry.at("category").get<std::string>();
      if (entry.contains("subkeywords"))
        for (const auto& kw : entry.at("subkeywords"))
          raw.subkeywords.push_back(kw.get<std::string>());
      rec.operations.push_back(refine_heating_ops(raw));
    }
  } else {
    for (const auto& tok : j.at("operations")) {
      auto op = operation_from_string(tok.get<std::string>());
      if (!op)
        throw std::runtime_error("unknown operation token \"" +
                                 tok.get<std::string>() + "\"");
      rec.operations.push_back(*op);
    }
  }
  if (rec.operations.empty())
    throw std::runtime_error("record has no operations");

  if (j.contains("context") && !j.at("context").is_null())
    rec.context = context_from_json(j.at("context"));
  if (j.contains("source_title") && !j.at("source_title").is_null())
    rec.source_title = j.at("source_title").get<std::string>();
  return rec;
}

}  // namespace detail

inline IngestResult ingest_records_from_stream(std::istream& in) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      result.records.push_back(detail::record_from_json(j));
    } catch (const std::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

inline IngestResult ingest_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path);
  return ingest_records_from_stream(in);
}

inline void write_records(const std::vector<SynthesisRecord>& records,
                          std::ostream& out) {
  for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
}

inline void write_records(const std::vector<SynthesisRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  write_records(records, out);
}

// ---------------------------------------------------------------------------
// Preprocessing filter
// ---------------------------------------------------------------------------

struct FilterReport {
  std::size_t input_records = 0;
  std::size_t removed_unparseable_target = 0;
  std::size_t removed_single_precursor = 0;
  std::size_t removed_low_frequency = 0;
  std::size_t removed_duplicate = 0;
  std::size_t surviving_records = 0;
  std::size_t precursor_vocabulary_size = 0;
  std::size_t frequency_iterations = 0;

  nlohmann::json to_json() const {
    return {{"input_records", input_records},
            {"removed_unparseable_target", removed_unparseable_target},
            {"removed_single_precursor", removed_single_precursor},
            {"removed_low_frequency", removed_low_frequency},
            {"removed_duplicate", removed_duplicate},
            {"surviving_records", surviving_records},
            {"precursor_vocabulary_size", precursor_vocabulary_size},
            {"frequency_iterations", frequency_iterations}};
  }
};

namespace detail {

// Canonical identity for frequency counting and dedup; raw trimmed string
// when the formula does not parse.
inline std::string precursor_key(const std::string& p) {
  auto outcome = formula::try_parse_formula(p);
  if (outcome.ok()) return formula::canonicalize(outcome.parsed->composition);
  return p;
}

inline std::string target_key(const SynthesisRecord& rec) {
  auto outcome = formula::try_parse_formula(rec.target);
  if (outcome.ok()) return formula::canonicalize(outcome.parsed->composition);
  return rec.target;
}

inline std::string triple_key(const SynthesisRecord& rec) {
  std::vector<std::string> keys;
  keys.reserve(rec.precursors.size());
  for (const auto& p : rec.precursors) keys.push_back(precursor_key(p));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::string k = target_key(rec);
  k += '|';
  for (const auto& p : keys) {
    k += p;
    k += ';';
  }
  k += '|';
  k += join_operations(rec.operations, ",");
  return k;
}

}  // namespace detail

// Stages, in order: (1) drop unparseable targets (compositional systems),
// (2) drop |precursors| < 2, (3) frequency filter to fixpoint, (4) dedup
// (target, precursor-set, operations) triples keeping first occurrence.
inline std::pair<std::vector<SynthesisRecord>, FilterReport> filter_corpus(
    const std::vector<SynthesisRecord>& records,
    std::size_t min_precursor_freq = 5) {
  FilterReport report;
  report.input_records = records.size();

  std::vector<SynthesisRecord> kept;
  kept.reserve(records.size());
  for (const auto& rec : records) {
    if (!formula::try_parse_formula(rec.target).ok()) {
      ++report.removed_unparseable_target;
      continue;
    }
    kept.push_back(rec);
  }

  std::vector<SynthesisRecord> multi;
  multi.reserve(kept.size());
  for (auto& rec : kept) {
    if (rec.precursors.size() < 2) {
      ++report.removed_single_precursor;
      continue;
    }
    multi.push_back(std::move(rec));
  }

  // Frequency filter: dropping records lowers frequencies, so iterate until
  // every precursor in every surviving record meets the threshold.
  bool changed = true;
  while (changed) {
    ++report.frequency_iterations;
    changed = false;
    std::map<std::string, std::size_t> freq;
    for (const auto& rec : multi)
      for (const auto& p : rec.precursors) ++freq[detail::precursor_key(p)];
    std::vector<SynthesisRecord> next;
    next.reserve(multi.size());
    for (auto& rec : multi) {
      bool ok = true;
      for (const auto& p : rec.precursors)
        if (freq[detail::precursor_key(p)] < min_precursor_freq) {
          ok = false;
          break;
        }
      if (ok) {
        next.push_back(std::move(rec));
      } else {
        ++report.removed_low_frequency;
        changed = true;
      }
    }
    multi = std::move(next);
  }

  std::set<std::string> seen;
  std::vector<SynthesisRecord> unique;
  unique.reserve(multi.size());
  for (auto& rec : multi) {
    if (!seen.insert(detail::triple_key(rec)).second) {
      ++report.removed_duplicate;
      continue;
    }
    unique.push_back(std::move(rec));
  }

  std::set<std::string> vocab;
  for (const auto& rec : unique)
    for (const auto& p : rec.precursors) vocab.insert(detail::precursor_key(p));
  report.surviving_records = unique.size();
  report.precursor_vocabulary_size = vocab.size();
  return {std::move(unique), report};
}

// Descending frequency, ties alphabetical by canonical form.
inline std::vector<std::pair<std::string, std::size_t>> precursor_vocabulary(
    const std::vector<SynthesisRecord>& records) {
  std::map<std::string, std::size_t> freq;
  for (const auto& rec : records)
    for (const auto& p : rec.precursors) ++freq[detail::precursor_key(p)];
  std::vector<std::pair<std::string, std::size_t>> out(freq.begin(),
                                                       freq.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitKind { random_split, target_disjoint };

inline std::string_view to_string(SplitKind kind) {
  return kind == SplitKind::random_split ? "random" : "target_disjoint";
}

inline std::optional<SplitKind> split_kind_from_string(std::string_view s) {
  if (s == "random") return SplitKind::random_split;
  if (s == "target_disjoint" || s == "target-disjoint")
    return SplitKind::target_disjoint;
  return std::nullopt;
}

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  SplitKind kind = SplitKind::random_split;
  std::uint64_t seed = 0;

  const std::vector<std::string>& part(std::string_view name) const {
    if (name == "train") return train;
    if (name == "validation" || name == "val") return validation;
    if (name == "test") return test;
    throw std::runtime_error("unknown split part \"" + std::string(name) +
                             "\"");
  }

  nlohmann::json to_json() const {
    return {{"split_kind", std::string(to_string(kind))},
            {"seed", seed},
            {"train", train},
            {"validation", validation},
            {"test", test}};
  }

  static CorpusSplit from_json(const nlohmann::json& j) {
    CorpusSplit split;
    auto kind = split_kind_from_string(j.at("split_kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown split_kind");
    split.kind = *kind;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train = j.at("train").get<std::vector<std::string>>();
    split.validation = j.at("validation").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    return split;
  }

  static CorpusSplit load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

class TooFewRecordsError : public std::runtime_error {
 public:
  explicit TooFewRecordsError(const std::string& what)
      : std::runtime_error(what) {}
};

namespace detail {

// Fisher-Yates with raw mt19937 draws: deterministic across standard
// libraries, unlike std::shuffle.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i)
    std::swap(items[i - 1], items[rng() % i]);
}

struct PartQuota {
  double fraction;
  std::vector<std::string>* ids;
  std::size_t count = 0;
};

}  // namespace detail

inline CorpusSplit split_random(const std::vector<SynthesisRecord>& records,
                                std::uint64_t seed) {
  if (records.size() < 10)
    throw TooFewRecordsError("TooFewRecords: need at least 10, have " +
                             std::to_string(records.size()));
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& rec : records) ids.push_back(rec.id);
  detail::deterministic_shuffle(ids, seed);

  std::size_t n = ids.size();
  auto n_val = static_cast<std::size_t>(std::llround(n * 0.1));
  auto n_test = static_cast<std::size_t>(std::llround(n * 0.1));
  std::size_t n_train = n - n_val - n_test;

  CorpusSplit split;
  split.kind = SplitKind::random_split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.validation.assign(ids.begin() + n_train,
                          ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val, ids.end());
  return split;
}

// Groups records by canonical target, then greedily assigns groups (largest
// first, ties in seed-shuffled order) to the part furthest below its 8:1:1
// quota. Disjointness is exact; the ratios are approximate.
inline CorpusSplit split_target_disjoint(
    const std::vector<SynthesisRecord>& records, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& rec : records)
    groups[detail::target_key(rec)].push_back(rec.id);
  if (groups.size() < 10)
    throw TooFewRecordsError("TooFewTargets: need at least 10 distinct "
                             "targets, have " +
                             std::to_string(groups.size()));

  std::vector<std::pair<std::string, std::vector<std::string>>> ordered(
      groups.begin(), groups.end());
  detail::deterministic_shuffle(ordered, seed);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) {
                     return a.second.size() > b.second.size();
                   });

  CorpusSplit split;
  split.kind = SplitKind::target_disjoint;
  split.seed = seed;
  double total = static_cast<double>(records.size());
  std::array<detail::PartQuota, 3> parts = {
      detail::PartQuota{0.8, &split.train},
      detail::PartQuota{0.1, &split.validation},
      detail::PartQuota{0.1, &split.test}};

  for (auto& [target, ids] : ordered) {
    detail::PartQuota* best = &parts[0];
    double best_deficit = -1e300;
    for (auto& part : parts) {
      double deficit =
          part.fraction * total - static_cast<double>(part.count);
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = &part;
      }
    }
    for (auto& id : ids) best->ids->push_back(id);
    best->count += ids.size();
  }
  return split;
}

}  // namespace msp::corpus
