#pragma once

// Evaluation metrics: Top-K exact match for precursor sets, operation
// sequences and complete-plan pairs; normalized edit distance, LCS and
// multiset F-1 over operation sequences; best-of-top-10 aggregation; plug-in
// conditional entropy of operation sequences given a discrete context.
//
// Conventions (the source protocol leaves these open): NED is reported as a
// similarity with max-length normalization, LCS is normalized by max length,
// and empty-vs-empty compares as 1.0 so that identity is a fixed point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "msp/corpus.hpp"
#include "msp/formula.hpp"

namespace msp::metrics {

using corpus::Operation;
using corpus::OperationSequence;

// ---------------------------------------------------------------------------
// Precursor-set equality
// ---------------------------------------------------------------------------

// Canonical, deduplicated set form; formulas that fail to parse keep their
// raw spelling (they can then only match the same raw spelling).
inline std::set<std::string> canonical_precursor_set(
    const std::vector<std::string>& formulas) {
  std::set<std::string> out;
  for (const auto& f : formulas) {
    auto outcome = formula::try_parse_formula(f);
    out.insert(outcome.ok()
                   ? formula::canonicalize(outcome.parsed->composition)
                   : f);
  }
  return out;
}

class EmptyTruthError : public std::runtime_error {
 public:
  EmptyTruthError() : std::runtime_error("EmptyTruth") {}
};

inline bool exact_match_precursors(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::string>& truth, std::size_t k) {
  if (truth.empty()) throw EmptyTruthError();
  if (k < 1) return false;
  std::set<std::string> truth_set = canonical_precursor_set(truth);
  std::size_t limit = std::min(k, candidates.size());
  for (std::size_t i = 0; i < limit; ++i)
    if (canonical_precursor_set(candidates[i]) == truth_set) return true;
  return false;
}

inline bool exact_match_operations(
    const std::vector<OperationSequence>& candidates,
    const OperationSequence& truth, std::size_t k) {
  if (truth.empty()) throw EmptyTruthError();
  std::size_t limit = std::min(k, candidates.size());
  for (std::size_t i = 0; i < limit; ++i)
    if (candidates[i] == truth) return true;
  return false;
}

struct MspCandidate {
  std::vector<std::string> precursors;
  OperationSequence operations;
};

struct MspTruth {
  std::vector<std::string> precursors;
  OperationSequence operations;
};

// Correct only when both components match simultaneously in the same pair.
inline bool exact_match_msp(const std::vector<MspCandidate>& candidates,
                            const MspTruth& truth, std::size_t k) {
  if (truth.precursors.empty() || truth.operations.empty())
    throw EmptyTruthError();
  std::set<std::string> truth_set = canonical_precursor_set(truth.precursors);
  std::size_t limit = std::min(k, candidates.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (candidates[i].operations == truth.operations &&
        canonical_precursor_set(candidates[i].precursors) == truth_set)
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Sequence metrics
// ---------------------------------------------------------------------------

template <typename T>
std::size_t levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t m = a.size(), n = b.size();
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t m = a.size(), n = b.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), 0);
  }
  return prev[n];
}

inline double ned_similarity(const OperationSequence& pred,
                             const OperationSequence& truth) {
  std::size_t max_len = std::max(pred.size(), truth.size());
  if (max_len == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(pred, truth)) /
                   static_cast<double>(max_len);
}

inline double lcs_score(const OperationSequence& pred,
                        const OperationSequence& truth) {
  std::size_t max_len = std::max(pred.size(), truth.size());
  if (max_len == 0) return 1.0;
  return static_cast<double>(lcs_length(pred, truth)) /
         static_cast<double>(max_len);
}

inline double multiset_f1(const OperationSequence& pred,
                          const OperationSequence& truth) {
  if (pred.empty() && truth.empty()) return 1.0;
  if (pred.empty() || truth.empty()) return 0.0;
  std::map<Operation, std::size_t> cp, ct;
  for (Operation op : pred) ++cp[op];
  for (Operation op : truth) ++ct[op];
  double inter = 0.0;
  for (const auto& [op, n] : cp) {
    auto it = ct.find(op);
    if (it != ct.end()) inter += static_cast<double>(std::min(n, it->second));
  }
  if (inter == 0.0) return 0.0;
  double precision = inter / static_cast<double>(pred.size());
  double recall = inter / static_cast<double>(truth.size());
  return 2.0 * precision * recall / (precision + recall);
}

class EmptyCandidatesError : public std::runtime_error {
 public:
  EmptyCandidatesError() : std::runtime_error("EmptyCandidates") {}
};

// Maximum metric value over the first min(10, |candidates|) candidates.
inline double best_of_candidates(
    const std::vector<OperationSequence>& candidates,
    const OperationSequence& truth,
    const std::function<double(const OperationSequence&,
                               const OperationSequence&)>& metric,
    std::size_t limit = 10) {
  if (candidates.empty()) throw EmptyCandidatesError();
  double best = 0.0;
  std::size_t n = std::min(limit, candidates.size());
  for (std::size_t i = 0; i < n; ++i)
    best = std::max(best, metric(candidates[i], truth));
  return best;
}

// ---------------------------------------------------------------------------
// Plug-in conditional entropy
// ---------------------------------------------------------------------------

class EmptyCorpusError : public std::runtime_error {
 public:
  EmptyCorpusError() : std::runtime_error("EmptyCorpus") {}
};

// H(O | C) = sum_c p(c) H(O | C=c) from empirical frequencies, in bits.
// The operation sequence is discretized as its full token string.
inline double plugin_conditional_entropy(
    const std::vector<corpus::SynthesisRecord>& records,
    const std::function<std::string(const corpus::SynthesisRecord&)>&
        context_fn) {
  if (records.empty()) throw EmptyCorpusError();
  std::map<std::string, std::map<std::string, std::size_t>> cells;
  for (const auto& rec : records)
    ++cells[context_fn(rec)][corpus::join_operations(rec.operations, ",")];

  double total = static_cast<double>(records.size());
  double h = 0.0;
  for (const auto& [ctx, dist] : cells) {
    double n_ctx = 0.0;
    for (const auto& [seq, n] : dist) n_ctx += static_cast<double>(n);
    double h_ctx = 0.0;
    for (const auto& [seq, n] : dist) {
      double p = static_cast<double>(n) / n_ctx;
      h_ctx -= p * std::log2(p);
    }
    h += (n_ctx / total) * h_ctx;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string id;
  bool em1 = false, em3 = false, em5 = false, em10 = false;
  // Sequence metrics apply to tasks with an operation component (sop, msp);
  // they stay unset for pp.
  std::optional<double> ned, lcs, f1;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string task;        // pp | sop | msp
  std::string split_kind;
  std::string mode;
  std::string model_id;
  std::string timestamp;

  double mean_em(int k) const {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : rows) {
      bool v = k >= 10 ? r.em10 : k >= 5 ? r.em5 : k >= 3 ? r.em3 : r.em1;
      hits += v ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
  }

  std::optional<double> mean_of(
      const std::function<std::optional<double>(const EvalRow&)>& get) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows)
      if (auto v = get(r)) {
        sum += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }

  std::string to_csv() const {
    std::ostringstream out;
    auto cell = [](const std::optional<double>& v) {
      if (!v) return std::string();
      std::ostringstream s;
      s.precision(6);
      s << std::fixed << *v;
      return s.str();
    };
    out << "id,em@1,em@3,em@5,em@10,ned,lcs,f1\n";
    for (const auto& r : rows)
      out << r.id << ',' << r.em1 << ',' << r.em3 << ',' << r.em5 << ','
          << r.em10 << ',' << cell(r.ned) << ',' << cell(r.lcs) << ','
          << cell(r.f1) << "\n";
    out << "mean," << mean_em(1) << ',' << mean_em(3) << ',' << mean_em(5)
        << ',' << mean_em(10) << ','
        << cell(mean_of([](const EvalRow& r) { return r.ned; })) << ','
        << cell(mean_of([](const EvalRow& r) { return r.lcs; })) << ','
        << cell(mean_of([](const EvalRow& r) { return r.f1; })) << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& r : rows)
      rows_json.push_back({{"id", r.id},
                           {"em@1", r.em1},
                           {"em@3", r.em3},
                           {"em@5", r.em5},
                           {"em@10", r.em10},
                           {"ned", opt(r.ned)},
                           {"lcs", opt(r.lcs)},
                           {"f1", opt(r.f1)}});
    return {{"task", task},
            {"split_kind", split_kind},
            {"mode", mode},
            {"model_id", model_id},
            {"timestamp", timestamp},
            {"rows", rows_json},
            {"means",
             {{"em@1", mean_em(1)},
              {"em@3", mean_em(3)},
              {"em@5", mean_em(5)},
              {"em@10", mean_em(10)},
              {"ned", opt(mean_of([](const EvalRow& r) { return r.ned; }))},
              {"lcs", opt(mean_of([](const EvalRow& r) { return r.lcs; }))},
              {"f1", opt(mean_of([](const EvalRow& r) { return r.f1; }))}}}};
  }
};

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// ---------------------------------------------------------------------------
// Record-level scoring
// ---------------------------------------------------------------------------

inline EvalRow score_pp_record(const std::string& id,
                               const std::vector<std::vector<std::string>>&
                                   candidates,
                               const std::vector<std::string>& truth) {
  EvalRow row;
  row.id = id;
  if (!candidates.empty()) {
    row.em1 = exact_match_precursors(candidates, truth, 1);
    row.em3 = exact_match_precursors(candidates, truth, 3);
    row.em5 = exact_match_precursors(candidates, truth, 5);
    row.em10 = exact_match_precursors(candidates, truth, 10);
  }
  return row;
}

inline EvalRow score_sop_record(const std::string& id,
                                const std::vector<OperationSequence>&
                                    candidates,
                                const OperationSequence& truth) {
  EvalRow row;
  row.id = id;
  if (candidates.empty()) {
    row.ned = 0.0;
    row.lcs = 0.0;
    row.f1 = 0.0;
    return row;
  }
  row.em1 = exact_match_operations(candidates, truth, 1);
  row.em3 = exact_match_operations(candidates, truth, 3);
  row.em5 = exact_match_operations(candidates, truth, 5);
  row.em10 = exact_match_operations(candidates, truth, 10);
  row.ned = best_of_candidates(candidates, truth, ned_similarity);
  row.lcs = best_of_candidates(candidates, truth, lcs_score);
  row.f1 = best_of_candidates(candidates, truth, multiset_f1);
  return row;
}

inline EvalRow score_msp_record(const std::string& id,
                                const std::vector<MspCandidate>& candidates,
                                const MspTruth& truth) {
  EvalRow row;
  row.id = id;
  if (candidates.empty()) {
    row.ned = 0.0;
    row.lcs = 0.0;
    row.f1 = 0.0;
    return row;
  }
  row.em1 = exact_match_msp(candidates, truth, 1);
  row.em3 = exact_match_msp(candidates, truth, 3);
  row.em5 = exact_match_msp(candidates, truth, 5);
  row.em10 = exact_match_msp(candidates, truth, 10);
  std::vector<OperationSequence> op_candidates;
  op_candidates.reserve(candidates.size());
  for (const auto& c : candidates) op_candidates.push_back(c.operations);
  row.ned = best_of_candidates(op_candidates, truth.operations,
                               ned_similarity);
  row.lcs = best_of_candidates(op_candidates, truth.operations, lcs_score);
  row.f1 = best_of_candidates(op_candidates, truth.operations, multiset_f1);
  return row;
}

}  // namespace msp::metrics
