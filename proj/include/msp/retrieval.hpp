#pragma once

// Composition-vector nearest-neighbor baseline: predicts precursor sets and
// operation sequences by copying from the most similar training targets.
// Exhaustive exact cosine scan; ties broken by ascending record id.

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "msp/corpus.hpp"
#include "msp/formula.hpp"
#include "msp/metrics.hpp"

namespace msp::retrieval {

struct IndexEntry {
  std::string id;
  formula::CompositionVector vector;
  std::vector<std::string> precursors;
  corpus::OperationSequence operations;
};

class EmptyTrainingSetError : public std::runtime_error {
 public:
  EmptyTrainingSetError() : std::runtime_error("EmptyTrainingSet") {}
};

class KTooLargeError : public std::runtime_error {
 public:
  KTooLargeError(std::size_t k, std::size_t n)
      : std::runtime_error("KTooLarge: k=" + std::to_string(k) +
                           " exceeds index size " + std::to_string(n)) {}
};

// Immutable after build; concurrent queries are safe.
class RetrievalIndex {
 public:
  static RetrievalIndex build(const std::vector<corpus::SynthesisRecord>& train) {
    if (train.empty()) throw EmptyTrainingSetError();
    RetrievalIndex index;
    index.entries_.reserve(train.size());
    for (const auto& rec : train) {
      IndexEntry entry;
      entry.id = rec.id;
      entry.vector =
          formula::composition_vector(formula::parse_formula(rec.target));
      entry.precursors = rec.precursors;
      entry.operations = rec.operations;
      index.entries_.push_back(std::move(entry));
    }
    return index;
  }

  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  RetrievalIndex() = default;
  std::vector<IndexEntry> entries_;
};

struct Neighbor {
  std::string id;
  double similarity = 0.0;
  const IndexEntry* entry = nullptr;
};

inline std::vector<Neighbor> retrieve_neighbors(const RetrievalIndex& index,
                                                const std::string& query,
                                                std::size_t k) {
  if (k < 1 || k > index.size()) throw KTooLargeError(k, index.size());
  formula::CompositionVector qv =
      formula::composition_vector(formula::parse_formula(query));
  std::vector<Neighbor> all;
  all.reserve(index.size());
  for (const auto& entry : index.entries())
    all.push_back({entry.id, formula::cosine_similarity(qv, entry.vector),
                   &entry});
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     if (a.similarity != b.similarity)
                       return a.similarity > b.similarity;
                     return a.id < b.id;
                   });
  all.resize(k);
  return all;
}

struct RetrievalPrediction {
  std::vector<std::vector<std::string>> precursor_candidates;
  std::vector<corpus::OperationSequence> operation_candidates;
};

// Copies neighbor payloads in rank order. With dedup, identical precursor
// sets / operation sequences collapse keeping best rank and the scan
// continues deeper until k unique candidates or index exhaustion; the two
// candidate lists deduplicate independently.
inline RetrievalPrediction predict_by_retrieval(const RetrievalIndex& index,
                                                const std::string& query,
                                                std::size_t k, bool dedup) {
  if (k < 1 || k > index.size()) throw KTooLargeError(k, index.size());
  RetrievalPrediction pred;
  if (!dedup) {
    for (const auto& n : retrieve_neighbors(index, query, k)) {
      pred.precursor_candidates.push_back(n.entry->precursors);
      pred.operation_candidates.push_back(n.entry->operations);
    }
    return pred;
  }
  std::vector<Neighbor> all = retrieve_neighbors(index, query, index.size());
  std::set<std::set<std::string>> seen_sets;
  std::set<std::string> seen_ops;
  for (const auto& n : all) {
    if (pred.precursor_candidates.size() < k) {
      auto key = metrics::canonical_precursor_set(n.entry->precursors);
      if (seen_sets.insert(key).second)
        pred.precursor_candidates.push_back(n.entry->precursors);
    }
    if (pred.operation_candidates.size() < k) {
      std::string key = corpus::join_operations(n.entry->operations, ",");
      if (seen_ops.insert(key).second)
        pred.operation_candidates.push_back(n.entry->operations);
    }
    if (pred.precursor_candidates.size() >= k &&
        pred.operation_candidates.size() >= k)
      break;
  }
  return pred;
}

}  // namespace msp::retrieval
