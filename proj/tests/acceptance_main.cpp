// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// gating criterion fails. Runs fully offline (criterion 9 uses the in-repo
// mock endpoint); criterion 10 is a diagnostic that activates only when
// MSP_PUBLIC_CORPUS points at the public text-mined corpus.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "msp/corpus.hpp"
#include "msp/formula.hpp"
#include "msp/metrics.hpp"
#include "msp/mockllm.hpp"
#include "msp/promptkit.hpp"
#include "msp/retrieval.hpp"
#include "msp/runner.hpp"
#include "msp/taxonomy.hpp"
#include "support/oracles.hpp"

using namespace msp;
using corpus::Operation;
using corpus::OperationSequence;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

int g_failures = 0;

void report(int criterion, const std::string& name, const Outcome& outcome,
            double elapsed_s, double budget_s) {
  bool pass = outcome.pass && (budget_s <= 0.0 || elapsed_s < budget_s);
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion
            << ": " << name << " (" << outcome.detail.str();
  if (budget_s > 0.0)
    std::cout << ", " << elapsed_s << " s of " << budget_s << " s budget";
  std::cout << ")\n";
  if (!pass) ++g_failures;
}

template <typename Fn>
void run_criterion(int criterion, const std::string& name, double budget_s,
                   Fn&& fn) {
  Outcome outcome;
  auto start = std::chrono::steady_clock::now();
  try {
    fn(outcome);
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.detail << "unexpected exception: " << e.what();
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(criterion, name, outcome, elapsed, budget_s);
}

// --------------------------------------------------------------------------
// 1. Parser totality and canonical round-trip
// --------------------------------------------------------------------------

void criterion_parser(Outcome& out) {
  std::mt19937_64 rng(0xC0FFEE);
  const std::string alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"
      "()[]{}.*+-\xC2\xB7 :;,_/";
  std::size_t crashes = 0;
  for (int i = 0; i < 100000; ++i) {
    std::size_t len = rng() % 48;
    std::string text;
    for (std::size_t j = 0; j < len; ++j)
      text.push_back(alphabet[rng() % alphabet.size()]);
    try {
      auto outcome = formula::try_parse_formula(text);
      if (!outcome.ok() && !outcome.error.has_value()) ++crashes;
    } catch (...) {
      ++crashes;
    }
  }

  testing::FormulaGenerator gen(0xF00D);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text = gen.next();
    formula::Composition direct = formula::parse_formula(text);
    std::string canonical = formula::canonicalize(direct);
    formula::Composition reparsed = formula::parse_formula(canonical);
    if (!approx_equal(direct, reparsed) ||
        formula::canonicalize(reparsed) != canonical)
      ++mismatches;
  }
  out.pass = crashes == 0 && mismatches == 0;
  out.detail << "100000 fuzz inputs, " << crashes
             << " crashes; 1000 generated formulas, " << mismatches
             << " round-trip mismatches";
}

// --------------------------------------------------------------------------
// 2. Sequence-metric oracle equivalence
// --------------------------------------------------------------------------

// Exhaustive oracle families. Checking every pair with both sides of length
// up to 6 over all 7 tokens would be ~1.9e10 naive-exponential evaluations
// (far beyond the stated budget), so the suite runs complete grids that fit:
// every pair with total length <= 6 over the full vocabulary, plus every
// pair up to length 6 over 2 tokens and up to length 5 over 3 tokens.
// Sequences bucketed by length: buckets[l] holds every length-l sequence
// over the first `alphabet` tokens.
std::vector<std::vector<OperationSequence>> sequence_buckets(
    std::size_t alphabet, std::size_t max_len) {
  std::vector<std::vector<OperationSequence>> buckets(max_len + 1);
  buckets[0].push_back({});
  for (std::size_t len = 1; len <= max_len; ++len)
    for (const auto& base : buckets[len - 1])
      for (std::size_t a = 0; a < alphabet; ++a) {
        OperationSequence seq = base;
        seq.push_back(static_cast<Operation>(a));
        buckets[len].push_back(std::move(seq));
      }
  return buckets;
}

void criterion_metric_oracle(Outcome& out) {
  std::size_t checked = 0, mismatches = 0;
  auto check_pair = [&](const OperationSequence& a,
                        const OperationSequence& b) {
    ++checked;
    if (metrics::levenshtein(a, b) != testing::naive_levenshtein(a, b))
      ++mismatches;
    if (metrics::lcs_length(a, b) != testing::naive_lcs(a, b)) ++mismatches;
  };

  // Full 7-token vocabulary, every pair with |a| + |b| <= 6.
  auto full = sequence_buckets(7, 6);
  for (std::size_t m = 0; m <= 6; ++m)
    for (std::size_t n = 0; m + n <= 6; ++n)
      for (const auto& a : full[m])
        for (const auto& b : full[n]) check_pair(a, b);

  // Complete grids (both sides up to the full length) over restricted
  // alphabets.
  auto two = sequence_buckets(2, 6);
  auto three = sequence_buckets(3, 5);
  for (const auto& bucket_a : two)
    for (const auto& a : bucket_a)
      for (const auto& bucket_b : two)
        for (const auto& b : bucket_b) check_pair(a, b);
  for (const auto& bucket_a : three)
    for (const auto& a : bucket_a)
      for (const auto& bucket_b : three)
        for (const auto& b : bucket_b) check_pair(a, b);

  out.pass = mismatches == 0;
  out.detail << checked << " exhaustive pairs, " << mismatches
             << " oracle mismatches";
}

// --------------------------------------------------------------------------
// 3. Metric invariants
// --------------------------------------------------------------------------

void criterion_metric_invariants(Outcome& out) {
  std::mt19937_64 rng(0xBEEF);
  std::size_t violations = 0;
  const auto& pool = testing::typed_precursor_pool();

  for (int trial = 0; trial < 10000; ++trial) {
    auto truth_ops = testing::random_operations(rng, 1, 6);
    std::vector<std::string> truth_set;
    {
      std::set<std::string> chosen;
      std::size_t n = 2 + rng() % 3;
      while (chosen.size() < n)
        chosen.insert(pool[rng() % pool.size()].first);
      truth_set.assign(chosen.begin(), chosen.end());
    }

    std::vector<metrics::MspCandidate> pairs;
    std::size_t n_candidates = 1 + rng() % 12;
    for (std::size_t i = 0; i < n_candidates; ++i) {
      metrics::MspCandidate cand;
      if (rng() % 3 == 0) {
        cand.precursors = truth_set;
      } else {
        std::set<std::string> chosen;
        std::size_t n = 1 + rng() % 4;
        while (chosen.size() < n)
          chosen.insert(pool[rng() % pool.size()].first);
        cand.precursors.assign(chosen.begin(), chosen.end());
      }
      cand.operations = rng() % 3 == 0 ? truth_ops
                                       : testing::random_operations(rng, 1, 6);
      pairs.push_back(std::move(cand));
    }

    std::vector<std::vector<std::string>> precursor_candidates;
    std::vector<OperationSequence> op_candidates;
    for (const auto& p : pairs) {
      precursor_candidates.push_back(p.precursors);
      op_candidates.push_back(p.operations);
    }

    bool prev = false;
    for (std::size_t k : {1, 3, 5, 10}) {
      bool em = metrics::exact_match_msp(pairs, {truth_set, truth_ops}, k);
      if (prev && !em) ++violations;  // monotone in k
      prev = em;
      // Conjunction implies both component projections match.
      if (em) {
        if (!metrics::exact_match_precursors(precursor_candidates, truth_set,
                                             k))
          ++violations;
        if (!metrics::exact_match_operations(op_candidates, truth_ops, k))
          ++violations;
      }
    }

    const auto& a = op_candidates.front();
    const auto& b = truth_ops;
    double ned = metrics::ned_similarity(a, b);
    double lcs = metrics::lcs_score(a, b);
    double f1 = metrics::multiset_f1(a, b);
    for (double v : {ned, lcs, f1})
      if (v < 0.0 || v > 1.0) ++violations;
    if (metrics::ned_similarity(a, a) != 1.0) ++violations;
    if (metrics::lcs_score(a, a) != 1.0) ++violations;
    if (metrics::multiset_f1(a, a) != 1.0) ++violations;
    auto shuffled = a;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng() % i]);
    if (std::abs(metrics::multiset_f1(shuffled, b) - f1) > 1e-12)
      ++violations;
  }
  out.pass = violations == 0;
  out.detail << "10000 random candidate/truth trials, " << violations
             << " invariant violations";
}

// --------------------------------------------------------------------------
// 4. Conditional-entropy inequality
// --------------------------------------------------------------------------

void criterion_entropy(Outcome& out) {
  std::mt19937_64 rng(0xE17);
  std::size_t violations = 0;

  auto group_of = [](const corpus::SynthesisRecord& r) {
    return taxonomy::classify_material_group(formula::parse_formula(r.target));
  };
  auto group_types_of = [&](const corpus::SynthesisRecord& r) {
    std::string label = group_of(r) + "|";
    for (auto t : taxonomy::precursor_types_of_set(r.precursors)) {
      label += taxonomy::to_string(t);
      label += '+';
    }
    return label;
  };
  auto constant = [](const corpus::SynthesisRecord&) {
    return std::string("all");
  };

  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 50 + rng() % 451;
    auto records = testing::random_corpus(rng, n);
    double h_fine = metrics::plugin_conditional_entropy(records, group_types_of);
    double h_group = metrics::plugin_conditional_entropy(records, group_of);
    double h_const = metrics::plugin_conditional_entropy(records, constant);
    if (h_fine > h_group + 1e-12) ++violations;
    if (h_group > h_const + 1e-12) ++violations;
  }

  // Constructed corpus where the type set determines extra operations:
  // 2 groups x 2 type sets, each cell a distinct deterministic sequence.
  std::vector<corpus::SynthesisRecord> constructed;
  struct Cell {
    const char* target;
    std::vector<std::string> precursors;
    OperationSequence ops;
  };
  std::vector<Cell> cells = {
      {"BaTiO3", {"BaCO3", "TiO2"}, {Operation::mixing}},
      {"BaTiO3", {"La2O3", "MnO2"}, {Operation::heating}},
      {"LiFePO4", {"Li2CO3", "AlPO4"}, {Operation::sintering}},
      {"LiFePO4", {"Fe2O3", "Li3PO4"}, {Operation::drying}}};
  for (int copy = 0; copy < 100; ++copy)
    for (std::size_t c = 0; c < cells.size(); ++c) {
      corpus::SynthesisRecord rec;
      rec.id = "c" + std::to_string(c) + "_" + std::to_string(copy);
      rec.target = cells[c].target;
      rec.precursors = cells[c].precursors;
      rec.operations = cells[c].ops;
      constructed.push_back(std::move(rec));
    }
  double h_fine = metrics::plugin_conditional_entropy(constructed, group_types_of);
  double h_group = metrics::plugin_conditional_entropy(constructed, group_of);
  double h_const = metrics::plugin_conditional_entropy(constructed, constant);
  bool strict = h_fine < h_group - 1e-9 && h_group < h_const - 1e-9;
  bool exact = std::abs(h_fine - 0.0) < 1e-12 &&
               std::abs(h_group - 1.0) < 1e-12 &&
               std::abs(h_const - 2.0) < 1e-12;

  out.pass = violations == 0 && strict && exact;
  out.detail << "100 random corpora, " << violations
             << " chain violations; constructed corpus H(O|G,T)=" << h_fine
             << " < H(O|G)=" << h_group << " < H(O)=" << h_const;
}

// --------------------------------------------------------------------------
// 5. tau and decision-chain fixtures
// --------------------------------------------------------------------------

void criterion_taxonomy(Outcome& out) {
  std::size_t failures = 0;

  auto types = taxonomy::precursor_types_of_set({"CaCO3", "La2O3", "MnO2"});
  if (types != std::set<taxonomy::PrecursorType>{
                   taxonomy::PrecursorType::carbonate,
                   taxonomy::PrecursorType::oxide})
    ++failures;

  std::size_t fixtures = 0;
  for (const auto& [formula_text, expected] :
       testing::typed_precursor_pool()) {
    ++fixtures;
    if (taxonomy::to_string(taxonomy::precursor_type(formula_text)) !=
        expected)
      ++failures;
  }

  std::mt19937_64 rng(0x7A0);
  auto labels = taxonomy::default_taxonomy().labels();
  for (int i = 0; i < 1000; ++i) {
    formula::Composition::Map m;
    std::size_t n = 1 + rng() % 5;
    for (std::size_t j = 0; j < n; ++j)
      m[std::string(elements::kSymbols[rng() % elements::kSymbols.size()])] =
          1.0 + static_cast<double>(rng() % 9);
    std::string label =
        taxonomy::classify_material_group(formula::Composition(std::move(m)));
    if (std::find(labels.begin(), labels.end(), label) == labels.end())
      ++failures;
  }

  out.pass = failures == 0;
  out.detail << "reference type-set example, " << fixtures
             << " labeled precursor fixtures, 1000 random classifications; "
             << failures << " failures";
}

// --------------------------------------------------------------------------
// 6. Constraint-factorization serialization order
// --------------------------------------------------------------------------

void criterion_pcf_order(Outcome& out) {
  std::mt19937_64 rng(0x9CF);
  const auto& pool = testing::typed_precursor_pool();
  auto groups = taxonomy::default_taxonomy().labels();
  std::size_t violations = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    std::string group = groups[rng() % groups.size()];
    std::set<std::string> chosen;
    std::size_t n = 1 + rng() % 4;
    while (chosen.size() < n)
      chosen.insert(pool[rng() % pool.size()].first);
    auto z = taxonomy::make_precursor_info(
        std::vector<std::string>(chosen.begin(), chosen.end()));
    auto ops = testing::random_operations(rng, 1, 6);

    std::string text = prompt::render_sop_target(
        group, z, ops, prompt::ConditioningMode::explicit_pcf);

    bool ok = true;
    std::size_t pos = text.find(group);
    if (pos == std::string::npos) ok = false;
    std::size_t cursor = ok ? pos + group.size() : 0;
    for (auto t : z.types) {
      std::size_t p = text.find(taxonomy::to_string(t), cursor);
      if (p == std::string::npos) {
        ok = false;
        break;
      }
      cursor = p + std::string(taxonomy::to_string(t)).size();
    }
    if (ok)
      for (const auto& prec : z.precursors) {
        std::size_t p = text.find(prec, cursor);
        if (p == std::string::npos) {
          ok = false;
          break;
        }
        cursor = p + prec.size();
      }
    if (ok) {
      std::size_t p = text.find("Operations:", cursor);
      if (p == std::string::npos) ok = false;
      for (auto op : ops) {
        if (!ok) break;
        p = text.find(corpus::to_string(op), p);
        if (p == std::string::npos) ok = false;
      }
    }

    auto parsed = prompt::parse_sop_output(text);
    if (!parsed.ok() || parsed.group != group || parsed.operations != ops ||
        !parsed.z() || parsed.z()->types != z.types ||
        parsed.z()->precursors != z.precursors)
      ok = false;
    if (!ok) ++violations;
  }
  out.pass = violations == 0;
  out.detail << "1000 random (G, Z, O) triples, " << violations
             << " order/round-trip violations";
}

// --------------------------------------------------------------------------
// 7. Retrieval oracle equivalence
// --------------------------------------------------------------------------

void criterion_retrieval(Outcome& out) {
  std::mt19937_64 rng(0x5EED);
  std::size_t mismatches = 0, self_failures = 0;

  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng() % 63;
    auto records = testing::random_corpus(rng, n);
    for (std::size_t i = 0; i < records.size(); ++i)
      records[i].id = "r" + std::to_string(i);
    auto index = retrieval::RetrievalIndex::build(records);

    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& r : records) rows.emplace_back(r.id, r.target);

    const auto& targets = testing::target_pool();
    std::string query = targets[rng() % targets.size()];
    std::size_t k = 1 + rng() % std::min<std::size_t>(8, n);

    auto got = retrieval::retrieve_neighbors(index, query, k);
    auto expected = testing::oracle_retrieve(rows, query, k);
    if (got.size() != expected.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i)
      if (got[i].id != expected[i].id ||
          std::abs(got[i].similarity - expected[i].similarity) > 1e-9)
        ++mismatches;

    // Self-query: an indexed target queried back has similarity 1 at rank 1.
    const auto& self = records[rng() % records.size()].target;
    auto self_hits = retrieval::retrieve_neighbors(index, self, 1);
    if (std::abs(self_hits[0].similarity - 1.0) > 1e-9) ++self_failures;
  }
  out.pass = mismatches == 0 && self_failures == 0;
  out.detail << "200 random corpora: " << mismatches
             << " oracle mismatches, " << self_failures
             << " self-query failures";
}

// --------------------------------------------------------------------------
// 8. Split contracts
// --------------------------------------------------------------------------

void criterion_splits(Outcome& out) {
  // 1000 records over ~300 distinct generated targets so the greedy
  // assignment can land within +-2% of 8:1:1.
  std::mt19937_64 rng(0x58117);
  testing::FormulaGenerator gen(0x58117);
  std::vector<std::string> targets;
  std::set<std::string> seen;
  while (targets.size() < 300) {
    std::string t = gen.next();
    auto parsed = formula::try_parse_formula(t);
    if (!parsed.ok() || parsed.parsed->composition.empty()) continue;
    if (seen.insert(formula::canonicalize(parsed.parsed->composition)).second)
      targets.push_back(t);
  }
  std::vector<corpus::SynthesisRecord> records;
  for (int i = 0; i < 1000; ++i) {
    corpus::SynthesisRecord rec;
    rec.id = "s" + std::to_string(i);
    rec.target = targets[rng() % targets.size()];
    rec.precursors = {"BaCO3", "TiO2"};
    rec.operations = testing::random_operations(rng);
    records.push_back(std::move(rec));
  }

  bool ok = true;
  std::ostringstream why;

  auto random_split = corpus::split_random(records, 11);
  if (random_split.train.size() != 800 ||
      random_split.validation.size() != 100 ||
      random_split.test.size() != 100) {
    ok = false;
    why << "random split sizes " << random_split.train.size() << "/"
        << random_split.validation.size() << "/" << random_split.test.size()
        << "; ";
  }
  if (corpus::split_random(records, 11).to_json().dump() !=
      random_split.to_json().dump()) {
    ok = false;
    why << "random split not byte-identical on rerun; ";
  }

  auto disjoint = corpus::split_target_disjoint(records, 11);
  if (corpus::split_target_disjoint(records, 11).to_json().dump() !=
      disjoint.to_json().dump()) {
    ok = false;
    why << "disjoint split not byte-identical on rerun; ";
  }
  std::map<std::string, std::string> target_of;
  for (const auto& rec : records)
    target_of[rec.id] = formula::canonicalize(rec.target);
  std::array<std::set<std::string>, 3> part_targets;
  std::array<const std::vector<std::string>*, 3> parts = {
      &disjoint.train, &disjoint.validation, &disjoint.test};
  for (int p = 0; p < 3; ++p)
    for (const auto& id : *parts[p]) part_targets[p].insert(target_of[id]);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      std::vector<std::string> overlap;
      std::set_intersection(part_targets[i].begin(), part_targets[i].end(),
                            part_targets[j].begin(), part_targets[j].end(),
                            std::back_inserter(overlap));
      if (!overlap.empty()) {
        ok = false;
        why << "target overlap between parts " << i << " and " << j << "; ";
      }
    }
  double total = static_cast<double>(records.size());
  std::array<double, 3> quota = {0.8, 0.1, 0.1};
  for (int p = 0; p < 3; ++p) {
    double ratio = static_cast<double>(parts[p]->size()) / total;
    if (std::abs(ratio - quota[p]) > 0.02) {
      ok = false;
      why << "part " << p << " ratio " << ratio << " off quota; ";
    }
  }

  out.pass = ok;
  out.detail << "random 800/100/100, disjoint "
             << disjoint.train.size() << "/" << disjoint.validation.size()
             << "/" << disjoint.test.size() << " over "
             << targets.size() << " targets"
             << (why.str().empty() ? "" : ": " + why.str());
}

// --------------------------------------------------------------------------
// 9. End-to-end stub pipeline
// --------------------------------------------------------------------------

struct StubScript {
  std::vector<corpus::SynthesisRecord> records;
  bool corrupt_pp = false;

  std::string operator()(const std::string& model,
                         const std::string& prompt_text, int) const {
    for (const auto& rec : records) {
      if (prompt_text.find("Target material: " + rec.target + "\n") ==
          std::string::npos)
        continue;
      std::string group = taxonomy::classify_material_group(
          formula::parse_formula(rec.target));
      if (model == "stub-pp") {
        auto precursors = rec.precursors;
        if (corrupt_pp) precursors.push_back("Cs2O");
        return prompt::render_pp_target(group, precursors);
      }
      auto z = taxonomy::make_precursor_info(rec.precursors);
      return prompt::render_sop_target(group, z, rec.operations,
                                       prompt::ConditioningMode::explicit_pcf);
    }
    return "no scripted answer";
  }
};

void criterion_pipeline(Outcome& out) {
  std::mt19937_64 rng(0xE2E);
  auto records = testing::unique_target_corpus(rng, 50);
  for (std::size_t i = 0; i < records.size(); ++i)
    records[i].id = "fix" + std::to_string(i);

  StubScript script{records, false};
  mock::MockLlmServer server;
  server.set_handler(
      [&script](const std::string& model, const std::string& p, int i) {
        return script(model, p, i);
      });
  server.start();

  runner::EndpointConfig cfg_pp;
  cfg_pp.base_url = server.base_url();
  cfg_pp.model_id = "stub-pp";
  cfg_pp.num_samples = 3;
  cfg_pp.max_concurrency = 8;
  cfg_pp.timeout_s = 20.0;
  auto cfg_sop = cfg_pp;
  cfg_sop.model_id = "stub-sop";

  runner::RunOptions msp_options;
  msp_options.task = "msp";
  msp_options.k = 10;

  auto [manifest, report] =
      runner::run_task(cfg_pp, cfg_sop, records, msp_options);
  bool faithful = report.mean_em(1) == 1.0 && report.mean_em(10) == 1.0;

  // Reproducibility against a deterministic stub.
  auto [manifest2, report2] =
      runner::run_task(cfg_pp, cfg_sop, records, msp_options);
  bool reproducible =
      report.to_json().at("rows") == report2.to_json().at("rows");
  (void)manifest2;

  script.corrupt_pp = true;
  auto [manifest3, corrupted] =
      runner::run_task(cfg_pp, cfg_sop, records, msp_options);
  bool corrupted_all_miss =
      corrupted.mean_em(1) == 0.0 && corrupted.mean_em(3) == 0.0 &&
      corrupted.mean_em(5) == 0.0 && corrupted.mean_em(10) == 0.0;
  (void)manifest3;

  // Operation stage conditioned on ground truth is unaffected by the PP
  // corruption (the conjunction, not the stages, causes the misses).
  runner::RunOptions sop_options;
  sop_options.task = "sop";
  sop_options.k = 10;
  auto [manifest4, sop_report] =
      runner::run_task(cfg_pp, cfg_sop, records, sop_options);
  bool sop_unaffected = sop_report.mean_em(1) == 1.0;
  (void)manifest4;

  out.pass = faithful && reproducible && corrupted_all_miss && sop_unaffected;
  out.detail << "50-record stub pipeline: echo em@1=" << report.mean_em(1)
             << ", rerun identical=" << reproducible
             << ", corrupted em@10=" << corrupted.mean_em(10)
             << ", sop-given-truth em@1=" << sop_report.mean_em(1);
}

// --------------------------------------------------------------------------
// 10. Diagnostic corpus reproduction (non-gating)
// --------------------------------------------------------------------------

void criterion_corpus_reproduction() {
  const char* path = std::getenv("MSP_PUBLIC_CORPUS");
  if (!path) {
    std::cout << "[SKIP] criterion 10: public corpus not supplied (set "
                 "MSP_PUBLIC_CORPUS=<raw.jsonl> to run the diagnostic)\n";
    return;
  }
  try {
    auto ingest = corpus::ingest_records(path);
    auto [filtered, report] = corpus::filter_corpus(ingest.records, 5);
    double record_dev =
        std::abs(static_cast<double>(filtered.size()) - 10851.0) / 10851.0;
    double vocab_dev =
        std::abs(static_cast<double>(report.precursor_vocabulary_size) -
                 288.0) /
        288.0;
    std::cout << "[DIAG] criterion 10: " << filtered.size()
              << " records (reference 10851, deviation " << record_dev * 100
              << "%), " << report.precursor_vocabulary_size
              << " precursors (reference 288, deviation " << vocab_dev * 100
              << "%)";
    if (record_dev > 0.02 || vocab_dev > 0.02)
      std::cout << " — outside the 2% band; the upstream filter ordering is "
                   "under-specified, reported for information only";
    std::cout << "\n";
  } catch (const std::exception& e) {
    std::cout << "[DIAG] criterion 10: could not process " << path << ": "
              << e.what() << "\n";
  }
}

}  // namespace

int main() {
  run_criterion(1, "parser totality & canonical round-trip", 30.0,
                criterion_parser);
  run_criterion(2, "sequence-metric oracle equivalence", 60.0,
                criterion_metric_oracle);
  run_criterion(3, "metric invariants", 0.0, criterion_metric_invariants);
  run_criterion(4, "conditional-entropy inequality", 0.0, criterion_entropy);
  run_criterion(5, "precursor-type and decision-chain fixtures", 0.0,
                criterion_taxonomy);
  run_criterion(6, "constraint-factorization serialization order", 0.0,
                criterion_pcf_order);
  run_criterion(7, "retrieval oracle equivalence", 0.0, criterion_retrieval);
  run_criterion(8, "split contracts", 0.0, criterion_splits);
  run_criterion(9, "end-to-end stub pipeline", 120.0, criterion_pipeline);
  criterion_corpus_reproduction();

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all gating criteria passed\n";
  return 0;
}
