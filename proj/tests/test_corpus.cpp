#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "msp/corpus.hpp"
#include "support/oracles.hpp"

using namespace msp;
using corpus::Operation;
using corpus::SynthesisRecord;

namespace {

std::string jsonl_line(const std::string& id, const std::string& target,
                       std::vector<std::string> precursors,
                       std::vector<std::string> operations) {
  nlohmann::json j = {{"id", id},
                      {"target", target},
                      {"precursors", precursors},
                      {"operations", operations},
                      {"context", corpus::context_to_json({})},
                      {"source_title", "t"}};
  return j.dump();
}

SynthesisRecord make_record(const std::string& id, const std::string& target,
                            std::vector<std::string> precursors,
                            corpus::OperationSequence ops) {
  SynthesisRecord rec;
  rec.id = id;
  rec.target = target;
  rec.precursors = std::move(precursors);
  rec.operations = std::move(ops);
  return rec;
}

}  // namespace

TEST_CASE("ingest reads valid lines and collects schema violations") {
  std::stringstream in;
  in << jsonl_line("a", "BaTiO3", {"BaCO3", "TiO2"}, {"mixing", "sintering"})
     << "\n"
     << jsonl_line("b", "LiFePO4", {"Li2CO3", "FePO4"}, {"mixing", "heating"})
     << "\n"
     << jsonl_line("c", "ZnO", {"ZnO"}, {"melting"}) << "\n"
     << "not json at all\n"
     << jsonl_line("d", "Y2O3", {"Y2O3", "Al2O3"}, {"drying"}) << "\n";
  auto result = corpus::ingest_records_from_stream(in);
  REQUIRE(result.records.size() == 3);
  CHECK(result.records[0].id == "a");
  CHECK(result.records[1].id == "b");
  CHECK(result.records[2].id == "d");
  REQUIRE(result.errors.size() == 2);
  CHECK(result.errors[0].line == 3);  // unknown operation token
  CHECK(result.errors[1].line == 4);  // unparseable JSON
}

TEST_CASE("ingest accepts the raw-operations variant") {
  nlohmann::json raw = {
      {"id", "r"},
      {"target", "BaTiO3"},
      {"precursors", {"BaCO3", "TiO2"}},
      {"operations_raw",
       {{{"category", "mixing"}, {"subkeywords", {"ball milled"}}},
        {{"category", "heating"}, {"subkeywords", {"sintered at 1200C"}}},
        {{"category", "heating"}, {"subkeywords", {"annealing in air"}}},
        {{"category", "heating"}, {"subkeywords", {"calcined"}}}}},
      {"source_title", "raw"}};
  std::stringstream in;
  in << raw.dump() << "\n";
  auto result = corpus::ingest_records_from_stream(in);
  REQUIRE(result.errors.empty());
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].operations ==
        corpus::OperationSequence{Operation::mixing, Operation::sintering,
                                  Operation::annealing, Operation::heating});
}

TEST_CASE("refine_heating_ops splits heating by subkeyword stems") {
  using corpus::refine_heating_ops;
  CHECK(refine_heating_ops({"heating", {"sintered at 1200C"}}) ==
        Operation::sintering);
  CHECK(refine_heating_ops({"heating", {"annealing in air"}}) ==
        Operation::annealing);
  CHECK(refine_heating_ops({"heating", {"calcined"}}) == Operation::heating);
  CHECK(refine_heating_ops({"heating", {}}) == Operation::heating);
  // Sinter has priority when both stems appear.
  CHECK(refine_heating_ops({"heating", {"annealed", "then Sintered"}}) ==
        Operation::sintering);
  CHECK(refine_heating_ops({"mixing", {"ball milled"}}) == Operation::mixing);
  CHECK_THROWS_AS(refine_heating_ops({"melting", {}}),
                  corpus::UnknownCategoryError);
}

TEST_CASE("filter_corpus applies the four stages in order") {
  std::vector<SynthesisRecord> records;
  // Stage 1 victim: variable-subscript target.
  records.push_back(make_record("comp", "LixCoO2", {"Li2CO3", "Co3O4"},
                                {Operation::mixing}));
  // Stage 2 victim: single precursor.
  records.push_back(
      make_record("single", "ZnO", {"ZnO"}, {Operation::heating}));
  // Frequent pair appearing 5 times (two of them duplicates of the triple).
  for (int i = 0; i < 5; ++i)
    records.push_back(make_record(
        "freq" + std::to_string(i), "BaTiO3", {"BaCO3", "TiO2"},
        {Operation::mixing, Operation::sintering}));
  // Stage 3 victim: contains a precursor seen only once.
  records.push_back(make_record("rare", "SrTiO3", {"SrCO3", "TiO2"},
                                {Operation::mixing}));

  auto [filtered, report] = corpus::filter_corpus(records, 5);

  CHECK(report.input_records == records.size());
  CHECK(report.removed_unparseable_target == 1);
  CHECK(report.removed_single_precursor == 1);
  CHECK(report.removed_low_frequency == 1);
  CHECK(report.removed_duplicate == 4);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0].id == "freq0");
  CHECK(report.surviving_records == 1);
  CHECK(report.precursor_vocabulary_size == 2);
}

TEST_CASE("filter_corpus iterates frequency filtering to fixpoint") {
  // A appears 5 times paired with B; B appears 6 times; C ties B's fifth
  // record to a rare precursor, so dropping cascades.
  std::vector<SynthesisRecord> records;
  for (int i = 0; i < 4; ++i)
    records.push_back(make_record("ab" + std::to_string(i), "BaTiO3",
                                  {"BaCO3", "TiO2"},
                                  {Operation::mixing,
                                   static_cast<Operation>(i % 7)}));
  records.push_back(make_record("abc", "SrTiO3", {"BaCO3", "TiO2", "Eu2O3"},
                                {Operation::drying}));
  auto [filtered, report] = corpus::filter_corpus(records, 5);
  // Eu2O3 (freq 1) kills "abc"; BaCO3/TiO2 then have freq 4 < 5, killing the
  // rest only via the fixpoint iteration.
  CHECK(filtered.empty());
  CHECK(report.removed_low_frequency == 5);
  CHECK(report.frequency_iterations >= 2);

  // Idempotence on a surviving corpus.
  std::vector<SynthesisRecord> stable;
  for (int i = 0; i < 6; ++i)
    stable.push_back(make_record("s" + std::to_string(i), "BaTiO3",
                                 {"BaCO3", "TiO2"},
                                 {Operation::mixing,
                                  static_cast<Operation>(i % 7)}));
  auto [once, r1] = corpus::filter_corpus(stable, 5);
  auto [twice, r2] = corpus::filter_corpus(once, 5);
  CHECK(once == twice);
  CHECK(r2.removed_low_frequency == 0);
  CHECK(r2.removed_duplicate == 0);
}

TEST_CASE("property: after filtering every precursor meets the threshold") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    auto records = testing::random_corpus(rng, 120);
    auto [filtered, report] = corpus::filter_corpus(records, 3);
    auto vocab = corpus::precursor_vocabulary(filtered);
    for (const auto& [p, freq] : vocab) CHECK(freq >= 3);
    // Idempotence.
    auto [again, report2] = corpus::filter_corpus(filtered, 3);
    CHECK(again == filtered);
  }
}

TEST_CASE("precursor_vocabulary orders by frequency then alphabetical") {
  std::vector<SynthesisRecord> records;
  records.push_back(make_record("1", "BaTiO3", {"BaCO3", "TiO2"},
                                {Operation::mixing}));
  records.push_back(make_record("2", "SrTiO3", {"SrCO3", "TiO2"},
                                {Operation::mixing}));
  records.push_back(make_record("3", "CaTiO3", {"CaCO3", "TiO2"},
                                {Operation::mixing}));
  auto vocab = corpus::precursor_vocabulary(records);
  REQUIRE(vocab.size() == 4);
  CHECK(vocab[0] == std::pair<std::string, std::size_t>{"O2Ti", 3});
  // Ties broken alphabetically by canonical form.
  CHECK(vocab[1].first == "CBaO3");
  CHECK(vocab[2].first == "CCaO3");
  CHECK(vocab[3].first == "CO3Sr");

  CHECK(corpus::precursor_vocabulary({}).empty());

  // Brute-force counting oracle on a random corpus.
  std::mt19937_64 rng(99);
  auto randoms = testing::random_corpus(rng, 80);
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : randoms)
    for (const auto& p : rec.precursors)
      ++counts[formula::canonicalize(p)];
  for (const auto& [p, freq] : corpus::precursor_vocabulary(randoms))
    CHECK(counts.at(p) == freq);
}

TEST_CASE("split_random produces a deterministic 8:1:1 partition") {
  std::mt19937_64 rng(321);
  auto records = testing::random_corpus(rng, 100);
  for (std::size_t i = 0; i < records.size(); ++i)
    records[i].id = "id" + std::to_string(i);

  auto split = corpus::split_random(records, 42);
  CHECK(split.train.size() == 80);
  CHECK(split.validation.size() == 10);
  CHECK(split.test.size() == 10);

  auto again = corpus::split_random(records, 42);
  CHECK(split.to_json() == again.to_json());
  auto different = corpus::split_random(records, 43);
  CHECK(split.to_json() != different.to_json());

  // Partition: disjoint and covering.
  std::set<std::string> all;
  for (const auto& part : {split.train, split.validation, split.test})
    for (const auto& id : part) CHECK(all.insert(id).second);
  CHECK(all.size() == records.size());
}

TEST_CASE("split_random handles the minimum corpus") {
  std::mt19937_64 rng(1);
  auto records = testing::random_corpus(rng, 10);
  auto split = corpus::split_random(records, 7);
  CHECK(split.train.size() == 8);
  CHECK(split.validation.size() == 1);
  CHECK(split.test.size() == 1);
  auto nine = testing::random_corpus(rng, 9);
  CHECK_THROWS_AS(corpus::split_random(nine, 7), corpus::TooFewRecordsError);
}

TEST_CASE("split_target_disjoint keeps target groups together") {
  std::mt19937_64 rng(2024);
  auto records = testing::random_corpus(rng, 200);
  for (std::size_t i = 0; i < records.size(); ++i)
    records[i].id = "id" + std::to_string(i);

  auto split = corpus::split_target_disjoint(records, 9);
  std::map<std::string, const SynthesisRecord*> by_id;
  for (const auto& rec : records) by_id[rec.id] = &rec;

  std::array<std::set<std::string>, 3> targets;
  std::size_t covered = 0;
  int part_idx = 0;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& id : *part) {
      targets[part_idx].insert(formula::canonicalize(by_id.at(id)->target));
      ++covered;
    }
    ++part_idx;
  }
  CHECK(covered == records.size());
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      std::vector<std::string> overlap;
      std::set_intersection(targets[i].begin(), targets[i].end(),
                            targets[j].begin(), targets[j].end(),
                            std::back_inserter(overlap));
      CHECK(overlap.empty());
    }

  auto again = corpus::split_target_disjoint(records, 9);
  CHECK(split.to_json() == again.to_json());
}

TEST_CASE("split_target_disjoint with singleton groups is 8:1:1") {
  std::vector<SynthesisRecord> records;
  const auto& pool = testing::target_pool();
  for (int i = 0; i < 10; ++i)
    records.push_back(make_record("g" + std::to_string(i), pool[i],
                                  {"BaCO3", "TiO2"}, {Operation::mixing}));
  auto split = corpus::split_target_disjoint(records, 3);
  CHECK(split.train.size() == 8);
  CHECK(split.validation.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("records round-trip through JSONL bit-identically") {
  std::mt19937_64 rng(888);
  auto records = testing::random_corpus(rng, 25);
  records[0].context.host_material = "BaTiO3 ceramics";
  records[0].context.processing_or_stimulus = "spark plasma";

  std::stringstream first;
  corpus::write_records(records, first);
  auto reread = corpus::ingest_records_from_stream(first);
  REQUIRE(reread.errors.empty());
  std::stringstream second;
  corpus::write_records(reread.records, second);
  CHECK(first.str() == second.str());
  CHECK(reread.records == records);
}

TEST_CASE("split JSON round-trip") {
  std::mt19937_64 rng(13);
  auto records = testing::random_corpus(rng, 40);
  auto split = corpus::split_random(records, 5);
  auto parsed = corpus::CorpusSplit::from_json(split.to_json());
  CHECK(parsed.to_json() == split.to_json());
  CHECK(parsed.part("train").size() == split.train.size());
  CHECK_THROWS(parsed.part("nope"));
}
