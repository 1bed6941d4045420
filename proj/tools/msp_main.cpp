// msp: command-line toolkit for the material synthesis planning pipeline.
// Subcommands: corpus ingest/filter/split/vocab, export finetune, baseline
// retrieve, evaluate, run pp|sop|msp, context extract, templates dump,
// mock serve.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msp/corpus.hpp"
#include "msp/metrics.hpp"
#include "msp/mockllm.hpp"
#include "msp/promptkit.hpp"
#include "msp/retrieval.hpp"
#include "msp/runner.hpp"
#include "msp/taxonomy.hpp"

namespace {

using nlohmann::json;

std::vector<msp::corpus::SynthesisRecord> load_corpus_or_die(
    const std::string& path, bool tolerate_errors = false) {
  auto result = msp::corpus::ingest_records(path);
  if (!result.errors.empty()) {
    for (const auto& e : result.errors)
      std::cerr << path << ":" << e.line << ": " << e.reason << "\n";
    if (!tolerate_errors)
      throw std::runtime_error(std::to_string(result.errors.size()) +
                               " schema violations in " + path);
  }
  return std::move(result.records);
}

msp::prompt::TemplateStore load_templates(const std::string& dir) {
  msp::prompt::TemplateStore store;
  if (!dir.empty()) store.load_overrides(dir);
  return store;
}

msp::prompt::ConditioningMode parse_mode_or_die(const std::string& mode) {
  auto m = msp::prompt::mode_from_string(mode);
  if (!m)
    throw std::runtime_error("unknown mode \"" + mode +
                             "\" (target_only | implicit | explicit)");
  return *m;
}

std::vector<msp::corpus::SynthesisRecord> select_part(
    const std::vector<msp::corpus::SynthesisRecord>& records,
    const msp::corpus::CorpusSplit& split, const std::string& part) {
  std::map<std::string, const msp::corpus::SynthesisRecord*> by_id;
  for (const auto& rec : records) by_id[rec.id] = &rec;
  std::vector<msp::corpus::SynthesisRecord> out;
  for (const auto& id : split.part(part)) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("split references unknown record id " + id);
    out.push_back(*it->second);
  }
  return out;
}

msp::corpus::OperationSequence parse_ops_or_die(const json& arr) {
  msp::corpus::OperationSequence ops;
  for (const auto& tok : arr) {
    auto op = msp::corpus::operation_from_string(tok.get<std::string>());
    if (!op)
      throw std::runtime_error("unknown operation token \"" +
                               tok.get<std::string>() + "\"");
    ops.push_back(*op);
  }
  return ops;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& task, const std::string& csv_out,
                 const std::string& json_out) {
  auto records = load_corpus_or_die(truth_path);
  std::map<std::string, const msp::corpus::SynthesisRecord*> truth;
  for (const auto& rec : records) truth[rec.id] = &rec;

  std::ifstream in(pred_path);
  if (!in) throw std::runtime_error("cannot open " + pred_path);

  msp::metrics::EvalReport report;
  report.task = task;
  report.timestamp = msp::metrics::utc_timestamp();

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string id = j.at("id").get<std::string>();
    auto it = truth.find(id);
    if (it == truth.end())
      throw std::runtime_error("prediction for unknown record id " + id);
    const auto& rec = *it->second;

    if (task == "pp") {
      std::vector<std::vector<std::string>> candidates;
      for (const auto& c : j.at("candidates"))
        candidates.push_back(c.get<std::vector<std::string>>());
      report.rows.push_back(
          msp::metrics::score_pp_record(id, candidates, rec.precursors));
    } else if (task == "sop") {
      std::vector<msp::corpus::OperationSequence> candidates;
      for (const auto& c : j.at("candidates"))
        candidates.push_back(parse_ops_or_die(c));
      report.rows.push_back(
          msp::metrics::score_sop_record(id, candidates, rec.operations));
    } else {
      std::vector<msp::metrics::MspCandidate> candidates;
      for (const auto& c : j.at("candidates"))
        candidates.push_back(
            {c.at("precursors").get<std::vector<std::string>>(),
             parse_ops_or_die(c.at("operations"))});
      report.rows.push_back(msp::metrics::score_msp_record(
          id, candidates, {rec.precursors, rec.operations}));
    }
  }

  std::string csv = report.to_csv();
  if (csv_out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(csv_out);
    out << csv;
  }
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << report.to_json().dump(2) << "\n";
  }
  std::cerr << "evaluated " << report.rows.size() << " records: em@1="
            << report.mean_em(1) << " em@10=" << report.mean_em(10) << "\n";
  return 0;
}

// Mock service answering with ground-truth serializations looked up by the
// target formula inside the prompt; used for offline demos and smoke runs.
int cmd_mock_serve(const std::string& corpus_path, int port, bool corrupt_pp,
                   const std::string& model_pp, const std::string& model_sop) {
  auto records = load_corpus_or_die(corpus_path);
  msp::mock::MockLlmServer server;
  server.set_handler([records, corrupt_pp, model_pp, model_sop](
                         const std::string& model, const std::string& prompt,
                         int) -> std::string {
    for (const auto& rec : records) {
      if (prompt.find("Target material: " + rec.target + "\n") ==
          std::string::npos)
        continue;
      std::string group = msp::taxonomy::classify_material_group(
          msp::formula::parse_formula(rec.target));
      if (model == model_pp) {
        auto precursors = rec.precursors;
        if (corrupt_pp) precursors.push_back("Cs2O");
        return msp::prompt::render_pp_target(group, precursors);
      }
      if (model == model_sop) {
        auto z = msp::taxonomy::make_precursor_info(rec.precursors);
        return msp::prompt::render_sop_target(
            group, z, rec.operations,
            msp::prompt::ConditioningMode::explicit_pcf);
      }
    }
    return "no scripted answer";
  });
  server.start(port);
  std::cout << server.base_url() << std::endl;
  std::cerr << "serving scripted completions (Ctrl-C to stop)\n";
  for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Material synthesis planning toolkit"};
  app.require_subcommand(1);

  // --- corpus ---------------------------------------------------------
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus preprocessing");
  corpus_cmd->require_subcommand(1);

  std::string in_path, out_path, errors_path;
  auto* ingest = corpus_cmd->add_subcommand("ingest", "Ingest raw JSONL");
  ingest->add_option("--in", in_path, "raw JSONL input")->required();
  ingest->add_option("--out", out_path, "corpus JSONL output")->required();
  ingest->add_option("--errors", errors_path, "schema-violation report");
  ingest->callback([&] {
    auto result = msp::corpus::ingest_records(in_path);
    msp::corpus::write_records(result.records, out_path);
    if (!errors_path.empty()) {
      std::ofstream err(errors_path);
      for (const auto& e : result.errors)
        err << json({{"line", e.line}, {"reason", e.reason}}).dump() << "\n";
    }
    std::cerr << "ingested " << result.records.size() << " records, "
              << result.errors.size() << " schema violations\n";
  });

  std::size_t min_freq = 5;
  std::string report_path;
  auto* filter = corpus_cmd->add_subcommand("filter",
                                            "Preprocessing filter pipeline");
  filter->add_option("--in", in_path)->required();
  filter->add_option("--out", out_path)->required();
  filter->add_option("--min-precursor-freq", min_freq,
                     "minimum precursor frequency (default 5)");
  filter->add_option("--report", report_path, "filter report JSON");
  filter->callback([&] {
    auto records = load_corpus_or_die(in_path);
    auto [filtered, report] = msp::corpus::filter_corpus(records, min_freq);
    msp::corpus::write_records(filtered, out_path);
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      out << report.to_json().dump(2) << "\n";
    }
    std::cerr << report.to_json().dump(2) << "\n";
  });

  std::string kind = "random";
  std::uint64_t seed = 0;
  auto* split = corpus_cmd->add_subcommand("split", "Dataset split");
  split->add_option("--in", in_path)->required();
  split->add_option("--kind", kind, "random | target-disjoint");
  split->add_option("--seed", seed, "shuffle seed")->required();
  split->add_option("--out", out_path, "split JSON output")->required();
  split->callback([&] {
    auto records = load_corpus_or_die(in_path);
    auto k = msp::corpus::split_kind_from_string(kind);
    if (!k) throw std::runtime_error("unknown split kind \"" + kind + "\"");
    auto result = *k == msp::corpus::SplitKind::random_split
                      ? msp::corpus::split_random(records, seed)
                      : msp::corpus::split_target_disjoint(records, seed);
    std::ofstream out(out_path);
    out << result.to_json().dump(2) << "\n";
    std::cerr << "train/validation/test = " << result.train.size() << "/"
              << result.validation.size() << "/" << result.test.size()
              << "\n";
  });

  auto* vocab = corpus_cmd->add_subcommand("vocab", "Precursor vocabulary");
  vocab->add_option("--in", in_path)->required();
  vocab->callback([&] {
    auto records = load_corpus_or_die(in_path);
    for (const auto& [p, freq] : msp::corpus::precursor_vocabulary(records))
      std::cout << p << "," << freq << "\n";
  });

  // --- export ---------------------------------------------------------
  auto* export_cmd = app.add_subcommand("export", "Data export");
  export_cmd->require_subcommand(1);
  std::string task = "pp", mode = "explicit", templates_dir, taxonomy_path;
  auto* finetune = export_cmd->add_subcommand(
      "finetune", "Fine-tuning prompt/target JSONL");
  finetune->add_option("--in", in_path)->required();
  finetune->add_option("--out", out_path)->required();
  finetune->add_option("--task", task, "pp | sop")->required();
  finetune->add_option("--mode", mode,
                       "target_only | implicit | explicit (sop)");
  finetune->add_option("--templates", templates_dir,
                       "template override directory");
  finetune->add_option("--taxonomy", taxonomy_path,
                       "material-group taxonomy JSON (default built-in)");
  finetune->callback([&] {
    auto records = load_corpus_or_die(in_path);
    auto store = load_templates(templates_dir);
    auto m = parse_mode_or_die(mode);
    auto t = task == "pp" ? msp::prompt::Task::pp : msp::prompt::Task::sop;
    if (task != "pp" && task != "sop")
      throw std::runtime_error("task must be pp or sop");
    auto tax = taxonomy_path.empty()
                   ? msp::taxonomy::default_taxonomy()
                   : msp::taxonomy::MaterialTaxonomy::load(taxonomy_path);
    std::size_t n = msp::prompt::export_finetune_jsonl(records, t, m,
                                                       out_path, store, tax);
    std::cerr << "wrote " << n << " pairs to " << out_path << "\n";
  });

  // --- baseline -------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "Retrieval baseline");
  baseline->require_subcommand(1);
  std::string index_path, query;
  std::size_t top_k = 10;
  bool dedup = false;
  auto* retrieve = baseline->add_subcommand("retrieve",
                                            "Nearest-neighbor prediction");
  retrieve->add_option("--index", index_path, "training corpus JSONL")
      ->required();
  retrieve->add_option("--query", query, "target formula")->required();
  retrieve->add_option("--k", top_k, "number of candidates");
  retrieve->add_flag("--dedup", dedup, "deduplicate candidate payloads");
  retrieve->callback([&] {
    auto train = load_corpus_or_die(index_path);
    auto index = msp::retrieval::RetrievalIndex::build(train);
    std::size_t k = std::min<std::size_t>(top_k, index.size());
    auto neighbors = msp::retrieval::retrieve_neighbors(index, query, k);
    auto pred = msp::retrieval::predict_by_retrieval(index, query, k, dedup);
    json out;
    out["query"] = query;
    out["neighbors"] = json::array();
    for (const auto& n : neighbors)
      out["neighbors"].push_back({{"id", n.id}, {"similarity", n.similarity}});
    out["precursor_candidates"] = pred.precursor_candidates;
    out["operation_candidates"] = json::array();
    for (const auto& ops : pred.operation_candidates) {
      json arr = json::array();
      for (auto op : ops) arr.push_back(std::string(msp::corpus::to_string(op)));
      out["operation_candidates"].push_back(arr);
    }
    std::cout << out.dump(2) << "\n";
  });

  // --- evaluate -------------------------------------------------------
  std::string pred_path, truth_path, csv_out, json_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions");
  evaluate->add_option("--pred", pred_path, "predictions JSONL")->required();
  evaluate->add_option("--truth", truth_path, "ground-truth corpus JSONL")
      ->required();
  evaluate->add_option("--task", task, "pp | sop | msp")->required();
  evaluate->add_option("--out", csv_out, "CSV report path (default stdout)");
  evaluate->add_option("--json", json_out, "JSON report path");
  evaluate->callback([&] {
    if (task != "pp" && task != "sop" && task != "msp")
      throw std::runtime_error("task must be pp, sop or msp");
    cmd_evaluate(pred_path, truth_path, task, csv_out, json_out);
  });

  // --- run ------------------------------------------------------------
  std::string corpus_path, split_path, part = "test", config_path,
              config_sop_path, out_dir = "run";
  std::size_t run_k = 10, pp_rank = 1, limit = 0;
  auto* run = app.add_subcommand("run", "Execute a task against an endpoint");
  std::string run_task_name;
  run->add_option("task", run_task_name, "pp | sop | msp")->required();
  run->add_option("--corpus", corpus_path)->required();
  run->add_option("--split", split_path, "split JSON (optional)");
  run->add_option("--part", part, "train | validation | test");
  run->add_option("--config", config_path, "endpoint config JSON")->required();
  run->add_option("--config-sop", config_sop_path,
                  "separate endpoint config for the operation stage");
  run->add_option("--k", run_k, "candidates per record");
  run->add_option("--mode", mode, "sop conditioning mode");
  run->add_option("--pp-rank", pp_rank,
                  "condition the operation stage on this precursor rank");
  run->add_option("--limit", limit, "run only the first N records");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--templates", templates_dir);
  run->callback([&] {
    if (run_task_name != "pp" && run_task_name != "sop" &&
        run_task_name != "msp")
      throw std::runtime_error("task must be pp, sop or msp");
    auto records = load_corpus_or_die(corpus_path);
    msp::runner::RunOptions options;
    options.task = run_task_name;
    options.mode = parse_mode_or_die(mode);
    options.k = run_k;
    options.pp_rank = pp_rank;

    auto config_pp = msp::runner::EndpointConfig::load(config_path);
    auto config_sop = config_sop_path.empty()
                          ? config_pp
                          : msp::runner::EndpointConfig::load(config_sop_path);

    msp::runner::RunManifest manifest;
    msp::metrics::EvalReport report;
    auto store = load_templates(templates_dir);
    std::vector<msp::corpus::SynthesisRecord> selected = records;
    std::string split_kind = "none";
    if (!split_path.empty()) {
      auto split_spec = msp::corpus::CorpusSplit::load(split_path);
      selected = select_part(records, split_spec, part);
      split_kind = std::string(msp::corpus::to_string(split_spec.kind));
      manifest.seed = split_spec.seed;
    }
    if (limit > 0 && selected.size() > limit) selected.resize(limit);

    std::tie(manifest, report) = [&] {
      auto result = msp::runner::run_task(config_pp, config_sop, selected,
                                          options, store);
      result.first.split_kind = split_kind;
      result.first.seed = manifest.seed;
      result.second.split_kind = split_kind;
      return result;
    }();
    msp::runner::write_run_outputs(manifest, report, out_dir);
    std::cerr << "task=" << options.task << " records=" << selected.size()
              << " em@1=" << report.mean_em(1)
              << " em@10=" << report.mean_em(10) << "\n"
              << "outputs in " << out_dir << "/\n";
  });

  // --- context --------------------------------------------------------
  auto* context_cmd = app.add_subcommand("context", "Synthesis context");
  context_cmd->require_subcommand(1);
  std::string titles_path;
  auto* extract = context_cmd->add_subcommand(
      "extract", "Extract context fields from titles");
  extract->add_option("--titles", titles_path,
                      "JSONL with {\"id\", \"title\"}")
      ->required();
  extract->add_option("--config", config_path)->required();
  extract->add_option("--out", out_path)->required();
  extract->add_option("--templates", templates_dir);
  extract->callback([&] {
    auto config = msp::runner::EndpointConfig::load(config_path);
    auto store = load_templates(templates_dir);
    std::ifstream in(titles_path);
    if (!in) throw std::runtime_error("cannot open " + titles_path);
    std::ofstream out(out_path);
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      auto result = msp::runner::extract_title_context(
          config, j.at("title").get<std::string>(), store);
      json row = {{"id", j.value("id", "")},
                  {"context", msp::corpus::context_to_json(result.context)},
                  {"diagnostics", result.diagnostics}};
      out << row.dump() << "\n";
      ++count;
    }
    std::cerr << "extracted context for " << count << " titles\n";
  });

  // --- classify -------------------------------------------------------
  std::string formula_arg, classify_taxonomy;
  auto* classify = app.add_subcommand(
      "classify", "Material group and precursor type of one formula");
  classify->add_option("formula", formula_arg, "chemical formula")->required();
  classify->add_option("--taxonomy", classify_taxonomy,
                       "material-group taxonomy JSON (default built-in)");
  classify->callback([&] {
    auto tax = classify_taxonomy.empty()
                   ? msp::taxonomy::default_taxonomy()
                   : msp::taxonomy::MaterialTaxonomy::load(classify_taxonomy);
    auto parsed = msp::formula::parse_formula(formula_arg);
    json out = {
        {"formula", formula_arg},
        {"canonical", msp::formula::canonicalize(parsed)},
        {"material_group", tax.classify(parsed)},
        {"precursor_type",
         std::string(msp::taxonomy::to_string(
             msp::taxonomy::precursor_type(parsed)))}};
    std::cout << out.dump(2) << "\n";
  });

  // --- templates ------------------------------------------------------
  auto* templates_cmd = app.add_subcommand("templates", "Prompt templates");
  templates_cmd->require_subcommand(1);
  auto* dump = templates_cmd->add_subcommand("dump",
                                             "Write default templates");
  dump->add_option("--out", out_path, "directory")->required();
  dump->callback([&] {
    msp::prompt::TemplateStore store;
    store.dump(out_path);
    std::cerr << "templates written to " << out_path << "\n";
  });

  // --- mock -----------------------------------------------------------
  auto* mock_cmd = app.add_subcommand("mock", "Offline mock endpoint");
  mock_cmd->require_subcommand(1);
  int port = 0;
  bool corrupt_pp = false;
  std::string model_pp = "stub-pp", model_sop = "stub-sop";
  auto* serve = mock_cmd->add_subcommand(
      "serve", "Serve ground-truth completions for a corpus");
  serve->add_option("--corpus", corpus_path)->required();
  serve->add_option("--port", port, "port (0 = ephemeral, printed)");
  serve->add_flag("--corrupt-pp", corrupt_pp,
                  "corrupt the precursor answers (for pipeline tests)");
  serve->add_option("--model-pp", model_pp);
  serve->add_option("--model-sop", model_sop);
  serve->callback([&] {
    cmd_mock_serve(corpus_path, port, corrupt_pp, model_pp, model_sop);
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
