#pragma once

// Drives an OpenAI-compatible chat endpoint through the planning pipeline:
// precursor prediction, operation prediction, and the complete two-stage
// plan where the rank-1 precursor prediction conditions the operation stage.
//
// Candidate ranking: sample num_samples completions, parse each, collapse
// identical parsed structures and rank by descending sample frequency (ties
// by first occurrence). Many endpoints expose no token log-probs, so
// frequency ranking is the candidate mechanism here.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "msp/corpus.hpp"
#include "msp/metrics.hpp"
#include "msp/promptkit.hpp"
#include "msp/taxonomy.hpp"

namespace msp::runner {

using prompt::ConditioningMode;
using prompt::ParsedModelOutput;

inline constexpr const char* kApiKeyEnvVar = "MSP_LLM_API_KEY";

struct EndpointConfig {
  std::string base_url;   // e.g. "http://127.0.0.1:8080"
  std::string model_id;
  std::string api_key;    // from MSP_LLM_API_KEY; never serialized
  double temperature = 0.7;
  int num_samples = 10;
  int max_concurrency = 4;
  double timeout_s = 60.0;
  int max_retries = 3;

  static EndpointConfig from_json(const nlohmann::json& j) {
    EndpointConfig cfg;
    cfg.base_url = j.at("base_url").get<std::string>();
    cfg.model_id = j.at("model_id").get<std::string>();
    if (j.contains("temperature")) cfg.temperature = j.at("temperature");
    if (j.contains("num_samples")) cfg.num_samples = j.at("num_samples");
    if (j.contains("max_concurrency"))
      cfg.max_concurrency = j.at("max_concurrency");
    if (j.contains("timeout_s")) cfg.timeout_s = j.at("timeout_s");
    if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries");
    if (const char* key = std::getenv(kApiKeyEnvVar)) cfg.api_key = key;
    if (cfg.num_samples < 1 || cfg.max_concurrency < 1)
      throw std::runtime_error("num_samples and max_concurrency must be >= 1");
    return cfg;
  }

  static EndpointConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open endpoint config " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  // Config snapshot for manifests; the key never leaves the process.
  nlohmann::json to_redacted_json() const {
    return {{"base_url", base_url},
            {"model_id", model_id},
            {"api_key", api_key.empty() ? "" : "[redacted]"},
            {"temperature", temperature},
            {"num_samples", num_samples},
            {"max_concurrency", max_concurrency},
            {"timeout_s", timeout_s},
            {"max_retries", max_retries}};
  }
};

class EndpointError : public std::runtime_error {
 public:
  enum class Kind { auth, rate_limited, timeout, malformed, http };

  EndpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Single chat-completion request with retry on transient failures
// (connection errors, timeouts, 429, 5xx) and exponential backoff.
// 401/403 fail immediately.
inline std::vector<std::string> chat_complete(const EndpointConfig& config,
                                              const std::string& prompt_text,
                                              int n,
                                              int* attempts_out = nullptr) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  nlohmann::json body = {
      {"model", config.model_id},
      {"messages",
       nlohmann::json::array(
           {nlohmann::json{{"role", "user"}, {"content", prompt_text}}})},
      {"n", n},
      {"temperature", config.temperature}};
  std::string payload = body.dump();

  int attempts = 0;
  double backoff_s = 0.25;
  std::string last_error = "no attempt made";
  while (attempts <= config.max_retries) {
    ++attempts;
    if (attempts_out) *attempts_out = attempts;

    httplib::Client client(config.base_url);
    auto timeout = std::chrono::milliseconds(
        static_cast<long>(config.timeout_s * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config.api_key);

    auto res = client.Post("/v1/chat/completions", headers, payload,
                           "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw EndpointError(EndpointError::Kind::auth,
                          "AuthError: HTTP " + std::to_string(res->status));
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw EndpointError(EndpointError::Kind::http,
                          "endpoint returned HTTP " +
                              std::to_string(res->status) + ": " + res->body);
    } else {
      try {
        nlohmann::json j = nlohmann::json::parse(res->body);
        std::vector<std::string> completions;
        for (const auto& choice : j.at("choices"))
          completions.push_back(
              choice.at("message").at("content").get<std::string>());
        if (completions.empty())
          throw std::runtime_error("empty choices array");
        return completions;
      } catch (const std::exception& e) {
        throw EndpointError(EndpointError::Kind::malformed,
                            std::string("MalformedResponse: ") + e.what());
      }
    }

    if (attempts <= config.max_retries) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long>(backoff_s * 1000.0)));
      backoff_s = std::min(backoff_s * 2.0, 4.0);
    }
  }
  bool timeout_like = last_error.rfind("connection failure", 0) == 0;
  throw EndpointError(timeout_like ? EndpointError::Kind::timeout
                                   : EndpointError::Kind::rate_limited,
                      "retries exhausted after " + std::to_string(attempts) +
                          " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

struct Candidate {
  ParsedModelOutput parsed;
  int frequency = 0;
  int first_sample_index = 0;
};

struct CandidateList {
  std::vector<Candidate> candidates;  // rank 1 first
  std::vector<std::string> raw_completions;
  std::vector<std::string> diagnostics;

  bool empty() const { return candidates.empty(); }
};

class AllSamplesUnparseableError : public std::runtime_error {
 public:
  explicit AllSamplesUnparseableError(std::size_t n)
      : std::runtime_error("AllSamplesUnparseable: " + std::to_string(n) +
                           " samples, none parseable") {}
};

namespace detail {

inline std::string candidate_signature(const ParsedModelOutput& parsed,
                                       prompt::Task task) {
  if (task == prompt::Task::pp) {
    std::vector<std::string> sorted = parsed.precursors.value_or(
        std::vector<std::string>{});
    std::sort(sorted.begin(), sorted.end());
    std::string sig;
    for (const auto& p : sorted) {
      sig += p;
      sig += ';';
    }
    return sig;
  }
  return corpus::join_operations(
      parsed.operations.value_or(corpus::OperationSequence{}), ",");
}

}  // namespace detail

// Samples completions, parses each, deduplicates identical parsed structures
// and ranks by descending frequency (ties: first occurrence). Throws
// AllSamplesUnparseableError when nothing parses.
inline CandidateList generate_candidates(
    const EndpointConfig& config, const std::string& prompt_text,
    prompt::Task task,
    const std::function<ParsedModelOutput(std::string_view)>& parser,
    std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  CandidateList list;
  list.raw_completions =
      chat_complete(config, prompt_text, config.num_samples);

  std::map<std::string, std::size_t> by_signature;
  for (std::size_t i = 0; i < list.raw_completions.size(); ++i) {
    ParsedModelOutput parsed = parser(list.raw_completions[i]);
    if (!parsed.ok()) {
      list.diagnostics.push_back("sample " + std::to_string(i) + ": " +
                                 *parsed.error);
      continue;
    }
    for (const auto& d : parsed.diagnostics)
      list.diagnostics.push_back("sample " + std::to_string(i) + ": " + d);
    std::string sig = detail::candidate_signature(parsed, task);
    auto it = by_signature.find(sig);
    if (it == by_signature.end()) {
      by_signature.emplace(sig, list.candidates.size());
      list.candidates.push_back(
          {std::move(parsed), 1, static_cast<int>(i)});
    } else {
      ++list.candidates[it->second].frequency;
    }
  }
  if (list.candidates.empty())
    throw AllSamplesUnparseableError(list.raw_completions.size());

  std::stable_sort(list.candidates.begin(), list.candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.frequency != b.frequency)
                       return a.frequency > b.frequency;
                     return a.first_sample_index < b.first_sample_index;
                   });
  if (list.candidates.size() > k) list.candidates.resize(k);
  return list;
}

// ---------------------------------------------------------------------------
// Task runners
// ---------------------------------------------------------------------------

inline CandidateList run_pp(const EndpointConfig& config,
                            const corpus::SynthesisRecord& record,
                            std::size_t k,
                            const prompt::TemplateStore& store = {}) {
  std::string prompt_text =
      prompt::render_pp_prompt(record.target, record.context, store);
  return generate_candidates(config, prompt_text, prompt::Task::pp,
                             [](std::string_view text) {
                               return prompt::parse_pp_output(text);
                             },
                             k);
}

// In explicit mode the restated Z of every candidate is audited against
// Z_in; mismatches are logged as constraint violations, not dropped.
inline CandidateList run_sop(const EndpointConfig& config,
                             const corpus::SynthesisRecord& record,
                             const taxonomy::PrecursorInfo& z_in,
                             ConditioningMode mode, std::size_t k,
                             const prompt::TemplateStore& store = {}) {
  std::string prompt_text = prompt::render_sop_prompt(
      record.target, record.context, z_in, mode, store);
  CandidateList list =
      generate_candidates(config, prompt_text, prompt::Task::sop,
                          [](std::string_view text) {
                            return prompt::parse_sop_output(text);
                          },
                          k);
  if (mode == ConditioningMode::explicit_pcf) {
    std::set<std::string> expected(z_in.precursors.begin(),
                                   z_in.precursors.end());
    for (std::size_t rank = 0; rank < list.candidates.size(); ++rank) {
      const auto& parsed = list.candidates[rank].parsed;
      auto z = parsed.z();
      if (!z) {
        list.diagnostics.push_back(
            "pcf-violation: candidate " + std::to_string(rank + 1) +
            " did not restate precursor information");
        continue;
      }
      std::set<std::string> restated(z->precursors.begin(),
                                     z->precursors.end());
      if (restated != expected)
        list.diagnostics.push_back(
            "pcf-violation: candidate " + std::to_string(rank + 1) +
            " restated a different precursor set");
      if (z->types != z_in.types)
        list.diagnostics.push_back(
            "pcf-violation: candidate " + std::to_string(rank + 1) +
            " restated a different type set");
    }
  }
  return list;
}

class PPFailedError : public std::runtime_error {
 public:
  explicit PPFailedError(const std::string& why)
      : std::runtime_error("PPFailed: " + why) {}
};

struct MspResult {
  std::vector<std::string> conditioned_precursors;  // the selected PP set
  std::vector<metrics::MspCandidate> pairs;
  CandidateList pp_list;
  CandidateList sop_list;
};

// Complete plan: PP candidates, condition the operation stage on the rank-1
// (or --pp-rank r) precursor set via explicit conditioning; the returned
// pairs all share that precursor set.
inline MspResult run_msp(const EndpointConfig& config_pp,
                         const EndpointConfig& config_sop,
                         const corpus::SynthesisRecord& record, std::size_t k,
                         std::size_t pp_rank = 1,
                         const prompt::TemplateStore& store = {}) {
  if (pp_rank < 1) throw std::invalid_argument("pp_rank must be >= 1");
  MspResult result;
  try {
    result.pp_list = run_pp(config_pp, record, std::max(k, pp_rank), store);
  } catch (const AllSamplesUnparseableError& e) {
    throw PPFailedError(e.what());
  }
  if (result.pp_list.candidates.size() < pp_rank)
    throw PPFailedError("only " +
                        std::to_string(result.pp_list.candidates.size()) +
                        " precursor candidates, need rank " +
                        std::to_string(pp_rank));
  const auto& chosen = result.pp_list.candidates[pp_rank - 1].parsed;
  result.conditioned_precursors = chosen.precursors.value_or(
      std::vector<std::string>{});
  if (result.conditioned_precursors.empty())
    throw PPFailedError("selected candidate has no precursors");

  taxonomy::PrecursorInfo z;
  try {
    z = taxonomy::make_precursor_info(result.conditioned_precursors);
  } catch (const std::exception& e) {
    throw PPFailedError(std::string("cannot type predicted precursors: ") +
                        e.what());
  }
  result.sop_list = run_sop(config_sop, record, z,
                            ConditioningMode::explicit_pcf, k, store);
  for (const auto& cand : result.sop_list.candidates) {
    if (!cand.parsed.operations) continue;
    result.pairs.push_back(
        {result.conditioned_precursors, *cand.parsed.operations});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Title-context extraction
// ---------------------------------------------------------------------------

struct ContextExtraction {
  corpus::SynthesisContext context;
  std::vector<std::string> diagnostics;
};

inline ContextExtraction extract_title_context(
    const EndpointConfig& config, const std::string& title,
    const prompt::TemplateStore& store = {}) {
  if (title.empty()) throw std::invalid_argument("title must be nonempty");
  std::string prompt_text = prompt::render_context_extract_prompt(title, store);
  std::vector<std::string> completions = chat_complete(config, prompt_text, 1);
  ContextExtraction out;

  const std::string& text = completions.front();
  std::size_t open = text.find('{');
  std::size_t close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos ||
      close < open) {
    out.diagnostics.push_back("MalformedContextJSON: no JSON object found");
    return out;
  }
  try {
    nlohmann::json j = nlohmann::json::parse(
        text.substr(open, close - open + 1));
    auto get = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      if (!j.at(key).is_string()) return std::nullopt;
      std::string v = j.at(key).get<std::string>();
      if (v.empty() || v == "None" || v == "null") return std::nullopt;
      return v;
    };
    out.context.host_material = get("host_material");
    out.context.dopant_or_substitution = get("dopant_or_substitution");
    out.context.material_class = get("material_class");
    out.context.functional_property = get("functional_property");
    out.context.composition_control = get("composition_control");
    out.context.processing_or_stimulus = get("processing_or_stimulus");
  } catch (const std::exception& e) {
    out.context = corpus::SynthesisContext{};
    out.diagnostics.push_back(std::string("MalformedContextJSON: ") +
                              e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline orchestration
// ---------------------------------------------------------------------------

struct RecordRun {
  std::string id;
  std::vector<std::string> pp_completions;
  std::vector<std::string> sop_completions;
  std::vector<std::string> diagnostics;
  // Scoring payloads (filled per task).
  std::vector<std::vector<std::string>> precursor_candidates;
  std::vector<corpus::OperationSequence> operation_candidates;
  std::vector<metrics::MspCandidate> pair_candidates;
  bool failed = false;
};

struct RunManifest {
  std::string task;
  std::string mode;
  std::string split_kind;
  std::uint64_t seed = 0;
  std::size_t k = 10;
  std::size_t pp_rank = 1;
  nlohmann::json config_pp;
  nlohmann::json config_sop;
  std::vector<RecordRun> records;

  nlohmann::json to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records)
      recs.push_back({{"id", r.id},
                      {"pp_completions", r.pp_completions},
                      {"sop_completions", r.sop_completions},
                      {"diagnostics", r.diagnostics},
                      {"failed", r.failed}});
    return {{"task", task},
            {"mode", mode},
            {"split_kind", split_kind},
            {"seed", seed},
            {"k", k},
            {"pp_rank", pp_rank},
            {"config_pp", config_pp},
            {"config_sop", config_sop},
            {"records", recs}};
  }
};

struct RunOptions {
  std::string task = "msp";  // pp | sop | msp
  ConditioningMode mode = ConditioningMode::explicit_pcf;
  std::size_t k = 10;
  std::size_t pp_rank = 1;
};

namespace detail {

// Bounded worker pool: at most max_concurrency records in flight, output
// order equals input order regardless of completion interleaving.
template <typename Fn>
void for_each_bounded(std::size_t n, int max_concurrency, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::size_t workers =
      std::min<std::size_t>(std::max(1, max_concurrency), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Runs one task over a list of records against live endpoints, scoring each
// record against its ground truth. Records whose pipeline fails score as
// misses; the run never aborts on per-record errors.
inline std::pair<RunManifest, metrics::EvalReport> run_task(
    const EndpointConfig& config_pp, const EndpointConfig& config_sop,
    const std::vector<corpus::SynthesisRecord>& records,
    const RunOptions& options, const prompt::TemplateStore& store = {}) {
  RunManifest manifest;
  manifest.task = options.task;
  manifest.mode = std::string(prompt::to_string(options.mode));
  manifest.k = options.k;
  manifest.pp_rank = options.pp_rank;
  manifest.config_pp = config_pp.to_redacted_json();
  manifest.config_sop = config_sop.to_redacted_json();
  manifest.records.resize(records.size());

  detail::for_each_bounded(
      records.size(), config_pp.max_concurrency, [&](std::size_t i) {
        const auto& record = records[i];
        RecordRun& run = manifest.records[i];
        run.id = record.id;
        try {
          if (options.task == "pp") {
            CandidateList list = run_pp(config_pp, record, options.k, store);
            run.pp_completions = list.raw_completions;
            run.diagnostics = list.diagnostics;
            for (const auto& cand : list.candidates)
              if (cand.parsed.precursors)
                run.precursor_candidates.push_back(*cand.parsed.precursors);
          } else if (options.task == "sop") {
            taxonomy::PrecursorInfo z =
                taxonomy::make_precursor_info(record.precursors);
            CandidateList list = run_sop(config_sop, record, z, options.mode,
                                         options.k, store);
            run.sop_completions = list.raw_completions;
            run.diagnostics = list.diagnostics;
            for (const auto& cand : list.candidates)
              if (cand.parsed.operations)
                run.operation_candidates.push_back(*cand.parsed.operations);
          } else {
            MspResult result =
                run_msp(config_pp, config_sop, record, options.k,
                        options.pp_rank, store);
            run.pp_completions = result.pp_list.raw_completions;
            run.sop_completions = result.sop_list.raw_completions;
            run.diagnostics = result.pp_list.diagnostics;
            run.diagnostics.insert(run.diagnostics.end(),
                                   result.sop_list.diagnostics.begin(),
                                   result.sop_list.diagnostics.end());
            run.pair_candidates = result.pairs;
          }
        } catch (const std::exception& e) {
          run.failed = true;
          run.diagnostics.push_back(e.what());
        }
      });

  metrics::EvalReport report;
  report.task = options.task;
  report.mode = manifest.mode;
  report.model_id = config_pp.model_id + (options.task == "pp"
                                              ? ""
                                              : "+" + config_sop.model_id);
  report.timestamp = metrics::utc_timestamp();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    const auto& run = manifest.records[i];
    if (options.task == "pp")
      report.rows.push_back(metrics::score_pp_record(
          record.id, run.precursor_candidates, record.precursors));
    else if (options.task == "sop")
      report.rows.push_back(metrics::score_sop_record(
          record.id, run.operation_candidates, record.operations));
    else
      report.rows.push_back(metrics::score_msp_record(
          record.id, run.pair_candidates,
          {record.precursors, record.operations}));
  }
  return {std::move(manifest), std::move(report)};
}

// Writes manifest.json, predictions.jsonl and report.csv under out_dir.
inline void write_run_outputs(const RunManifest& manifest,
                              const metrics::EvalReport& report,
                              const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    out << manifest.to_json().dump(2) << "\n";
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / "predictions.jsonl");
    for (const auto& run : manifest.records) {
      nlohmann::json candidates = nlohmann::json::array();
      if (manifest.task == "pp") {
        for (const auto& c : run.precursor_candidates) candidates.push_back(c);
      } else if (manifest.task == "sop") {
        for (const auto& c : run.operation_candidates) {
          nlohmann::json ops = nlohmann::json::array();
          for (auto op : c) ops.push_back(std::string(corpus::to_string(op)));
          candidates.push_back(ops);
        }
      } else {
        for (const auto& c : run.pair_candidates) {
          nlohmann::json ops = nlohmann::json::array();
          for (auto op : c.operations)
            ops.push_back(std::string(corpus::to_string(op)));
          candidates.push_back(
              {{"precursors", c.precursors}, {"operations", ops}});
        }
      }
      nlohmann::json line = {{"id", run.id},
                             {"candidates", candidates},
                             {"failed", run.failed}};
      out << line.dump() << "\n";
    }
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / "report.csv");
    out << report.to_csv();
  }
}

}  // namespace msp::runner
