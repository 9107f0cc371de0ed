//
// Copyright 2026 The exleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// exleak: dataset generation, leakage runs and reporting.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "exleak/conformance.h"
#include "exleak/datagen.h"
#include "exleak/errors.h"
#include "exleak/genpipe.h"
#include "exleak/report.h"
#include "exleak/scoring.h"
#include "exleak/serialize.h"
#include "exleak/server.h"
#include "exleak/stats.h"

namespace fs = std::filesystem;
using namespace exleak;

namespace {

struct EndpointFlags {
  std::string backend;
  std::string scorer;
  std::string dialect = "native";
  std::string model;
  std::string gpt2_table;
  double stub_noise = 0.0;
  int retries = 3;
  int timeout_s = 120;
};

// Flag value, else the environment variable, else empty.
std::string resolve(const std::string& flag, const char* env) {
  if (!flag.empty()) return flag;
  const char* v = std::getenv(env);
  return v ? std::string(v) : std::string();
}

RetryPolicy retry_of(const EndpointFlags& f) {
  RetryPolicy p;
  p.max_attempts = f.retries;
  p.timeout = std::chrono::seconds(f.timeout_s);
  return p;
}

std::unique_ptr<Scorer> make_scorer(const EndpointFlags& f, bool required) {
  const std::string url = resolve(f.scorer, "EXLEAK_SCORER");
  if (url.empty()) {
    if (!required) return nullptr;
    throw ConfigError("no scorer endpoint: pass --scorer URL, --scorer stub or set "
                      "EXLEAK_SCORER");
  }
  if (url == "stub") {
    StubScorerOptions o;
    o.noise = f.stub_noise;
    if (!f.gpt2_table.empty()) o.gpt2_table = load_gpt2_table(f.gpt2_table);
    return std::make_unique<StubScorer>(std::move(o));
  }
  return std::make_unique<HttpScorer>(url, retry_of(f));
}

std::unique_ptr<Backend> make_backend(const EndpointFlags& f) {
  const std::string url = resolve(f.backend, "EXLEAK_BACKEND");
  if (url.empty()) {
    throw ConfigError("no backend endpoint: pass --backend URL, --backend stub or "
                      "set EXLEAK_BACKEND");
  }
  if (url == "stub") return std::make_unique<StubBackend>();
  if (f.dialect == "native") return std::make_unique<HttpBackend>(url, retry_of(f));
  if (f.dialect == "completions") {
    return std::make_unique<CompletionsBackend>(url, f.model, retry_of(f));
  }
  throw ConfigError("unknown --dialect '" + f.dialect + "' (native or completions)");
}

void add_scorer_flags(CLI::App* cmd, EndpointFlags& f) {
  cmd->add_option("--scorer", f.scorer, "Scorer URL or 'stub' (env EXLEAK_SCORER)");
  cmd->add_option("--gpt2-table", f.gpt2_table,
                  "Frozen gpt2 token counts for the stub scorer");
  cmd->add_option("--stub-noise", f.stub_noise, "Stub scorer noise amplitude");
  cmd->add_option("--retries", f.retries, "Attempts per request")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--timeout", f.timeout_s, "Per-request timeout in seconds")
      ->check(CLI::PositiveNumber);
}

std::vector<RunResults> load_all(const std::vector<std::string>& inputs) {
  std::vector<RunResults> out;
  for (const std::string& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) p /= kResultsFile;
    out.push_back(load_results(p));
  }
  return out;
}

int cmd_datagen(const std::string& corpus, const std::string& out,
                const std::string& name, DatagenConfig cfg,
                const EndpointFlags& ep) {
  auto scorer = make_scorer(ep, true);
  const std::vector<std::string> sentences = read_corpus(corpus);
  DatagenReport rep;
  const Dataset d = generate_dataset(sentences, *scorer, cfg, name, &rep);
  save_dataset(d, out);
  std::cout << "corpus " << rep.corpus_size << ", retained " << rep.retained
            << ", dropped " << rep.dropped << "\n";
  for (ExpressionLabel l : kAllLabels) {
    const std::size_t i = index_of(l);
    std::cout << "pool " << label_name(l) << ": " << rep.pool_sizes[i]
              << (rep.short_pool[i] ? " (short)" : "") << "\n";
  }
  std::cout << "controls " << rep.controls << " (skipped " << rep.controls_skipped
            << "), test neutrals " << rep.test_neutral << "\n";
  std::cout << "wrote " << d.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_run(const std::string& dataset_path, const std::string& out_dir,
            const GenerationConfig& cfg, const PipelineOptions& opts,
            const EndpointFlags& ep) {
  const Dataset dataset = load_dataset(dataset_path);
  auto backend = make_backend(ep);
  auto scorer = make_scorer(ep, true);
  std::atomic<long long> calls{0};
  PipelineOptions o = opts;
  o.backend_calls = &calls;
  const RunResults r = run_pipeline(dataset, cfg, *backend, *scorer, out_dir, o);
  std::cout << "backend calls: " << calls.load() << "\n";
  const ReportTables t = render_report(std::span<const RunResults>(&r, 1));
  std::cout << t.leakage_text << "\n" << t.per_label_text;
  if (!r.wilcoxon_note.empty()) std::cout << "W_EL: " << r.wilcoxon_note << "\n";
  std::cout << "results: " << (fs::path(out_dir) / kResultsFile).string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& csv_dir) {
  const std::vector<RunResults> results = load_all(inputs);
  const ReportTables t = render_report(results);
  std::cout << t.leakage_text << "\n" << t.per_label_text;
  if (!csv_dir.empty()) {
    fs::create_directories(csv_dir);
    write_file(fs::path(csv_dir) / "leakage_table.csv", t.leakage_csv);
    write_file(fs::path(csv_dir) / "per_label_table.csv", t.per_label_csv);
  }
  return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& tokenizer,
              const std::string& out_dir, const std::string& diffs_path,
              double alpha, const EndpointFlags& ep) {
  if (dataset_path.empty() && diffs_path.empty()) {
    throw ConfigError("stats needs --dataset and/or --diffs");
  }
  if (!dataset_path.empty()) {
    const Dataset d = load_dataset(dataset_path);
    auto scorer = make_scorer(ep, tokenizer != "whitespace");
    const LengthSummary s = length_summary(d, tokenizer, scorer.get());
    const std::string fig = length_summary_csv(s);
    std::cout << fig;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / "lengths.csv", fig);
      write_file(fs::path(out_dir) / "length_histogram.csv", length_histogram_csv(s));
    }
  }
  if (!diffs_path.empty()) {
    std::vector<double> d;
    std::istringstream in(read_file(diffs_path));
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t used = 0;
        d.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::logic_error&) {
        throw SchemaError(diffs_path + ": '" + tok + "' is not a number");
      }
    }
    const WilcoxonResult w = wilcoxon_one_sided(d);
    std::cout << "n_effective " << w.n_effective << "\nw_plus " << format_double(w.w_plus)
              << "\np_value " << format_double(w.p_value) << "\nmethod "
              << wilcoxon_method_name(w.method) << "\nsignificant "
              << (significance_gate(w, alpha) ? "yes" : "no") << "\n";
  }
  return 0;
}

std::string detect_kind(const fs::path& p) {
  const std::string name = p.filename().string();
  if (p.extension() == ".jsonl") return "generations";
  if (name == kManifestFile) return "manifest";
  if (name == kResultsFile) return "results";
  return "dataset";
}

int cmd_validate(const std::vector<std::string>& files, const std::string& kind_flag) {
  for (const std::string& f : files) {
    const std::string kind = kind_flag.empty() ? detect_kind(f) : kind_flag;
    if (kind == "dataset") {
      const Dataset d = load_dataset(f);
      std::cout << f << ": dataset '" << d.name() << "', " << d.size()
                << " samples, sha256 " << dataset_sha256(d) << "\n";
    } else if (kind == "results") {
      const RunResults r = load_results(f);
      std::cout << f << ": results, " << r.outcomes.size() << " outcomes\n";
    } else if (kind == "manifest") {
      manifest_from_json(read_json_file(f));
      std::cout << f << ": manifest ok\n";
    } else if (kind == "generations") {
      const auto records = load_checkpoint(f);
      for (const GenerationRecord& r : records) r.validate();
      std::cout << f << ": " << records.size() << " generation records\n";
    } else {
      throw ConfigError("unknown --kind '" + kind +
                        "' (dataset, results, manifest, generations)");
    }
  }
  return 0;
}

ProtocolServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& role, int port, const EndpointFlags& ep) {
  ServerOptions o;
  o.port = port;
  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<ProtocolServer> server;
  if (role == "scorer") {
    EndpointFlags f = ep;
    f.scorer = "stub";
    scorer = make_scorer(f, true);
    server = std::make_unique<ScorerServer>(*scorer, o);
  } else if (role == "backend") {
    backend = std::make_unique<StubBackend>();
    server = std::make_unique<BackendServer>(*backend, o);
  } else {
    throw ConfigError("unknown role '" + role + "' (scorer or backend)");
  }
  server->start();
  g_server = server.get();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << server->url() << std::endl;
  server->wait();
  return 0;
}

int cmd_conformance(std::string scorer_url, std::string backend_url,
                    const std::string& model, std::size_t max_batch,
                    const EndpointFlags& ep) {
  StubScorerOptions so;
  if (!ep.gpt2_table.empty()) so.gpt2_table = load_gpt2_table(ep.gpt2_table);
  StubScorer stub_scorer(so);
  StubBackend stub_backend;
  ScorerServer scorer_server(stub_scorer, ServerOptions{.max_batch = max_batch});
  BackendServer backend_server(stub_backend);
  if (scorer_url.empty()) {
    scorer_server.start();
    scorer_url = scorer_server.url();
  }
  if (backend_url.empty()) {
    backend_server.start();
    backend_url = backend_server.url();
  }
  bool ok = true;
  for (const ConformanceReport& r :
       {run_scorer_conformance(scorer_url, {.max_batch = max_batch}),
        run_backend_conformance(backend_url, model)}) {
    std::cout << "# " << r.target << "\n" << r.to_text();
    ok = ok && r.passed();
  }
  return ok ? 0 : static_cast<int>(ExitCode::kTransport);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exleak: expression leakage measurement for language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kHarnessVersion));
  EndpointFlags ep;

  auto* datagen = app.add_subcommand("datagen", "Build a dataset from a corpus");
  std::string corpus, dataset_out, dataset_name = "aexl";
  DatagenConfig dg;
  datagen->add_option("--corpus", corpus, "One sentence per line, or JSON lines")
      ->required();
  datagen->add_option("--out", dataset_out, "Dataset JSON to write")->required();
  datagen->add_option("--name", dataset_name, "Dataset name and id prefix");
  datagen->add_option("--m", dg.m, "Pool size per label");
  datagen->add_option("--n", dg.n, "Draws per label");
  datagen->add_option("--k", dg.k, "Pairing rounds");
  datagen->add_option("--neutral-split", dg.neutral_split_ratio,
                      "Share of neutral draws used as control sources");
  datagen->add_option("--truncate-words", dg.truncate_words, "Control stem length");
  datagen->add_option("--min-chars", dg.min_sentence_chars);
  datagen->add_option("--max-chars", dg.max_sentence_chars);
  datagen->add_option("--seed", dg.seed);
  datagen->add_option("--batch-size", dg.batch_size);
  datagen->add_option("--max-in-flight", dg.max_in_flight);
  add_scorer_flags(datagen, ep);

  auto* run = app.add_subcommand("run", "Generate, score and test one dataset");
  std::string dataset_path, out_dir, mode = "complete";
  GenerationConfig gc;
  PipelineOptions po;
  run->add_option("--dataset", dataset_path)->required();
  run->add_option("--out", out_dir, "Output directory (resumed if present)")
      ->required();
  run->add_option("--backend", ep.backend, "Backend URL or 'stub' (env EXLEAK_BACKEND)");
  run->add_option("--dialect", ep.dialect, "native or completions");
  run->add_option("--model", ep.model, "Model name for the completions dialect");
  run->add_option("--mode", mode, "complete, disregard or bare");
  run->add_option("--seed", gc.seed);
  run->add_option("--samples", gc.samples_per_prompt, "Generations per prompt");
  run->add_option("--max-tokens", gc.max_new_tokens);
  run->add_option("--top-p", gc.top_p);
  run->add_option("--top-k", gc.top_k);
  run->add_option("--repetition-penalty", gc.repetition_penalty);
  run->add_option("--max-in-flight", po.max_in_flight)->check(CLI::PositiveNumber);
  run->add_option("--alpha", po.alpha, "Significance level");
  add_scorer_flags(run, ep);

  auto* report = app.add_subcommand("report", "Tabulate results files");
  std::vector<std::string> report_inputs;
  std::string csv_dir;
  report->add_option("inputs", report_inputs, "Run directories or results.json files")
      ->required();
  report->add_option("--csv-dir", csv_dir, "Also write the tables as CSV here");

  auto* stats = app.add_subcommand("stats", "Length summary and Wilcoxon test");
  std::string stats_dataset, tokenizer = "gpt2", stats_out, diffs_path;
  double stats_alpha = kDefaultAlpha;
  stats->add_option("--dataset", stats_dataset);
  stats->add_option("--tokenizer", tokenizer, "gpt2 or whitespace");
  stats->add_option("--out", stats_out, "Directory for lengths.csv");
  stats->add_option("--diffs", diffs_path, "Whitespace-separated paired differences");
  stats->add_option("--alpha", stats_alpha);
  add_scorer_flags(stats, ep);

  auto* validate = app.add_subcommand("validate", "Check files against their schema");
  std::vector<std::string> validate_files;
  std::string validate_kind;
  validate->add_option("files", validate_files)->required();
  validate->add_option("--kind", validate_kind,
                       "dataset, results, manifest or generations (default: by name)");

  auto* serve = app.add_subcommand("serve-stub", "Serve a stub endpoint over HTTP");
  std::string role;
  int port = 0;
  serve->add_option("role", role, "scorer or backend")->required();
  serve->add_option("--port", port, "0 picks a free port");
  serve->add_option("--gpt2-table", ep.gpt2_table);
  serve->add_option("--stub-noise", ep.stub_noise);

  auto* conformance =
      app.add_subcommand("conformance", "Run the wire-protocol suite against endpoints");
  std::string conf_scorer, conf_backend, conf_model = "stub";
  std::size_t max_batch = kDefaultMaxBatch;
  conformance->add_option("--scorer", conf_scorer, "Scorer URL (default: stub server)");
  conformance->add_option("--backend", conf_backend,
                          "Backend URL (default: stub server)");
  conformance->add_option("--model", conf_model);
  conformance->add_option("--max-batch", max_batch);
  conformance->add_option("--gpt2-table", ep.gpt2_table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*datagen) return cmd_datagen(corpus, dataset_out, dataset_name, dg, ep);
    if (*run) {
      gc.instruction_mode = parse_instruction_mode(mode);
      return cmd_run(dataset_path, out_dir, gc, po, ep);
    }
    if (*report) return cmd_report(report_inputs, csv_dir);
    if (*stats) {
      return cmd_stats(stats_dataset, tokenizer, stats_out, diffs_path, stats_alpha, ep);
    }
    if (*validate) return cmd_validate(validate_files, validate_kind);
    if (*serve) return cmd_serve(role, port, ep);
    if (*conformance) {
      return cmd_conformance(conf_scorer, conf_backend, conf_model, max_batch, ep);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kGeneric);
  }
  return 0;
}
