// Copyright 2026 The CoDi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// codi — synthesize conversational training data and evaluate grounded-QA
// models. Thin shell over the shared library: flags are folded into a JSON
// options object, results come back as JSON. Machine output (JSON, chains)
// goes to stdout; tables, seeds and warnings go to stderr.
//
// Exit codes: 0 success, 1 domain/validation failure, 2 environment or
// configuration failure.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "codi/codi.h"

namespace {

using nlohmann::json;

int exit_code_for(codi_status status) {
  switch (status) {
    case CODI_OK:
      return 0;
    case CODI_ERR_INVALID_ARGUMENT:
    case CODI_ERR_PARSE:
    case CODI_ERR_TAG_COLLISION:
    case CODI_ERR_GRAPH:
    case CODI_ERR_BUDGET:
      return 1;
    default:
      return 2;
  }
}

void print_error(codi_status status) {
  std::fprintf(stderr, "error: %s (status %d)\n", codi_last_error(),
               static_cast<int>(status));
}

// Takes ownership of the C string and prints it to stdout.
void emit(char* text) {
  if (text != nullptr) {
    std::fputs(text, stdout);
    codi_string_free(text);
  }
}

std::uint64_t ensure_seed(bool seed_given, std::uint64_t seed) {
  if (seed_given) return seed;
  std::random_device device;
  const std::uint64_t generated =
      (static_cast<std::uint64_t>(device()) << 32) ^ device();
  std::fprintf(stderr, "seed: %" PRIu64 "\n", generated);
  return generated;
}

int run_validate_graph(const std::string& config) {
  char* report_json = nullptr;
  const codi_status status = codi_run_validate_graph(config.c_str(), &report_json);
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  const json report = json::parse(report_json);
  emit(report_json);
  return report.at("ok").get<bool>() ? 0 : 1;
}

int run_sample_chains(const std::string& config, std::uint64_t n,
                      std::uint64_t seed) {
  const json options{{"config", config}, {"n", n}, {"seed", seed}};
  char* chains = nullptr;
  const codi_status status =
      codi_run_sample_chains(options.dump().c_str(), &chains);
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  emit(chains);
  return 0;
}

struct SynthesizeArgs {
  std::string config;
  std::string contexts;
  std::string seeds;
  std::string out;
  std::string teacher_url;
  std::string stub;
  std::string model;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint64_t max_attempts = 0;
  int concurrency = 1;
  int per_turn_retries = 1;
};

int run_synthesize(const SynthesizeArgs& args) {
  json options{{"config", args.config}, {"contexts", args.contexts},
               {"n", args.n},           {"out", args.out},
               {"seed", args.seed},     {"concurrency", args.concurrency},
               {"per_turn_retries", args.per_turn_retries}};
  if (!args.seeds.empty()) options["seeds"] = args.seeds;
  if (!args.stub.empty()) options["stub"] = args.stub;
  if (!args.teacher_url.empty()) options["teacher_url"] = args.teacher_url;
  if (!args.model.empty()) options["model"] = args.model;
  if (args.max_attempts != 0) options["max_attempts"] = args.max_attempts;

  char* manifest = nullptr;
  const codi_status status = codi_run_synthesize(options.dump().c_str(), &manifest);
  emit(manifest);  // the manifest is valid even when the budget ran out
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  return 0;
}

int run_annotate(const std::string& in, const std::string& out,
                 const std::string& policy) {
  json options{{"in", in}, {"out", out}};
  if (!policy.empty()) options["policy"] = policy;
  char* summary = nullptr;
  const codi_status status = codi_run_annotate(options.dump().c_str(), &summary);
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  emit(summary);
  return 0;
}

struct EvaluateArgs {
  std::string gold;
  std::string format;
  std::string predictions;
  std::string model_url;
  std::string model;
  std::string metric = "recall";
  std::string history = "gold";
  std::string per_turn_csv;
  bool per_turn = false;
};

void print_per_turn_table(const json& report) {
  std::fprintf(stderr, "%-6s %-10s %s\n", "turn", "mean", "examples");
  const json& per_turn = report.at("per_turn");
  std::vector<int> turns;
  turns.reserve(per_turn.size());
  for (const auto& [key, value] : per_turn.items()) {
    (void)value;
    turns.push_back(std::stoi(key));
  }
  std::sort(turns.begin(), turns.end());
  for (const int turn : turns) {
    const json& cell = per_turn.at(std::to_string(turn));
    std::fprintf(stderr, "%-6d %-10.4f %llu\n", turn,
                 cell.at("mean").get<double>(),
                 static_cast<unsigned long long>(
                     cell.at("examples").get<std::uint64_t>()));
  }
}

int run_evaluate(const EvaluateArgs& args) {
  json options{{"gold", args.gold},
               {"format", args.format},
               {"metric", args.metric},
               {"history", args.history}};
  if (!args.predictions.empty()) options["predictions"] = args.predictions;
  if (!args.model_url.empty()) options["model_url"] = args.model_url;
  if (!args.model.empty()) options["model"] = args.model;
  if (!args.per_turn_csv.empty()) options["per_turn_csv"] = args.per_turn_csv;

  char* report_json = nullptr;
  const codi_status status = codi_run_evaluate(options.dump().c_str(), &report_json);
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  const json report = json::parse(report_json);
  emit(report_json);

  std::fprintf(stderr, "metric        %s\n", report.at("metric").get<std::string>().c_str());
  std::fprintf(stderr, "history       %s\n",
               report.at("history_mode").get<std::string>().c_str());
  const json& dialogs = report.at("dialogs");
  const auto total = dialogs.at("total").get<std::uint64_t>();
  const auto scored = dialogs.at("scored").get<std::uint64_t>();
  const auto failed = dialogs.at("failed").get<std::uint64_t>();
  std::fprintf(stderr, "dialogs       %llu scored / %llu total (%llu failed)\n",
               static_cast<unsigned long long>(scored),
               static_cast<unsigned long long>(total),
               static_cast<unsigned long long>(failed));
  std::fprintf(stderr, "corpus_mean   %.4f\n", report.at("corpus_mean").get<double>());
  if (args.per_turn) print_per_turn_table(report);

  if (failed > 0) {
    std::fprintf(stderr, "warning: %llu dialog(s) failed and were skipped\n",
                 static_cast<unsigned long long>(failed));
  }
  const double fraction =
      total == 0 ? 0.0 : static_cast<double>(scored) / static_cast<double>(total);
  return fraction >= 0.9 ? 0 : 1;
}

int run_length_stats(const std::string& in, const std::string& field) {
  const json options{{"in", in}, {"field", field}};
  char* stats_json = nullptr;
  const codi_status status =
      codi_run_length_stats(options.dump().c_str(), &stats_json);
  if (status != CODI_OK) {
    print_error(status);
    return exit_code_for(status);
  }
  const json stats = json::parse(stats_json);
  emit(stats_json);
  std::fprintf(stderr, "%-9s %.4f\n", "average", stats.at("average").get<double>());
  std::fprintf(stderr, "%-9s %g\n", "median", stats.at("median").get<double>());
  std::fprintf(stderr, "%-9s %g\n", "p90", stats.at("p90").get<double>());
  std::fprintf(stderr, "%-9s %llu\n", "count",
               static_cast<unsigned long long>(stats.at("count").get<std::uint64_t>()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversational data synthesis and evaluation toolkit"};
  app.set_version_flag("--version", std::string(codi_version()));
  app.require_subcommand(1);

  // validate-graph
  std::string vg_config;
  CLI::App* validate = app.add_subcommand(
      "validate-graph", "check a conversational graph config for defects");
  validate->add_option("--config", vg_config, "graph config document (JSON)")
      ->required();

  // sample-chains
  std::string sc_config;
  std::uint64_t sc_n = 1;
  std::uint64_t sc_seed = 0;
  bool sc_seed_given = false;
  CLI::App* chains = app.add_subcommand(
      "sample-chains", "sample conversational chains and print them");
  chains->add_option("--config", sc_config, "graph config document (JSON)")
      ->required();
  chains->add_option("--n", sc_n, "number of chains")->required();
  chains->add_option("--seed", sc_seed, "master RNG seed")
      ->each([&](const std::string&) { sc_seed_given = true; });

  // synthesize
  SynthesizeArgs sy;
  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "generate a conversational dataset with the teacher");
  synthesize->add_option("--config", sy.config, "graph+links config document")
      ->required();
  synthesize->add_option("--contexts", sy.contexts, "contexts JSON-lines file")
      ->required();
  synthesize->add_option("--seeds", sy.seeds, "seed-data JSON-lines file");
  synthesize->add_option("--n", sy.n, "target conversation count")->required();
  synthesize->add_option("--out", sy.out, "output dataset path (JSON lines)")
      ->required();
  synthesize->add_option("--teacher-url", sy.teacher_url,
                         "chat-completions endpoint of the teacher");
  synthesize->add_option("--stub", sy.stub, "scripted teacher fixture (JSON)");
  synthesize->add_option("--model", sy.model, "teacher model identifier");
  synthesize->add_option("--seed", sy.seed, "master RNG seed")
      ->each([&](const std::string&) { sy.seed_given = true; });
  synthesize->add_option("--concurrency", sy.concurrency,
                         "worker threads / teacher in-flight cap");
  synthesize->add_option("--max-attempts", sy.max_attempts,
                         "conversation attempt budget (default 4*n)");
  synthesize->add_option("--per-turn-retries", sy.per_turn_retries,
                         "extra attempts per chain step");

  // annotate-weights
  std::string aw_in, aw_out, aw_policy;
  CLI::App* annotate = app.add_subcommand(
      "annotate-weights", "attach per-role loss-weight spans to a dataset");
  annotate->add_option("--in", aw_in, "dataset JSON-lines file")->required();
  annotate->add_option("--out", aw_out, "weighted dataset output path")->required();
  annotate->add_option("--policy", aw_policy,
                       "weight policy JSON (default: AGENT=1, others 0)");

  // evaluate
  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score a model on a grounded-QA evaluation set");
  evaluate->add_option("--gold", ev.gold, "evaluation set file")->required();
  evaluate->add_option("--format", ev.format, "evalset format: coqa or quac")
      ->required();
  evaluate->add_option("--pred", ev.predictions,
                       "predictions JSON-lines file (offline scoring)");
  evaluate->add_option("--model-url", ev.model_url,
                       "chat-completions endpoint of the model");
  evaluate->add_option("--model", ev.model, "model identifier for the endpoint");
  evaluate->add_option("--metric", ev.metric,
                       "recall, f1, rouge1, rouge2 or rougeL");
  evaluate->add_option("--history", ev.history, "history mode: gold or pred");
  evaluate->add_flag("--per-turn", ev.per_turn, "print the per-turn mean table");
  evaluate->add_option("--per-turn-csv", ev.per_turn_csv,
                       "write per-turn means to this CSV file");

  // length-stats
  std::string ls_in, ls_field;
  CLI::App* lengths = app.add_subcommand(
      "length-stats", "word-count statistics over strings selected from JSON");
  lengths->add_option("--in", ls_in, "JSON or JSON-lines input file")->required();
  lengths->add_option("--field", ls_field,
                      "dotted field path, e.g. data[].answers[].input_text")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are configuration failures
  }

  if (validate->parsed()) return run_validate_graph(vg_config);
  if (chains->parsed()) {
    return run_sample_chains(sc_config, sc_n, ensure_seed(sc_seed_given, sc_seed));
  }
  if (synthesize->parsed()) {
    SynthesizeArgs args = sy;
    args.seed = ensure_seed(sy.seed_given, sy.seed);
    return run_synthesize(args);
  }
  if (annotate->parsed()) return run_annotate(aw_in, aw_out, aw_policy);
  if (evaluate->parsed()) return run_evaluate(ev);
  if (lengths->parsed()) return run_length_stats(ls_in, ls_field);
  return 2;
}
