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

#include "codi/codi.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "conversation.hpp"
#include "eval_driver.hpp"
#include "evalset.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "orchestrator.hpp"
#include "weights.hpp"

struct codi_conversation {
  codi::Conversation conv;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

codi_status status_of(codi::ErrorCode code) {
  using codi::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DuplicateTurn:
    case ErrorCode::EmptyExtraction:
    case ErrorCode::MarkerMissing:
    case ErrorCode::ScriptExhausted:
      return CODI_ERR_INVALID_ARGUMENT;
    case ErrorCode::MalformedTag:
    case ErrorCode::UnbalancedTurn:
    case ErrorCode::TrailingGarbage:
      return CODI_ERR_PARSE;
    case ErrorCode::TagCollision:
      return CODI_ERR_TAG_COLLISION;
    case ErrorCode::InvalidGraph:
      return CODI_ERR_GRAPH;
    case ErrorCode::BudgetExhausted:
      return CODI_ERR_BUDGET;
    case ErrorCode::ConfigError:
    case ErrorCode::UnresolvedPlaceholder:
    case ErrorCode::UnknownPhenomenon:
    case ErrorCode::MissingContext:
    case ErrorCode::MissingSeed:
      return CODI_ERR_CONFIG;
    case ErrorCode::IoError:
      return CODI_ERR_IO;
    case ErrorCode::SchemaError:
    case ErrorCode::EmptyInput:
      return CODI_ERR_SCHEMA;
    case ErrorCode::Timeout:
    case ErrorCode::ServerError:
    case ErrorCode::RateLimited:
    case ErrorCode::MalformedResponse:
      return CODI_ERR_NETWORK;
  }
  return CODI_ERR_INTERNAL;
}

template <typename Fn>
codi_status wrap(Fn&& fn) noexcept {
  try {
    const codi_status status = fn();
    if (status == CODI_OK) g_last_error.clear();
    return status;
  } catch (const codi::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CODI_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CODI_ERR_INTERNAL;
  }
}

json parse_options(const char* options_json,
                   std::initializer_list<const char*> allowed) {
  if (options_json == nullptr) {
    throw codi::Error(codi::ErrorCode::ConfigError, "options JSON is null");
  }
  json opts;
  try {
    opts = json::parse(options_json);
  } catch (const json::exception& e) {
    throw codi::Error(codi::ErrorCode::ConfigError,
                      std::string("options are not valid JSON: ") + e.what());
  }
  if (!opts.is_object()) {
    throw codi::Error(codi::ErrorCode::ConfigError, "options must be a JSON object");
  }
  for (const auto& [key, value] : opts.items()) {
    (void)value;
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw codi::Error(codi::ErrorCode::ConfigError,
                        "unknown option \"" + key + "\"");
    }
  }
  return opts;
}

template <typename T>
T required(const json& opts, const char* key) {
  if (!opts.contains(key)) {
    throw codi::Error(codi::ErrorCode::ConfigError,
                      std::string("missing option \"") + key + "\"");
  }
  try {
    return opts.at(key).get<T>();
  } catch (const json::exception& e) {
    throw codi::Error(codi::ErrorCode::ConfigError,
                      std::string("option \"") + key + "\": " + e.what());
  }
}

void require_out(void* out, const char* name) {
  if (out == nullptr) {
    throw codi::Error(codi::ErrorCode::InvalidArgument,
                      std::string(name) + " output pointer is null");
  }
}

}  // namespace

extern "C" {

const char* codi_version(void) {
#ifdef CODI_VERSION
  return CODI_VERSION;
#else
  return "0.0.0";
#endif
}

const char* codi_last_error(void) { return g_last_error.c_str(); }

void codi_string_free(char* s) { delete[] s; }

codi_conversation* codi_conversation_new(void) {
  return new (std::nothrow) codi_conversation();
}

void codi_conversation_free(codi_conversation* conversation) {
  delete conversation;
}

codi_status codi_conversation_append(codi_conversation* conversation,
                                     const char* role, const char* text) {
  return wrap([&]() {
    if (conversation == nullptr || role == nullptr || text == nullptr) {
      throw codi::Error(codi::ErrorCode::InvalidArgument,
                        "append requires a conversation, role and text");
    }
    conversation->conv.turns.emplace_back(codi::Role(role), std::string(text));
    return CODI_OK;
  });
}

size_t codi_conversation_turn_count(const codi_conversation* conversation) {
  return conversation == nullptr ? 0 : conversation->conv.turns.size();
}

const char* codi_conversation_role(const codi_conversation* conversation,
                                   size_t index) {
  if (conversation == nullptr || index >= conversation->conv.turns.size()) {
    g_last_error = "turn index out of range";
    return nullptr;
  }
  return conversation->conv.turns[index].role.name().c_str();
}

const char* codi_conversation_text(const codi_conversation* conversation,
                                   size_t index) {
  if (conversation == nullptr || index >= conversation->conv.turns.size()) {
    g_last_error = "turn index out of range";
    return nullptr;
  }
  return conversation->conv.turns[index].text.c_str();
}

codi_status codi_conversation_serialize(const codi_conversation* conversation,
                                        char** out_text) {
  return wrap([&]() {
    require_out(out_text, "serialize");
    if (conversation == nullptr) {
      throw codi::Error(codi::ErrorCode::InvalidArgument, "conversation is null");
    }
    *out_text = dup_string(codi::serialize(conversation->conv));
    return CODI_OK;
  });
}

codi_status codi_conversation_parse(const char* text,
                                    codi_conversation** out_conversation) {
  return wrap([&]() {
    require_out(out_conversation, "parse");
    if (text == nullptr) {
      throw codi::Error(codi::ErrorCode::InvalidArgument, "text is null");
    }
    auto handle = std::make_unique<codi_conversation>();
    handle->conv = codi::parse(text);
    *out_conversation = handle.release();
    return CODI_OK;
  });
}

codi_status codi_run_validate_graph(const char* config_path,
                                    char** out_report_json) {
  return wrap([&]() {
    require_out(out_report_json, "validate-graph");
    if (config_path == nullptr) {
      throw codi::Error(codi::ErrorCode::ConfigError, "config path is null");
    }
    const codi::ConfigDocument doc = codi::load_config_document(config_path);
    const codi::ConversationGraph graph = codi::build_graph(doc);
    const codi::ValidationReport report = graph.validate();
    json findings = json::array();
    for (const codi::Finding& finding : report.findings) {
      findings.push_back({{"category", codi::to_string(finding.category)},
                          {"subject", finding.subject},
                          {"detail", finding.detail}});
    }
    const json out{{"ok", report.ok()},
                   {"findings", std::move(findings)},
                   {"warnings", report.warnings}};
    *out_report_json = dup_string(out.dump(2) + "\n");
    return CODI_OK;
  });
}

codi_status codi_run_sample_chains(const char* options_json,
                                   char** out_chains_text) {
  return wrap([&]() {
    require_out(out_chains_text, "sample-chains");
    const json opts = parse_options(options_json, {"config", "n", "seed"});
    const auto config_path = required<std::string>(opts, "config");
    const auto n = required<std::uint64_t>(opts, "n");
    const auto seed = required<std::uint64_t>(opts, "seed");

    const codi::ConfigDocument doc = codi::load_config_document(config_path);
    const codi::ConversationGraph graph = codi::build_graph(doc);
    codi::Rng rng(seed);
    std::string out;
    for (std::uint64_t i = 0; i < n; ++i) {
      const int length = codi::sample_length(doc.length, rng);
      const codi::ChainSample chain = graph.sample_chain(length, rng);
      for (std::size_t k = 0; k < chain.links.size(); ++k) {
        if (k > 0) out += " -> ";
        out += chain.links[k];
      }
      out += '\n';
    }
    *out_chains_text = dup_string(out);
    return CODI_OK;
  });
}

codi_status codi_run_synthesize(const char* options_json,
                                char** out_manifest_json) {
  return wrap([&]() {
    require_out(out_manifest_json, "synthesize");
    const json opts = parse_options(
        options_json,
        {"config", "contexts", "seeds", "n", "out", "seed", "stub",
         "teacher_url", "model", "concurrency", "max_attempts",
         "per_turn_retries"});
    const auto config_path = required<std::string>(opts, "config");
    const auto contexts_path = required<std::string>(opts, "contexts");
    const auto n = required<std::uint64_t>(opts, "n");
    const auto out_path = required<std::string>(opts, "out");
    const auto seed = required<std::uint64_t>(opts, "seed");
    if (opts.contains("stub") == opts.contains("teacher_url")) {
      throw codi::Error(codi::ErrorCode::ConfigError,
                        "exactly one of \"stub\" and \"teacher_url\" is required");
    }

    const codi::ConfigDocument doc = codi::load_config_document(config_path);
    std::vector<codi::ContextRecord> contexts = codi::load_contexts(contexts_path);
    codi::SeedPool seeds;
    if (opts.contains("seeds")) {
      seeds = codi::SeedPool(codi::load_seeds(opts["seeds"].get<std::string>()));
    }
    const int concurrency = opts.value("concurrency", 1);

    std::unique_ptr<codi::Teacher> teacher;
    std::string model_id;
    if (opts.contains("stub")) {
      codi::StubFixture fixture =
          codi::load_stub_fixture(opts["stub"].get<std::string>());
      teacher = std::make_unique<codi::ScriptedTeacher>(std::move(fixture.script),
                                                        std::move(fixture.fallback));
      model_id = opts.value("model", std::string("scripted-stub"));
    } else {
      codi::TeacherConfig teacher_config = doc.teacher;
      teacher_config.endpoint = opts["teacher_url"].get<std::string>();
      if (opts.contains("model")) {
        teacher_config.model = opts["model"].get<std::string>();
      }
      if (teacher_config.model.empty()) {
        throw codi::Error(codi::ErrorCode::ConfigError,
                          "teacher model is required (config \"teacher.model\" "
                          "or option \"model\")");
      }
      if (concurrency > teacher_config.max_in_flight) {
        teacher_config.max_in_flight = concurrency;
      }
      model_id = teacher_config.model;
      teacher = std::make_unique<codi::HttpTeacher>(std::move(teacher_config));
    }

    codi::SynthesisJob job{
        .graph = codi::build_graph(doc),
        .length = doc.length,
        .links = doc.links,
        .phenomena = doc.phenomena,
        .seeds = std::move(seeds),
        .contexts = std::move(contexts),
        .model_id = std::move(model_id),
        .context_role = doc.context_role,
        .n_target = n,
        .master_seed = seed,
        .rejection = {opts.value("per_turn_retries", 1)},
        .max_attempts = opts.value("max_attempts", std::uint64_t{0}),
    };
    const codi::SynthesisManifest manifest =
        codi::synthesize_dataset(job, *teacher, out_path, concurrency);
    *out_manifest_json = dup_string(codi::manifest_to_json(manifest));
    if (!manifest.complete()) {
      g_last_error = "budget exhausted: produced " +
                     std::to_string(manifest.produced) + " of " +
                     std::to_string(manifest.requested);
      return CODI_ERR_BUDGET;
    }
    return CODI_OK;
  });
}

codi_status codi_run_annotate(const char* options_json,
                              char** out_summary_json) {
  return wrap([&]() {
    require_out(out_summary_json, "annotate");
    const json opts = parse_options(options_json, {"in", "out", "policy"});
    const auto in_path = required<std::string>(opts, "in");
    const auto out_path = required<std::string>(opts, "out");
    codi::WeightPolicy policy{{{"AGENT", 1.0}}, 0.0};
    if (opts.contains("policy")) {
      policy = codi::load_weight_policy(opts["policy"].get<std::string>());
    }

    const std::vector<std::string> lines =
        codi::split_lines(codi::read_file(in_path));
    codi::AtomicFileWriter writer(out_path);
    std::size_t records = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        const codi::DatasetRecord record = codi::record_from_jsonl(lines[i]);
        const codi::WeightedExample example =
            codi::annotate(record.conversation, policy);
        codi::check_weighted_example(example);
        json spans = json::array();
        for (const codi::WeightSpan& span : example.spans) {
          spans.push_back({span.start, span.end, span.role,
                           codi::to_string(span.kind), span.weight});
        }
        const json line{{"conversation_id", record.conversation_id},
                        {"text", example.text},
                        {"spans", std::move(spans)}};
        writer.write(line.dump() + "\n");
        ++records;
      } catch (const codi::Error& e) {
        throw codi::Error(codi::ErrorCode::InvalidArgument,
                          "record " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    writer.commit();
    const json summary{{"records", records}, {"out", out_path}};
    *out_summary_json = dup_string(summary.dump(2) + "\n");
    return CODI_OK;
  });
}

codi_status codi_run_evaluate(const char* options_json, char** out_report_json) {
  return wrap([&]() {
    require_out(out_report_json, "evaluate");
    const json opts = parse_options(options_json,
                                    {"gold", "format", "predictions", "model_url",
                                     "model", "metric", "history", "per_turn_csv"});
    const auto gold_path = required<std::string>(opts, "gold");
    const auto format = codi::eval_format_from_string(required<std::string>(opts, "format"));
    const auto metric_name = required<std::string>(opts, "metric");
    if (opts.contains("predictions") == opts.contains("model_url")) {
      throw codi::Error(
          codi::ErrorCode::ConfigError,
          "exactly one of \"predictions\" and \"model_url\" is required");
    }

    const codi::EvalSet evalset = codi::load_evalset(gold_path, format);
    const codi::Metric metric = codi::metric_by_name(metric_name);
    const codi::HistoryMode mode =
        codi::history_mode_from_string(opts.value("history", std::string("gold")));

    codi::AnswerModel model;
    if (opts.contains("predictions")) {
      model = codi::predictions_model(
          codi::load_predictions(opts["predictions"].get<std::string>()));
    } else {
      codi::TeacherConfig config;
      config.endpoint = opts["model_url"].get<std::string>();
      config.model = opts.value("model", std::string("student"));
      config.temperature = 0.0;  // scoring wants greedy decoding
      model = codi::http_model(config);
    }

    const codi::MetricReport report =
        codi::evaluate(evalset, metric, metric_name, mode, model);
    if (opts.contains("per_turn_csv")) {
      codi::write_file_atomic(opts["per_turn_csv"].get<std::string>(),
                              codi::per_turn_csv(report));
    }
    *out_report_json = dup_string(codi::report_to_json(report));
    return CODI_OK;
  });
}

codi_status codi_run_length_stats(const char* options_json,
                                  char** out_stats_json) {
  return wrap([&]() {
    require_out(out_stats_json, "length-stats");
    const json opts = parse_options(options_json, {"in", "field"});
    const auto in_path = required<std::string>(opts, "in");
    const auto field = required<std::string>(opts, "field");
    const std::vector<std::string> texts =
        codi::extract_string_field(in_path, field);
    const codi::LengthStats stats = codi::length_stats(texts);
    const json out{{"average", stats.average},
                   {"median", stats.median},
                   {"p90", stats.p90},
                   {"count", stats.count}};
    *out_stats_json = dup_string(out.dump(2) + "\n");
    return CODI_OK;
  });
}

}  // extern "C"
