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

#include "orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <set>
#include <thread>

#include <json.hpp>

#include "io.hpp"
#include "metrics.hpp"

namespace codi {
namespace {

using nlohmann::json;

bool needs_seed(const LinkDef& link) {
  return link.requires_seed ||
         link.prompt_template.find("{{seed}}") != std::string::npos;
}

// Failures of a single teacher call or of turn extraction; eligible for
// per-turn retry and, once retries run out, whole-conversation rejection.
// Anything else (config defects, unreachable endpoints) must propagate.
bool retryable_reason(ErrorCode code) {
  switch (code) {
    case ErrorCode::Timeout:
    case ErrorCode::ServerError:
    case ErrorCode::RateLimited:
    case ErrorCode::MalformedResponse:
    case ErrorCode::ScriptExhausted:
      return true;
    default:
      return false;
  }
}

std::string_view trim_ascii(std::string_view s) {
  const auto ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

// Same-role turns must differ after metric-style normalization; near-echo
// turns add no training signal and usually mean the teacher looped.
std::optional<std::string> find_duplicate(const Conversation& candidate,
                                          std::size_t first_new) {
  for (std::size_t i = first_new; i < candidate.turns.size(); ++i) {
    const auto norm_i = normalize(candidate.turns[i].text);
    for (std::size_t j = 0; j < i; ++j) {
      if (candidate.turns[j].role == candidate.turns[i].role &&
          normalize(candidate.turns[j].text) == norm_i) {
        return candidate.turns[i].role.name();
      }
    }
  }
  return std::nullopt;
}

json record_to_json(const DatasetRecord& record) {
  json turns = json::array();
  for (const Turn& turn : record.conversation.turns) {
    json jt{{"role", turn.role.name()}, {"text", turn.text}};
    if (turn.provenance.has_value()) {
      const TurnProvenance& p = *turn.provenance;
      json prov{{"link_id", p.link_id}, {"teacher_raw_length", p.teacher_raw_length}};
      if (p.seed_id.has_value()) prov["seed_id"] = *p.seed_id;
      if (p.phenomenon_id.has_value()) prov["phenomenon_id"] = *p.phenomenon_id;
      jt["provenance"] = std::move(prov);
    }
    turns.push_back(std::move(jt));
  }
  return json{
      {"schema", "codi/1"},
      {"conversation_id", record.conversation_id},
      {"context_id", record.context_id},
      {"chain", record.chain},
      {"rng_seed", record.rng_seed},
      {"teacher_meta",
       {{"model", record.teacher_meta.model_id},
        {"total_completion_tokens", record.teacher_meta.total_completion_tokens}}},
      {"turns", std::move(turns)},
      {"text", serialize(record.conversation)},
  };
}

}  // namespace

void check_job(const SynthesisJob& job) {
  if (job.n_target < 1) {
    throw Error(ErrorCode::ConfigError, "target conversation count must be >= 1");
  }
  if (job.rejection.per_turn_retries < 0) {
    throw Error(ErrorCode::ConfigError, "per_turn_retries must be >= 0");
  }
  const ValidationReport report = job.graph.validate();
  if (!report.ok()) {
    const Finding& first = report.findings.front();
    throw Error(ErrorCode::InvalidGraph,
                std::string(to_string(first.category)) + " at " + first.subject +
                    ": " + first.detail);
  }
  check_length_spec(job.length);
  if (job.contexts.empty()) {
    throw Error(ErrorCode::MissingContext, "context corpus is empty");
  }
  std::set<std::string> context_ids;
  for (const ContextRecord& ctx : job.contexts) {
    if (!context_ids.insert(ctx.context_id).second) {
      throw Error(ErrorCode::ConfigError,
                  "duplicate context_id '" + ctx.context_id + "'");
    }
  }
  for (const std::string& vertex : job.graph.vertices()) {
    const auto it = job.links.find(vertex);
    if (it == job.links.end()) {
      throw Error(ErrorCode::ConfigError,
                  "graph vertex '" + vertex + "' has no link definition");
    }
    const LinkDef& link = it->second;
    check_link(link);
    for (const auto& [phenomenon_id, probability] : link.phenomena_pool) {
      (void)probability;
      if (!job.phenomena.contains(phenomenon_id)) {
        throw Error(ErrorCode::UnknownPhenomenon,
                    "link '" + link.id + "' references unknown phenomenon '" +
                        phenomenon_id + "'");
      }
    }
    if (needs_seed(link) && job.seeds.empty()) {
      throw Error(ErrorCode::MissingSeed,
                  "link '" + link.id + "' needs seeds but the pool is empty");
    }
  }
}

std::vector<Turn> extract_turns(const std::string& raw,
                                const std::vector<ExtractionRule>& extraction) {
  if (extraction.empty()) {
    throw Error(ErrorCode::InvalidArgument, "extraction rule list is empty");
  }
  std::vector<Turn> turns;
  turns.reserve(extraction.size());
  for (std::size_t i = 0; i < extraction.size(); ++i) {
    const ExtractionRule& rule = extraction[i];
    const std::size_t hit = raw.rfind(rule.marker);
    if (hit == std::string::npos) {
      throw Error(ErrorCode::MarkerMissing,
                  "marker '" + rule.marker + "' for role " + rule.role.name() +
                      " not found in completion");
    }
    const std::size_t start = hit + rule.marker.size();
    std::size_t stop = raw.size();
    if (i + 1 < extraction.size()) {
      const std::size_t next = raw.find(extraction[i + 1].marker, start);
      if (next != std::string::npos) stop = next;
    }
    const std::string_view segment =
        trim_ascii(std::string_view(raw).substr(start, stop - start));
    if (segment.empty()) {
      throw Error(ErrorCode::EmptyExtraction,
                  "role " + rule.role.name() + " extracted empty text");
    }
    turns.emplace_back(rule.role, std::string(segment));
  }
  return turns;
}

SynthesisOutcome synthesize_conversation(const SynthesisJob& job, Teacher& teacher,
                                         const ContextRecord& context,
                                         std::uint64_t conversation_index) {
  const std::uint64_t seed = derive_seed(job.master_seed, conversation_index);
  Rng rng(seed);

  SynthesisOutcome outcome;
  const auto rejected = [&](ErrorCode code, std::string detail) {
    outcome.result = Rejection{code, std::move(detail), conversation_index};
    return outcome;
  };

  const int n = sample_length(job.length, rng);
  ChainSample chain = job.graph.sample_chain(n, rng);
  chain.rng_seed = seed;

  Conversation conv;
  conv.id = conversation_id_for(conversation_index);
  conv.turns.emplace_back(job.context_role, context.text);
  {
    std::string offending;
    if (has_tag_collision(context.text, {job.context_role}, &offending)) {
      return rejected(ErrorCode::TagCollision,
                      "context '" + context.context_id + "' embeds " + offending);
    }
  }

  TeacherMeta meta{job.model_id, 0};

  for (std::size_t step = 0; step < chain.links.size(); ++step) {
    const LinkDef& link = job.links.at(chain.links[step]);
    std::optional<Rejection> failure;
    bool step_done = false;
    for (int attempt = 0; attempt <= job.rejection.per_turn_retries && !step_done;
         ++attempt) {
      std::optional<SeedRecord> seed_record;
      if (needs_seed(link)) seed_record = job.seeds.sample(rng);
      const std::optional<PhenomenonDef> phenomenon =
          sample_phenomenon(link, job.phenomena, rng);

      Conversation history;  // dialogue so far, context turn excluded
      history.turns.assign(conv.turns.begin() + 1, conv.turns.end());
      const PromptInstance prompt =
          instantiate(link, history, context.text, seed_record, phenomenon);

      TurnResponse response;
      ++outcome.teacher_calls;
      try {
        response = teacher.generate(prompt.text, link.id, step);
      } catch (const Error& e) {
        if (!retryable_reason(e.code())) throw;
        failure = Rejection{e.code(), e.what(), conversation_index};
        continue;
      }

      std::vector<Turn> extracted;
      try {
        extracted = extract_turns(response.text, link.extraction);
      } catch (const Error& e) {
        failure = Rejection{e.code(), e.what(), conversation_index};
        continue;
      }

      Conversation candidate = conv;
      const std::size_t first_new = candidate.turns.size();
      for (Turn& turn : extracted) {
        TurnProvenance provenance;
        provenance.link_id = prompt.provenance.link_id;
        provenance.seed_id = prompt.provenance.seed_id;
        provenance.phenomenon_id = prompt.provenance.phenomenon_id;
        provenance.teacher_raw_length = response.text.size();
        turn.provenance = std::move(provenance);
        candidate.turns.push_back(std::move(turn));
      }
      try {
        (void)serialize(candidate);
      } catch (const TagCollisionError& e) {
        failure = Rejection{ErrorCode::TagCollision, e.what(), conversation_index};
        continue;
      }
      if (const auto dup_role = find_duplicate(candidate, first_new)) {
        failure = Rejection{ErrorCode::DuplicateTurn,
                            "duplicate " + *dup_role + " turn at step " +
                                std::to_string(step),
                            conversation_index};
        continue;
      }

      conv = std::move(candidate);
      meta.total_completion_tokens += response.completion_tokens;
      step_done = true;
    }
    if (!step_done) {
      outcome.result = std::move(*failure);
      return outcome;
    }
  }

  // Nothing is recorded unless the conversation survives a full round-trip.
  try {
    const std::string text = serialize(conv);
    const Conversation parsed = parse(text);
    if (!same_content(parsed, conv)) {
      return rejected(ErrorCode::UnbalancedTurn, "round-trip changed the content");
    }
  } catch (const Error& e) {
    return rejected(e.code(), std::string("round-trip failed: ") + e.what());
  }

  DatasetRecord record;
  record.conversation_id = conv.id;
  record.context_id = context.context_id;
  record.chain = chain.links;
  record.conversation = std::move(conv);
  record.teacher_meta = std::move(meta);
  record.rng_seed = seed;
  outcome.result = std::move(record);
  return outcome;
}

SynthesisManifest synthesize_dataset(const SynthesisJob& job, Teacher& teacher,
                                     const std::string& output_path,
                                     int concurrency) {
  check_job(job);
  const auto started = std::chrono::steady_clock::now();
  if (concurrency < 1) concurrency = 1;

  SynthesisManifest manifest;
  manifest.requested = job.n_target;
  const std::uint64_t budget =
      job.max_attempts != 0 ? job.max_attempts : 4 * job.n_target;

  AtomicFileWriter writer(output_path);
  std::uint64_t next_index = 0;

  // Indexes are issued in batches of (still-needed x budget-left) so the set
  // of attempted conversations is a pure function of the job: worker count
  // changes who computes an index, never which indexes run.
  while (manifest.produced < job.n_target && manifest.attempted < budget) {
    const std::uint64_t batch = std::min<std::uint64_t>(
        job.n_target - manifest.produced, budget - manifest.attempted);
    std::vector<SynthesisOutcome> outcomes(batch);
    std::vector<std::exception_ptr> errors(batch);
    std::atomic<std::uint64_t> cursor{0};

    const auto work = [&]() {
      for (;;) {
        const std::uint64_t slot = cursor.fetch_add(1);
        if (slot >= batch) return;
        const std::uint64_t index = next_index + slot;
        const ContextRecord& ctx = job.contexts[index % job.contexts.size()];
        try {
          outcomes[slot] = synthesize_conversation(job, teacher, ctx, index);
        } catch (...) {
          errors[slot] = std::current_exception();
        }
      }
    };
    const auto workers = static_cast<unsigned>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(concurrency), batch));
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (std::thread& t : pool) t.join();
    }
    for (std::uint64_t slot = 0; slot < batch; ++slot) {
      if (errors[slot]) std::rethrow_exception(errors[slot]);
    }
    for (std::uint64_t slot = 0; slot < batch; ++slot) {
      SynthesisOutcome& oc = outcomes[slot];
      manifest.attempted += 1;
      manifest.teacher_calls += oc.teacher_calls;
      if (oc.ok()) {
        manifest.produced += 1;
        writer.write(record_to_jsonl(std::get<DatasetRecord>(oc.result)));
      } else {
        manifest.rejections[to_string(std::get<Rejection>(oc.result).reason)] += 1;
      }
    }
    next_index += batch;
  }
  writer.commit();

  manifest.wall_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - started)
                              .count();
  write_file_atomic(output_path + ".manifest.json", manifest_to_json(manifest));
  return manifest;
}

std::string record_to_jsonl(const DatasetRecord& record) {
  return record_to_json(record).dump() + "\n";
}

DatasetRecord record_from_jsonl(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("dataset line is not JSON: ") + e.what());
  }
  try {
    if (!doc.contains("schema") || doc["schema"] != "codi/1") {
      throw Error(ErrorCode::SchemaError, "unsupported dataset schema tag");
    }
    DatasetRecord record;
    record.conversation_id = doc.at("conversation_id").get<std::string>();
    record.context_id = doc.at("context_id").get<std::string>();
    record.chain = doc.at("chain").get<std::vector<std::string>>();
    record.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    const json& meta = doc.at("teacher_meta");
    record.teacher_meta.model_id = meta.at("model").get<std::string>();
    record.teacher_meta.total_completion_tokens =
        meta.at("total_completion_tokens").get<std::uint64_t>();
    record.conversation.id = record.conversation_id;
    for (const json& jt : doc.at("turns")) {
      Turn turn(Role(jt.at("role").get<std::string>()),
                jt.at("text").get<std::string>());
      if (jt.contains("provenance")) {
        const json& prov = jt["provenance"];
        TurnProvenance provenance;
        provenance.link_id = prov.at("link_id").get<std::string>();
        provenance.teacher_raw_length =
            prov.at("teacher_raw_length").get<std::uint64_t>();
        if (prov.contains("seed_id")) {
          provenance.seed_id = prov["seed_id"].get<std::string>();
        }
        if (prov.contains("phenomenon_id")) {
          provenance.phenomenon_id = prov["phenomenon_id"].get<std::string>();
        }
        turn.provenance = std::move(provenance);
      }
      record.conversation.turns.push_back(std::move(turn));
    }
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("dataset record field error: ") + e.what());
  }
}

std::string manifest_to_json(const SynthesisManifest& manifest) {
  const json doc{
      {"requested", manifest.requested},
      {"produced", manifest.produced},
      {"attempted", manifest.attempted},
      {"rejections", manifest.rejections},
      {"wall_seconds", manifest.wall_seconds},
      {"teacher_calls", manifest.teacher_calls},
      {"complete", manifest.complete()},
  };
  return doc.dump(2) + "\n";
}

std::string conversation_id_for(std::uint64_t conversation_index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "conv-%08llu",
                static_cast<unsigned long long>(conversation_index));
  return buffer;
}

}  // namespace codi
