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
// Synthesis pipeline: samples a chain per conversation, executes its links
// in order against the teacher, extracts role turns from completions, and
// streams validated records to a JSON-lines dataset with a manifest sidecar.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "conversation.hpp"
#include "graph.hpp"
#include "links.hpp"
#include "teacher.hpp"

namespace codi {

struct ContextRecord {
  std::string context_id;
  std::string text;
};

using LinkRegistry = std::map<std::string, LinkDef>;

struct RejectionPolicy {
  int per_turn_retries = 1;  // extra attempts per chain step before rejecting
};

struct SynthesisJob {
  ConversationGraph graph;
  LengthSpec length;
  LinkRegistry links;
  PhenomenonRegistry phenomena;
  SeedPool seeds;
  std::vector<ContextRecord> contexts;
  std::string model_id;  // recorded in teacher_meta; the teacher is passed separately
  Role context_role{"CONTEXT"};
  std::uint64_t n_target = 1;
  std::uint64_t master_seed = 0;
  RejectionPolicy rejection;
  std::uint64_t max_attempts = 0;  // conversation attempts; 0 means 4 * n_target
};

/// Validates everything that must hold before the first teacher call: the
/// graph is sound, every vertex resolves to a checked link, phenomenon pool
/// ids exist, a seed pool backs any {{seed}} use, and contexts are present
/// with unique ids. Throws Error.
void check_job(const SynthesisJob& job);

struct TeacherMeta {
  std::string model_id;
  std::uint64_t total_completion_tokens = 0;
};

struct DatasetRecord {
  std::string conversation_id;
  std::string context_id;
  std::vector<std::string> chain;  // link ids, one per execution
  Conversation conversation;       // context as first turn
  TeacherMeta teacher_meta;
  std::uint64_t rng_seed = 0;
};

struct Rejection {
  ErrorCode reason = ErrorCode::InvalidArgument;
  std::string detail;
  std::uint64_t conversation_index = 0;
};

struct SynthesisOutcome {
  std::variant<DatasetRecord, Rejection> result;
  std::uint64_t teacher_calls = 0;

  bool ok() const noexcept { return std::holds_alternative<DatasetRecord>(result); }
};

struct SynthesisManifest {
  std::uint64_t requested = 0;
  std::uint64_t produced = 0;
  std::uint64_t attempted = 0;
  std::map<std::string, std::uint64_t> rejections;  // reason name -> count
  double wall_seconds = 0.0;
  std::uint64_t teacher_calls = 0;

  bool complete() const noexcept { return produced >= requested; }
};

/// Splits a raw completion into role turns. For each (role, marker) in
/// order, the turn text runs from just after the last occurrence of the
/// marker to the next rule's marker (first occurrence from there) or the
/// end of the string, trimmed of surrounding whitespace. Anything before
/// the first marker — typically a chain-of-thought trace — is discarded.
/// Throws Error(MarkerMissing) and Error(EmptyExtraction).
std::vector<Turn> extract_turns(const std::string& raw,
                                const std::vector<ExtractionRule>& extraction);

/// Runs one conversation attempt: derives the per-conversation seed from
/// (master seed, index), samples length and chain, and executes each link —
/// instantiate prompt from the history so far, call the teacher, extract
/// and validate turns. Per-step failures (teacher errors, missing markers,
/// empty extractions, tag collisions, duplicate same-role turns) are
/// retried up to per_turn_retries, then the whole conversation is rejected;
/// a partial record is never returned. Configuration defects propagate as
/// thrown Errors instead of rejections.
SynthesisOutcome synthesize_conversation(const SynthesisJob& job, Teacher& teacher,
                                         const ContextRecord& context,
                                         std::uint64_t conversation_index);

/// Attempts conversations over the context corpus (cycled round-robin,
/// conversation_index -> contexts[index % size]) until n_target successes
/// or max_attempts is spent. Indexes are dispatched in deterministic
/// batches so the attempted set — and therefore every record — depends
/// only on the job, never on worker count. Successful records append to
/// `output_path` (JSON lines, written via temp + rename) and the manifest
/// is returned; produced < requested signals an exhausted budget.
/// `concurrency` caps worker threads (values < 1 mean 1).
SynthesisManifest synthesize_dataset(const SynthesisJob& job, Teacher& teacher,
                                     const std::string& output_path,
                                     int concurrency = 1);

/// One dataset line: {"schema":"codi/1", ...} with a trailing newline.
std::string record_to_jsonl(const DatasetRecord& record);

/// Parses a dataset line; rejects unknown schema tags. Throws
/// Error(SchemaError).
DatasetRecord record_from_jsonl(const std::string& line);

std::string manifest_to_json(const SynthesisManifest& manifest);

std::string conversation_id_for(std::uint64_t conversation_index);

}  // namespace codi
