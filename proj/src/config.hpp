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
// File-format loaders. One JSON config document carries the graph, the
// length distribution, and the link/phenomenon definitions; contexts and
// seeds arrive as JSON-lines sidecar files. Unknown keys are rejected
// everywhere: a typo should fail the run, not silently change behavior.

#pragma once

#include <deque>
#include <string>
#include <vector>

#include "graph.hpp"
#include "links.hpp"
#include "orchestrator.hpp"
#include "teacher.hpp"
#include "weights.hpp"

namespace codi {

struct ConfigDocument {
  std::string start;
  std::vector<std::string> vertices;
  std::vector<Edge> edges;
  LengthSpec length = FixedLength{1};
  LinkRegistry links;
  PhenomenonRegistry phenomena;  // built-ins plus document entries
  Role context_role{"CONTEXT"};
  TeacherConfig teacher;  // endpoint left empty; the CLI supplies it
};

/// The four built-in phenomenon instructions (coreference, ellipsis,
/// topic_shift, clarification). Documents may override or extend them.
PhenomenonRegistry builtin_phenomena();

/// Parses the JSON config document. Throws Error(ConfigError) on unknown or
/// ill-typed keys and Error(IoError) when unreadable.
ConfigDocument load_config_document(const std::string& path);

ConversationGraph build_graph(const ConfigDocument& document);

/// JSON-lines {context_id, text}; ids must be unique.
std::vector<ContextRecord> load_contexts(const std::string& path);

/// JSON-lines {seed_id, text}; ids must be unique (enforced by SeedPool).
std::vector<SeedRecord> load_seeds(const std::string& path);

struct StubFixture {
  ScriptedTeacher::Script script;
  std::deque<std::string> fallback;
};

/// JSON {script: [{link_id, turn_index, text}], fallback: [text, ...]}.
StubFixture load_stub_fixture(const std::string& path);

/// JSON {role_weights: {ROLE: weight, ...}, default_weight: number}.
WeightPolicy load_weight_policy(const std::string& path);

/// Collects the strings a dotted field path selects from a JSON document.
/// A "[]" suffix on a segment walks every element of an array, so
/// "data[].answers[].input_text" gathers one string per answer. The file
/// may also be JSON-lines; each line is then visited with the same path.
/// Throws Error(SchemaError) when the path is missing or hits a non-string.
std::vector<std::string> extract_string_field(const std::string& path,
                                              const std::string& field_path);

}  // namespace codi
