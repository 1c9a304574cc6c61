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

#pragma once

#include <string>
#include <vector>

#include "error.hpp"

namespace codi {

// Grounded-QA evaluation sets: one grounding context per dialog plus ordered
// question turns, each with one or more gold reference answers. Loaders
// accept the official published JSON of the CoQA and QuAC corpora.

struct EvalTurn {
  int turn_index = 0;  // 1-based, consecutive within the dialog
  std::string question;
  std::vector<std::string> references;  // at least one gold answer
};

struct EvalDialog {
  std::string dialog_id;
  std::string context;
  std::vector<EvalTurn> turns;
};

struct EvalSet {
  std::vector<EvalDialog> dialogs;
};

enum class EvalFormat { Coqa, Quac };

/// Accepts "coqa" or "quac"; throws Error(ConfigError) otherwise.
EvalFormat eval_format_from_string(const std::string& name);

/// Enforces the EvalSet invariants: unique dialog ids, turn indices
/// consecutive from 1, and >= 1 reference per turn. Throws Error(SchemaError).
void check_evalset(const EvalSet& evalset);

/// Parses the official corpus JSON. CoQA references include the primary
/// answer plus any additional human answers aligned by turn id (the
/// additional_answers block is optional); QuAC keeps its provided reference
/// answers verbatim, including CANNOTANSWER. Throws Error(IoError) for
/// unreadable files and Error(SchemaError) for malformed ones.
EvalSet load_evalset(const std::string& path, EvalFormat format);

}  // namespace codi
