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
// Conversational evaluation driver. For every dialog turn the driver builds
// a prompt from the grounding context and the conversation so far, obtains
// the model's answer, and scores it against the gold references. History is
// either the gold question/answer pairs (gold mode) or the gold questions
// paired with the model's own earlier predictions (pred mode) — questions
// are user inputs, so they stay gold in both modes.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evalset.hpp"
#include "metrics.hpp"
#include "teacher.hpp"

namespace codi {

enum class HistoryMode { Gold, Pred };

HistoryMode history_mode_from_string(const std::string& name);
const char* to_string(HistoryMode mode);

/// Produces the answer for one turn. `prompt` is the serialized
/// context-plus-history conversation ending in the current question;
/// scripted models may key on (dialog_id, turn_index) instead. A thrown
/// Error fails the whole dialog, which is skipped and counted.
using AnswerModel = std::function<std::string(
    const std::string& prompt, const std::string& dialog_id, int turn_index)>;

struct ExampleScore {
  std::string dialog_id;
  int turn_index = 0;
  double score = 0.0;
};

struct MetricReport {
  std::string metric;
  std::string history_mode;
  std::vector<ExampleScore> per_example;  // sorted by (dialog_id, turn_index)
  std::map<int, double> per_turn_mean;
  std::map<int, std::uint64_t> per_turn_count;
  double corpus_mean = 0.0;
  std::uint64_t dialogs_total = 0;
  std::uint64_t dialogs_scored = 0;
  std::uint64_t dialogs_failed = 0;

  double scored_fraction() const {
    return dialogs_total == 0
               ? 0.0
               : static_cast<double>(dialogs_scored) / static_cast<double>(dialogs_total);
  }
};

/// Scores the evalset with the given model. Dialogs are processed in order,
/// turns sequentially within a dialog (pred mode feeds earlier predictions
/// forward). Turn scores use the max over references. A dialog whose model
/// call or prompt construction throws is skipped and counted in
/// dialogs_failed; its earlier turns do not enter the report.
MetricReport evaluate(const EvalSet& evalset, const Metric& metric,
                      const std::string& metric_name, HistoryMode mode,
                      const AnswerModel& model);

/// Builds the turn prompt: serialize(CONTEXT, USER q1, AGENT a1, ...,
/// USER q_t) with `history` holding the t-1 earlier (question, answer) pairs.
std::string build_eval_prompt(const EvalDialog& dialog,
                              const std::vector<std::pair<std::string, std::string>>& history,
                              const std::string& question);

struct Prediction {
  std::string dialog_id;
  int turn_index = 0;
  std::string prediction;
};

/// JSON-lines {dialog_id, turn_index, prediction}. Throws Error(SchemaError).
std::vector<Prediction> load_predictions(const std::string& path);

/// Model backed by a predictions file; a missing (dialog_id, turn_index)
/// key throws SchemaError, failing that dialog.
AnswerModel predictions_model(const std::vector<Prediction>& predictions);

/// Model served over the chat-completions protocol (same client stack as
/// the teacher). When the completion is exactly one serialized turn, e.g.
/// "[AGENT] Paris. [/AGENT]", the inner text is used; otherwise the
/// whitespace-trimmed completion is the prediction.
AnswerModel http_model(const TeacherConfig& config);

std::string report_to_json(const MetricReport& report);
std::string report_table(const MetricReport& report);

/// "turn_index,mean_score,examples" rows for plotting.
std::string per_turn_csv(const MetricReport& report);

}  // namespace codi
