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

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "conversation.hpp"
#include "eval_driver.hpp"
#include "evalset.hpp"
#include "io.hpp"

using codi::AnswerModel;
using codi::Error;
using codi::ErrorCode;
using codi::EvalDialog;
using codi::EvalFormat;
using codi::EvalSet;
using codi::EvalTurn;
using codi::HistoryMode;
using codi::MetricReport;

namespace {

std::string fixture(const std::string& name) {
  return (std::filesystem::path(CODI_FIXTURES_DIR) / name).string();
}

EvalSet mini_evalset() {
  return codi::load_evalset(fixture("coqa_mini.json"), EvalFormat::Coqa);
}

// Answers every turn with the first gold reference, regardless of prompt.
AnswerModel oracle_model(const EvalSet& evalset) {
  std::map<std::pair<std::string, int>, std::string> gold;
  for (const EvalDialog& dialog : evalset.dialogs) {
    for (const EvalTurn& turn : dialog.turns) {
      gold[{dialog.dialog_id, turn.turn_index}] = turn.references.front();
    }
  }
  return [gold](const std::string&, const std::string& dialog_id, int turn_index) {
    return gold.at({dialog_id, turn_index});
  };
}

// Parrots the latest AGENT turn in the prompt; answers "beta" on turn one.
// Whether turn two scores then depends entirely on whose answer fills the
// history slot — the gold reference or this model's own earlier output.
std::string parrot_model(const std::string& prompt, const std::string&, int) {
  const codi::Conversation conv = codi::parse(prompt);
  for (auto it = conv.turns.rbegin(); it != conv.turns.rend(); ++it) {
    if (it->role.name() == "AGENT") return it->text;
  }
  return "beta";
}

}  // namespace

TEST_CASE("build_eval_prompt serializes context, history, and the question") {
  EvalDialog dialog;
  dialog.dialog_id = "d";
  dialog.context = "The sky is blue.";
  const std::string prompt = codi::build_eval_prompt(
      dialog, {{"What color is it?", "Blue."}}, "Why is that?");
  CHECK(prompt ==
        "[CONTEXT] The sky is blue. [/CONTEXT]\n"
        "[USER] What color is it? [/USER]\n"
        "[AGENT] Blue. [/AGENT]\n"
        "[USER] Why is that? [/USER]");

  // No history: just the grounding and the opening question.
  CHECK(codi::build_eval_prompt(dialog, {}, "First?") ==
        "[CONTEXT] The sky is blue. [/CONTEXT]\n[USER] First? [/USER]");
}

TEST_CASE("an oracle model scores 1.0 under both history modes") {
  const EvalSet evalset = mini_evalset();
  const codi::Metric f1 = codi::metric_by_name("f1");
  for (const HistoryMode mode : {HistoryMode::Gold, HistoryMode::Pred}) {
    const MetricReport report =
        codi::evaluate(evalset, f1, "f1", mode, oracle_model(evalset));
    CHECK(report.corpus_mean == doctest::Approx(1.0));
    CHECK(report.dialogs_total == 2);
    CHECK(report.dialogs_scored == 2);
    CHECK(report.dialogs_failed == 0);
    CHECK(report.scored_fraction() == doctest::Approx(1.0));
    REQUIRE(report.per_example.size() == 3);
    for (const auto& example : report.per_example) {
      CHECK(example.score == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("gold and pred history modes disagree once the model drifts") {
  // One dialog, two turns. Turn 1 accepts "alpha" or "beta"; its canonical
  // gold answer is "alpha". Turn 2's only reference is "alpha".
  EvalDialog dialog;
  dialog.dialog_id = "drift";
  dialog.context = "ctx";
  dialog.turns.push_back(EvalTurn{1, "q1", {"alpha", "beta"}});
  dialog.turns.push_back(EvalTurn{2, "q2", {"alpha"}});
  const EvalSet evalset{{dialog}};
  const codi::Metric f1 = codi::metric_by_name("f1");

  // Gold mode: the model's "beta" still earns 1.0 on turn 1 via the second
  // reference, and turn 2 parrots the gold "alpha" from the history.
  const MetricReport gold =
      codi::evaluate(evalset, f1, "f1", HistoryMode::Gold, parrot_model);
  CHECK(gold.per_turn_mean.at(1) == doctest::Approx(1.0));
  CHECK(gold.per_turn_mean.at(2) == doctest::Approx(1.0));
  CHECK(gold.corpus_mean == doctest::Approx(1.0));
  CHECK(gold.history_mode == "gold");

  // Pred mode: turn 2 now sees the model's own "beta" and echoes it.
  const MetricReport pred =
      codi::evaluate(evalset, f1, "f1", HistoryMode::Pred, parrot_model);
  CHECK(pred.per_turn_mean.at(1) == doctest::Approx(1.0));
  CHECK(pred.per_turn_mean.at(2) == doctest::Approx(0.0));
  CHECK(pred.corpus_mean == doctest::Approx(0.5));
  CHECK(pred.history_mode == "pred");
}

TEST_CASE("per-turn aggregation averages over examples at each depth") {
  const EvalSet evalset = mini_evalset();
  // mini-1 turn 1 and mini-2 turn 1 score 1.0; mini-1 turn 2 scores 0.0.
  const std::vector<codi::Prediction> predictions{
      {"mini-1", 1, "a small town"},
      {"mini-1", 2, "unrelated words entirely"},
      {"mini-2", 1, "seventeen"},
  };
  const MetricReport report =
      codi::evaluate(evalset, codi::metric_by_name("f1"), "f1", HistoryMode::Gold,
                     codi::predictions_model(predictions));

  REQUIRE(report.per_example.size() == 3);
  // Sorted by (dialog_id, turn_index).
  CHECK(report.per_example[0].dialog_id == "mini-1");
  CHECK(report.per_example[0].turn_index == 1);
  CHECK(report.per_example[1].dialog_id == "mini-1");
  CHECK(report.per_example[1].turn_index == 2);
  CHECK(report.per_example[2].dialog_id == "mini-2");

  CHECK(report.per_turn_count.at(1) == 2);
  CHECK(report.per_turn_count.at(2) == 1);
  CHECK(report.per_turn_mean.at(1) == doctest::Approx(1.0));
  CHECK(report.per_turn_mean.at(2) == doctest::Approx(0.0));
  CHECK(report.corpus_mean == doctest::Approx(2.0 / 3.0));

  // The corpus mean is the mean over examples, not over turn buckets.
  double total = 0.0;
  for (const auto& example : report.per_example) total += example.score;
  CHECK(report.corpus_mean ==
        doctest::Approx(total / static_cast<double>(report.per_example.size())));
}

TEST_CASE("a dialog that throws mid-way is skipped whole") {
  const EvalSet evalset = mini_evalset();
  const AnswerModel flaky = [&](const std::string&, const std::string& dialog_id,
                                int turn_index) -> std::string {
    if (dialog_id == "mini-1" && turn_index == 2) {
      throw Error(ErrorCode::Timeout, "model timed out");
    }
    return "whatever";
  };
  const MetricReport report = codi::evaluate(
      evalset, codi::metric_by_name("f1"), "f1", HistoryMode::Gold, flaky);
  CHECK(report.dialogs_total == 2);
  CHECK(report.dialogs_scored == 1);
  CHECK(report.dialogs_failed == 1);
  CHECK(report.scored_fraction() == doctest::Approx(0.5));
  // mini-1's already-scored first turn must not leak into the report.
  REQUIRE(report.per_example.size() == 1);
  CHECK(report.per_example[0].dialog_id == "mini-2");
}

TEST_CASE("evaluate validates the evalset before calling the model") {
  EvalDialog dialog;
  dialog.dialog_id = "d";
  dialog.turns.push_back(EvalTurn{2, "q", {"a"}});  // indices must start at 1
  bool called = false;
  const AnswerModel probe = [&](const std::string&, const std::string&, int) {
    called = true;
    return std::string("x");
  };
  CHECK_THROWS_AS(
      (void)codi::evaluate(EvalSet{{dialog}}, codi::metric_by_name("f1"), "f1",
                           HistoryMode::Gold, probe),
      Error);
  CHECK_FALSE(called);
}

TEST_CASE("load_predictions parses the JSON-lines prediction format") {
  const auto predictions =
      codi::load_predictions(fixture("predictions_mini.jsonl"));
  REQUIRE(predictions.size() == 3);
  CHECK(predictions[0].dialog_id == "mini-1");
  CHECK(predictions[0].turn_index == 1);
  CHECK(predictions[0].prediction == "a small town");

  SUBCASE("defective lines report their position") {
    const auto path = std::filesystem::temp_directory_path() / "codi_preds_bad.jsonl";
    codi::write_file_atomic(path.string(),
                            "{\"dialog_id\": \"d\", \"turn_index\": 1}\n");
    try {
      (void)codi::load_predictions(path.string());
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("missing files surface as IO errors") {
    try {
      (void)codi::load_predictions("/nonexistent/preds.jsonl");
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
  }
}

TEST_CASE("predictions_model answers from the table and fails on misses") {
  const std::vector<codi::Prediction> predictions{{"d", 1, "hello"}};
  const AnswerModel model = codi::predictions_model(predictions);
  CHECK(model("ignored prompt", "d", 1) == "hello");
  try {
    (void)model("ignored prompt", "d", 2);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(std::string(e.what()).find("turn 2") != std::string::npos);
  }
}

TEST_CASE("history mode names round-trip") {
  CHECK(codi::history_mode_from_string("gold") == HistoryMode::Gold);
  CHECK(codi::history_mode_from_string("pred") == HistoryMode::Pred);
  CHECK(std::string(codi::to_string(HistoryMode::Gold)) == "gold");
  CHECK(std::string(codi::to_string(HistoryMode::Pred)) == "pred");
  CHECK_THROWS_AS((void)codi::history_mode_from_string("oracle"), Error);
}

TEST_CASE("report serializations carry the aggregates") {
  MetricReport report;
  report.metric = "f1";
  report.history_mode = "gold";
  report.per_example = {{"d1", 1, 1.0}, {"d1", 2, 0.25}, {"d2", 1, 1.0}};
  report.per_turn_mean = {{1, 1.0}, {2, 0.25}};
  report.per_turn_count = {{1, 2}, {2, 1}};
  report.corpus_mean = 0.75;
  report.dialogs_total = 3;
  report.dialogs_scored = 2;
  report.dialogs_failed = 1;

  const nlohmann::json doc = nlohmann::json::parse(codi::report_to_json(report));
  CHECK(doc.at("metric") == "f1");
  CHECK(doc.at("history_mode") == "gold");
  CHECK(doc.at("corpus_mean") == doctest::Approx(0.75));
  CHECK(doc.at("dialogs").at("total") == 3);
  CHECK(doc.at("dialogs").at("scored") == 2);
  CHECK(doc.at("dialogs").at("failed") == 1);
  CHECK(doc.at("per_turn").at("1").at("mean") == doctest::Approx(1.0));
  CHECK(doc.at("per_turn").at("2").at("examples") == 1);
  REQUIRE(doc.at("per_example").size() == 3);
  CHECK(doc.at("per_example")[1].at("score") == doctest::Approx(0.25));

  CHECK(codi::per_turn_csv(report) ==
        "turn_index,mean_score,examples\n"
        "1,1.000000,2\n"
        "2,0.250000,1\n");

  const std::string table = codi::report_table(report);
  CHECK(table.find("metric        f1") != std::string::npos);
  CHECK(table.find("corpus_mean   0.7500") != std::string::npos);
  CHECK(table.find("2 scored / 3 total (1 failed)") != std::string::npos);
}
