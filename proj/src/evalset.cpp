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

#include "evalset.hpp"

#include <map>
#include <set>

#include <json.hpp>

#include "io.hpp"

namespace codi {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& detail) {
  throw Error(ErrorCode::SchemaError, path + ": " + detail);
}

// CoQA: {"version", "data": [{"id", "story", "questions": [{"input_text",
// "turn_id"}], "answers": [...same shape...], "additional_answers":
// {"0": [...], ...}}]}. Questions and answers align one-to-one by position
// and carry matching turn ids.
EvalSet load_coqa(const std::string& path, const json& doc) {
  EvalSet out;
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    schema_error(path, "expected a top-level object with a \"data\" array");
  }
  for (const json& jd : doc["data"]) {
    EvalDialog dialog;
    dialog.dialog_id = jd.at("id").is_string()
                           ? jd.at("id").get<std::string>()
                           : jd.at("id").dump();
    dialog.context = jd.at("story").get<std::string>();
    const json& questions = jd.at("questions");
    const json& answers = jd.at("answers");
    if (!questions.is_array() || !answers.is_array() ||
        questions.size() != answers.size()) {
      schema_error(path, "dialog '" + dialog.dialog_id +
                             "': questions and answers must be arrays of "
                             "equal length");
    }

    // additional_answers groups, each aligned to the main answers by turn_id.
    std::vector<std::map<int, std::string>> extra_by_turn;
    if (jd.contains("additional_answers") && jd["additional_answers"].is_object()) {
      for (const auto& [group, entries] : jd["additional_answers"].items()) {
        (void)group;
        std::map<int, std::string> by_turn;
        for (const json& ja : entries) {
          by_turn[ja.at("turn_id").get<int>()] = ja.at("input_text").get<std::string>();
        }
        extra_by_turn.push_back(std::move(by_turn));
      }
    }

    for (std::size_t i = 0; i < questions.size(); ++i) {
      EvalTurn turn;
      turn.turn_index = questions[i].at("turn_id").get<int>();
      turn.question = questions[i].at("input_text").get<std::string>();
      if (answers[i].at("turn_id").get<int>() != turn.turn_index) {
        schema_error(path, "dialog '" + dialog.dialog_id +
                               "': answer turn_id does not match question");
      }
      turn.references.push_back(answers[i].at("input_text").get<std::string>());
      for (const auto& by_turn : extra_by_turn) {
        const auto it = by_turn.find(turn.turn_index);
        if (it != by_turn.end() && !it->second.empty()) {
          turn.references.push_back(it->second);
        }
      }
      dialog.turns.push_back(std::move(turn));
    }
    out.dialogs.push_back(std::move(dialog));
  }
  return out;
}

// QuAC: {"data": [{"paragraphs": [{"id", "context", "qas": [{"id",
// "question", "answers": [{"text", ...}]}]}]}]}. Each paragraph is one
// dialog; CANNOTANSWER is an ordinary reference string.
EvalSet load_quac(const std::string& path, const json& doc) {
  EvalSet out;
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    schema_error(path, "expected a top-level object with a \"data\" array");
  }
  for (const json& jd : doc["data"]) {
    for (const json& jp : jd.at("paragraphs")) {
      EvalDialog dialog;
      dialog.dialog_id = jp.at("id").is_string() ? jp.at("id").get<std::string>()
                                                 : jp.at("id").dump();
      dialog.context = jp.at("context").get<std::string>();
      int turn_index = 0;
      for (const json& jq : jp.at("qas")) {
        EvalTurn turn;
        turn.turn_index = ++turn_index;
        turn.question = jq.at("question").get<std::string>();
        for (const json& ja : jq.at("answers")) {
          turn.references.push_back(ja.at("text").get<std::string>());
        }
        if (turn.references.empty()) {
          schema_error(path, "dialog '" + dialog.dialog_id + "' turn " +
                                 std::to_string(turn.turn_index) +
                                 " has no reference answers");
        }
        dialog.turns.push_back(std::move(turn));
      }
      out.dialogs.push_back(std::move(dialog));
    }
  }
  return out;
}

}  // namespace

EvalFormat eval_format_from_string(const std::string& name) {
  if (name == "coqa") return EvalFormat::Coqa;
  if (name == "quac") return EvalFormat::Quac;
  throw Error(ErrorCode::ConfigError,
              "unknown evalset format '" + name + "' (expected coqa or quac)");
}

void check_evalset(const EvalSet& evalset) {
  std::set<std::string> ids;
  for (const EvalDialog& dialog : evalset.dialogs) {
    if (!ids.insert(dialog.dialog_id).second) {
      throw Error(ErrorCode::SchemaError,
                  "duplicate dialog_id '" + dialog.dialog_id + "'");
    }
    int expected = 1;
    for (const EvalTurn& turn : dialog.turns) {
      if (turn.turn_index != expected) {
        throw Error(ErrorCode::SchemaError,
                    "dialog '" + dialog.dialog_id + "': turn index " +
                        std::to_string(turn.turn_index) + " where " +
                        std::to_string(expected) + " was expected");
      }
      if (turn.references.empty()) {
        throw Error(ErrorCode::SchemaError,
                    "dialog '" + dialog.dialog_id + "' turn " +
                        std::to_string(turn.turn_index) + " has no references");
      }
      ++expected;
    }
  }
}

EvalSet load_evalset(const std::string& path, EvalFormat format) {
  const std::string raw = read_file(path);
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception& e) {
    schema_error(path, std::string("invalid JSON: ") + e.what());
  }
  EvalSet out;
  try {
    out = format == EvalFormat::Coqa ? load_coqa(path, doc) : load_quac(path, doc);
  } catch (const json::exception& e) {
    schema_error(path, std::string("unexpected document shape: ") + e.what());
  }
  check_evalset(out);
  return out;
}

}  // namespace codi
