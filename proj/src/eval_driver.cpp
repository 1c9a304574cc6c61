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

#include "eval_driver.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "conversation.hpp"
#include "io.hpp"

namespace codi {
namespace {

using nlohmann::json;

std::string trim_copy(const std::string& s) {
  const auto ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && ws(s[begin])) ++begin;
  while (end > begin && ws(s[end - 1])) --end;
  return s.substr(begin, end - begin);
}

std::string format_score(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4f", value);
  return buffer;
}

}  // namespace

HistoryMode history_mode_from_string(const std::string& name) {
  if (name == "gold") return HistoryMode::Gold;
  if (name == "pred") return HistoryMode::Pred;
  throw Error(ErrorCode::ConfigError,
              "unknown history mode '" + name + "' (expected gold or pred)");
}

const char* to_string(HistoryMode mode) {
  return mode == HistoryMode::Gold ? "gold" : "pred";
}

std::string build_eval_prompt(
    const EvalDialog& dialog,
    const std::vector<std::pair<std::string, std::string>>& history,
    const std::string& question) {
  Conversation conv;
  conv.turns.emplace_back(Role("CONTEXT"), dialog.context);
  for (const auto& [q, a] : history) {
    conv.turns.emplace_back(Role("USER"), q);
    conv.turns.emplace_back(Role("AGENT"), a);
  }
  conv.turns.emplace_back(Role("USER"), question);
  return serialize(conv);
}

MetricReport evaluate(const EvalSet& evalset, const Metric& metric,
                      const std::string& metric_name, HistoryMode mode,
                      const AnswerModel& model) {
  check_evalset(evalset);
  MetricReport report;
  report.metric = metric_name;
  report.history_mode = to_string(mode);
  report.dialogs_total = evalset.dialogs.size();

  for (const EvalDialog& dialog : evalset.dialogs) {
    std::vector<ExampleScore> dialog_scores;
    std::vector<std::pair<std::string, std::string>> history;
    try {
      for (const EvalTurn& turn : dialog.turns) {
        const std::string prompt = build_eval_prompt(dialog, history, turn.question);
        const std::string prediction = model(prompt, dialog.dialog_id, turn.turn_index);
        const double score = multi_reference(metric, turn.references, prediction);
        dialog_scores.push_back({dialog.dialog_id, turn.turn_index, score});
        const std::string& answer =
            mode == HistoryMode::Gold ? turn.references.front() : prediction;
        history.emplace_back(turn.question, answer);
      }
    } catch (const Error&) {
      report.dialogs_failed += 1;
      continue;  // no partial dialogs in the report
    }
    report.dialogs_scored += 1;
    for (ExampleScore& score : dialog_scores) {
      report.per_example.push_back(std::move(score));
    }
  }

  std::sort(report.per_example.begin(), report.per_example.end(),
            [](const ExampleScore& a, const ExampleScore& b) {
              return std::tie(a.dialog_id, a.turn_index) <
                     std::tie(b.dialog_id, b.turn_index);
            });

  std::map<int, double> turn_sum;
  double total = 0.0;
  for (const ExampleScore& example : report.per_example) {
    total += example.score;
    turn_sum[example.turn_index] += example.score;
    report.per_turn_count[example.turn_index] += 1;
  }
  for (const auto& [turn_index, sum] : turn_sum) {
    report.per_turn_mean[turn_index] =
        sum / static_cast<double>(report.per_turn_count[turn_index]);
  }
  report.corpus_mean = report.per_example.empty()
                           ? 0.0
                           : total / static_cast<double>(report.per_example.size());
  return report;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::vector<Prediction> out;
  const std::string raw = read_file(path);
  std::size_t line_number = 0;
  for (const std::string& line : split_lines(raw)) {
    ++line_number;
    try {
      const json doc = json::parse(line);
      Prediction p;
      p.dialog_id = doc.at("dialog_id").get<std::string>();
      p.turn_index = doc.at("turn_index").get<int>();
      p.prediction = doc.at("prediction").get<std::string>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path + " line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

AnswerModel predictions_model(const std::vector<Prediction>& predictions) {
  auto table = std::make_shared<std::map<std::pair<std::string, int>, std::string>>();
  for (const Prediction& p : predictions) {
    (*table)[{p.dialog_id, p.turn_index}] = p.prediction;
  }
  return [table](const std::string&, const std::string& dialog_id, int turn_index) {
    const auto it = table->find({dialog_id, turn_index});
    if (it == table->end()) {
      throw Error(ErrorCode::SchemaError,
                  "no prediction for dialog '" + dialog_id + "' turn " +
                      std::to_string(turn_index));
    }
    return it->second;
  };
}

AnswerModel http_model(const TeacherConfig& config) {
  auto client = std::make_shared<HttpTeacher>(config);
  return [client](const std::string& prompt, const std::string&, int) {
    const std::string raw = trim_copy(client->generate(prompt).text);
    // Students trained on the tagged format tend to answer in it; unwrap a
    // completion that is exactly one tagged turn.
    if (!raw.empty() && raw.front() == '[') {
      try {
        const Conversation parsed = parse(raw);
        if (parsed.turns.size() == 1) return parsed.turns.front().text;
      } catch (const Error&) {
        // fall through: not tag-shaped after all
      }
    }
    return raw;
  };
}

std::string report_to_json(const MetricReport& report) {
  json per_turn = json::object();
  for (const auto& [turn_index, mean] : report.per_turn_mean) {
    per_turn[std::to_string(turn_index)] = {
        {"mean", mean}, {"examples", report.per_turn_count.at(turn_index)}};
  }
  json per_example = json::array();
  for (const ExampleScore& example : report.per_example) {
    per_example.push_back({{"dialog_id", example.dialog_id},
                           {"turn_index", example.turn_index},
                           {"score", example.score}});
  }
  const json doc{
      {"metric", report.metric},
      {"history_mode", report.history_mode},
      {"corpus_mean", report.corpus_mean},
      {"dialogs",
       {{"total", report.dialogs_total},
        {"scored", report.dialogs_scored},
        {"failed", report.dialogs_failed}}},
      {"per_turn", std::move(per_turn)},
      {"per_example", std::move(per_example)},
  };
  return doc.dump(2) + "\n";
}

std::string report_table(const MetricReport& report) {
  std::ostringstream out;
  out << "metric        " << report.metric << "\n";
  out << "history       " << report.history_mode << "\n";
  out << "dialogs       " << report.dialogs_scored << " scored / "
      << report.dialogs_total << " total (" << report.dialogs_failed
      << " failed)\n";
  out << "examples      " << report.per_example.size() << "\n";
  out << "corpus_mean   " << format_score(report.corpus_mean) << "\n";
  return out.str();
}

std::string per_turn_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "turn_index,mean_score,examples\n";
  for (const auto& [turn_index, mean] : report.per_turn_mean) {
    char row[96];
    std::snprintf(row, sizeof row, "%d,%.6f,%llu\n", turn_index, mean,
                  static_cast<unsigned long long>(report.per_turn_count.at(turn_index)));
    out << row;
  }
  return out.str();
}

}  // namespace codi
