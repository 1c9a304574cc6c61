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

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "config.hpp"
#include "io.hpp"
#include "orchestrator.hpp"

using codi::Conversation;
using codi::DatasetRecord;
using codi::ErrorCode;
using codi::ExtractionRule;
using codi::LinkDef;
using codi::Rejection;
using codi::Role;
using codi::ScriptedTeacher;
using codi::SynthesisJob;
using codi::SynthesisOutcome;
using codi::Turn;

namespace {

std::string temp_path(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / ("codi_orch_" + name);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".manifest.json");
  return path.string();
}

std::vector<ExtractionRule> qa_extraction() {
  return {{Role("USER"), "QUESTION:"}, {Role("AGENT"), "ANSWER:"}};
}

LinkDef opener_link() {
  LinkDef link;
  link.id = "OPENER";
  link.prompt_template =
      "Topic: {{seed}}\nPassage: {{context}}\nWrite QUESTION: and ANSWER: lines.";
  link.requires_context = true;
  link.requires_seed = true;
  link.extraction = qa_extraction();
  return link;
}

LinkDef followup_link() {
  LinkDef link;
  link.id = "FOLLOWUP";
  link.prompt_template = "{{history}}\nContinue with QUESTION: and ANSWER: lines.";
  link.phenomena_pool = {{"coreference", 0.4}, {"clarification", 0.1}};
  link.extraction = qa_extraction();
  return link;
}

// Two-step forced chain OPENER -> FOLLOWUP with one context and two seeds.
SynthesisJob two_step_job() {
  return SynthesisJob{
      .graph = codi::ConversationGraph("START", {"OPENER", "FOLLOWUP"},
                                       {{"START", "OPENER", 1.0},
                                        {"OPENER", "FOLLOWUP", 1.0},
                                        {"FOLLOWUP", "FOLLOWUP", 1.0}}),
      .length = codi::FixedLength{2},
      .links = {{"OPENER", opener_link()}, {"FOLLOWUP", followup_link()}},
      .phenomena = codi::builtin_phenomena(),
      .seeds = codi::SeedPool({{"seed-1", "colors"}, {"seed-2", "weather"}}),
      .contexts = {{"ctx-1", "The sky is blue."}},
      .model_id = "stub-model",
      .context_role = Role("CONTEXT"),
      .n_target = 1,
      .master_seed = 7,
      .rejection = {0},
      .max_attempts = 0,
  };
}

ScriptedTeacher::Script two_step_script() {
  return {
      {{"OPENER", 0},
       "Let me think about the passage first.\n"
       "QUESTION: What color is the sky?\n"
       "ANSWER: It is a deep blue color."},
      {{"FOLLOWUP", 1},
       "QUESTION: Why does it look that way?\n"
       "ANSWER: Sunlight scatters off the air."},
  };
}

// Records every prompt it sees, then delegates to an inner script.
class RecordingTeacher : public codi::Teacher {
 public:
  explicit RecordingTeacher(ScriptedTeacher::Script script)
      : inner_(std::move(script), {}) {}

  codi::TurnResponse generate(const std::string& prompt, const std::string& link_id,
                              std::uint64_t turn_index) override {
    prompts.push_back(prompt);
    return inner_.generate(prompt, link_id, turn_index);
  }

  std::vector<std::string> prompts;

 private:
  ScriptedTeacher inner_;
};

// Fails the first call for every (link, turn) key with a retryable error.
class FlakyTeacher : public codi::Teacher {
 public:
  explicit FlakyTeacher(ScriptedTeacher::Script script)
      : inner_(std::move(script), {}) {}

  codi::TurnResponse generate(const std::string& prompt, const std::string& link_id,
                              std::uint64_t turn_index) override {
    if (failed_once_.insert({link_id, turn_index}).second) {
      throw codi::Error(ErrorCode::ServerError, "transient failure");
    }
    return inner_.generate(prompt, link_id, turn_index);
  }

 private:
  ScriptedTeacher inner_;
  std::set<std::pair<std::string, std::uint64_t>> failed_once_;
};

// Throws a retryable error whenever the prompt carries the poison token;
// otherwise answers from the script.
class PoisonTeacher : public codi::Teacher {
 public:
  explicit PoisonTeacher(ScriptedTeacher::Script script)
      : inner_(std::move(script), {}) {}

  codi::TurnResponse generate(const std::string& prompt, const std::string& link_id,
                              std::uint64_t turn_index) override {
    if (prompt.find("POISON") != std::string::npos) {
      throw codi::Error(ErrorCode::ServerError, "upstream rejected the prompt");
    }
    return inner_.generate(prompt, link_id, turn_index);
  }

 private:
  ScriptedTeacher inner_;
};

// One-step job over three contexts where contexts[0] poisons the teacher.
SynthesisJob poison_job(std::uint64_t n_target, std::uint64_t max_attempts) {
  LinkDef opener = opener_link();
  return SynthesisJob{
      .graph = codi::ConversationGraph("START", {"OPENER"},
                                       {{"START", "OPENER", 1.0},
                                        {"OPENER", "OPENER", 1.0}}),
      .length = codi::FixedLength{1},
      .links = {{"OPENER", opener}},
      .phenomena = codi::builtin_phenomena(),
      .seeds = codi::SeedPool({codi::SeedRecord{"seed-1", "colors"}}),
      .contexts = {{"ctx-poison", "POISON paragraph"},
                   {"ctx-a", "A clean paragraph about tides."},
                   {"ctx-b", "Another clean paragraph about storms."}},
      .model_id = "stub-model",
      .context_role = Role("CONTEXT"),
      .n_target = n_target,
      .master_seed = 11,
      .rejection = {0},
      .max_attempts = max_attempts,
  };
}

ScriptedTeacher::Script one_step_script() {
  return {{{"OPENER", 0},
           "QUESTION: What is this passage about?\n"
           "ANSWER: It describes the scene in detail."}};
}

}  // namespace

TEST_CASE("extract_turns splits a completion on its markers") {
  const std::vector<Turn> turns = codi::extract_turns(
      "Reasoning about the passage comes first and is discarded.\n"
      "QUESTION: Who won?\nANSWER: The north team.",
      qa_extraction());
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].role.name() == "USER");
  CHECK(turns[0].text == "Who won?");
  CHECK(turns[1].role.name() == "AGENT");
  CHECK(turns[1].text == "The north team.");
}

TEST_CASE("extract_turns uses the last marker occurrence") {
  // A draft QA pair appears first; only the final one counts.
  const std::vector<Turn> turns = codi::extract_turns(
      "QUESTION: draft? ANSWER: draft answer. "
      "QUESTION: final? ANSWER: final answer.",
      qa_extraction());
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].text == "final?");
  CHECK(turns[1].text == "final answer.");
}

TEST_CASE("extract_turns trims surrounding whitespace") {
  const std::vector<Turn> turns = codi::extract_turns(
      "QUESTION:\n\t  Who?  \nANSWER:  Yes.\r\n", qa_extraction());
  CHECK(turns[0].text == "Who?");
  CHECK(turns[1].text == "Yes.");
}

TEST_CASE("extract_turns reports missing markers and empty segments") {
  try {
    (void)codi::extract_turns("QUESTION: Who? but no answer", qa_extraction());
    FAIL("expected MarkerMissing");
  } catch (const codi::Error& e) {
    CHECK(e.code() == ErrorCode::MarkerMissing);
  }

  try {
    (void)codi::extract_turns("QUESTION: ANSWER: something", qa_extraction());
    FAIL("expected EmptyExtraction");
  } catch (const codi::Error& e) {
    CHECK(e.code() == ErrorCode::EmptyExtraction);
  }

  try {
    (void)codi::extract_turns("whatever", {});
    FAIL("expected InvalidArgument");
  } catch (const codi::Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("synthesize_conversation assembles a validated record") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher teacher(two_step_script(), {});
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);

  REQUIRE(outcome.ok());
  CHECK(outcome.teacher_calls == 2);
  const auto& record = std::get<DatasetRecord>(outcome.result);
  CHECK(record.conversation_id == "conv-00000000");
  CHECK(record.context_id == "ctx-1");
  CHECK(record.chain == std::vector<std::string>{"OPENER", "FOLLOWUP"});
  CHECK(record.rng_seed == codi::derive_seed(7, 0));
  CHECK(record.teacher_meta.model_id == "stub-model");
  CHECK(record.teacher_meta.total_completion_tokens == 0);  // stub reports none

  // Context turn first, then two QA pairs.
  REQUIRE(record.conversation.turns.size() == 5);
  const auto& turns = record.conversation.turns;
  CHECK(turns[0].role.name() == "CONTEXT");
  CHECK(turns[0].text == "The sky is blue.");
  CHECK_FALSE(turns[0].provenance.has_value());
  CHECK(turns[1].role.name() == "USER");
  CHECK(turns[1].text == "What color is the sky?");
  CHECK(turns[2].role.name() == "AGENT");
  CHECK(turns[2].text == "It is a deep blue color.");
  CHECK(turns[3].text == "Why does it look that way?");
  CHECK(turns[4].text == "Sunlight scatters off the air.");

  // Provenance: link ids, raw completion length, seed only where used.
  REQUIRE(turns[1].provenance.has_value());
  CHECK(turns[1].provenance->link_id == "OPENER");
  CHECK(turns[1].provenance->seed_id.has_value());
  CHECK(turns[1].provenance->teacher_raw_length ==
        two_step_script().at({"OPENER", 0}).size());
  REQUIRE(turns[3].provenance.has_value());
  CHECK(turns[3].provenance->link_id == "FOLLOWUP");
  CHECK_FALSE(turns[3].provenance->seed_id.has_value());

  // The serialized text round-trips to the same content.
  const std::string text = codi::serialize(record.conversation);
  CHECK(codi::same_content(codi::parse(text), record.conversation));
}

TEST_CASE("records serialize to JSONL deterministically and round-trip") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher teacher_a(two_step_script(), {});
  ScriptedTeacher teacher_b(two_step_script(), {});
  const SynthesisOutcome a =
      codi::synthesize_conversation(job, teacher_a, job.contexts[0], 0);
  const SynthesisOutcome b =
      codi::synthesize_conversation(job, teacher_b, job.contexts[0], 0);
  REQUIRE(a.ok());
  REQUIRE(b.ok());

  const std::string line_a = codi::record_to_jsonl(std::get<DatasetRecord>(a.result));
  const std::string line_b = codi::record_to_jsonl(std::get<DatasetRecord>(b.result));
  CHECK(line_a == line_b);
  CHECK(line_a.back() == '\n');

  const nlohmann::json doc = nlohmann::json::parse(line_a);
  CHECK(doc.at("schema") == "codi/1");
  CHECK(doc.at("text") ==
        codi::serialize(std::get<DatasetRecord>(a.result).conversation));

  const DatasetRecord parsed = codi::record_from_jsonl(line_a);
  const auto& original = std::get<DatasetRecord>(a.result);
  CHECK(parsed.conversation_id == original.conversation_id);
  CHECK(parsed.context_id == original.context_id);
  CHECK(parsed.chain == original.chain);
  CHECK(parsed.rng_seed == original.rng_seed);
  CHECK(parsed.teacher_meta.model_id == original.teacher_meta.model_id);
  CHECK(codi::same_content(parsed.conversation, original.conversation));
  REQUIRE(parsed.conversation.turns[1].provenance.has_value());
  CHECK(parsed.conversation.turns[1].provenance->link_id == "OPENER");
  CHECK(parsed.conversation.turns[1].provenance ==
        original.conversation.turns[1].provenance);
}

TEST_CASE("record_from_jsonl rejects malformed lines") {
  const auto expect_schema_error = [](const std::string& line) {
    try {
      (void)codi::record_from_jsonl(line);
      FAIL("expected SchemaError");
    } catch (const codi::Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
    }
  };
  expect_schema_error("not json at all");
  expect_schema_error(R"({"schema":"codi/9"})");
  expect_schema_error(R"({"schema":"codi/1","conversation_id":"c"})");
}

TEST_CASE("prompt history covers the dialogue but not the context turn") {
  const SynthesisJob job = two_step_job();
  RecordingTeacher teacher(two_step_script());
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);
  REQUIRE(outcome.ok());
  REQUIRE(teacher.prompts.size() == 2);

  // Step 0: template filled with seed and context, no history placeholder.
  CHECK(teacher.prompts[0].find("Passage: The sky is blue.") != std::string::npos);
  CHECK(teacher.prompts[0].find("{{") == std::string::npos);

  // Step 1: history is the serialized QA pair; the context turn is absent.
  const std::string expected_history =
      "[USER] What color is the sky? [/USER]\n"
      "[AGENT] It is a deep blue color. [/AGENT]";
  CHECK(teacher.prompts[1].rfind(expected_history + "\nContinue", 0) == 0);
  CHECK(teacher.prompts[1].find("[CONTEXT]") == std::string::npos);
}

TEST_CASE("per-turn retries recover from transient teacher failures") {
  SynthesisJob job = two_step_job();
  job.rejection.per_turn_retries = 1;
  FlakyTeacher teacher(two_step_script());
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);
  REQUIRE(outcome.ok());
  // Each of the two steps burns one failed call plus one good call.
  CHECK(outcome.teacher_calls == 4);
}

TEST_CASE("exhausted scripts reject the conversation with ScriptExhausted") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher teacher({{{"OPENER", 0}, two_step_script().at({"OPENER", 0})}}, {});
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);
  REQUIRE_FALSE(outcome.ok());
  CHECK(outcome.teacher_calls == 2);
  const auto& rejection = std::get<Rejection>(outcome.result);
  CHECK(rejection.reason == ErrorCode::ScriptExhausted);
  CHECK(rejection.conversation_index == 0);
}

TEST_CASE("non-retryable teacher errors propagate as exceptions") {
  struct BrokenTeacher : codi::Teacher {
    codi::TurnResponse generate(const std::string&, const std::string&,
                                std::uint64_t) override {
      throw codi::Error(ErrorCode::ConfigError, "bad teacher configuration");
    }
  };
  const SynthesisJob job = two_step_job();
  BrokenTeacher teacher;
  CHECK_THROWS_AS(
      (void)codi::synthesize_conversation(job, teacher, job.contexts[0], 0),
      codi::Error);
}

TEST_CASE("completions that embed declared tags are rejected as collisions") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher::Script script = two_step_script();
  script[{"FOLLOWUP", 1}] =
      "QUESTION: What about [/USER] markers?\nANSWER: They break framing.";
  ScriptedTeacher teacher(std::move(script), {});
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);
  REQUIRE_FALSE(outcome.ok());
  CHECK(std::get<Rejection>(outcome.result).reason == ErrorCode::TagCollision);
}

TEST_CASE("contexts that embed the context tag are rejected before any call") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher teacher(two_step_script(), {});
  const codi::ContextRecord poisoned{"ctx-bad", "text with [/CONTEXT] inside"};
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, poisoned, 0);
  REQUIRE_FALSE(outcome.ok());
  CHECK(outcome.teacher_calls == 0);
  CHECK(std::get<Rejection>(outcome.result).reason == ErrorCode::TagCollision);
}

TEST_CASE("near-echo turns of the same role are rejected as duplicates") {
  const SynthesisJob job = two_step_job();
  ScriptedTeacher::Script script = two_step_script();
  // Normalizes to the same tokens as the opener question ("the"/punctuation
  // differences vanish), while the agent answer stays distinct.
  script[{"FOLLOWUP", 1}] =
      "QUESTION: What color is sky!\nANSWER: A different answer entirely.";
  ScriptedTeacher teacher(std::move(script), {});
  const SynthesisOutcome outcome =
      codi::synthesize_conversation(job, teacher, job.contexts[0], 0);
  REQUIRE_FALSE(outcome.ok());
  CHECK(std::get<Rejection>(outcome.result).reason == ErrorCode::DuplicateTurn);
}

TEST_CASE("synthesize_dataset spends its budget deterministically") {
  // Three contexts cycled round-robin with contexts[0] poisoned: indexes
  // congruent to 0 mod 3 fail. Batching goes 10 -> 4 -> 1.
  const SynthesisJob job = poison_job(10, 40);
  PoisonTeacher teacher(one_step_script());
  const std::string out = temp_path("poison.jsonl");
  const codi::SynthesisManifest manifest =
      codi::synthesize_dataset(job, teacher, out);

  CHECK(manifest.requested == 10);
  CHECK(manifest.produced == 10);
  CHECK(manifest.attempted == 15);
  CHECK(manifest.teacher_calls == 15);
  REQUIRE(manifest.rejections.contains("ServerError"));
  CHECK(manifest.rejections.at("ServerError") == 5);
  CHECK(manifest.complete());

  const std::vector<std::string> lines = codi::split_lines(codi::read_file(out));
  REQUIRE(lines.size() == 10);
  const std::vector<std::string> expected_ids{
      "conv-00000001", "conv-00000002", "conv-00000004", "conv-00000005",
      "conv-00000007", "conv-00000008", "conv-00000010", "conv-00000011",
      "conv-00000013", "conv-00000014"};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const DatasetRecord record = codi::record_from_jsonl(lines[i]);
    CHECK(record.conversation_id == expected_ids[i]);
    const std::uint64_t index = std::stoull(record.conversation_id.substr(5));
    CHECK(record.context_id == job.contexts[index % 3].context_id);
    CHECK(record.rng_seed == codi::derive_seed(job.master_seed, index));
  }

  // Manifest sidecar mirrors the returned manifest.
  const nlohmann::json sidecar =
      nlohmann::json::parse(codi::read_file(out + ".manifest.json"));
  CHECK(sidecar.at("produced") == 10);
  CHECK(sidecar.at("attempted") == 15);
  CHECK(sidecar.at("complete") == true);
  CHECK(sidecar.at("rejections").at("ServerError") == 5);
}

TEST_CASE("worker count changes nothing about the output bytes") {
  const std::string serial_path = temp_path("serial.jsonl");
  const std::string threaded_path = temp_path("threaded.jsonl");

  {
    PoisonTeacher teacher(one_step_script());
    (void)codi::synthesize_dataset(poison_job(10, 40), teacher, serial_path, 1);
  }
  {
    PoisonTeacher teacher(one_step_script());
    (void)codi::synthesize_dataset(poison_job(10, 40), teacher, threaded_path, 8);
  }
  CHECK(codi::read_file(serial_path) == codi::read_file(threaded_path));
  CHECK(codi::read_file(serial_path + ".manifest.json")
            .find("\"attempted\": 15") != std::string::npos);
}

TEST_CASE("an exhausted budget stops the run with produced < requested") {
  SynthesisJob job = poison_job(2, 8);
  job.contexts = {{"ctx-poison", "POISON everywhere"}};  // every attempt fails
  PoisonTeacher teacher(one_step_script());
  const std::string out = temp_path("exhausted.jsonl");
  const codi::SynthesisManifest manifest =
      codi::synthesize_dataset(job, teacher, out);
  CHECK(manifest.produced == 0);
  CHECK(manifest.attempted == 8);
  CHECK_FALSE(manifest.complete());
  CHECK(codi::read_file(out).empty());
}

TEST_CASE("the default budget is four attempts per requested conversation") {
  SynthesisJob job = poison_job(3, 0);  // max_attempts unset
  job.contexts = {{"ctx-poison", "POISON everywhere"}};
  PoisonTeacher teacher(one_step_script());
  const std::string out = temp_path("default_budget.jsonl");
  const codi::SynthesisManifest manifest =
      codi::synthesize_dataset(job, teacher, out);
  CHECK(manifest.produced == 0);
  CHECK(manifest.attempted == 12);
}

TEST_CASE("check_job validates the whole configuration up front") {
  const auto expect_code = [](SynthesisJob job, ErrorCode code) {
    try {
      codi::check_job(job);
      FAIL("expected a codi::Error");
    } catch (const codi::Error& e) {
      CHECK(e.code() == code);
    }
  };

  CHECK_NOTHROW(codi::check_job(two_step_job()));

  SynthesisJob zero_target = two_step_job();
  zero_target.n_target = 0;
  expect_code(std::move(zero_target), ErrorCode::ConfigError);

  SynthesisJob negative_retries = two_step_job();
  negative_retries.rejection.per_turn_retries = -1;
  expect_code(std::move(negative_retries), ErrorCode::ConfigError);

  SynthesisJob bad_graph = two_step_job();
  bad_graph.graph = codi::ConversationGraph(
      "START", {"OPENER"}, {{"START", "OPENER", 1.0}});  // OPENER dead-ends
  expect_code(std::move(bad_graph), ErrorCode::InvalidGraph);

  SynthesisJob bad_length = two_step_job();
  bad_length.length = codi::FixedLength{0};
  expect_code(std::move(bad_length), ErrorCode::ConfigError);

  SynthesisJob no_contexts = two_step_job();
  no_contexts.contexts.clear();
  expect_code(std::move(no_contexts), ErrorCode::MissingContext);

  SynthesisJob dup_contexts = two_step_job();
  dup_contexts.contexts = {{"ctx", "a"}, {"ctx", "b"}};
  expect_code(std::move(dup_contexts), ErrorCode::ConfigError);

  SynthesisJob missing_link = two_step_job();
  missing_link.links.erase("FOLLOWUP");
  expect_code(std::move(missing_link), ErrorCode::ConfigError);

  SynthesisJob ghost_phenomenon = two_step_job();
  ghost_phenomenon.links.at("FOLLOWUP").phenomena_pool = {{"ghost", 0.2}};
  expect_code(std::move(ghost_phenomenon), ErrorCode::UnknownPhenomenon);

  SynthesisJob no_seeds = two_step_job();
  no_seeds.seeds = codi::SeedPool();
  expect_code(std::move(no_seeds), ErrorCode::MissingSeed);
}

TEST_CASE("manifest_to_json lists every counter") {
  codi::SynthesisManifest manifest;
  manifest.requested = 4;
  manifest.produced = 3;
  manifest.attempted = 6;
  manifest.rejections["TagCollision"] = 3;
  manifest.teacher_calls = 9;
  const nlohmann::json doc = nlohmann::json::parse(codi::manifest_to_json(manifest));
  CHECK(doc.at("requested") == 4);
  CHECK(doc.at("produced") == 3);
  CHECK(doc.at("attempted") == 6);
  CHECK(doc.at("teacher_calls") == 9);
  CHECK(doc.at("complete") == false);
  CHECK(doc.at("rejections").at("TagCollision") == 3);
  CHECK(doc.contains("wall_seconds"));
}

TEST_CASE("conversation ids are zero-padded and stable") {
  CHECK(codi::conversation_id_for(0) == "conv-00000000");
  CHECK(codi::conversation_id_for(42) == "conv-00000042");
  CHECK(codi::conversation_id_for(12345678) == "conv-12345678");
}
