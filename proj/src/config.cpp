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

#include "config.hpp"

#include <set>

#include <json.hpp>

#include "io.hpp"

namespace codi {
namespace {

using nlohmann::json;

void check_keys(const json& object, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error(ErrorCode::ConfigError, where + ": unknown key \"" + key + "\"");
    }
  }
}

json parse_json_file(const std::string& path) {
  const std::string raw = read_file(path);
  try {
    return json::parse(raw);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError,
                path + ": invalid JSON: " + std::string(e.what()));
  }
}

LengthSpec parse_length(const json& spec, const std::string& where) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw Error(ErrorCode::ConfigError, where + ": length needs a \"kind\"");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "fixed") {
    check_keys(spec, {"kind", "n"}, where + ".length");
    return FixedLength{spec.at("n").get<int>()};
  }
  if (kind == "uniform") {
    check_keys(spec, {"kind", "min", "max"}, where + ".length");
    return UniformLength{spec.at("min").get<int>(), spec.at("max").get<int>()};
  }
  if (kind == "histogram") {
    check_keys(spec, {"kind", "bins"}, where + ".length");
    HistogramLength histogram;
    for (const json& bin : spec.at("bins")) {
      check_keys(bin, {"n", "p"}, where + ".length.bins");
      histogram.bins.emplace_back(bin.at("n").get<int>(), bin.at("p").get<double>());
    }
    return histogram;
  }
  throw Error(ErrorCode::ConfigError,
              where + ": unknown length kind \"" + kind + "\"");
}

LinkDef parse_link(const json& jl, const std::string& where) {
  check_keys(jl,
             {"id", "prompt_template", "requires_context", "requires_seed",
              "phenomena_pool", "extraction"},
             where);
  LinkDef link;
  link.id = jl.at("id").get<std::string>();
  link.prompt_template = jl.at("prompt_template").get<std::string>();
  link.requires_context = jl.value("requires_context", false);
  link.requires_seed = jl.value("requires_seed", false);
  if (jl.contains("phenomena_pool")) {
    for (const json& entry : jl["phenomena_pool"]) {
      check_keys(entry, {"id", "p"}, where + ".phenomena_pool");
      link.phenomena_pool.emplace_back(entry.at("id").get<std::string>(),
                                       entry.at("p").get<double>());
    }
  }
  for (const json& rule : jl.at("extraction")) {
    check_keys(rule, {"role", "marker"}, where + ".extraction");
    link.extraction.push_back(ExtractionRule{
        Role(rule.at("role").get<std::string>()),
        rule.at("marker").get<std::string>()});
  }
  check_link(link);
  return link;
}

RetryPolicy parse_retry(const json& jr, const std::string& where) {
  check_keys(jr, {"max_retries", "base_backoff_ms", "factor", "jitter"}, where);
  RetryPolicy retry;
  retry.max_retries = jr.value("max_retries", retry.max_retries);
  retry.base_backoff =
      std::chrono::milliseconds(jr.value("base_backoff_ms",
                                         retry.base_backoff.count()));
  retry.factor = jr.value("factor", retry.factor);
  retry.jitter_fraction = jr.value("jitter", retry.jitter_fraction);
  return retry;
}

TeacherConfig parse_teacher(const json& jt, const std::string& where) {
  check_keys(jt,
             {"model", "temperature", "max_output_tokens", "timeout_ms",
              "max_in_flight", "retry"},
             where);
  TeacherConfig teacher;
  teacher.model = jt.value("model", teacher.model);
  teacher.temperature = jt.value("temperature", teacher.temperature);
  teacher.max_output_tokens = jt.value("max_output_tokens", teacher.max_output_tokens);
  teacher.timeout = std::chrono::milliseconds(jt.value("timeout_ms",
                                                       teacher.timeout.count()));
  teacher.max_in_flight = jt.value("max_in_flight", teacher.max_in_flight);
  if (jt.contains("retry")) {
    teacher.retry = parse_retry(jt["retry"], where + ".retry");
  }
  return teacher;
}

}  // namespace

PhenomenonRegistry builtin_phenomena() {
  // Coreference is the canonical cross-turn phenomenon; the other three are
  // companions in the same spirit. Configs can override or extend all four.
  return PhenomenonRegistry{
      {"coreference",
       {"coreference",
        "Refer back to an entity from an earlier turn with a pronoun or other "
        "referring expression instead of repeating its name."}},
      {"ellipsis",
       {"ellipsis",
        "Phrase this turn as a short-form follow-up that omits words "
        "recoverable from the previous turn."}},
      {"topic_shift",
       {"topic_shift",
        "Steer the conversation to a different aspect of the context than the "
        "previous turn discussed."}},
      {"clarification",
       {"clarification",
        "Ask for a clarification of the previous turn instead of introducing "
        "new content."}},
  };
}

ConfigDocument load_config_document(const std::string& path) {
  const json doc = parse_json_file(path);
  if (!doc.is_object()) {
    throw Error(ErrorCode::ConfigError, path + ": config must be a JSON object");
  }
  try {
    check_keys(doc,
               {"start", "vertices", "edges", "length", "links", "phenomena",
                "context_role", "teacher"},
               path);
    ConfigDocument out;
    out.start = doc.at("start").get<std::string>();
    out.vertices = doc.at("vertices").get<std::vector<std::string>>();
    for (const json& je : doc.at("edges")) {
      check_keys(je, {"from", "to", "w"}, path + ".edges");
      out.edges.push_back(Edge{je.at("from").get<std::string>(),
                               je.at("to").get<std::string>(),
                               je.at("w").get<double>()});
    }
    if (doc.contains("length")) {
      out.length = parse_length(doc["length"], path);
      check_length_spec(out.length);
    }
    out.phenomena = builtin_phenomena();
    if (doc.contains("phenomena")) {
      for (const json& jp : doc["phenomena"]) {
        check_keys(jp, {"id", "instruction"}, path + ".phenomena");
        PhenomenonDef def{jp.at("id").get<std::string>(),
                          jp.at("instruction").get<std::string>()};
        if (def.instruction.empty()) {
          throw Error(ErrorCode::ConfigError,
                      path + ": phenomenon '" + def.id + "' has an empty instruction");
        }
        out.phenomena[def.id] = std::move(def);
      }
    }
    if (doc.contains("links")) {
      for (const json& jl : doc["links"]) {
        LinkDef link = parse_link(jl, path + ".links");
        if (out.links.contains(link.id)) {
          throw Error(ErrorCode::ConfigError,
                      path + ": duplicate link id '" + link.id + "'");
        }
        out.links.emplace(link.id, std::move(link));
      }
    }
    if (doc.contains("context_role")) {
      out.context_role = Role(doc["context_role"].get<std::string>());
    }
    if (doc.contains("teacher")) {
      out.teacher = parse_teacher(doc["teacher"], path + ".teacher");
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + std::string(e.what()));
  }
}

ConversationGraph build_graph(const ConfigDocument& document) {
  return ConversationGraph(document.start, document.vertices, document.edges);
}

std::vector<ContextRecord> load_contexts(const std::string& path) {
  std::vector<ContextRecord> out;
  std::set<std::string> ids;
  std::size_t line_number = 0;
  for (const std::string& line : split_lines(read_file(path))) {
    ++line_number;
    try {
      const json doc = json::parse(line);
      check_keys(doc, {"context_id", "text"}, path);
      ContextRecord record{doc.at("context_id").get<std::string>(),
                           doc.at("text").get<std::string>()};
      if (!ids.insert(record.context_id).second) {
        throw Error(ErrorCode::ConfigError,
                    path + ": duplicate context_id '" + record.context_id + "'");
      }
      out.push_back(std::move(record));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError,
                  path + " line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SeedRecord> load_seeds(const std::string& path) {
  std::vector<SeedRecord> out;
  std::size_t line_number = 0;
  for (const std::string& line : split_lines(read_file(path))) {
    ++line_number;
    try {
      const json doc = json::parse(line);
      check_keys(doc, {"seed_id", "text"}, path);
      out.push_back(SeedRecord{doc.at("seed_id").get<std::string>(),
                               doc.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError,
                  path + " line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

StubFixture load_stub_fixture(const std::string& path) {
  const json doc = parse_json_file(path);
  StubFixture fixture;
  try {
    check_keys(doc, {"script", "fallback"}, path);
    if (doc.contains("script")) {
      for (const json& entry : doc["script"]) {
        check_keys(entry, {"link_id", "turn_index", "text"}, path + ".script");
        fixture.script[{entry.at("link_id").get<std::string>(),
                        entry.at("turn_index").get<std::uint64_t>()}] =
            entry.at("text").get<std::string>();
      }
    }
    if (doc.contains("fallback")) {
      for (const json& entry : doc["fallback"]) {
        fixture.fallback.push_back(entry.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + std::string(e.what()));
  }
  return fixture;
}

WeightPolicy load_weight_policy(const std::string& path) {
  const json doc = parse_json_file(path);
  WeightPolicy policy;
  try {
    check_keys(doc, {"role_weights", "default_weight"}, path);
    if (doc.contains("role_weights")) {
      for (const auto& [role_name, weight] : doc["role_weights"].items()) {
        (void)Role(role_name);  // reject invalid role names at load time
        policy.role_weights[role_name] = weight.get<double>();
      }
    }
    policy.default_weight = doc.value("default_weight", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + std::string(e.what()));
  }
  for (const auto& [role_name, weight] : policy.role_weights) {
    (void)weight;
    (void)policy.weight_for(role_name);  // finite, >= 0
  }
  (void)policy.weight_for("");  // validates default_weight
  return policy;
}

namespace {

struct PathSegment {
  std::string key;   // may be empty for a bare "[]" segment
  bool array = false;
};

std::vector<PathSegment> parse_field_path(const std::string& field_path) {
  if (field_path.empty()) {
    throw Error(ErrorCode::SchemaError, "field path is empty");
  }
  std::vector<PathSegment> segments;
  std::size_t start = 0;
  while (start <= field_path.size()) {
    std::size_t end = field_path.find('.', start);
    if (end == std::string::npos) end = field_path.size();
    PathSegment segment;
    segment.key = field_path.substr(start, end - start);
    if (segment.key.size() >= 2 &&
        segment.key.compare(segment.key.size() - 2, 2, "[]") == 0) {
      segment.array = true;
      segment.key.erase(segment.key.size() - 2);
    }
    if (segment.key.empty() && !segment.array) {
      throw Error(ErrorCode::SchemaError,
                  "field path '" + field_path + "' has an empty segment");
    }
    segments.push_back(std::move(segment));
    if (end == field_path.size()) break;
    start = end + 1;
  }
  return segments;
}

void collect_strings(const json& node, const std::vector<PathSegment>& segments,
                     std::size_t depth, const std::string& field_path,
                     std::vector<std::string>& out) {
  if (depth == segments.size()) {
    if (!node.is_string()) {
      throw Error(ErrorCode::SchemaError,
                  "field path '" + field_path + "' selects a non-string value");
    }
    out.push_back(node.get<std::string>());
    return;
  }
  const PathSegment& segment = segments[depth];
  const json* value = &node;
  if (!segment.key.empty()) {
    if (!node.is_object() || !node.contains(segment.key)) {
      throw Error(ErrorCode::SchemaError,
                  "field '" + segment.key + "' missing on path '" + field_path + "'");
    }
    value = &node.at(segment.key);
  }
  if (segment.array) {
    if (!value->is_array()) {
      throw Error(ErrorCode::SchemaError,
                  "field '" + segment.key + "' on path '" + field_path +
                      "' is not an array");
    }
    for (const json& element : *value) {
      collect_strings(element, segments, depth + 1, field_path, out);
    }
  } else {
    collect_strings(*value, segments, depth + 1, field_path, out);
  }
}

}  // namespace

std::vector<std::string> extract_string_field(const std::string& path,
                                              const std::string& field_path) {
  const std::string raw = read_file(path);
  const std::vector<PathSegment> segments = parse_field_path(field_path);

  std::vector<json> documents;
  try {
    documents.push_back(json::parse(raw));
  } catch (const json::exception&) {
    // Not a single document; try JSON-lines.
    std::size_t line_number = 0;
    for (const std::string& line : split_lines(raw)) {
      ++line_number;
      try {
        documents.push_back(json::parse(line));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError,
                    path + " line " + std::to_string(line_number) +
                        ": not JSON: " + e.what());
      }
    }
  }

  std::vector<std::string> out;
  for (const json& doc : documents) {
    collect_strings(doc, segments, 0, field_path, out);
  }
  return out;
}

}  // namespace codi
