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

#include "links.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace codi {

namespace {

constexpr std::string_view kPlaceholderNames[] = {"context", "history", "seed",
                                                  "phenomenon"};

bool known_placeholder(std::string_view name) {
  return std::find(std::begin(kPlaceholderNames), std::end(kPlaceholderNames),
                   name) != std::end(kPlaceholderNames);
}

/// Finds the next "{{name}}" occurrence at or after `from`. Returns npos when
/// there is none. Braces that do not wrap a well-formed name are literal text.
std::size_t find_placeholder(std::string_view text, std::size_t from,
                             std::string* name, std::size_t* length) {
  for (std::size_t pos = text.find("{{", from); pos != std::string_view::npos;
       pos = text.find("{{", pos + 1)) {
    const std::size_t end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) return std::string_view::npos;
    const std::string_view inner = text.substr(pos + 2, end - pos - 2);
    if (!inner.empty() &&
        std::all_of(inner.begin(), inner.end(),
                    [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; })) {
      *name = std::string(inner);
      *length = end + 2 - pos;
      return pos;
    }
  }
  return std::string_view::npos;
}

}  // namespace

SeedPool::SeedPool(std::vector<SeedRecord> records) : records_(std::move(records)) {
  std::set<std::string> ids;
  for (const SeedRecord& record : records_) {
    if (!ids.insert(record.seed_id).second) {
      throw Error(ErrorCode::ConfigError, "duplicate seed_id '" + record.seed_id + "'");
    }
  }
}

const SeedRecord& SeedPool::sample(Rng& rng) const {
  if (records_.empty()) {
    throw Error(ErrorCode::MissingSeed, "seed pool is empty");
  }
  return records_[rng.next_below(records_.size())];
}

void check_link(const LinkDef& link) {
  if (link.id.empty()) {
    throw Error(ErrorCode::ConfigError, "link id must be non-empty");
  }
  if (link.extraction.empty()) {
    throw Error(ErrorCode::ConfigError,
                "link '" + link.id + "' has no extraction rules");
  }
  std::set<std::string> markers;
  for (const ExtractionRule& rule : link.extraction) {
    if (rule.marker.empty()) {
      throw Error(ErrorCode::ConfigError,
                  "link '" + link.id + "' has an empty extraction marker");
    }
    if (!markers.insert(rule.marker).second) {
      throw Error(ErrorCode::ConfigError,
                  "link '" + link.id + "' repeats marker '" + rule.marker + "'");
    }
  }

  double pool_sum = 0.0;
  std::set<std::string> pool_ids;
  for (const auto& [id, probability] : link.phenomena_pool) {
    if (!std::isfinite(probability) || probability < 0.0) {
      throw Error(ErrorCode::ConfigError,
                  "link '" + link.id + "' phenomenon '" + id +
                      "' has a negative probability");
    }
    if (!pool_ids.insert(id).second) {
      throw Error(ErrorCode::ConfigError,
                  "link '" + link.id + "' repeats phenomenon '" + id + "'");
    }
    pool_sum += probability;
  }
  if (pool_sum > 1.0 + 1e-9) {
    throw Error(ErrorCode::ConfigError,
                "link '" + link.id + "' phenomenon probabilities sum to " +
                    std::to_string(pool_sum) + " (> 1)");
  }

  std::size_t pos = 0;
  std::string name;
  std::size_t length = 0;
  while ((pos = find_placeholder(link.prompt_template, pos, &name, &length)) !=
         std::string_view::npos) {
    if (!known_placeholder(name)) {
      throw Error(ErrorCode::ConfigError,
                  "link '" + link.id + "' uses unknown placeholder {{" + name + "}}");
    }
    pos += length;
  }
}

std::optional<PhenomenonDef> sample_phenomenon(const LinkDef& link,
                                               const PhenomenonRegistry& registry,
                                               Rng& rng) {
  for (const auto& [id, probability] : link.phenomena_pool) {
    (void)probability;
    if (!registry.contains(id)) {
      throw Error(ErrorCode::UnknownPhenomenon,
                  "phenomenon '" + id + "' is not registered");
    }
  }
  if (link.phenomena_pool.empty()) return std::nullopt;

  const double u = rng.next_double();
  double cumulative = 0.0;
  for (const auto& [id, probability] : link.phenomena_pool) {
    cumulative += probability;
    if (u < cumulative) return registry.at(id);
  }
  return std::nullopt;  // remaining mass: no phenomenon
}

PromptInstance instantiate(const LinkDef& link, const Conversation& history,
                           const std::optional<std::string>& context,
                           const std::optional<SeedRecord>& seed,
                           const std::optional<PhenomenonDef>& phenomenon) {
  if (link.requires_context && !context.has_value()) {
    throw Error(ErrorCode::MissingContext,
                "link '" + link.id + "' requires a context");
  }
  if (link.requires_seed && !seed.has_value()) {
    throw Error(ErrorCode::MissingSeed,
                "link '" + link.id + "' requires a seed record");
  }

  const std::string history_text = serialize(history);
  bool used_phenomenon_placeholder = false;

  std::string out;
  out.reserve(link.prompt_template.size());
  std::size_t pos = 0;
  std::string name;
  std::size_t length = 0;
  std::size_t next;
  while ((next = find_placeholder(link.prompt_template, pos, &name, &length)) !=
         std::string_view::npos) {
    out.append(link.prompt_template, pos, next - pos);
    if (name == "history") {
      out += history_text;
    } else if (name == "context") {
      if (!context.has_value()) {
        throw Error(ErrorCode::UnresolvedPlaceholder,
                    "{{context}} in link '" + link.id + "' but no context given");
      }
      out += *context;
    } else if (name == "seed") {
      if (!seed.has_value()) {
        throw Error(ErrorCode::UnresolvedPlaceholder,
                    "{{seed}} in link '" + link.id + "' but no seed given");
      }
      out += seed->text;
    } else if (name == "phenomenon") {
      used_phenomenon_placeholder = true;
      if (phenomenon.has_value()) out += phenomenon->instruction;
    } else {
      throw Error(ErrorCode::UnresolvedPlaceholder,
                  "unknown placeholder {{" + name + "}} in link '" + link.id + "'");
    }
    pos = next + length;
  }
  out.append(link.prompt_template, pos, std::string::npos);

  if (phenomenon.has_value() && !used_phenomenon_placeholder) {
    out += "\nConstraint: " + phenomenon->instruction;
  }

  PromptInstance instance;
  instance.text = std::move(out);
  instance.provenance.link_id = link.id;
  if (seed.has_value()) instance.provenance.seed_id = seed->seed_id;
  if (phenomenon.has_value()) instance.provenance.phenomenon_id = phenomenon->id;
  return instance;
}

}  // namespace codi
