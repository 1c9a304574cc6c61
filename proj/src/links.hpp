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

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conversation.hpp"
#include "rng.hpp"

namespace codi {

// Conversation links: the per-turn blueprints a chain step resolves to. Each
// link owns a prompt template with {{context}}, {{history}}, {{seed}} and
// {{phenomenon}} placeholders, an optional pool of linguistic-phenomenon
// instructions, and marker-based rules for extracting role turns from the
// teacher completion.

struct PhenomenonDef {
  std::string id;
  std::string instruction;
};

struct SeedRecord {
  std::string seed_id;
  std::string text;
};

/// Uniform with-replacement sampling over unique-id seed records.
class SeedPool {
 public:
  SeedPool() = default;
  explicit SeedPool(std::vector<SeedRecord> records);

  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }
  const SeedRecord& sample(Rng& rng) const;

 private:
  std::vector<SeedRecord> records_;
};

struct ExtractionRule {
  Role role;
  std::string marker;
};

struct LinkDef {
  std::string id;
  std::string prompt_template;
  bool requires_context = false;
  bool requires_seed = false;
  std::vector<std::pair<std::string, double>> phenomena_pool;  // (id, probability)
  std::vector<ExtractionRule> extraction;
};

/// Checks LinkDef invariants: non-empty distinct markers, pool probabilities
/// summing to <= 1, and template placeholders restricted to the four known
/// names. Throws Error(ConfigError); call at load time, before any teacher
/// call is spent.
void check_link(const LinkDef& link);

using PhenomenonRegistry = std::map<std::string, PhenomenonDef>;

struct PromptProvenance {
  std::string link_id;
  std::optional<std::string> seed_id;
  std::optional<std::string> phenomenon_id;
};

struct PromptInstance {
  std::string text;
  PromptProvenance provenance;
};

/// Draws from the link's phenomenon pool: phenomenon i with its configured
/// probability, none with the remaining mass. Throws
/// Error(UnknownPhenomenon) for pool ids missing from the registry.
std::optional<PhenomenonDef> sample_phenomenon(const LinkDef& link,
                                               const PhenomenonRegistry& registry,
                                               Rng& rng);

/// Resolves the link's template into a concrete teacher prompt. {{history}}
/// renders through serialize(); a sampled phenomenon without a
/// {{phenomenon}} placeholder is appended as a final "Constraint: " line.
/// Substitution is single-pass: placeholder-looking text inside substituted
/// values stays literal.
PromptInstance instantiate(const LinkDef& link, const Conversation& history,
                           const std::optional<std::string>& context,
                           const std::optional<SeedRecord>& seed,
                           const std::optional<PhenomenonDef>& phenomenon);

}  // namespace codi
