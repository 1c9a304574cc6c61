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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace codi {

// Role-tagged conversation text. One turn renders as
//
//   [ROLE] text [/ROLE]
//
// with exactly one space inside each side, and turns joined by a separator
// (default "\n"). Any number of roles is allowed; a context document is just
// an ordinary first turn under a configurable role name.

/// Conversational role. Names are 1-32 chars, uppercase, matching
/// [A-Z][A-Z0-9_]{0,31}. Equality is byte equality of the name.
class Role {
 public:
  /// Throws Error(InvalidArgument) if `name` does not match the pattern.
  explicit Role(std::string name);

  const std::string& name() const noexcept { return name_; }
  std::string open_tag() const { return "[" + name_ + "]"; }
  std::string close_tag() const { return "[/" + name_ + "]"; }

  friend bool operator==(const Role&, const Role&) = default;
  auto operator<=>(const Role& other) const { return name_ <=> other.name_; }

  static bool valid_name(std::string_view name) noexcept;

 private:
  std::string name_;
};

/// Synthesis provenance attached to generated turns. Never serialized into
/// training text; lives only in structured dataset records.
struct TurnProvenance {
  std::string link_id;
  std::optional<std::string> seed_id;
  std::optional<std::string> phenomenon_id;
  std::uint64_t teacher_raw_length = 0;  // bytes of the raw completion

  friend bool operator==(const TurnProvenance&, const TurnProvenance&) = default;
};

struct Turn {
  Role role;
  std::string text;
  std::optional<TurnProvenance> provenance;

  Turn(Role r, std::string t) : role(std::move(r)), text(std::move(t)) {}
  Turn(Role r, std::string t, TurnProvenance p)
      : role(std::move(r)), text(std::move(t)), provenance(std::move(p)) {}
};

/// (role, text) equality; provenance is metadata and does not participate.
bool same_content(const Turn& a, const Turn& b);

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

bool same_content(const Conversation& a, const Conversation& b);

struct SerializeOptions {
  std::string turn_separator = "\n";
};

/// Raised when a turn text contains the opening or closing tag of a role
/// declared in the conversation, which would make the rendering ambiguous.
class TagCollisionError : public Error {
 public:
  TagCollisionError(std::size_t turn_index, std::string offending);

  std::size_t turn_index() const noexcept { return turn_index_; }
  const std::string& offending() const noexcept { return offending_; }

 private:
  std::size_t turn_index_;
  std::string offending_;
};

/// Structured parse failure. code() is one of MalformedTag, UnbalancedTurn,
/// TrailingGarbage; offset() is the byte position in the input.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, std::string role,
             const std::string& detail);

  std::size_t offset() const noexcept { return offset_; }
  const std::string& role() const noexcept { return role_; }

 private:
  std::size_t offset_;
  std::string role_;
};

/// Renders the conversation as tagged text. Throws TagCollisionError if any
/// turn text embeds a declared role's tag. An empty conversation renders as "".
std::string serialize(const Conversation& conversation,
                      const SerializeOptions& opts = {});

/// Inverse of serialize for tag-collision-free conversations. Turns may be
/// separated by any run of ASCII whitespace; leading/trailing whitespace is
/// ignored. Parsed turns carry no provenance. Throws ParseError.
Conversation parse(std::string_view text);

/// True if `text` contains the open or close tag of any role in
/// `declared_roles` (first match reported through `offending` when non-null).
bool has_tag_collision(std::string_view text,
                       const std::vector<Role>& declared_roles,
                       std::string* offending = nullptr);

/// Roles appearing in the conversation, deduplicated, in first-seen order.
std::vector<Role> declared_roles(const Conversation& conversation);

/// Enforces the context placement rule: at most one turn with `context_role`,
/// and if present it must be the first turn. Throws Error(InvalidArgument).
void check_context_placement(const Conversation& conversation,
                             const Role& context_role);

}  // namespace codi
