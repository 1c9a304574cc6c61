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

#include "conversation.hpp"

#include <algorithm>

namespace codi {

namespace {

constexpr std::size_t kMaxRoleNameLength = 32;

bool is_role_start(char c) { return c >= 'A' && c <= 'Z'; }
bool is_role_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}
bool is_separator_char(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

}  // namespace

Role::Role(std::string name) : name_(std::move(name)) {
  if (!valid_name(name_)) {
    throw Error(ErrorCode::InvalidArgument,
                "invalid role name '" + name_ +
                    "' (expected [A-Z][A-Z0-9_]{0,31})");
  }
}

bool Role::valid_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > kMaxRoleNameLength) return false;
  if (!is_role_start(name[0])) return false;
  return std::all_of(name.begin() + 1, name.end(), is_role_char);
}

bool same_content(const Turn& a, const Turn& b) {
  return a.role == b.role && a.text == b.text;
}

bool same_content(const Conversation& a, const Conversation& b) {
  return std::equal(a.turns.begin(), a.turns.end(), b.turns.begin(),
                    b.turns.end(),
                    [](const Turn& x, const Turn& y) { return same_content(x, y); });
}

TagCollisionError::TagCollisionError(std::size_t turn_index, std::string offending)
    : Error(ErrorCode::TagCollision,
            "turn " + std::to_string(turn_index) + " contains '" + offending + "'"),
      turn_index_(turn_index),
      offending_(std::move(offending)) {}

ParseError::ParseError(ErrorCode code, std::size_t offset, std::string role,
                       const std::string& detail)
    : Error(code, detail + " at byte " + std::to_string(offset)),
      offset_(offset),
      role_(std::move(role)) {}

std::vector<Role> declared_roles(const Conversation& conversation) {
  std::vector<Role> roles;
  for (const Turn& turn : conversation.turns) {
    if (std::find(roles.begin(), roles.end(), turn.role) == roles.end()) {
      roles.push_back(turn.role);
    }
  }
  return roles;
}

bool has_tag_collision(std::string_view text,
                       const std::vector<Role>& roles,
                       std::string* offending) {
  for (const Role& role : roles) {
    for (const std::string& tag : {role.open_tag(), role.close_tag()}) {
      if (text.find(tag) != std::string_view::npos) {
        if (offending != nullptr) *offending = tag;
        return true;
      }
    }
  }
  return false;
}

std::string serialize(const Conversation& conversation,
                      const SerializeOptions& opts) {
  const std::vector<Role> roles = declared_roles(conversation);
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    std::string offending;
    if (has_tag_collision(conversation.turns[i].text, roles, &offending)) {
      throw TagCollisionError(i, offending);
    }
  }

  std::string out;
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    const Turn& turn = conversation.turns[i];
    if (i > 0) out += opts.turn_separator;
    out += turn.role.open_tag();
    out += ' ';
    out += turn.text;
    out += ' ';
    out += turn.role.close_tag();
  }
  return out;
}

Conversation parse(std::string_view text) {
  Conversation conversation;
  std::size_t pos = 0;
  // Byte offset of each turn's text within the input, for post-checks.
  std::vector<std::size_t> content_offsets;

  while (pos < text.size()) {
    if (is_separator_char(text[pos])) {
      ++pos;
      continue;
    }
    if (text[pos] != '[') {
      const auto code = conversation.turns.empty() ? ErrorCode::MalformedTag
                                                   : ErrorCode::TrailingGarbage;
      throw ParseError(code, pos, "", "expected '[' opening a turn tag");
    }

    // Opening tag: "[NAME] "
    const std::size_t tag_start = pos;
    std::size_t cursor = pos + 1;
    std::size_t name_len = 0;
    while (cursor < text.size() && is_role_char(text[cursor]) &&
           name_len <= kMaxRoleNameLength) {
      ++cursor;
      ++name_len;
    }
    const std::string name(text.substr(tag_start + 1, name_len));
    if (!Role::valid_name(name)) {
      throw ParseError(ErrorCode::MalformedTag, tag_start, "",
                       "invalid role name in opening tag");
    }
    if (cursor >= text.size() || text[cursor] != ']') {
      throw ParseError(ErrorCode::MalformedTag, cursor, name,
                       "unterminated opening tag");
    }
    ++cursor;  // past ']'
    if (cursor >= text.size() || text[cursor] != ' ') {
      throw ParseError(ErrorCode::MalformedTag, cursor, name,
                       "expected single space after opening tag");
    }
    ++cursor;  // past ' '

    // Closing tag: first occurrence of " [/NAME]". Collision-free texts
    // cannot contain the closing tag, so the first hit is the real one.
    const std::string close = " [/" + name + "]";
    const std::size_t close_pos = text.find(close, cursor);
    if (close_pos == std::string_view::npos) {
      throw ParseError(ErrorCode::UnbalancedTurn, tag_start, name,
                       "missing closing tag [/" + name + "]");
    }

    conversation.turns.emplace_back(Role(name),
                                    std::string(text.substr(cursor, close_pos - cursor)));
    content_offsets.push_back(cursor);
    pos = close_pos + close.size();
  }

  // A declared role's tag inside another turn's text means the structure the
  // serializer would have produced is not the one we just recovered.
  const std::vector<Role> roles = declared_roles(conversation);
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    std::string offending;
    if (has_tag_collision(conversation.turns[i].text, roles, &offending)) {
      const std::size_t at =
          content_offsets[i] + conversation.turns[i].text.find(offending);
      std::string role = offending.substr(1, offending.size() - 2);
      if (!role.empty() && role[0] == '/') role.erase(0, 1);
      throw ParseError(ErrorCode::UnbalancedTurn, at, role,
                       "embedded tag " + offending + " inside turn text");
    }
  }
  return conversation;
}

void check_context_placement(const Conversation& conversation,
                             const Role& context_role) {
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    if (conversation.turns[i].role == context_role && i != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "context role " + context_role.name() +
                      " must only appear as the first turn (found at " +
                      std::to_string(i) + ")");
    }
  }
}

}  // namespace codi
