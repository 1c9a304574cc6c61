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
#include <map>
#include <string>

#include "conversation.hpp"

namespace codi {

// Per-role loss weights over serialized training text. The span table maps
// every byte of the text to a weight, so trainers can build token masks by
// span intersection without re-parsing. Tags inherit their role's weight
// (the end-of-turn tag is a stop signal the model must learn to emit);
// separators weigh 0. Offsets are UTF-8 byte offsets.

struct WeightPolicy {
  std::map<std::string, double> role_weights;
  double default_weight = 0.0;

  /// Weight for a role name, falling back to default_weight. Throws
  /// Error(InvalidArgument) on negative or non-finite configured weights.
  double weight_for(const std::string& role_name) const;
};

enum class SpanKind { TagOpen, Content, TagClose, Separator };

const char* to_string(SpanKind kind);
SpanKind span_kind_from_string(const std::string& name);

struct WeightSpan {
  std::size_t start = 0;  // inclusive byte offset
  std::size_t end = 0;    // exclusive byte offset
  std::string role;       // empty for separators
  SpanKind kind = SpanKind::Content;
  double weight = 0.0;
};

struct WeightedExample {
  std::string text;
  std::vector<WeightSpan> spans;
};

/// Serializes the conversation (default separator) and annotates every byte.
/// Spans are sorted, non-overlapping, and exactly partition [0, len(text));
/// each content span slices back to its source turn text. Propagates
/// TagCollisionError from serialization.
WeightedExample annotate(const Conversation& conversation, const WeightPolicy& policy);

/// Verifies the span-table invariants (partition, content slicing against
/// expected turn texts when given). Throws Error(InvalidArgument) with the
/// first violation.
void check_weighted_example(const WeightedExample& example);

}  // namespace codi
