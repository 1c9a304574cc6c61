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

#include "weights.hpp"

#include <cmath>

namespace codi {

double WeightPolicy::weight_for(const std::string& role_name) const {
  const auto it = role_weights.find(role_name);
  const double weight = (it == role_weights.end()) ? default_weight : it->second;
  if (!std::isfinite(weight) || weight < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "weight for role '" + role_name + "' must be finite and >= 0");
  }
  return weight;
}

const char* to_string(SpanKind kind) {
  switch (kind) {
    case SpanKind::TagOpen: return "tag_open";
    case SpanKind::Content: return "content";
    case SpanKind::TagClose: return "tag_close";
    case SpanKind::Separator: return "separator";
  }
  return "unknown";
}

SpanKind span_kind_from_string(const std::string& name) {
  if (name == "tag_open") return SpanKind::TagOpen;
  if (name == "content") return SpanKind::Content;
  if (name == "tag_close") return SpanKind::TagClose;
  if (name == "separator") return SpanKind::Separator;
  throw Error(ErrorCode::InvalidArgument, "unknown span kind '" + name + "'");
}

WeightedExample annotate(const Conversation& conversation, const WeightPolicy& policy) {
  const SerializeOptions opts;
  WeightedExample example;
  example.text = serialize(conversation, opts);  // validates tag collisions

  std::size_t offset = 0;
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    const Turn& turn = conversation.turns[i];
    const double weight = policy.weight_for(turn.role.name());

    if (i > 0 && !opts.turn_separator.empty()) {
      example.spans.push_back({offset, offset + opts.turn_separator.size(), "",
                               SpanKind::Separator, 0.0});
      offset += opts.turn_separator.size();
    }

    const std::size_t open_len = turn.role.open_tag().size() + 1;  // "[R] "
    example.spans.push_back({offset, offset + open_len, turn.role.name(),
                             SpanKind::TagOpen, weight});
    offset += open_len;

    if (!turn.text.empty()) {
      example.spans.push_back({offset, offset + turn.text.size(), turn.role.name(),
                               SpanKind::Content, weight});
      offset += turn.text.size();
    }

    const std::size_t close_len = turn.role.close_tag().size() + 1;  // " [/R]"
    example.spans.push_back({offset, offset + close_len, turn.role.name(),
                             SpanKind::TagClose, weight});
    offset += close_len;
  }
  return example;
}

void check_weighted_example(const WeightedExample& example) {
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < example.spans.size(); ++i) {
    const WeightSpan& span = example.spans[i];
    if (span.start != cursor) {
      throw Error(ErrorCode::InvalidArgument,
                  "span " + std::to_string(i) + " starts at " +
                      std::to_string(span.start) + ", expected " +
                      std::to_string(cursor));
    }
    if (span.end <= span.start) {
      throw Error(ErrorCode::InvalidArgument,
                  "span " + std::to_string(i) + " is empty or reversed");
    }
    if (span.end > example.text.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "span " + std::to_string(i) + " overruns the text");
    }
    if (!std::isfinite(span.weight) || span.weight < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "span " + std::to_string(i) + " has an invalid weight");
    }
    if (span.kind == SpanKind::Separator && span.weight != 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "separator span " + std::to_string(i) + " must weigh 0");
    }
    cursor = span.end;
  }
  if (cursor != example.text.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "spans cover " + std::to_string(cursor) + " of " +
                    std::to_string(example.text.size()) + " bytes");
  }
}

}  // namespace codi
