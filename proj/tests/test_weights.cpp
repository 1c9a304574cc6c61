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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <doctest.h>

#include "rng.hpp"
#include "weights.hpp"

using codi::Conversation;
using codi::ErrorCode;
using codi::Role;
using codi::SpanKind;
using codi::WeightPolicy;
using codi::WeightSpan;

namespace {

Conversation two_turns() {
  Conversation conversation;
  conversation.turns.emplace_back(Role("USER"), "Hi");
  conversation.turns.emplace_back(Role("AGENT"), "Hello");
  return conversation;
}

void check_span(const WeightSpan& span, std::size_t start, std::size_t end,
                const std::string& role, SpanKind kind, double weight) {
  CHECK(span.start == start);
  CHECK(span.end == end);
  CHECK(span.role == role);
  CHECK(span.kind == kind);
  CHECK(span.weight == weight);
}

}  // namespace

TEST_CASE("annotate produces the documented span table") {
  const WeightPolicy policy{{{"AGENT", 1.0}}, 0.0};
  const codi::WeightedExample example = codi::annotate(two_turns(), policy);

  CHECK(example.text == "[USER] Hi [/USER]\n[AGENT] Hello [/AGENT]");
  REQUIRE(example.spans.size() == 7);
  check_span(example.spans[0], 0, 7, "USER", SpanKind::TagOpen, 0.0);
  check_span(example.spans[1], 7, 9, "USER", SpanKind::Content, 0.0);
  check_span(example.spans[2], 9, 17, "USER", SpanKind::TagClose, 0.0);
  check_span(example.spans[3], 17, 18, "", SpanKind::Separator, 0.0);
  check_span(example.spans[4], 18, 26, "AGENT", SpanKind::TagOpen, 1.0);
  check_span(example.spans[5], 26, 31, "AGENT", SpanKind::Content, 1.0);
  check_span(example.spans[6], 31, 40, "AGENT", SpanKind::TagClose, 1.0);

  // The span table partitions the text.
  CHECK_NOTHROW(codi::check_weighted_example(example));
  // Content spans slice back to the turn texts.
  CHECK(example.text.substr(7, 2) == "Hi");
  CHECK(example.text.substr(26, 5) == "Hello");
}

TEST_CASE("weights scale and default uniformly") {
  const WeightPolicy tripled{{{"AGENT", 3.0}, {"USER", 1.5}}, 0.0};
  const codi::WeightedExample example = codi::annotate(two_turns(), tripled);
  CHECK(example.spans[0].weight == 1.5);
  CHECK(example.spans[1].weight == 1.5);
  CHECK(example.spans[2].weight == 1.5);
  CHECK(example.spans[3].weight == 0.0);  // separator stays 0
  CHECK(example.spans[4].weight == 3.0);

  const WeightPolicy uniform{{}, 0.25};
  const codi::WeightedExample defaulted = codi::annotate(two_turns(), uniform);
  CHECK(defaulted.spans[0].weight == 0.25);
  CHECK(defaulted.spans[4].weight == 0.25);
  CHECK(defaulted.spans[3].weight == 0.0);
}

TEST_CASE("empty turn text omits the content span") {
  Conversation conversation;
  conversation.turns.emplace_back(Role("USER"), "");
  const codi::WeightedExample example =
      codi::annotate(conversation, WeightPolicy{{}, 1.0});
  CHECK(example.text == "[USER]  [/USER]");
  REQUIRE(example.spans.size() == 2);
  check_span(example.spans[0], 0, 7, "USER", SpanKind::TagOpen, 1.0);
  check_span(example.spans[1], 7, 15, "USER", SpanKind::TagClose, 1.0);
  CHECK_NOTHROW(codi::check_weighted_example(example));
}

TEST_CASE("empty conversation annotates to an empty example") {
  const codi::WeightedExample example =
      codi::annotate(Conversation{}, WeightPolicy{{}, 0.0});
  CHECK(example.text.empty());
  CHECK(example.spans.empty());
  CHECK_NOTHROW(codi::check_weighted_example(example));
}

TEST_CASE("annotate propagates tag collisions") {
  Conversation conversation;
  conversation.turns.emplace_back(Role("USER"), "x [/USER] y");
  CHECK_THROWS_AS((void)codi::annotate(conversation, WeightPolicy{{}, 0.0}),
                  codi::TagCollisionError);
}

TEST_CASE("weight_for validates configured weights") {
  const WeightPolicy negative{{{"USER", -1.0}}, 0.0};
  try {
    (void)negative.weight_for("USER");
    FAIL("expected InvalidArgument");
  } catch (const codi::Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }

  const WeightPolicy nan_default{{}, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS((void)nan_default.weight_for("ANY"), codi::Error);

  const WeightPolicy ok{{{"USER", 2.0}}, 0.5};
  CHECK(ok.weight_for("USER") == 2.0);
  CHECK(ok.weight_for("OTHER") == 0.5);

  // annotate surfaces the same validation.
  Conversation conversation;
  conversation.turns.emplace_back(Role("USER"), "hi");
  CHECK_THROWS_AS((void)codi::annotate(conversation, negative), codi::Error);
}

TEST_CASE("span kinds round-trip through their names") {
  for (SpanKind kind : {SpanKind::TagOpen, SpanKind::Content, SpanKind::TagClose,
                        SpanKind::Separator}) {
    CHECK(codi::span_kind_from_string(codi::to_string(kind)) == kind);
  }
  CHECK_THROWS_AS((void)codi::span_kind_from_string("bogus"), codi::Error);
}

TEST_CASE("check_weighted_example flags broken tables") {
  const WeightPolicy policy{{{"AGENT", 1.0}}, 0.0};
  const codi::WeightedExample good = codi::annotate(two_turns(), policy);

  const auto expect_invalid = [](codi::WeightedExample example) {
    try {
      codi::check_weighted_example(example);
      FAIL("expected InvalidArgument");
    } catch (const codi::Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
    }
  };

  codi::WeightedExample gap = good;
  gap.spans[1].start += 1;
  expect_invalid(gap);

  codi::WeightedExample reversed = good;
  reversed.spans[1].end = reversed.spans[1].start;
  expect_invalid(reversed);

  codi::WeightedExample overrun = good;
  overrun.spans.back().end = overrun.text.size() + 5;
  expect_invalid(overrun);

  codi::WeightedExample short_cover = good;
  short_cover.spans.pop_back();
  expect_invalid(short_cover);

  codi::WeightedExample heavy_separator = good;
  heavy_separator.spans[3].weight = 0.5;
  expect_invalid(heavy_separator);

  codi::WeightedExample negative_weight = good;
  negative_weight.spans[5].weight = -0.25;
  expect_invalid(negative_weight);
}

TEST_CASE("randomized conversations annotate into exact partitions") {
  const std::vector<std::string> roles{"USER", "AGENT", "CONTEXT", "TOOL"};
  const std::vector<std::string> texts{
      "", "hi", "a longer piece of text", "line\nbreak", "trailing space ",
      " leading", "tab\there"};
  codi::Rng rng(97);

  for (int iteration = 0; iteration < 10000; ++iteration) {
    Conversation conversation;
    const std::size_t n_turns = rng.next_below(5);
    for (std::size_t t = 0; t < n_turns; ++t) {
      conversation.turns.emplace_back(Role(roles[rng.next_below(roles.size())]),
                                      texts[rng.next_below(texts.size())]);
    }
    WeightPolicy policy{{{"AGENT", 1.0}, {"USER", 0.5}},
                        rng.next_double()};  // nonnegative default

    const codi::WeightedExample example = codi::annotate(conversation, policy);
    REQUIRE_NOTHROW(codi::check_weighted_example(example));
    REQUIRE(example.text == codi::serialize(conversation));

    // Each content span slices back to its turn text, in order.
    std::size_t content_seen = 0;
    for (const WeightSpan& span : example.spans) {
      if (span.kind != SpanKind::Content) continue;
      while (content_seen < conversation.turns.size() &&
             conversation.turns[content_seen].text.empty()) {
        ++content_seen;
      }
      REQUIRE(content_seen < conversation.turns.size());
      const codi::Turn& turn = conversation.turns[content_seen];
      REQUIRE(example.text.substr(span.start, span.end - span.start) == turn.text);
      REQUIRE(span.role == turn.role.name());
      REQUIRE(span.weight == policy.weight_for(turn.role.name()));
      ++content_seen;
    }
  }
}
