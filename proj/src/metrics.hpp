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

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace codi {

// Grounded-QA metrics. Recall and token F1 follow the extractive-QA
// normalization convention (lowercase, strip punctuation, drop articles);
// ROUGE uses lowercase whitespace tokens with only sentence-terminal periods
// stripped, so numbers stay comparable with standard summarization tooling.

/// QA normalization: lowercase ASCII, delete ASCII punctuation, drop the
/// articles {a, an, the}, split on whitespace.
std::vector<std::string> normalize(std::string_view text);

/// ROUGE tokenization: lowercase ASCII, split on whitespace, strip trailing
/// '.' characters from each token.
std::vector<std::string> rouge_tokenize(std::string_view text);

/// Multiset token overlap / |gold tokens|, after normalize(). Empty
/// normalized gold scores 1.0.
double recall(std::string_view gold, std::string_view pred);

/// Multiset-overlap F1 over normalized tokens. Both sides empty -> 1.0,
/// exactly one empty -> 0.0.
double f1(std::string_view gold, std::string_view pred);

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// The precision and recall backing f1(), exposed so recall() can be checked
/// against the identical R term.
PrfScore token_prf(std::string_view gold, std::string_view pred);

/// ROUGE-N: n-gram multiset overlap over rouge tokens. Empty n-gram sets are
/// handled like empty token sets in f1.
PrfScore rouge_n(std::string_view gold, std::string_view pred, int n);

/// ROUGE-L: longest common subsequence over rouge tokens.
/// P = LCS/|pred|, R = LCS/|gold|, F = 2PR/(P+R).
PrfScore rouge_l(std::string_view gold, std::string_view pred);

using Metric = std::function<double(std::string_view gold, std::string_view pred)>;

/// Max over references; requires at least one reference.
double multi_reference(const Metric& metric,
                       const std::vector<std::string>& references,
                       std::string_view pred);

/// Named metric lookup for config/CLI surfaces: recall, f1, rouge1, rouge2,
/// rougeL (the rouge variants score with their F measure). Throws
/// Error(InvalidArgument) for unknown names.
Metric metric_by_name(const std::string& name);

struct LengthStats {
  double average = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  std::size_t count = 0;
};

/// Word counts by whitespace split of the raw texts; median and p90 are
/// nearest-rank order statistics (index ceil(p*n), 1-based). Throws
/// Error(EmptyInput) when `texts` is empty.
LengthStats length_stats(const std::vector<std::string>& texts);

}  // namespace codi
