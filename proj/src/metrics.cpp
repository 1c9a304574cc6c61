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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace codi {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '!' && u <= '/') || (u >= ':' && u <= '@') ||
         (u >= '[' && u <= '`') || (u >= '{' && u <= '~');
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? c + ('a' - 'A') : c; }

bool is_article(std::string_view token) {
  return token == "a" || token == "an" || token == "the";
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_ascii_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::map<std::string, int> count_tokens(const std::vector<std::string>& tokens) {
  std::map<std::string, int> counts;
  for (const std::string& token : tokens) ++counts[token];
  return counts;
}

/// Multiset intersection size: sum over keys of min(count_a, count_b).
int overlap_count(const std::map<std::string, int>& a,
                  const std::map<std::string, int>& b) {
  int total = 0;
  for (const auto& [token, count] : a) {
    const auto it = b.find(token);
    if (it != b.end()) total += std::min(count, it->second);
  }
  return total;
}

PrfScore prf_from_counts(std::size_t gold_size, std::size_t pred_size, int overlap) {
  if (gold_size == 0 && pred_size == 0) return {1.0, 1.0, 1.0};
  if (gold_size == 0 || pred_size == 0) return {0.0, 0.0, 0.0};
  PrfScore score;
  score.precision = static_cast<double>(overlap) / static_cast<double>(pred_size);
  score.recall = static_cast<double>(overlap) / static_cast<double>(gold_size);
  score.f1 = (overlap == 0)
                 ? 0.0
                 : 2.0 * score.precision * score.recall /
                       (score.precision + score.recall);
  return score;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
  std::vector<std::string> grams;
  if (tokens.size() < static_cast<std::size_t>(n)) return grams;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (int k = 1; k < n; ++k) {
      gram += '\x1f';  // unit separator keeps ("ab","c") != ("a","bc")
      gram += tokens[i + k];
    }
    grams.push_back(std::move(gram));
  }
  return grams;
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  // Two-row DP over token sequences.
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1
                                       : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

double nearest_rank(const std::vector<std::size_t>& sorted, double p) {
  const auto n = static_cast<double>(sorted.size());
  const auto index = static_cast<std::size_t>(std::ceil(p * n));
  return static_cast<double>(sorted[std::max<std::size_t>(index, 1) - 1]);
}

}  // namespace

std::vector<std::string> normalize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    if (is_ascii_punct(c)) continue;
    cleaned += ascii_lower(c);
  }
  std::vector<std::string> tokens = split_whitespace(cleaned);
  std::erase_if(tokens, is_article);
  return tokens;
}

std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) lowered += ascii_lower(c);
  std::vector<std::string> tokens = split_whitespace(lowered);
  for (std::string& token : tokens) {
    while (!token.empty() && token.back() == '.') token.pop_back();
  }
  std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
  return tokens;
}

PrfScore token_prf(std::string_view gold, std::string_view pred) {
  const auto gold_tokens = normalize(gold);
  const auto pred_tokens = normalize(pred);
  const int overlap = overlap_count(count_tokens(gold_tokens), count_tokens(pred_tokens));
  return prf_from_counts(gold_tokens.size(), pred_tokens.size(), overlap);
}

double recall(std::string_view gold, std::string_view pred) {
  const auto gold_tokens = normalize(gold);
  if (gold_tokens.empty()) return 1.0;
  const auto pred_tokens = normalize(pred);
  const int overlap = overlap_count(count_tokens(gold_tokens), count_tokens(pred_tokens));
  return static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
}

double f1(std::string_view gold, std::string_view pred) {
  return token_prf(gold, pred).f1;
}

PrfScore rouge_n(std::string_view gold, std::string_view pred, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "rouge_n requires n >= 1");
  const auto gold_grams = ngrams(rouge_tokenize(gold), n);
  const auto pred_grams = ngrams(rouge_tokenize(pred), n);
  const int overlap = overlap_count(count_tokens(gold_grams), count_tokens(pred_grams));
  return prf_from_counts(gold_grams.size(), pred_grams.size(), overlap);
}

PrfScore rouge_l(std::string_view gold, std::string_view pred) {
  const auto gold_tokens = rouge_tokenize(gold);
  const auto pred_tokens = rouge_tokenize(pred);
  if (gold_tokens.empty() && pred_tokens.empty()) return {1.0, 1.0, 1.0};
  if (gold_tokens.empty() || pred_tokens.empty()) return {0.0, 0.0, 0.0};
  const auto lcs = static_cast<double>(lcs_length(gold_tokens, pred_tokens));
  PrfScore score;
  score.precision = lcs / static_cast<double>(pred_tokens.size());
  score.recall = lcs / static_cast<double>(gold_tokens.size());
  score.f1 = (lcs == 0.0) ? 0.0
                          : 2.0 * score.precision * score.recall /
                                (score.precision + score.recall);
  return score;
}

double multi_reference(const Metric& metric,
                       const std::vector<std::string>& references,
                       std::string_view pred) {
  if (references.empty()) {
    throw Error(ErrorCode::InvalidArgument, "multi_reference needs >= 1 reference");
  }
  double best = 0.0;
  for (const std::string& reference : references) {
    best = std::max(best, metric(reference, pred));
  }
  return best;
}

Metric metric_by_name(const std::string& name) {
  if (name == "recall") {
    return [](std::string_view g, std::string_view p) { return recall(g, p); };
  }
  if (name == "f1") {
    return [](std::string_view g, std::string_view p) { return f1(g, p); };
  }
  if (name == "rouge1") {
    return [](std::string_view g, std::string_view p) { return rouge_n(g, p, 1).f1; };
  }
  if (name == "rouge2") {
    return [](std::string_view g, std::string_view p) { return rouge_n(g, p, 2).f1; };
  }
  if (name == "rougeL") {
    return [](std::string_view g, std::string_view p) { return rouge_l(g, p).f1; };
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

LengthStats length_stats(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw Error(ErrorCode::EmptyInput, "length_stats needs at least one text");
  }
  std::vector<std::size_t> counts;
  counts.reserve(texts.size());
  std::size_t total = 0;
  for (const std::string& text : texts) {
    const std::size_t words = split_whitespace(text).size();
    counts.push_back(words);
    total += words;
  }
  std::sort(counts.begin(), counts.end());

  LengthStats stats;
  stats.count = counts.size();
  stats.average = static_cast<double>(total) / static_cast<double>(counts.size());
  stats.median = nearest_rank(counts, 0.5);
  stats.p90 = nearest_rank(counts, 0.9);
  return stats;
}

}  // namespace codi
