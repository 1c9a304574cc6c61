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

#include "graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <set>

namespace codi {

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kRenormTolerance = 1e-6;

}  // namespace

const char* to_string(FindingCategory category) {
  switch (category) {
    case FindingCategory::BadWeight: return "BadWeight";
    case FindingCategory::SumNotOne: return "SumNotOne";
    case FindingCategory::DeadEnd: return "DeadEnd";
    case FindingCategory::Unreachable: return "Unreachable";
    case FindingCategory::StartHasIncoming: return "StartHasIncoming";
  }
  return "Unknown";
}

ConversationGraph::ConversationGraph(std::string start,
                                     std::vector<std::string> vertices,
                                     std::vector<Edge> edges)
    : start_(std::move(start)), vertices_(std::move(vertices)), edges_(std::move(edges)) {
  std::sort(vertices_.begin(), vertices_.end());
  vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
  if (std::find(vertices_.begin(), vertices_.end(), start_) != vertices_.end()) {
    throw Error(ErrorCode::ConfigError,
                "start vertex '" + start_ + "' must not be listed among link vertices");
  }

  const auto known = [&](const std::string& id) {
    return id == start_ ||
           std::binary_search(vertices_.begin(), vertices_.end(), id);
  };
  for (const Edge& edge : edges_) {
    if (!known(edge.from) || !known(edge.to)) {
      throw Error(ErrorCode::ConfigError,
                  "edge " + edge.from + "->" + edge.to + " references an undeclared vertex");
    }
  }

  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i - 1].from == edges_[i].from && edges_[i - 1].to == edges_[i].to) {
      throw Error(ErrorCode::ConfigError,
                  "duplicate edge " + edges_[i].from + "->" + edges_[i].to);
    }
  }

  // Renormalize per-vertex sums that are off by rounding only. Sampling
  // tolerates nothing, validation tolerates 1e-9, configs get 1e-6.
  for (std::size_t i = 0; i < edges_.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < edges_.size() && edges_[j].from == edges_[i].from) {
      sum += edges_[j].weight;
      ++j;
    }
    const double err = std::abs(sum - 1.0);
    if (std::isfinite(sum) && sum > 0.0 && err > kSumTolerance && err <= kRenormTolerance) {
      for (std::size_t k = i; k < j; ++k) edges_[k].weight /= sum;
      renorm_warnings_.push_back("renormalized outgoing weights of '" +
                                 edges_[i].from + "' (sum was off by " +
                                 std::to_string(err) + ")");
    }
    i = j;
  }

  for (const Edge& edge : edges_) {
    auto& successors = adjacency_[edge.from];
    const double prev = successors.empty() ? 0.0 : successors.back().cumulative;
    successors.push_back({edge.to, edge.weight, prev + edge.weight});
  }
  for (auto& [vertex, successors] : adjacency_) {
    if (std::abs(successors.back().cumulative - 1.0) <= kSumTolerance) {
      successors.back().cumulative = 1.0;
    }
  }

  Fnv1a fnv;
  fnv.update("graph/1");
  fnv.update(start_);
  fnv.update(std::string_view("\0", 1));
  for (const auto& v : vertices_) {
    fnv.update(v);
    fnv.update(std::string_view("\0", 1));
  }
  for (const Edge& edge : edges_) {
    fnv.update(edge.from);
    fnv.update(std::string_view("\0", 1));
    fnv.update(edge.to);
    fnv.update(std::string_view("\0", 1));
    fnv.update_u64(std::bit_cast<std::uint64_t>(edge.weight));
  }
  hash_ = fnv.digest();
}

const std::vector<ConversationGraph::Successor>* ConversationGraph::successors_of(
    const std::string& vertex) const {
  const auto it = adjacency_.find(vertex);
  return it == adjacency_.end() ? nullptr : &it->second;
}

bool ConversationGraph::has_edge(const std::string& from, const std::string& to) const {
  const auto* successors = successors_of(from);
  if (successors == nullptr) return false;
  return std::any_of(successors->begin(), successors->end(),
                     [&](const Successor& s) { return s.to == to; });
}

ValidationReport ConversationGraph::validate() const {
  ValidationReport report;
  report.warnings = renorm_warnings_;

  for (const Edge& edge : edges_) {
    if (!std::isfinite(edge.weight) || edge.weight <= 0.0 || edge.weight > 1.0) {
      report.findings.push_back({FindingCategory::BadWeight,
                                 edge.from + "->" + edge.to,
                                 "weight " + std::to_string(edge.weight) +
                                     " outside (0, 1]"});
    }
    if (edge.to == start_) {
      report.findings.push_back({FindingCategory::StartHasIncoming,
                                 edge.from + "->" + edge.to,
                                 "start vertex must have no incoming edges"});
    }
  }

  std::vector<std::string> all = vertices_;
  all.push_back(start_);
  for (const std::string& vertex : all) {
    const auto* successors = successors_of(vertex);
    if (successors == nullptr || successors->empty()) {
      report.findings.push_back({FindingCategory::DeadEnd, vertex,
                                 "vertex has no outgoing edges"});
      continue;
    }
    double sum = 0.0;
    for (const Successor& s : *successors) sum += s.weight;
    if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
      report.findings.push_back({FindingCategory::SumNotOne, vertex,
                                 "outgoing weights sum to " + std::to_string(sum)});
    }
  }

  // Reachability over directed edges from start.
  std::set<std::string> seen = {start_};
  std::deque<std::string> frontier = {start_};
  while (!frontier.empty()) {
    const std::string vertex = std::move(frontier.front());
    frontier.pop_front();
    if (const auto* successors = successors_of(vertex)) {
      for (const Successor& s : *successors) {
        if (seen.insert(s.to).second) frontier.push_back(s.to);
      }
    }
  }
  for (const std::string& vertex : vertices_) {
    if (!seen.contains(vertex)) {
      report.findings.push_back({FindingCategory::Unreachable, vertex,
                                 "vertex is not reachable from start"});
    }
  }
  return report;
}

ChainSample ConversationGraph::sample_chain(int n, Rng& rng) const {
  if (n < 1) {
    throw Error(ErrorCode::InvalidArgument, "chain length must be >= 1");
  }
  const ValidationReport report = validate();
  if (!report.ok()) {
    throw Error(ErrorCode::InvalidGraph,
                "graph has " + std::to_string(report.findings.size()) +
                    " validation finding(s); first: " + report.findings[0].detail);
  }

  ChainSample sample;
  sample.graph_hash = hash_;
  sample.links.reserve(static_cast<std::size_t>(n));
  const std::string* current = &start_;
  for (int step = 0; step < n; ++step) {
    const auto& successors = *successors_of(*current);
    const double u = rng.next_double();
    std::size_t pick = successors.size() - 1;
    for (std::size_t i = 0; i < successors.size(); ++i) {
      if (u < successors[i].cumulative) {
        pick = i;
        break;
      }
    }
    sample.links.push_back(successors[pick].to);
    current = &sample.links.back();
  }
  return sample;
}

void check_length_spec(const LengthSpec& spec) {
  if (const auto* fixed = std::get_if<FixedLength>(&spec)) {
    if (fixed->n < 1) throw Error(ErrorCode::ConfigError, "length n must be >= 1");
    return;
  }
  if (const auto* uniform = std::get_if<UniformLength>(&spec)) {
    if (uniform->min < 1 || uniform->max < uniform->min) {
      throw Error(ErrorCode::ConfigError,
                  "uniform length requires 1 <= min <= max");
    }
    return;
  }
  const auto& histogram = std::get<HistogramLength>(spec);
  if (histogram.bins.empty()) {
    throw Error(ErrorCode::ConfigError, "histogram length needs at least one bin");
  }
  double sum = 0.0;
  for (const auto& [n, p] : histogram.bins) {
    if (n < 1) throw Error(ErrorCode::ConfigError, "histogram lengths must be >= 1");
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::ConfigError, "histogram probabilities must be >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::ConfigError,
                "histogram probabilities sum to " + std::to_string(sum));
  }
}

int sample_length(const LengthSpec& spec, Rng& rng) {
  check_length_spec(spec);
  if (const auto* fixed = std::get_if<FixedLength>(&spec)) return fixed->n;
  if (const auto* uniform = std::get_if<UniformLength>(&spec)) {
    const auto span = static_cast<std::uint64_t>(uniform->max - uniform->min) + 1;
    return uniform->min + static_cast<int>(rng.next_below(span));
  }
  const auto& histogram = std::get<HistogramLength>(spec);
  const double u = rng.next_double();
  double cumulative = 0.0;
  for (const auto& [n, p] : histogram.bins) {
    cumulative += p;
    if (u < cumulative) return n;
  }
  return histogram.bins.back().first;
}

}  // namespace codi
