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

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace codi {

// Markov-style conversational graphs. Vertices are conversation links, edges
// carry transition probabilities, and a distinguished start vertex (with no
// incoming edges) anchors every traversal. Sampling a chain of length n walks
// the graph from start and records the n links visited.

struct Edge {
  std::string from;
  std::string to;
  double weight = 0.0;
};

enum class FindingCategory {
  BadWeight,      // weight outside (0, 1] or not finite
  SumNotOne,      // outgoing weights of a vertex do not sum to 1 within 1e-9
  DeadEnd,        // vertex with no outgoing edge
  Unreachable,    // vertex not reachable from start
  StartHasIncoming,
};

const char* to_string(FindingCategory category);

struct Finding {
  FindingCategory category;
  std::string subject;  // vertex id or "from->to" edge id
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;
  std::vector<std::string> warnings;  // e.g. renormalization notices

  bool ok() const noexcept { return findings.empty(); }
};

struct ChainSample {
  std::vector<std::string> links;
  std::uint64_t rng_seed = 0;
  std::uint64_t graph_hash = 0;
};

/// Conversation length distribution: a fixed n, a uniform integer range, or an
/// explicit histogram over lengths.
struct FixedLength {
  int n = 1;
};
struct UniformLength {
  int min = 1;
  int max = 1;
};
struct HistogramLength {
  std::vector<std::pair<int, double>> bins;  // (n, probability), in file order
};
using LengthSpec = std::variant<FixedLength, UniformLength, HistogramLength>;

/// Throws Error(ConfigError) if the spec violates its invariants
/// (all n >= 1, histogram probabilities summing to 1 within 1e-9).
void check_length_spec(const LengthSpec& spec);

int sample_length(const LengthSpec& spec, Rng& rng);

class ConversationGraph {
 public:
  /// Builds the graph and freezes the successor tables. Edges referencing
  /// undeclared vertices are config errors. Outgoing weight sums within 1e-6
  /// of 1 are renormalized (reported later as validation warnings); larger
  /// deviations are left untouched for validate() to flag.
  ConversationGraph(std::string start, std::vector<std::string> vertices,
                    std::vector<Edge> edges);

  const std::string& start() const noexcept { return start_; }
  const std::vector<std::string>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Checks every structural invariant and reports findings instead of
  /// throwing. A graph with an empty report is safe to sample.
  ValidationReport validate() const;

  /// Walks the graph from start, emitting exactly `n` links. Successors are
  /// chosen by cumulative-weight inversion in lexicographic target order, so
  /// (graph, n, seed state) fully determines the chain.
  /// Throws Error(InvalidGraph) if validate() has findings.
  ChainSample sample_chain(int n, Rng& rng) const;

  bool has_edge(const std::string& from, const std::string& to) const;

  /// Stable digest of (start, vertices, edges with renormalized weights).
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  struct Successor {
    std::string to;
    double weight;      // normalized weight
    double cumulative;  // running sum; last entry forced to 1.0
  };

  const std::vector<Successor>* successors_of(const std::string& vertex) const;

  std::string start_;
  std::vector<std::string> vertices_;  // excludes start, sorted
  std::vector<Edge> edges_;            // normalized weights, sorted by (from, to)
  std::map<std::string, std::vector<Successor>> adjacency_;
  std::vector<std::string> renorm_warnings_;
  std::uint64_t hash_ = 0;
};

}  // namespace codi
