// Copyright 2026 The rcx Authors.
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

#ifndef RCX_SYNTH_HPP_
#define RCX_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "rcx/graph.hpp"

namespace rcx {

enum class DatasetName {
  kBaShapes,
  kBaCommunity,
  kTreeCycles,
  kTreeGrid,
  kBa2Motifs,
  kTriMotifs,
};

std::string to_string(DatasetName name);
DatasetName dataset_name_from_string(const std::string& s);
bool is_node_dataset(DatasetName name);

struct GeneratorConfig {
  DatasetName name = DatasetName::kBaShapes;
  std::uint64_t seed = 0;
  // Overrides; unset means the dataset default.
  std::optional<int> base_nodes;
  std::optional<int> motif_count;
  std::optional<int> graph_count;
  std::optional<double> noise_fraction;

  // Resolved values (defaults filled in).
  int resolved_base_nodes() const;
  int resolved_motif_count() const;
  int resolved_graph_count() const;
  double resolved_noise_fraction() const;

  Json to_json() const;
};

// Barabasi-Albert preferential attachment: every new node links to m distinct
// existing nodes chosen proportionally to degree. Produces (n - m) * m edges.
Graph gen_ba_graph(int n, int m, std::uint64_t seed);
Graph gen_ba_graph(int n, int m, Rng& rng);

// Edge lists of the motif shapes, local ids starting at 0.
EdgeSet house_edges();       // 5 nodes, 6 edges
EdgeSet cycle_edges(int k);  // k nodes, k edges
EdgeSet grid_edges(int side);

Dataset gen_node_dataset(const GeneratorConfig& cfg);
Dataset gen_ba_2motifs(const GeneratorConfig& cfg);
// Three classes, each graph carries two of {house, 6-cycle, 3x3 grid}:
// class 0 = house + cycle, class 1 = cycle + grid, class 2 = house + grid.
Dataset gen_tri_motifs(const GeneratorConfig& cfg);

Dataset generate(const GeneratorConfig& cfg);

}  // namespace rcx

#endif  // RCX_SYNTH_HPP_
