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

#ifndef RCX_GRAPH_HPP_
#define RCX_GRAPH_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcx/common.hpp"

namespace rcx {

using Json = nlohmann::ordered_json;

// Undirected edge in canonical form (u < v).
struct Edge {
  int u = 0;
  int v = 0;

  static Edge make(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

using EdgeSet = std::vector<Edge>;

// Fields of a graph before validation.
struct GraphData {
  int n = 0;
  Mat features;                    // n x d_in
  EdgeSet edges;                   // any order, either orientation
  std::optional<int> graph_label;  // graph-classification label
  std::vector<int> node_labels;    // empty when absent
  std::optional<EdgeSet> gt_edges; // motif edges, when known
};

// Immutable undirected graph with node features, optional labels and an
// optional ground-truth motif mask. Edges are kept as a sorted canonical list
// with a CSR neighbor index, so every per-graph computation is O(|V| + |E|).
// The dense n x n views (adjacency(), gt_mask()) are materialized on demand.
class Graph {
 public:
  Graph() = default;
  // Validates and canonicalizes. Throws ValidationError on self loops,
  // duplicate edges, out-of-range ids, feature row mismatch, or gt edges that
  // are not graph edges.
  explicit Graph(GraphData data);

  // Builds from a dense {0,1} symmetric zero-diagonal adjacency matrix.
  static Graph from_adjacency(const Mat& adjacency, Mat features);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  const Mat& features() const { return features_; }
  const EdgeSet& edges() const { return edges_; }
  const std::optional<int>& graph_label() const { return graph_label_; }
  const std::vector<int>& node_labels() const { return node_labels_; }
  bool has_node_labels() const { return !node_labels_.empty(); }
  bool has_gt() const { return has_gt_; }
  // Per-edge motif flag aligned with edges(); empty when !has_gt().
  const std::vector<std::uint8_t>& gt_flags() const { return gt_flags_; }
  EdgeSet gt_edges() const;

  // Index of edge {a,b} in edges(), or -1.
  int edge_index(int a, int b) const;
  bool has_edge(int a, int b) const { return edge_index(a, b) >= 0; }

  // Neighbors of `node` (ascending) and the matching edge indices.
  std::span<const int> neighbors(int node) const;
  std::span<const int> incident_edges(int node) const;
  int degree(int node) const {
    return offsets_[node + 1] - offsets_[node];
  }

  Mat adjacency() const;
  Mat gt_mask() const;

  // Rebuilds the same graph with different features / labels / structure.
  GraphData data() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  int n_ = 0;
  Mat features_;
  EdgeSet edges_;
  std::optional<int> graph_label_;
  std::vector<int> node_labels_;
  bool has_gt_ = false;
  std::vector<std::uint8_t> gt_flags_;
  std::vector<int> offsets_{0};
  std::vector<int> nbr_;
  std::vector<int> nbr_edge_;
};

// A graph whose edges carry weights in [0, 1]. Weights are aligned with
// base.edges(); every non-edge has weight 0 by construction.
struct WeightedGraph {
  const Graph* base = nullptr;
  std::vector<double> weights;

  static WeightedGraph unit(const Graph& g);
  WeightedGraph(const Graph& g, std::vector<double> w);
  WeightedGraph() = default;

  const Graph& graph() const { return *base; }
  Mat dense_weights() const;
};

enum class Task { kGraph, kNode };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

// Shuffled 80/10/10 split of `count` sample ids.
Split make_split(int count, Rng& rng, double train_frac = 0.8,
                 double val_frac = 0.1);

struct Dataset {
  std::vector<Graph> graphs;
  Task task = Task::kGraph;
  int num_classes = 0;
  Split split;
  Json generator = Json::object();
  std::uint64_t seed = 0;

  int feature_dim() const;
  // Number of samples: graphs for graph tasks, nodes for node tasks.
  int num_samples() const;
  // Label of sample `id`.
  int label(int id) const;
  // Throws ValidationError when an invariant does not hold.
  void validate() const;
};

// --- Operations -----------------------------------------------------------

// Dense D^-1/2 (W + I) D^-1/2 with D the degree of (W + I). Without self loops
// I is dropped and zero-degree rows stay zero.
Mat normalize_adjacency(const Mat& weights, bool add_self_loops = true);

// Gradient of a scalar loss w.r.t. each entry of W (entries treated as
// independent), given dL/dA for A = normalize_adjacency(W).
Mat normalize_adjacency_backward(const Mat& weights, const Mat& d_normalized,
                                 bool add_self_loops = true);

// Sparse form of normalize_adjacency over a graph's edge list.
struct NormalizedAdjacency {
  std::vector<double> self;      // diagonal coefficient per node
  std::vector<double> coef;      // coefficient per undirected edge
  std::vector<double> degree;    // degree of (W + I)
  bool self_loops = true;
};

NormalizedAdjacency normalize_edges(const Graph& g, std::span<const double> w,
                                    bool add_self_loops = true);

// out = A_hat * in.
void propagate(const Graph& g, const NormalizedAdjacency& a, const Mat& in,
               Mat& out);

// Chain rule through normalize_edges. `d_coef` is dL/dcoef per undirected edge
// (the sum of both directed uses), `d_self` is dL/dself. Returns dL/dw per
// edge.
std::vector<double> normalize_edges_backward(const Graph& g,
                                             std::span<const double> w,
                                             const NormalizedAdjacency& a,
                                             std::span<const double> d_coef,
                                             std::span<const double> d_self);

// Remainder graph {V, E - S}. Throws ValidationError if an edge of S is absent.
Graph remove_edges(const Graph& g, const EdgeSet& s);

struct Subgraph {
  Graph graph;
  std::vector<int> to_original;  // local id -> original id (ascending)
  int center = 0;                // local id of the query node
};

// Induced subgraph on all nodes within k hops of v.
Subgraph khop_subgraph(const Graph& g, int v, int k);

// --- Serialization --------------------------------------------------------

Json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

// Writes <dir>/meta.json and <dir>/graphs.jsonl.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace rcx

#endif  // RCX_GRAPH_HPP_
