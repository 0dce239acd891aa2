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

#include "rcx/synth.hpp"

#include <algorithm>
#include <set>

namespace rcx {

namespace {

constexpr int kFeatureDim = 10;

struct Builder {
  int n = 0;
  EdgeSet edges;
  EdgeSet gt;
  std::vector<int> labels;

  int add_nodes(int count, int label) {
    const int first = n;
    n += count;
    labels.insert(labels.end(), count, label);
    return first;
  }

  // Appends a motif, marks its edges as ground truth, and joins its first node
  // to `anchor` with one (non-motif) edge.
  int add_motif(const EdgeSet& shape, int size, const std::vector<int>& roles,
                int anchor) {
    const int first = n;
    for (int r = 0; r < size; ++r) add_nodes(1, roles[r]);
    for (const Edge& e : shape) {
      edges.push_back({first + e.u, first + e.v});
      gt.push_back({first + e.u, first + e.v});
    }
    edges.push_back({anchor, first});
    return first;
  }

  // Adds floor(fraction * |E|) random non-edges.
  void add_noise(double fraction, Rng& rng) {
    std::set<Edge> present(edges.begin(), edges.end());
    const int target = static_cast<int>(fraction * static_cast<double>(edges.size()));
    const long long slots = static_cast<long long>(n) * (n - 1) / 2;
    int added = 0;
    while (added < target && static_cast<long long>(present.size()) < slots) {
      const int a = static_cast<int>(uniform_index(rng, n));
      const int b = static_cast<int>(uniform_index(rng, n));
      if (a == b) continue;
      if (present.insert(Edge::make(a, b)).second) {
        edges.push_back(Edge::make(a, b));
        ++added;
      }
    }
  }
};

std::vector<int> sample_distinct(int population, int count, Rng& rng) {
  require(count <= population, "generator: more motifs than base nodes");
  std::vector<int> ids(population);
  for (int i = 0; i < population; ++i) ids[i] = i;
  // Partial Fisher-Yates.
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(uniform_index(rng, population - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  return ids;
}

EdgeSet ba_edges(int n, int m, Rng& rng) {
  require(m >= 1 && n > m, "gen_ba_graph: need n > m >= 1");
  EdgeSet edges;
  std::vector<int> repeated;
  std::vector<int> targets(m);
  for (int i = 0; i < m; ++i) targets[i] = i;
  for (int source = m; source < n; ++source) {
    for (int t : targets) edges.push_back(Edge::make(source, t));
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), m, source);
    std::vector<int> next;
    while (static_cast<int>(next.size()) < m) {
      const int pick = repeated[uniform_index(rng, repeated.size())];
      if (std::find(next.begin(), next.end(), pick) == next.end()) next.push_back(pick);
    }
    targets = std::move(next);
  }
  return edges;
}

// Balanced binary tree in heap order: node i has children 2i+1, 2i+2.
EdgeSet tree_edges(int n) {
  EdgeSet edges;
  for (int i = 1; i < n; ++i) edges.push_back({(i - 1) / 2, i});
  return edges;
}

Mat constant_features(int n) { return Mat::Ones(n, kFeatureDim); }

// One-hot node degree; degrees of kFeatureDim and above share the last column.
Mat degree_features(int n, const EdgeSet& edges) {
  std::vector<int> deg(n, 0);
  for (const Edge& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  Mat f = Mat::Zero(n, kFeatureDim);
  for (int i = 0; i < n; ++i)
    if (deg[i] > 0) f(i, std::min(deg[i], kFeatureDim) - 1) = 1.0;
  return f;
}

// Leaf indicator in column 0, non-leaf indicator in column 1. Both motifs of
// a graph dataset have the same node count and no leaves, so unlike the
// degree one-hot these features carry no label information by themselves.
Mat leaf_features(int n, const EdgeSet& edges) {
  std::vector<int> deg(n, 0);
  for (const Edge& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  Mat f = Mat::Zero(n, kFeatureDim);
  for (int i = 0; i < n; ++i)
    if (deg[i] > 0) f(i, deg[i] == 1 ? 0 : 1) = 1.0;
  return f;
}

Graph finish_node_graph(Builder& b, Mat features) {
  GraphData d;
  d.n = b.n;
  d.features = std::move(features);
  d.edges = std::move(b.edges);
  d.node_labels = std::move(b.labels);
  d.gt_edges = std::move(b.gt);
  return Graph(std::move(d));
}

const std::vector<int> kHouseRoles = {0, 0, 1, 1, 2};  // top, top, bottom, bottom, roof

// One BA base with houses attached; labels: base 0, house roles 1..3 (+offset).
void build_ba_houses(Builder& b, int base_nodes, int houses, int label_offset,
                     Rng& base_rng, Rng& motif_rng) {
  const int first = b.add_nodes(base_nodes, label_offset);
  for (const Edge& e : ba_edges(base_nodes, 5, base_rng)) {
    b.edges.push_back({first + e.u, first + e.v});
  }
  std::vector<int> anchors = sample_distinct(base_nodes, houses, motif_rng);
  std::vector<int> roles(5);
  for (int r = 0; r < 5; ++r) roles[r] = label_offset + 1 + kHouseRoles[r];
  for (int a : anchors) b.add_motif(house_edges(), 5, roles, first + a);
}

}  // namespace

std::string to_string(DatasetName name) {
  switch (name) {
    case DatasetName::kBaShapes: return "ba-shapes";
    case DatasetName::kBaCommunity: return "ba-community";
    case DatasetName::kTreeCycles: return "tree-cycles";
    case DatasetName::kTreeGrid: return "tree-grid";
    case DatasetName::kBa2Motifs: return "ba-2motifs";
    case DatasetName::kTriMotifs: return "tri-motifs";
  }
  return "?";
}

DatasetName dataset_name_from_string(const std::string& s) {
  for (DatasetName n : {DatasetName::kBaShapes, DatasetName::kBaCommunity,
                        DatasetName::kTreeCycles, DatasetName::kTreeGrid,
                        DatasetName::kBa2Motifs, DatasetName::kTriMotifs}) {
    if (to_string(n) == s) return n;
  }
  throw ValidationError("unknown dataset '" + s + "'");
}

bool is_node_dataset(DatasetName name) {
  return name == DatasetName::kBaShapes || name == DatasetName::kBaCommunity ||
         name == DatasetName::kTreeCycles || name == DatasetName::kTreeGrid;
}

int GeneratorConfig::resolved_base_nodes() const {
  if (base_nodes) return *base_nodes;
  switch (name) {
    case DatasetName::kBaShapes: return 300;
    case DatasetName::kBaCommunity: return 300;  // per community
    case DatasetName::kTreeCycles:
    case DatasetName::kTreeGrid: return 511;     // height-8 binary tree
    case DatasetName::kBa2Motifs:
    case DatasetName::kTriMotifs: return 20;
  }
  return 0;
}

int GeneratorConfig::resolved_motif_count() const {
  if (motif_count) return *motif_count;
  switch (name) {
    case DatasetName::kBaShapes: return 80;
    case DatasetName::kBaCommunity: return 80;  // per community
    case DatasetName::kTreeCycles: return 60;
    case DatasetName::kTreeGrid: return 80;
    case DatasetName::kBa2Motifs: return 1;
    case DatasetName::kTriMotifs: return 2;
  }
  return 0;
}

int GeneratorConfig::resolved_graph_count() const {
  if (graph_count) return *graph_count;
  switch (name) {
    case DatasetName::kBa2Motifs: return 700;
    case DatasetName::kTriMotifs: return 600;
    default: return 1;
  }
}

double GeneratorConfig::resolved_noise_fraction() const {
  if (noise_fraction) return *noise_fraction;
  // Chosen so the default edge counts land on the published dataset table.
  switch (name) {
    case DatasetName::kBaShapes: return 0.01;
    case DatasetName::kBaCommunity: return 0.10;
    case DatasetName::kTreeCycles: return 0.04;
    case DatasetName::kTreeGrid: return 0.10;
    default: return 0.0;
  }
}

Json GeneratorConfig::to_json() const {
  Json j;
  j["dataset_name"] = to_string(name);
  j["seed"] = seed;
  j["base_nodes"] = resolved_base_nodes();
  j["motif_count"] = resolved_motif_count();
  j["graph_count"] = resolved_graph_count();
  j["noise_fraction"] = resolved_noise_fraction();
  return j;
}

Graph gen_ba_graph(int n, int m, Rng& rng) {
  EdgeSet edges = ba_edges(n, m, rng);
  GraphData d;
  d.n = n;
  d.features = constant_features(n);
  d.edges = std::move(edges);
  return Graph(std::move(d));
}

Graph gen_ba_graph(int n, int m, std::uint64_t seed) {
  Rng rng = make_rng(seed, "ba");
  return gen_ba_graph(n, m, rng);
}

EdgeSet house_edges() { return {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}}; }

EdgeSet cycle_edges(int k) {
  EdgeSet e;
  for (int i = 0; i < k; ++i) e.push_back(Edge::make(i, (i + 1) % k));
  return e;
}

EdgeSet grid_edges(int side) {
  EdgeSet e;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const int id = r * side + c;
      if (c + 1 < side) e.push_back({id, id + 1});
      if (r + 1 < side) e.push_back({id, id + side});
    }
  }
  return e;
}

Dataset gen_node_dataset(const GeneratorConfig& cfg) {
  require(is_node_dataset(cfg.name),
          "gen_node_dataset: '" + to_string(cfg.name) + "' is not a node dataset");
  Rng base_rng = make_rng(cfg.seed, "base");
  Rng motif_rng = make_rng(cfg.seed, "motifs");
  Rng noise_rng = make_rng(cfg.seed, "noise");
  Rng feature_rng = make_rng(cfg.seed, "features");
  Rng split_rng = make_rng(cfg.seed, "split");
  const int base = cfg.resolved_base_nodes();
  const int motifs = cfg.resolved_motif_count();

  Dataset ds;
  ds.task = Task::kNode;
  ds.seed = cfg.seed;
  ds.generator = cfg.to_json();
  Builder b;
  Mat features;

  switch (cfg.name) {
    case DatasetName::kBaShapes:
      build_ba_houses(b, base, motifs, 0, base_rng, motif_rng);
      b.add_noise(cfg.resolved_noise_fraction(), noise_rng);
      ds.num_classes = 4;
      features = degree_features(b.n, b.edges);
      break;
    case DatasetName::kBaCommunity: {
      build_ba_houses(b, base, motifs, 0, base_rng, motif_rng);
      const int split_at = b.n;
      build_ba_houses(b, base, motifs, 4, base_rng, motif_rng);
      // Inter-community edges at rate 0.01 * n.
      std::set<Edge> present(b.edges.begin(), b.edges.end());
      const int inter = static_cast<int>(0.01 * b.n);
      for (int added = 0; added < inter;) {
        const int a = static_cast<int>(uniform_index(motif_rng, split_at));
        const int c = split_at + static_cast<int>(uniform_index(motif_rng, b.n - split_at));
        if (present.insert(Edge::make(a, c)).second) {
          b.edges.push_back(Edge::make(a, c));
          ++added;
        }
      }
      b.add_noise(cfg.resolved_noise_fraction(), noise_rng);
      ds.num_classes = 8;
      // N(mu, 1) with mu = 1 on the community's own half of the dimensions,
      // followed by the one-hot degree block.
      features.resize(b.n, 2 * kFeatureDim);
      features.rightCols(kFeatureDim) = degree_features(b.n, b.edges);
      for (int i = 0; i < b.n; ++i) {
        const bool second = i >= split_at;
        for (int c = 0; c < kFeatureDim; ++c) {
          const bool own_block = (c < kFeatureDim / 2) != second;
          features(i, c) = (own_block ? 1.0 : 0.0) + standard_normal(feature_rng);
        }
      }
      break;
    }
    case DatasetName::kTreeCycles:
    case DatasetName::kTreeGrid: {
      b.add_nodes(base, 0);
      b.edges = tree_edges(base);
      const bool cycles = cfg.name == DatasetName::kTreeCycles;
      const EdgeSet shape = cycles ? cycle_edges(6) : grid_edges(3);
      const int size = cycles ? 6 : 9;
      const std::vector<int> roles(size, 1);
      for (int a : sample_distinct(base, motifs, motif_rng)) b.add_motif(shape, size, roles, a);
      b.add_noise(cfg.resolved_noise_fraction(), noise_rng);
      ds.num_classes = 2;
      features = degree_features(b.n, b.edges);
      break;
    }
    default:
      break;
  }
  ds.graphs.push_back(finish_node_graph(b, std::move(features)));
  ds.split = make_split(ds.graphs.front().num_nodes(), split_rng);
  ds.validate();
  return ds;
}

namespace {

Graph motif_graph(std::uint64_t seed, int index, int base,
                  const std::vector<std::pair<EdgeSet, int>>& motifs, int label) {
  Rng rng = make_rng(seed, "graph", static_cast<std::uint64_t>(index));
  Builder b;
  b.add_nodes(base, 0);
  b.edges = ba_edges(base, 1, rng);
  std::vector<int> anchors = sample_distinct(base, static_cast<int>(motifs.size()), rng);
  for (std::size_t k = 0; k < motifs.size(); ++k) {
    const auto& [shape, size] = motifs[k];
    b.add_motif(shape, size, std::vector<int>(size, 0), anchors[k]);
  }
  GraphData d;
  d.n = b.n;
  d.features = leaf_features(b.n, b.edges);
  d.edges = std::move(b.edges);
  d.graph_label = label;
  d.gt_edges = std::move(b.gt);
  return Graph(std::move(d));
}

}  // namespace

Dataset gen_ba_2motifs(const GeneratorConfig& cfg) {
  require(cfg.name == DatasetName::kBa2Motifs, "gen_ba_2motifs: wrong dataset name");
  const int count = cfg.resolved_graph_count();
  require(count >= 2 && count % 2 == 0, "gen_ba_2motifs: graph count must be even and >= 2");
  const int base = cfg.resolved_base_nodes();
  Dataset ds;
  ds.task = Task::kGraph;
  ds.num_classes = 2;
  ds.seed = cfg.seed;
  ds.generator = cfg.to_json();
  ds.graphs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int label = i < count / 2 ? 0 : 1;
    const auto motif = label == 0 ? std::make_pair(house_edges(), 5)
                                  : std::make_pair(cycle_edges(5), 5);
    ds.graphs.push_back(motif_graph(cfg.seed, i, base, {motif}, label));
  }
  Rng split_rng = make_rng(cfg.seed, "split");
  ds.split = make_split(count, split_rng);
  ds.validate();
  return ds;
}

Dataset gen_tri_motifs(const GeneratorConfig& cfg) {
  require(cfg.name == DatasetName::kTriMotifs, "gen_tri_motifs: wrong dataset name");
  const int count = cfg.resolved_graph_count();
  require(count >= 3 && count % 3 == 0, "gen_tri_motifs: graph count must be a multiple of 3");
  const int base = cfg.resolved_base_nodes();
  const std::pair<EdgeSet, int> house{house_edges(), 5}, cycle{cycle_edges(6), 6},
      grid{grid_edges(3), 9};
  const std::vector<std::vector<std::pair<EdgeSet, int>>> classes = {
      {house, cycle}, {cycle, grid}, {house, grid}};
  Dataset ds;
  ds.task = Task::kGraph;
  ds.num_classes = 3;
  ds.seed = cfg.seed;
  ds.generator = cfg.to_json();
  for (int i = 0; i < count; ++i) {
    const int label = i / (count / 3);
    ds.graphs.push_back(motif_graph(cfg.seed, i, base, classes[label], label));
  }
  Rng split_rng = make_rng(cfg.seed, "split");
  ds.split = make_split(count, split_rng);
  ds.validate();
  return ds;
}

Dataset generate(const GeneratorConfig& cfg) {
  switch (cfg.name) {
    case DatasetName::kBa2Motifs: return gen_ba_2motifs(cfg);
    case DatasetName::kTriMotifs: return gen_tri_motifs(cfg);
    default: return gen_node_dataset(cfg);
  }
}

}  // namespace rcx
