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

#include "doctest.h"
#include "test_util.hpp"

#include <functional>
#include <map>
#include <set>

#include "rcx/synth.hpp"

using namespace rcx;

namespace {

// True if some simple cycle of exactly `len` edges passes through v.
bool on_cycle_of_length(const Graph& g, int v, int len) {
  std::vector<char> used(g.num_nodes(), 0);
  std::function<bool(int, int)> dfs = [&](int x, int depth) {
    for (int y : g.neighbors(x)) {
      if (y == v && depth + 1 == len) return true;
      if (used[y] || depth + 1 >= len) continue;
      used[y] = 1;
      if (dfs(y, depth + 1)) return true;
      used[y] = 0;
    }
    return false;
  };
  used[v] = 1;
  return dfs(v, 0);
}

bool connected(const Graph& g) {
  return khop_subgraph(g, 0, g.num_nodes()).graph.num_nodes() == g.num_nodes();
}

// Nodes touched by gt edges, grouped into connected motif components.
std::vector<std::set<int>> motif_components(const Graph& g) {
  std::vector<int> parent(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  std::set<int> touched;
  for (const Edge& e : g.gt_edges()) {
    parent[find(e.u)] = find(e.v);
    touched.insert(e.u);
    touched.insert(e.v);
  }
  std::map<int, std::set<int>> comps;
  for (int v : touched) comps[find(v)].insert(v);
  std::vector<std::set<int>> out;
  for (auto& [_, c] : comps) out.push_back(c);
  return out;
}

}  // namespace

TEST_CASE("gen_ba_graph sizes") {
  CHECK(gen_ba_graph(5, 1, 3).num_edges() == 4);
  CHECK(gen_ba_graph(25, 1, 3).num_edges() == 24);
  CHECK(gen_ba_graph(300, 5, 3).num_edges() == (300 - 5) * 5);
  CHECK(connected(gen_ba_graph(200, 2, 9)));
  CHECK_THROWS_AS(gen_ba_graph(3, 3, 1), ValidationError);
  CHECK_THROWS_AS(gen_ba_graph(3, 0, 1), ValidationError);
  CHECK(gen_ba_graph(40, 2, 8) == gen_ba_graph(40, 2, 8));
}

TEST_CASE("gen_ba_graph is heavier tailed than an Erdos-Renyi control") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Graph ba = gen_ba_graph(300, 1, seed);
    // G(n, M) control with the same edge count.
    Rng rng = make_rng(seed, "er");
    std::set<Edge> er;
    while (static_cast<int>(er.size()) < ba.num_edges()) {
      int a = static_cast<int>(uniform_index(rng, 300)), b = static_cast<int>(uniform_index(rng, 300));
      if (a != b) er.insert(Edge::make(a, b));
    }
    std::vector<int> deg(300, 0);
    for (const Edge& e : er) ++deg[e.u], ++deg[e.v];
    int ba_max = 0;
    for (int i = 0; i < 300; ++i) ba_max = std::max(ba_max, ba.degree(i));
    CHECK(ba_max > *std::max_element(deg.begin(), deg.end()));
  }
}

TEST_CASE("ba-shapes default") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kBaShapes;
  cfg.seed = 1;
  Dataset ds = gen_node_dataset(cfg);
  const Graph& g = ds.graphs.front();
  CHECK(g.num_nodes() == 700);
  CHECK(g.num_edges() == doctest::Approx(2050).epsilon(0.02));
  std::set<int> classes(g.node_labels().begin(), g.node_labels().end());
  CHECK(classes == std::set<int>{0, 1, 2, 3});
  auto comps = motif_components(g);
  CHECK(comps.size() == 80);
  for (const auto& c : comps) {
    CHECK(c.size() == 5);
    int inside = 0;
    for (const Edge& e : g.gt_edges()) inside += c.count(e.u) && c.count(e.v);
    CHECK(inside == 6);
  }
  CHECK(g.gt_edges().size() == 480);
}

TEST_CASE("tree-cycles default: positives lie on 6-cycles") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kTreeCycles;
  cfg.seed = 2;
  Dataset ds = gen_node_dataset(cfg);
  const Graph& g = ds.graphs.front();
  CHECK(ds.num_classes == 2);
  CHECK(g.num_nodes() == 871);
  CHECK(g.num_edges() == doctest::Approx(970).epsilon(0.02));
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.node_labels()[v] == 1) CHECK(on_cycle_of_length(g, v, 6));
  }
}

TEST_CASE("tree-grid default") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kTreeGrid;
  Dataset ds = gen_node_dataset(cfg);
  const Graph& g = ds.graphs.front();
  CHECK(g.num_nodes() == 511 + 80 * 9);
  CHECK(g.gt_edges().size() == 80 * 12);
  for (const auto& c : motif_components(g)) CHECK(c.size() == 9);
}

TEST_CASE("ba-community default") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kBaCommunity;
  cfg.seed = 5;
  Dataset ds = gen_node_dataset(cfg);
  const Graph& g = ds.graphs.front();
  CHECK(ds.num_classes == 8);
  CHECK(g.num_nodes() == 1400);
  CHECK(g.num_edges() == doctest::Approx(4460).epsilon(0.02));
  std::set<int> classes(g.node_labels().begin(), g.node_labels().end());
  CHECK(classes.size() == 8);
  CHECK(connected(g));
  int inter = 0;
  for (const Edge& e : g.edges()) inter += (e.u < 700) != (e.v < 700);
  CHECK(inter >= 14);
  // Community means differ on the two feature blocks.
  double first = g.features().block(0, 0, 700, 5).mean();
  double second = g.features().block(700, 0, 700, 5).mean();
  CHECK(first - second > 0.8);
  REQUIRE(g.feature_dim() == 20);
  for (int v = 0; v < g.num_nodes(); ++v) {
    const int hot = std::min(g.degree(v), 10) - 1;
    for (int c = 0; c < 10; ++c) REQUIRE(g.features()(v, 10 + c) == (c == hot ? 1.0 : 0.0));
  }
}

TEST_CASE("ba-2motifs default") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kBa2Motifs;
  cfg.seed = 3;
  Dataset ds = gen_ba_2motifs(cfg);
  CHECK(ds.graphs.size() == 700);
  int per_class[2] = {0, 0};
  double nodes = 0, edges = 0;
  for (const Graph& g : ds.graphs) {
    ++per_class[*g.graph_label()];
    nodes += g.num_nodes();
    edges += g.num_edges();
    const auto gt = g.gt_edges();
    if (*g.graph_label() == 0) {
      CHECK(gt.size() == 6);
      CHECK(motif_components(g).size() == 1);
    } else {
      CHECK(gt.size() == 5);
    }
    CHECK(connected(g));
  }
  CHECK(per_class[0] == 350);
  CHECK(per_class[1] == 350);
  CHECK(nodes / 700 == doctest::Approx(25).epsilon(0.04));
  CHECK(edges / 700 == doctest::Approx(25.48).epsilon(0.02));
}

TEST_CASE("tri-motifs: two disjoint motifs per graph") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kTriMotifs;
  cfg.graph_count = 30;
  Dataset ds = generate(cfg);
  CHECK(ds.num_classes == 3);
  for (const Graph& g : ds.graphs) {
    auto comps = motif_components(g);
    CHECK(comps.size() == 2);
    CHECK(std::set<int>(comps[0].begin(), comps[0].end()).size() + comps[1].size() ==
          [&] { std::set<int> u(comps[0]); u.insert(comps[1].begin(), comps[1].end()); return u.size(); }());
  }
}

TEST_CASE("generators are deterministic and reject bad names") {
  GeneratorConfig cfg;
  cfg.name = DatasetName::kBa2Motifs;
  cfg.seed = 9;
  cfg.graph_count = 40;
  auto d1 = rcx::testing::temp_dir("synth_a"), d2 = rcx::testing::temp_dir("synth_b");
  save_dataset(generate(cfg), d1);
  save_dataset(generate(cfg), d2);
  CHECK(rcx::testing::slurp(d1 / "graphs.jsonl") == rcx::testing::slurp(d2 / "graphs.jsonl"));
  CHECK(rcx::testing::slurp(d1 / "meta.json") == rcx::testing::slurp(d2 / "meta.json"));
  cfg.seed = 10;
  auto d3 = rcx::testing::temp_dir("synth_c");
  save_dataset(generate(cfg), d3);
  CHECK(rcx::testing::slurp(d1 / "graphs.jsonl") != rcx::testing::slurp(d3 / "graphs.jsonl"));

  CHECK_THROWS_AS(dataset_name_from_string("mutag"), ValidationError);
  GeneratorConfig bad;
  bad.name = DatasetName::kBa2Motifs;
  CHECK_THROWS_AS(gen_node_dataset(bad), ValidationError);
}

TEST_CASE("size overrides do not perturb unrelated stages") {
  GeneratorConfig a;
  a.name = DatasetName::kTreeCycles;
  a.seed = 4;
  GeneratorConfig b = a;
  b.noise_fraction = 0.0;
  const Graph& ga = gen_node_dataset(a).graphs.front();
  Dataset db = gen_node_dataset(b);
  const Graph& gb = db.graphs.front();
  // Same tree and motif placement; only the noise edges differ.
  CHECK(ga.gt_edges() == gb.gt_edges());
  for (const Edge& e : gb.edges()) CHECK(ga.has_edge(e.u, e.v));
}

TEST_CASE("every gt edge exists and motifs are vertex-disjoint") {
  for (DatasetName name : {DatasetName::kBaShapes, DatasetName::kTreeGrid}) {
    GeneratorConfig cfg;
    cfg.name = name;
    cfg.seed = 12;
    const Graph g = gen_node_dataset(cfg).graphs.front();
    for (const Edge& e : g.gt_edges()) CHECK(g.has_edge(e.u, e.v));
    std::size_t total = 0;
    std::set<int> all;
    for (const auto& c : motif_components(g)) {
      total += c.size();
      all.insert(c.begin(), c.end());
    }
    CHECK(total == all.size());
  }
}

TEST_CASE("graph datasets use leaf indicator features") {
  for (DatasetName name : {DatasetName::kBa2Motifs, DatasetName::kTriMotifs}) {
    GeneratorConfig cfg;
    cfg.name = name;
    cfg.graph_count = 12;
    const Dataset ds = generate(cfg);
    for (const Graph& g : ds.graphs) {
      REQUIRE(g.feature_dim() == 10);
      for (int v = 0; v < g.num_nodes(); ++v) {
        const int hot = g.degree(v) == 1 ? 0 : 1;
        for (int c = 0; c < 10; ++c) REQUIRE(g.features()(v, c) == (c == hot ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("structural node datasets use one-hot degree features") {
  for (DatasetName name : {DatasetName::kBaShapes, DatasetName::kTreeCycles,
                           DatasetName::kTreeGrid}) {
    GeneratorConfig cfg;
    cfg.name = name;
    cfg.graph_count = 10;
    const Dataset ds = generate(cfg);
    for (const Graph& g : ds.graphs) {
      REQUIRE(g.feature_dim() == 10);
      for (int v = 0; v < g.num_nodes(); ++v) {
        const int hot = std::min(g.degree(v), 10) - 1;
        for (int c = 0; c < 10; ++c) REQUIRE(g.features()(v, c) == (c == hot ? 1.0 : 0.0));
      }
    }
  }
}
