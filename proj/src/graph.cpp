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

#include "rcx/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

namespace rcx {

Graph::Graph(GraphData data) : n_(data.n) {
  require(n_ >= 0, "graph: negative node count");
  require(data.features.rows() == n_,
          "graph: features must have exactly n rows (got " +
              std::to_string(data.features.rows()) + " for n=" +
              std::to_string(n_) + ")");
  features_ = std::move(data.features);

  auto canon = [&](const EdgeSet& in, const char* what) {
    EdgeSet out;
    out.reserve(in.size());
    for (const Edge& e : in) {
      require(e.u >= 0 && e.u < n_ && e.v >= 0 && e.v < n_,
              std::string("graph: ") + what + " endpoint out of range");
      require(e.u != e.v, std::string("graph: self loop in ") + what);
      out.push_back(Edge::make(e.u, e.v));
    }
    std::sort(out.begin(), out.end());
    require(std::adjacent_find(out.begin(), out.end()) == out.end(),
            std::string("graph: duplicate ") + what);
    return out;
  };
  edges_ = canon(data.edges, "edge");

  graph_label_ = data.graph_label;
  if (!data.node_labels.empty()) {
    require(static_cast<int>(data.node_labels.size()) == n_,
            "graph: node_labels must have length n");
    node_labels_ = std::move(data.node_labels);
  }

  std::vector<int> deg(n_, 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  offsets_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  nbr_.resize(offsets_[n_]);
  nbr_edge_.resize(offsets_[n_]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int idx = 0; idx < num_edges(); ++idx) {
    const Edge& e = edges_[idx];
    nbr_[fill[e.u]] = e.v;
    nbr_edge_[fill[e.u]++] = idx;
  }
  for (int idx = 0; idx < num_edges(); ++idx) {
    const Edge& e = edges_[idx];
    nbr_[fill[e.v]] = e.u;
    nbr_edge_[fill[e.v]++] = idx;
  }
  for (int i = 0; i < n_; ++i) {
    // Neighbor lists are kept ascending.
    const int lo = offsets_[i], hi = offsets_[i + 1];
    std::vector<std::pair<int, int>> tmp;
    tmp.reserve(hi - lo);
    for (int p = lo; p < hi; ++p) tmp.emplace_back(nbr_[p], nbr_edge_[p]);
    std::sort(tmp.begin(), tmp.end());
    for (int p = lo; p < hi; ++p) {
      nbr_[p] = tmp[p - lo].first;
      nbr_edge_[p] = tmp[p - lo].second;
    }
  }

  if (data.gt_edges) {
    has_gt_ = true;
    gt_flags_.assign(edges_.size(), 0);
    for (const Edge& e : canon(*data.gt_edges, "gt edge")) {
      const int idx = edge_index(e.u, e.v);
      require(idx >= 0, "graph: gt edge (" + std::to_string(e.u) + "," +
                            std::to_string(e.v) + ") is not a graph edge");
      gt_flags_[idx] = 1;
    }
  }
}

Graph Graph::from_adjacency(const Mat& a, Mat features) {
  require(a.rows() == a.cols(), "graph: adjacency must be square");
  GraphData d;
  d.n = static_cast<int>(a.rows());
  d.features = std::move(features);
  for (int i = 0; i < d.n; ++i) {
    require(a(i, i) == 0.0, "graph: adjacency diagonal must be zero");
    for (int j = i + 1; j < d.n; ++j) {
      require(a(i, j) == a(j, i), "graph: adjacency must be symmetric");
      require(a(i, j) == 0.0 || a(i, j) == 1.0,
              "graph: adjacency must be {0,1}-valued");
      if (a(i, j) == 1.0) d.edges.push_back({i, j});
    }
  }
  return Graph(std::move(d));
}

EdgeSet Graph::gt_edges() const {
  EdgeSet out;
  for (std::size_t i = 0; i < gt_flags_.size(); ++i) {
    if (gt_flags_[i]) out.push_back(edges_[i]);
  }
  return out;
}

int Graph::edge_index(int a, int b) const {
  if (a < 0 || b < 0 || a >= n_ || b >= n_ || a == b) return -1;
  const Edge key = Edge::make(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return -1;
  return static_cast<int>(it - edges_.begin());
}

std::span<const int> Graph::neighbors(int node) const {
  return {nbr_.data() + offsets_[node],
          static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
}

std::span<const int> Graph::incident_edges(int node) const {
  return {nbr_edge_.data() + offsets_[node],
          static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
}

Mat Graph::adjacency() const {
  Mat a = Mat::Zero(n_, n_);
  for (const Edge& e : edges_) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  return a;
}

Mat Graph::gt_mask() const {
  Mat m = Mat::Zero(n_, n_);
  for (std::size_t i = 0; i < gt_flags_.size(); ++i) {
    if (gt_flags_[i]) m(edges_[i].u, edges_[i].v) = m(edges_[i].v, edges_[i].u) = 1.0;
  }
  return m;
}

GraphData Graph::data() const {
  GraphData d;
  d.n = n_;
  d.features = features_;
  d.edges = edges_;
  d.graph_label = graph_label_;
  d.node_labels = node_labels_;
  if (has_gt_) d.gt_edges = gt_edges();
  return d;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.n_ == b.n_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_ && a.edges_ == b.edges_ &&
         a.graph_label_ == b.graph_label_ && a.node_labels_ == b.node_labels_ &&
         a.has_gt_ == b.has_gt_ && a.gt_flags_ == b.gt_flags_;
}

// --- WeightedGraph ----------------------------------------------------------

WeightedGraph WeightedGraph::unit(const Graph& g) {
  return WeightedGraph(g, std::vector<double>(g.num_edges(), 1.0));
}

WeightedGraph::WeightedGraph(const Graph& g, std::vector<double> w)
    : base(&g), weights(std::move(w)) {
  require(static_cast<int>(weights.size()) == g.num_edges(),
          "weighted graph: one weight per edge required");
}

Mat WeightedGraph::dense_weights() const {
  const int n = base->num_nodes();
  Mat m = Mat::Zero(n, n);
  const auto& edges = base->edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    m(edges[i].u, edges[i].v) = m(edges[i].v, edges[i].u) = weights[i];
  }
  return m;
}

// --- Dataset ----------------------------------------------------------------

std::string to_string(Task t) {
  return t == Task::kGraph ? "graph-classification" : "node-classification";
}

Task task_from_string(const std::string& s) {
  if (s == "graph-classification" || s == "graph") return Task::kGraph;
  if (s == "node-classification" || s == "node") return Task::kNode;
  throw ValidationError("unknown task '" + s + "'");
}

Split make_split(int count, Rng& rng, double train_frac, double val_frac) {
  std::vector<int> ids(count);
  for (int i = 0; i < count; ++i) ids[i] = i;
  shuffle(ids, rng);
  const int n_train = static_cast<int>(std::lround(train_frac * count));
  const int n_val = static_cast<int>(std::lround(val_frac * count));
  Split s;
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  s.test.assign(ids.begin() + n_train + n_val, ids.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

int Dataset::feature_dim() const {
  return graphs.empty() ? 0 : graphs.front().feature_dim();
}

int Dataset::num_samples() const {
  if (task == Task::kNode) return graphs.empty() ? 0 : graphs.front().num_nodes();
  return static_cast<int>(graphs.size());
}

int Dataset::label(int id) const {
  if (task == Task::kNode) return graphs.front().node_labels().at(id);
  return graphs.at(id).graph_label().value();
}

void Dataset::validate() const {
  require(num_classes >= 2, "dataset: need at least two classes");
  require(!graphs.empty(), "dataset: no graphs");
  if (task == Task::kNode) {
    require(graphs.size() == 1,
            "dataset: node-classification datasets contain exactly one graph");
    require(graphs.front().has_node_labels(), "dataset: node labels missing");
  }
  const int d = feature_dim();
  for (const Graph& g : graphs) {
    require(g.feature_dim() == d, "dataset: inconsistent feature dimension");
    if (task == Task::kGraph) {
      require(g.graph_label().has_value(), "dataset: graph label missing");
    }
  }
  for (int id = 0; id < num_samples(); ++id) {
    const int y = label(id);
    require(y >= 0 && y < num_classes, "dataset: label out of range");
  }
  std::vector<int> seen(num_samples(), 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (int id : *part) {
      require(id >= 0 && id < num_samples(), "dataset: split id out of range");
      require(seen[id]++ == 0, "dataset: split indices overlap");
    }
  }
  require(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }),
          "dataset: split does not cover all samples");
}

// --- Normalization ----------------------------------------------------------

Mat normalize_adjacency(const Mat& w, bool add_self_loops) {
  require(w.rows() == w.cols(), "normalize_adjacency: matrix must be square");
  const Eigen::Index n = w.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      require(w(i, j) == w(j, i), "normalize_adjacency: matrix must be symmetric");
      require(w(i, j) >= 0.0, "normalize_adjacency: weights must be nonnegative");
    }
  }
  Mat wt = w;
  if (add_self_loops) wt += Mat::Identity(n, n);
  const Vec deg = wt.rowwise().sum();
  Vec s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  return s.asDiagonal() * wt * s.asDiagonal();
}

Mat normalize_adjacency_backward(const Mat& w, const Mat& g, bool add_self_loops) {
  const Eigen::Index n = w.rows();
  require(g.rows() == n && g.cols() == n, "normalize_adjacency_backward: shape");
  Mat wt = w;
  if (add_self_loops) wt += Mat::Identity(n, n);
  const Vec deg = wt.rowwise().sum();
  Vec s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  // A_ij = wt_ij s_i s_j, s_i = deg_i^-1/2, deg_i = sum_j wt_ij.
  // dL/ds_i = sum_j g_ij wt_ij s_j + sum_j g_ji wt_ji s_j.
  Vec ds = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      ds(i) += g(i, j) * wt(i, j) * s(j) + g(j, i) * wt(j, i) * s(j);
    }
  }
  Vec ddeg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ddeg(i) = deg(i) > 0 ? ds(i) * (-0.5) * s(i) * s(i) * s(i) : 0.0;
  }
  Mat out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = g(i, j) * s(i) * s(j) + ddeg(i);
    }
  }
  return out;
}

NormalizedAdjacency normalize_edges(const Graph& g, std::span<const double> w,
                                    bool add_self_loops) {
  require(static_cast<int>(w.size()) == g.num_edges(),
          "normalize_edges: one weight per edge required");
  const int n = g.num_nodes();
  NormalizedAdjacency a;
  a.self_loops = add_self_loops;
  a.degree.assign(n, add_self_loops ? 1.0 : 0.0);
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    a.degree[edges[e].u] += w[e];
    a.degree[edges[e].v] += w[e];
  }
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = a.degree[i] > 0 ? 1.0 / std::sqrt(a.degree[i]) : 0.0;
  a.self.resize(n);
  for (int i = 0; i < n; ++i) a.self[i] = add_self_loops ? s[i] * s[i] : 0.0;
  a.coef.resize(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    a.coef[e] = w[e] * s[edges[e].u] * s[edges[e].v];
  }
  return a;
}

void propagate(const Graph& g, const NormalizedAdjacency& a, const Mat& in, Mat& out) {
  const int n = g.num_nodes();
  out.resize(n, in.cols());
  for (int i = 0; i < n; ++i) {
    out.row(i) = a.self[i] * in.row(i);
    const auto nb = g.neighbors(i);
    const auto ie = g.incident_edges(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      out.row(i) += a.coef[ie[k]] * in.row(nb[k]);
    }
  }
}

std::vector<double> normalize_edges_backward(const Graph& g, std::span<const double> w,
                                             const NormalizedAdjacency& a,
                                             std::span<const double> d_coef,
                                             std::span<const double> d_self) {
  const int n = g.num_nodes();
  const auto& edges = g.edges();
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = a.degree[i] > 0 ? 1.0 / std::sqrt(a.degree[i]) : 0.0;
  // coef_e = w_e s_u s_v, self_i = s_i^2, s_i = deg_i^-1/2.
  std::vector<double> ds(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (a.self_loops) ds[i] += d_self[i] * 2.0 * s[i];
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    ds[edges[e].u] += d_coef[e] * w[e] * s[edges[e].v];
    ds[edges[e].v] += d_coef[e] * w[e] * s[edges[e].u];
  }
  std::vector<double> ddeg(n);
  for (int i = 0; i < n; ++i) ddeg[i] = -0.5 * ds[i] * s[i] * s[i] * s[i];
  std::vector<double> dw(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int u = edges[e].u, v = edges[e].v;
    dw[e] = d_coef[e] * s[u] * s[v] + ddeg[u] + ddeg[v];
  }
  return dw;
}

// --- Structural operations --------------------------------------------------

Graph remove_edges(const Graph& g, const EdgeSet& s) {
  std::vector<std::uint8_t> drop(g.num_edges(), 0);
  for (const Edge& e : s) {
    const int idx = g.edge_index(e.u, e.v);
    require(idx >= 0, "remove_edges: edge (" + std::to_string(e.u) + "," +
                          std::to_string(e.v) + ") not in graph");
    drop[idx] = 1;
  }
  GraphData d = g.data();
  d.edges.clear();
  if (d.gt_edges) d.gt_edges->clear();
  for (int i = 0; i < g.num_edges(); ++i) {
    if (drop[i]) continue;
    d.edges.push_back(g.edges()[i]);
    if (g.has_gt() && g.gt_flags()[i]) d.gt_edges->push_back(g.edges()[i]);
  }
  return Graph(std::move(d));
}

Subgraph khop_subgraph(const Graph& g, int v, int k) {
  require(v >= 0 && v < g.num_nodes(), "khop_subgraph: node out of range");
  require(k >= 0, "khop_subgraph: negative hop count");
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<int> queue{v};
  dist[v] = 0;
  while (!queue.empty()) {
    const int x = queue.front();
    queue.pop_front();
    if (dist[x] == k) continue;
    for (int y : g.neighbors(x)) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  Subgraph out;
  std::vector<int> local(g.num_nodes(), -1);
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (dist[i] >= 0) {
      local[i] = static_cast<int>(out.to_original.size());
      out.to_original.push_back(i);
    }
  }
  const int m = static_cast<int>(out.to_original.size());
  GraphData d;
  d.n = m;
  d.features.resize(m, g.feature_dim());
  for (int i = 0; i < m; ++i) d.features.row(i) = g.features().row(out.to_original[i]);
  if (g.has_gt()) d.gt_edges = EdgeSet{};
  for (int idx = 0; idx < g.num_edges(); ++idx) {
    const Edge& e = g.edges()[idx];
    if (local[e.u] < 0 || local[e.v] < 0) continue;
    d.edges.push_back({local[e.u], local[e.v]});
    if (g.has_gt() && g.gt_flags()[idx]) d.gt_edges->push_back({local[e.u], local[e.v]});
  }
  d.graph_label = g.graph_label();
  if (g.has_node_labels()) {
    for (int orig : out.to_original) d.node_labels.push_back(g.node_labels()[orig]);
  }
  out.graph = Graph(std::move(d));
  out.center = local[v];
  return out;
}

// --- Serialization ----------------------------------------------------------

namespace {

Json edges_json(const EdgeSet& edges) {
  Json arr = Json::array();
  for (const Edge& e : edges) arr.push_back(Json::array({e.u, e.v}));
  return arr;
}

EdgeSet edges_from_json(const nlohmann::json& j) {
  EdgeSet out;
  for (const auto& e : j) {
    require(e.is_array() && e.size() == 2, "dataset: edge must be [i, j]");
    out.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Json graph_to_json(const Graph& g) {
  Json j;
  j["n"] = g.num_nodes();
  Json feats = Json::array();
  for (int i = 0; i < g.num_nodes(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < g.feature_dim(); ++c) row.push_back(g.features()(i, c));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  j["edges"] = edges_json(g.edges());
  j["graph_label"] = g.graph_label() ? Json(*g.graph_label()) : Json(nullptr);
  j["node_labels"] = g.has_node_labels() ? Json(g.node_labels()) : Json(nullptr);
  j["gt_edges"] = g.has_gt() ? edges_json(g.gt_edges()) : Json(nullptr);
  return j;
}

Graph graph_from_json(const nlohmann::json& j) {
  require(j.contains("n") && j.contains("features") && j.contains("edges"),
          "dataset: graph record needs n, features, edges");
  GraphData d;
  d.n = j.at("n").get<int>();
  const auto& feats = j.at("features");
  require(feats.is_array() && static_cast<int>(feats.size()) == d.n,
          "dataset: features must have n rows");
  const int dim = d.n > 0 ? static_cast<int>(feats[0].size()) : 0;
  d.features.resize(d.n, dim);
  for (int i = 0; i < d.n; ++i) {
    require(static_cast<int>(feats[i].size()) == dim, "dataset: ragged features");
    for (int c = 0; c < dim; ++c) d.features(i, c) = feats[i][c].get<double>();
  }
  d.edges = edges_from_json(j.at("edges"));
  if (j.contains("graph_label") && !j["graph_label"].is_null()) {
    d.graph_label = j["graph_label"].get<int>();
  }
  if (j.contains("node_labels") && !j["node_labels"].is_null()) {
    d.node_labels = j["node_labels"].get<std::vector<int>>();
  }
  if (j.contains("gt_edges") && !j["gt_edges"].is_null()) {
    d.gt_edges = edges_from_json(j["gt_edges"]);
  }
  return Graph(std::move(d));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);
  Json meta;
  meta["task"] = to_string(ds.task);
  meta["num_classes"] = ds.num_classes;
  meta["d_in"] = ds.feature_dim();
  meta["split"] = {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}};
  meta["generator"] = ds.generator;
  meta["seed"] = ds.seed;
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << "\n";
  }
  std::ofstream out(dir / "graphs.jsonl", std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + (dir / "graphs.jsonl").string());
  for (const Graph& g : ds.graphs) out << graph_to_json(g).dump() << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset: bad meta.json: ") + e.what());
  }
  ds.task = task_from_string(meta.at("task").get<std::string>());
  ds.num_classes = meta.at("num_classes").get<int>();
  ds.split.train = meta.at("split").at("train").get<std::vector<int>>();
  ds.split.val = meta.at("split").at("val").get<std::vector<int>>();
  ds.split.test = meta.at("split").at("test").get<std::vector<int>>();
  if (meta.contains("generator")) ds.generator = Json(meta["generator"]);
  if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();

  std::istringstream lines(read_file(dir / "graphs.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    try {
      ds.graphs.push_back(graph_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("dataset: bad graph record: ") + e.what());
    }
  }
  if (meta.contains("d_in") && !ds.graphs.empty()) {
    require(meta["d_in"].get<int>() == ds.feature_dim(),
            "dataset: d_in does not match features");
  }
  ds.validate();
  return ds;
}

}  // namespace rcx
