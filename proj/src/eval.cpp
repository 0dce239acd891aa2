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


#include "rcx/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <utility>

#include "rcx/parallel.hpp"

namespace rcx {

SampleGraph sample_graph(const Dataset& ds, int id, int khop) {
  require(id >= 0 && id < ds.num_samples(), "sample_graph: id out of range");
  SampleGraph s;
  s.id = id;
  if (ds.task == Task::kGraph) {
    s.graph = ds.graphs[id];
    return s;
  }
  Subgraph sg = khop_subgraph(ds.graphs.front(), id, khop);
  s.graph = std::move(sg.graph);
  s.row = sg.center;
  s.to_original = std::move(sg.to_original);
  return s;
}

namespace {

Eigen::RowVectorXd probability_row(const GnnModel& m, const Graph& g, int row) {
  const ForwardTrace t = forward(m, g);
  return t.probabilities.row(m.task == Task::kGraph ? 0 : row);
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Prediction predict_row(const GnnModel& m, const Graph& g, int row) {
  return argmax(probability_row(m, g, row));
}

double class_probability(const GnnModel& m, const Graph& g, int row, int cls) {
  const Eigen::RowVectorXd p = probability_row(m, g, row);
  require(cls >= 0 && cls < p.size(), "class_probability: class out of range");
  return p(cls);
}

MaskFn explainer_masks(const ExplainerNet& net, const GnnModel& m) {
  return [net, m](const Graph& g, int) { return predict_mask(net, m, g); };
}

MaskFn random_masks(std::uint64_t seed) {
  return [seed](const Graph& g, int id) {
    Rng rng = make_rng(seed, "random-mask", static_cast<std::uint64_t>(id));
    std::vector<double> out(g.num_edges());
    for (double& x : out) x = uniform01(rng);
    return out;
  };
}

// --- Fidelity and sparsity --------------------------------------------------

double fidelity(const GnnModel& m, const Graph& g, int row, std::span<const int> removed) {
  const Eigen::RowVectorXd before = probability_row(m, g, row);
  if (removed.empty()) return 0.0;
  const int c = argmax(before).cls;
  EdgeSet s;
  s.reserve(removed.size());
  for (int e : removed) {
    require(e >= 0 && e < g.num_edges(), "fidelity: edge index out of range");
    s.push_back(g.edges()[e]);
  }
  const Eigen::RowVectorXd after = probability_row(m, remove_edges(g, s), row);
  return before(c) - after(c);
}

double sparsity(int selected, int num_edges) {
  require(num_edges > 0, "sparsity: graph has no edges");
  require(selected >= 0 && selected <= num_edges, "sparsity: selection larger than edge set");
  return 1.0 - static_cast<double>(selected) / num_edges;
}

int edges_for_sparsity(double s, int num_edges) {
  require(s >= 0.0 && s <= 1.0, "edges_for_sparsity: sparsity outside [0, 1]");
  const double k = std::ceil((1.0 - s) * num_edges - 1e-9);
  return std::clamp(static_cast<int>(k), 0, num_edges);
}

std::vector<int> positive_ids(const Dataset& ds, std::span<const int> ids) {
  require(ds.task == Task::kGraph && ds.num_classes == 2,
          "positive_ids: needs a binary graph-classification dataset");
  std::vector<int> out;
  for (int id : ids)
    if (ds.label(id) == 1) out.push_back(id);
  return out;
}

namespace {

std::vector<SampleGraph> sample_graphs(const Dataset& ds, std::span<const int> ids, int khop) {
  std::vector<SampleGraph> out(ids.size());
  parallel_for(static_cast<int>(ids.size()),
               [&](int k) { out[k] = sample_graph(ds, ids[k], khop); });
  return out;
}

std::vector<std::vector<double>> sample_masks(std::span<const SampleGraph> samples,
                                              const MaskFn& masks) {
  std::vector<std::vector<double>> out(samples.size());
  parallel_for(static_cast<int>(samples.size()), [&](int k) {
    out[k] = masks(samples[k].graph, samples[k].id);
    require(out[k].size() == static_cast<std::size_t>(samples[k].graph.num_edges()),
            "mask size does not match the sample graph");
  });
  return out;
}

std::vector<double> fidelities_at(const GnnModel& m, std::span<const SampleGraph> samples,
                                  const std::vector<std::vector<double>>& masks, double s) {
  std::vector<double> out(samples.size());
  parallel_for(static_cast<int>(samples.size()), [&](int k) {
    const Graph& g = samples[k].graph;
    const int keep = edges_for_sparsity(s, g.num_edges());
    const std::vector<int> sel = select_top_k(masks[k], keep);
    out[k] = fidelity(m, g, samples[k].row, sel);
  });
  return out;
}

}  // namespace

std::vector<double> sample_fidelities(const GnnModel& m, const Dataset& ds,
                                      std::span<const int> ids, const MaskFn& masks, double s) {
  const std::vector<SampleGraph> samples = sample_graphs(ds, ids, 3);
  return fidelities_at(m, samples, sample_masks(samples, masks), s);
}

FidelityCurve fidelity_sparsity_curve(const GnnModel& m, const Dataset& ds,
                                      std::span<const int> ids, const MaskFn& masks,
                                      std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0 && grid[i] <= 1.0, "fidelity curve: sparsity outside [0, 1]");
    require(i == 0 || grid[i] > grid[i - 1], "fidelity curve: grid must be strictly increasing");
  }
  const std::vector<int> pos = positive_ids(ds, ids);
  require(!pos.empty(), "fidelity curve: no positive samples");
  const std::vector<SampleGraph> samples = sample_graphs(ds, pos, 3);
  const auto sample_mask = sample_masks(samples, masks);
  FidelityCurve curve;
  for (double s : grid) {
    const std::vector<double> f = fidelities_at(m, samples, sample_mask, s);
    CurvePoint p;
    p.sparsity = s;
    p.mean = mean_of(f);
    p.std = sample_std(f, p.mean);
    p.n = static_cast<int>(f.size());
    curve.points.push_back(p);
  }
  return curve;
}

// --- Noise ------------------------------------------------------------------

void NoiseSpec::validate(int feature_dim) const {
  require(pct >= 0.0 && pct <= 0.3, "noise: pct must lie in [0, 0.3]");
  require(max_retries >= 1, "noise: max_retries must be positive");
  require(feature_sigma.size() == feature_dim, "noise: feature_sigma has the wrong size");
  require((feature_sigma.array() >= 0.0).all() && feature_sigma.allFinite(),
          "noise: feature_sigma must be finite and non-negative");
}

Eigen::RowVectorXd feature_sigma(const Dataset& ds, double scale) {
  const int d = ds.feature_dim();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
  double count = 0.0;
  for (const Graph& g : ds.graphs) {
    sum += g.features().colwise().sum();
    sq += g.features().array().square().matrix().colwise().sum();
    count += g.num_nodes();
  }
  Eigen::RowVectorXd out(d);
  for (int c = 0; c < d; ++c) {
    const double mean = count > 0 ? sum(c) / count : 0.0;
    const double var = count > 0 ? std::max(sq(c) / count - mean * mean, 0.0) : 0.0;
    const double rms = count > 0 ? std::sqrt(sq(c) / count) : 0.0;
    if (var > 1e-24) out(c) = scale * std::sqrt(var);
    else if (rms > 0) out(c) = scale * rms;
    else out(c) = scale;
  }
  return out;
}

std::optional<Perturbed> perturb(const Graph& g, int row, const NoiseSpec& spec,
                                 const GnnModel& m, std::uint64_t counter) {
  spec.validate(g.feature_dim());
  const int c = predict_row(m, g, row).cls;
  if (spec.pct == 0.0) {
    Perturbed p{g, {}, 1};
    p.edge_source.resize(g.num_edges());
    std::iota(p.edge_source.begin(), p.edge_source.end(), 0);
    return p;
  }
  Rng rng = make_rng(spec.seed, "perturb", counter);
  const int n = g.num_nodes();
  const int num_edges = g.num_edges();
  const int noisy_nodes = static_cast<int>(std::ceil(spec.pct * n - 1e-9));
  const int toggles = static_cast<int>(std::ceil(spec.pct * num_edges - 1e-9));
  const long long slots = static_cast<long long>(n) * (n - 1) / 2;
  std::vector<int> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0);

  for (int attempt = 1; attempt <= spec.max_retries; ++attempt) {
    GraphData d = g.data();
    shuffle(nodes, rng);
    for (int k = 0; k < noisy_nodes; ++k)
      for (int f = 0; f < d.features.cols(); ++f)
        d.features(nodes[k], f) += spec.feature_sigma(f) * standard_normal(rng);

    std::vector<char> deleted(num_edges, 0);
    std::set<Edge> added;
    int num_deleted = 0;
    for (int t = 0; t < toggles; ++t) {
      const long long can_delete = num_edges - num_deleted;
      const long long can_add = slots - num_edges - static_cast<long long>(added.size());
      if (can_delete + can_add <= 0) break;
      const bool del = uniform01(rng) * static_cast<double>(can_delete + can_add) <
                       static_cast<double>(can_delete);
      if (del) {
        int e;
        do e = static_cast<int>(uniform_index(rng, num_edges));
        while (deleted[e]);
        deleted[e] = 1;
        ++num_deleted;
      } else {
        Edge e;
        do {
          const int a = static_cast<int>(uniform_index(rng, n));
          const int b = static_cast<int>(uniform_index(rng, n));
          e = Edge::make(a, b);
        } while (e.u == e.v || g.has_edge(e.u, e.v) || added.count(e));
        added.insert(e);
      }
    }
    d.edges.clear();
    for (int e = 0; e < num_edges; ++e)
      if (!deleted[e]) d.edges.push_back(g.edges()[e]);
    d.edges.insert(d.edges.end(), added.begin(), added.end());
    if (d.gt_edges) {
      EdgeSet kept;
      for (const Edge& e : *d.gt_edges)
        if (!deleted[g.edge_index(e.u, e.v)]) kept.push_back(e);
      d.gt_edges = std::move(kept);
    }
    Graph out(std::move(d));
    if (predict_row(m, out, row).cls != c) continue;
    Perturbed p;
    p.edge_source.resize(out.num_edges());
    for (int e = 0; e < out.num_edges(); ++e) {
      const Edge& ed = out.edges()[e];
      p.edge_source[e] = added.count(ed) ? -1 : g.edge_index(ed.u, ed.v);
    }
    p.graph = std::move(out);
    p.attempts = attempt;
    return p;
  }
  return std::nullopt;
}

// --- Ranking metrics ---------------------------------------------------------

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "roc_auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    require(l == 0 || l == 1, "roc_auc: labels must be 0 or 1");
    pos += l;
  }
  const std::size_t neg = labels.size() - pos;
  require(pos > 0 && neg > 0, "roc_auc: both classes must be present");
  for (double s : scores) require(!std::isnan(s), "roc_auc: NaN score");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) pos_rank_sum += rank;
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (pos_rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

std::vector<double> node_weights(const Graph& g, std::span<const double> mask) {
  require(mask.size() == static_cast<std::size_t>(g.num_edges()), "node_weights: mask size");
  std::vector<double> a(g.num_nodes(), 0.0);
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edges()[e];
    a[ed.u] = std::max(a[ed.u], mask[e]);
    a[ed.v] = std::max(a[ed.v], mask[e]);
  }
  return a;
}

std::vector<int> top_k_indices(std::span<const double> values, int k) {
  return select_top_k(values, k);
}

namespace {

// One perturbation round shared by the robustness metrics: the mask on every
// sample graph, and per (level, seed) the perturbed graph and its mask.
struct NoisySample {
  std::optional<Perturbed> pert;
  std::vector<double> mask;
};

template <class Score>
std::vector<RobustnessRow> robustness_rows(const GnnModel& m, const Dataset& ds,
                                           std::span<const int> ids, const MaskFn& masks,
                                           const RobustnessConfig& cfg, int khop,
                                           const Score& score) {
  require(cfg.seeds >= 1, "robustness: need at least one seed");
  require(!cfg.k.empty(), "robustness: no k values");
  for (int k : cfg.k) require(k >= 1, "robustness: k must be positive");
  require(!ids.empty(), "robustness: no samples");
  const std::vector<SampleGraph> samples = sample_graphs(ds, ids, khop);
  const auto base_masks = sample_masks(samples, masks);
  const Eigen::RowVectorXd sigma = feature_sigma(ds, cfg.sigma_scale);
  const int count = static_cast<int>(samples.size());

  std::vector<RobustnessRow> rows;
  for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
    // per k: per-seed means, evaluated and skipped counts
    std::vector<std::vector<double>> seed_means(cfg.k.size());
    std::vector<int> evaluated(cfg.k.size(), 0), skipped(cfg.k.size(), 0);
    for (int s = 0; s < cfg.seeds; ++s) {
      NoiseSpec spec;
      spec.pct = cfg.levels[li];
      spec.feature_sigma = sigma;
      spec.max_retries = cfg.max_retries;
      spec.seed = derive_seed(cfg.seed, "noise-seed", static_cast<std::uint64_t>(s));
      std::vector<NoisySample> noisy(count);
      parallel_for(count, [&](int k) {
        noisy[k].pert = perturb(samples[k].graph, samples[k].row, spec, m,
                                static_cast<std::uint64_t>(samples[k].id));
        if (noisy[k].pert) noisy[k].mask = masks(noisy[k].pert->graph, samples[k].id);
      });
      for (std::size_t ki = 0; ki < cfg.k.size(); ++ki) {
        std::vector<std::optional<double>> vals(count);
        parallel_for(count, [&](int k) {
          if (!noisy[k].pert) return;
          vals[k] = score(samples[k].graph, base_masks[k], *noisy[k].pert, noisy[k].mask,
                          cfg.k[ki]);
        });
        std::vector<double> ok;
        for (const auto& v : vals) {
          if (v) ok.push_back(*v);
          else ++skipped[ki];
        }
        evaluated[ki] += static_cast<int>(ok.size());
        if (!ok.empty()) seed_means[ki].push_back(mean_of(ok));
      }
    }
    for (std::size_t ki = 0; ki < cfg.k.size(); ++ki) {
      RobustnessRow r;
      r.noise_pct = cfg.levels[li];
      r.k = cfg.k[ki];
      r.mean = mean_of(seed_means[ki]);
      r.std = sample_std(seed_means[ki], r.mean);
      r.evaluated = evaluated[ki];
      r.skipped = skipped[ki];
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace

std::vector<RobustnessRow> robustness_auc(const GnnModel& m, const Dataset& ds,
                                          std::span<const int> ids, const MaskFn& masks,
                                          const RobustnessConfig& cfg, int khop) {
  auto score = [](const Graph& g, const std::vector<double>& mask, const Perturbed& p,
                  const std::vector<double>& noisy_mask, int k) -> std::optional<double> {
    std::vector<char> truth(g.num_edges(), 0);
    for (int e : select_top_k(mask, k)) truth[e] = 1;
    std::vector<int> labels(p.graph.num_edges());
    int pos = 0;
    for (int e = 0; e < p.graph.num_edges(); ++e) {
      labels[e] = p.edge_source[e] >= 0 && truth[p.edge_source[e]];
      pos += labels[e];
    }
    if (pos == 0 || pos == p.graph.num_edges()) return std::nullopt;
    return roc_auc(noisy_mask, labels);
  };
  return robustness_rows(m, ds, ids, masks, cfg, khop, score);
}

std::vector<RobustnessRow> node_accuracy(const GnnModel& m, const Dataset& ds,
                                         std::span<const int> ids, const MaskFn& masks,
                                         const RobustnessConfig& cfg, int khop) {
  auto score = [](const Graph& g, const std::vector<double>& mask, const Perturbed& p,
                  const std::vector<double>& noisy_mask, int k) -> std::optional<double> {
    const int kk = std::min(k, g.num_nodes());
    if (kk == 0) return std::nullopt;
    const std::vector<int> a = top_k_indices(node_weights(g, mask), kk);
    std::vector<int> b = top_k_indices(node_weights(p.graph, noisy_mask), kk);
    std::sort(b.begin(), b.end());
    int hit = 0;
    for (int v : a) hit += std::binary_search(b.begin(), b.end(), v);
    return static_cast<double>(hit) / kk;
  };
  return robustness_rows(m, ds, ids, masks, cfg, khop, score);
}

// --- Ground truth -------------------------------------------------------------

std::vector<int> motif_ids(const Dataset& ds) {
  std::vector<int> out;
  if (ds.task == Task::kGraph) {
    for (int i = 0; i < static_cast<int>(ds.graphs.size()); ++i) {
      const auto& f = ds.graphs[i].gt_flags();
      if (std::find(f.begin(), f.end(), 1) != f.end()) out.push_back(i);
    }
    return out;
  }
  const Graph& g = ds.graphs.front();
  if (!g.has_gt()) return out;
  for (int v = 0; v < g.num_nodes(); ++v) {
    for (int e : g.incident_edges(v)) {
      if (g.gt_flags()[e]) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

GroundTruthResult ground_truth_auc_acc(const Dataset& ds, std::span<const int> ids,
                                       const MaskFn& masks, int khop) {
  for (const Graph& g : ds.graphs) require(g.has_gt(), "ground truth: dataset has no motif mask");
  const std::vector<SampleGraph> samples = sample_graphs(ds, ids, khop);
  const auto sample_mask = sample_masks(samples, masks);
  GroundTruthResult r;
  std::vector<double> scores;
  std::vector<int> labels;
  double acc_sum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& flags = samples[k].graph.gt_flags();
    const int num_gt = static_cast<int>(std::count(flags.begin(), flags.end(), 1));
    if (num_gt == 0) {
      ++r.skipped;
      continue;
    }
    int hit = 0;
    for (int e : select_top_k(sample_mask[k], num_gt)) hit += flags[e];
    acc_sum += static_cast<double>(hit) / num_gt;
    for (std::size_t e = 0; e < flags.size(); ++e) {
      scores.push_back(sample_mask[k][e]);
      labels.push_back(flags[e]);
    }
    ++r.evaluated;
  }
  require(r.evaluated > 0, "ground truth: no sample has a motif edge in scope");
  r.accuracy = acc_sum / r.evaluated;
  const bool mixed = std::find(labels.begin(), labels.end(), 0) != labels.end();
  r.auc = mixed ? roc_auc(scores, labels) : 1.0;
  return r;
}

// --- Timing ---------------------------------------------------------------------

TimingResult time_inference(const ExplainerNet& net, const GnnModel& m, const Dataset& ds,
                            std::span<const int> ids, int khop) {
  TimingResult r;
  std::vector<double> secs;
  double edges = 0.0;
  for (int id : ids) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    if (ds.task == Task::kGraph) {
      const std::vector<double> mask = explain_graph(net, m, ds.graphs[id]);
      edges += static_cast<double>(mask.size());
    } else {
      const NodeExplanation e = explain_node(net, m, ds.graphs.front(), id, khop);
      edges += static_cast<double>(std::count(e.in_scope.begin(), e.in_scope.end(), 1));
    }
    secs.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  r.n = static_cast<int>(secs.size());
  r.mean_seconds = mean_of(secs);
  r.std_seconds = sample_std(secs, r.mean_seconds);
  r.mean_edges = r.n > 0 ? edges / r.n : 0.0;
  return r;
}

// --- CSV ----------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  return out;
}

}  // namespace

void write_fidelity_csv(const std::filesystem::path& path, const FidelityCurve& curve) {
  std::ofstream out = open_csv(path);
  out << "sparsity,mean,std,n\n";
  for (const CurvePoint& p : curve.points)
    out << format_number(p.sparsity) << ',' << format_number(p.mean) << ','
        << format_number(p.std) << ',' << p.n << '\n';
}

void write_robustness_csv(const std::filesystem::path& path, std::span<const RobustnessRow> rows,
                          const std::string& value_column) {
  std::ofstream out = open_csv(path);
  out << "noise_pct,k," << value_column << ",std,evaluated,skipped\n";
  for (const RobustnessRow& r : rows)
    out << format_number(r.noise_pct) << ',' << r.k << ',' << format_number(r.mean) << ','
        << format_number(r.std) << ',' << r.evaluated << ',' << r.skipped << '\n';
}

void write_gt_csv(const std::filesystem::path& path, const GroundTruthResult& r) {
  std::ofstream out = open_csv(path);
  out << "auc,accuracy,evaluated,skipped\n";
  out << format_number(r.auc) << ',' << format_number(r.accuracy) << ',' << r.evaluated << ','
      << r.skipped << '\n';
}

void write_timing_csv(const std::filesystem::path& path, const TimingResult& r) {
  std::ofstream out = open_csv(path);
  out << "n,mean_seconds,std_seconds,mean_edges\n";
  out << r.n << ',' << format_number(r.mean_seconds) << ',' << format_number(r.std_seconds) << ','
      << format_number(r.mean_edges) << '\n';
}

}  // namespace rcx
