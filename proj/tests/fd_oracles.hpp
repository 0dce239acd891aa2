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

// Random instances and finite-difference oracles for the GNN and explainer
// gradients, shared by the unit tests and the acceptance run.
#ifndef RCX_TESTS_FD_ORACLES_HPP_
#define RCX_TESTS_FD_ORACLES_HPP_

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "rcx/explainer.hpp"
#include "rcx/gnn.hpp"
#include "test_util.hpp"

namespace rcx::testing {

inline GnnModel random_model(Rng& rng, Task task, int d_in, int h, int c) {
  GnnModel m = GnnModel::zeros(task, d_in, h, c);
  auto fill = [&](auto& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
  };
  for (auto& w : m.conv) fill(w);
  for (auto& b : m.conv_bias) fill(b);
  fill(m.fc1);
  fill(m.fc1_bias);
  fill(m.fc2);
  fill(m.fc2_bias);
  return m;
}

// Distance to the nearest kink: ReLU pre-activations, and for max pooling the
// gap between the two largest entries of each column.
inline double min_kink_distance(const ForwardTrace& t, Pooling pooling) {
  double mn = std::numeric_limits<double>::infinity();
  for (const auto& z : t.z) mn = std::min(mn, z.cwiseAbs().minCoeff());
  mn = std::min(mn, t.head.fc1_pre.cwiseAbs().minCoeff());
  const Mat& h = t.h[3];
  if (pooling == Pooling::kMax && h.rows() > 1) {
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
      std::vector<double> v(h.rows());
      for (Eigen::Index i = 0; i < h.rows(); ++i) v[i] = h(i, k);
      std::partial_sort(v.begin(), v.begin() + 2, v.end(), std::greater<>());
      // A column that is all zero has no kink inside an active ReLU.
      if (v[0] > 0) mn = std::min(mn, v[0] - v[1]);
    }
  }
  return mn;
}

// Scalar test loss: fixed random linear functionals of the logits and of the
// embedding.
struct Probe {
  Mat r_logits, r_emb;
  double operator()(const ForwardTrace& t) const {
    return (r_logits.array() * t.head.logits.array()).sum() +
           (r_emb.array() * t.embedding.array()).sum();
  }
};

struct GnnFdInstance {
  Graph g;
  GnnModel m;
  std::vector<double> w;
  Probe probe;
};

// Random instance whose pre-activations stay away from ReLU kinks so central
// differences do not straddle them.
inline GnnFdInstance make_gnn_instance(Rng& rng, Task task, Pooling pooling = Pooling::kMean) {
  for (;;) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 6));
    const int d_in = 1 + static_cast<int>(uniform_index(rng, 4));
    const int h = 2 + static_cast<int>(uniform_index(rng, 5));
    const int c = 2 + static_cast<int>(uniform_index(rng, 2));
    Graph g = random_graph(rng, n, d_in, 0.5);
    if (g.num_edges() == 0) continue;
    GnnModel m = random_model(rng, task, d_in, h, c);
    m.pooling = pooling;
    std::vector<double> w(g.num_edges());
    for (auto& x : w) x = uniform(rng, 0.2, 1.0);
    ForwardTrace t = forward(m, WeightedGraph(g, w));
    if (min_kink_distance(t, pooling) < 1e-3) continue;
    Probe p;
    p.r_logits = Mat(t.head.logits.rows(), t.head.logits.cols());
    p.r_emb = Mat(t.embedding.rows(), t.embedding.cols());
    for (Eigen::Index i = 0; i < p.r_logits.size(); ++i) p.r_logits.data()[i] = standard_normal(rng);
    for (Eigen::Index i = 0; i < p.r_emb.size(); ++i) p.r_emb.data()[i] = standard_normal(rng);
    return {std::move(g), std::move(m), std::move(w), std::move(p)};
  }
}

// Worst relative error between backward() and central differences over
// `trials` random instances, covering every parameter and edge weight.
inline double gnn_gradient_error(Task task, std::uint64_t seed, Pooling pooling = Pooling::kMean,
                                 int trials = 20) {
  Rng rng = make_rng(seed, "gnn-gradcheck");
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    GnnFdInstance in = make_gnn_instance(rng, task, pooling);
    GnnModel& m = in.m;
    std::vector<double>& w = in.w;
    auto loss = [&] { return in.probe(forward(m, WeightedGraph(in.g, w))); };
    const WeightedGraph wg(in.g, w);
    const ForwardTrace t = forward(m, wg);
    const GradientBundle gb =
        backward(m, wg, t, Upstream{in.probe.r_logits, in.probe.r_emb});

    auto check_block = [&](auto& param, const auto& grad) {
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        const double fd = central_diff(loss, param.data() + i);
        worst = std::max(worst, rel_err(grad.data()[i], fd));
      }
    };
    for (int l = 0; l < 3; ++l) {
      check_block(m.conv[l], gb.params.conv[l]);
      check_block(m.conv_bias[l], gb.params.conv_bias[l]);
    }
    check_block(m.fc1, gb.params.fc1);
    check_block(m.fc1_bias, gb.params.fc1_bias);
    check_block(m.fc2, gb.params.fc2);
    check_block(m.fc2_bias, gb.params.fc2_bias);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double fd = central_diff(loss, &w[k]);
      worst = std::max(worst, rel_err(gb.edges[k], fd));
    }
  }
  return worst;
}

inline void fill_normal(Rng& rng, double* p, Eigen::Index n, double scale = 1.0) {
  for (Eigen::Index i = 0; i < n; ++i) p[i] = scale * standard_normal(rng);
}

inline GnnModel random_gnn(Rng& rng, Task task, int d_in, int h, int c) {
  GnnModel m = GnnModel::zeros(task, d_in, h, c);
  for (auto& w : m.conv) fill_normal(rng, w.data(), w.size(), 0.7);
  for (auto& b : m.conv_bias) fill_normal(rng, b.data(), b.size(), 0.3);
  fill_normal(rng, m.fc1.data(), m.fc1.size());
  fill_normal(rng, m.fc1_bias.data(), m.fc1_bias.size());
  fill_normal(rng, m.fc2.data(), m.fc2.size());
  fill_normal(rng, m.fc2_bias.data(), m.fc2_bias.size());
  return m;
}

inline ExplainerNet random_net(Rng& rng, int emb, int hidden) {
  ExplainerNet n = ExplainerNet::zeros(emb, hidden);
  fill_normal(rng, n.fc1.data(), n.fc1.size(), 0.5);
  fill_normal(rng, n.fc1_bias.data(), n.fc1_bias.size(), 0.5);
  fill_normal(rng, n.fc2.data(), n.fc2.size(), 0.5);
  n.fc2_bias = 0.1;
  return n;
}

inline LinearBoundary boundary(const Vec& w, double b) {
  LinearBoundary lb;
  lb.w = w;
  lb.b = b;
  return lb;
}

inline double min_abs(const Mat& m) { return m.size() ? m.cwiseAbs().minCoeff() : 1.0; }

// Distance of an instance from every non-smooth point the loss passes through.
inline double kink_margin(const ExplainerConfig& cfg, const GnnModel& m, const ExplainerNet& net,
                   const SampleContext& ctx) {
  const MaskTrace mt = mask_forward(net, ctx.z, ctx.graph);
  const Proxies px = build_proxies(ctx.graph, mt.mask);
  double margin = min_abs(mt.pre);
  for (const auto* wg : {&px.keep, &px.drop}) {
    const ForwardTrace t = forward(m, *wg);
    for (const auto& z : t.z) margin = std::min(margin, min_abs(z));
    margin = std::min(margin, min_abs(t.head.fc1_pre));
  }
  if (cfg.mode == ExplainerMode::kRcExplainer && ctx.bounds.size() > 1) {
    const ForwardTrace td = forward(m, px.drop);
    std::vector<double> v;
    for (const auto& b : ctx.bounds) v.push_back(sigmoid(b.eval(ctx.alpha) * b.eval(td.embedding.row(ctx.row))));
    std::sort(v.begin(), v.end());
    margin = std::min(margin, (v[1] - v[0]) * 1e2);
  }
  if (cfg.mode == ExplainerMode::kNoLdb) {
    // eta / log P blows up as P(c | drop proxy) -> 1; central differences at
    // step 1e-5 lose accuracy there long before the analytic gradient does.
    const double p = forward(m, px.drop).probabilities(ctx.row, ctx.cls);
    margin = std::min(margin, 1.0 - p);
  }
  return margin;
}

struct FdInstance {
  GnnModel m;
  ExplainerNet net;
  SampleContext ctx;
};

inline FdInstance make_fd_instance(Rng& rng, Task task, const ExplainerConfig& cfg) {
  for (;;) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 6));
    const int d_in = 2, h = 4, c = 3;
    Graph g = random_graph(rng, n, d_in, 0.6);
    if (g.num_edges() == 0) continue;
    GnnModel m = random_gnn(rng, task, d_in, h, c);
    ExplainerNet net = random_net(rng, h, 6);
    SampleContext ctx;
    ctx.graph = g;
    ctx.row = task == Task::kGraph ? 0 : static_cast<int>(uniform_index(rng, n));
    const ForwardTrace t = forward(m, ctx.graph);
    ctx.z = t.node_embeddings;
    ctx.alpha = t.embedding.row(ctx.row);
    ctx.cls = argmax(t.probabilities.row(ctx.row)).cls;
    const int nb = cfg.mode == ExplainerMode::kContrastive ? 1 : 3;
    for (int i = 0; i < nb; ++i) {
      Vec w(h);
      fill_normal(rng, w.data(), h);
      ctx.bounds.push_back(boundary(w, standard_normal(rng)));
    }
    FdInstance in{std::move(m), std::move(net), std::move(ctx)};
    if (kink_margin(cfg, in.m, in.net, in.ctx) < 1e-3) continue;
    return in;
  }
}

inline double max_grad_error(const ExplainerConfig& cfg, Task task, std::uint64_t seed, int trials) {
  Rng rng = make_rng(seed, "explainer-fd");
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    FdInstance in = make_fd_instance(rng, task, cfg);
    NetGrads g = NetGrads::zeros_like(in.net);
    sample_loss(cfg, in.m, in.net, in.ctx, &g);
    auto f = [&] { return sample_loss(cfg, in.m, in.net, in.ctx).total; };
    auto check = [&](double* p, const double* gp, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i)
        worst = std::max(worst, rel_err(gp[i], central_diff(f, p + i)));
    };
    check(in.net.fc1.data(), g.fc1.data(), g.fc1.size());
    check(in.net.fc1_bias.data(), g.fc1_bias.data(), g.fc1_bias.size());
    check(in.net.fc2.data(), g.fc2.data(), g.fc2.size());
    check(&in.net.fc2_bias, &g.fc2_bias, 1);
  }
  return worst;
}

inline ExplainerConfig mode_config(ExplainerMode mode) {
  ExplainerConfig c;
  c.mode = mode;
  c.lambda = 0.4;
  c.beta = 0.05;
  c.mu = 0.3;
  if (mode == ExplainerMode::kContrastive) {
    c.contrast_from = 0;
    c.contrast_to = 1;
  }
  return c;
}

}  // namespace rcx::testing

#endif  // RCX_TESTS_FD_ORACLES_HPP_
