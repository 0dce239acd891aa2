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


#include "rcx/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rcx/parallel.hpp"

namespace rcx {

std::string to_string(ExplainerMode m) {
  switch (m) {
    case ExplainerMode::kRcExplainer:
      return "rcexplainer";
    case ExplainerMode::kNoLdb:
      return "rcexp-noldb";
    case ExplainerMode::kContrastive:
      return "contrastive";
  }
  return "?";
}

ExplainerMode explainer_mode_from_string(const std::string& s) {
  if (s == "rcexplainer") return ExplainerMode::kRcExplainer;
  if (s == "rcexp-noldb") return ExplainerMode::kNoLdb;
  if (s == "contrastive") return ExplainerMode::kContrastive;
  throw ValidationError("unknown explainer mode '" + s + "'");
}

// --- Config ------------------------------------------------------------------

ExplainerConfig ExplainerConfig::defaults(Task task) {
  ExplainerConfig c;
  if (task == Task::kNode) {
    c.lambda = 0.85;
    c.beta = 0.006;
    c.mu = 0.66;
  } else {
    c.lambda = 0.1;
    c.beta = 6e-5;
    c.mu = 0.66;
  }
  return c;
}

void ExplainerConfig::validate() const {
  require(lambda >= 0.0 && lambda <= 1.0, "explainer: lambda must lie in [0, 1]");
  require(beta >= 0.0, "explainer: beta must be >= 0");
  require(mu >= 0.0, "explainer: mu must be >= 0");
  require(eta >= 0.0, "explainer: eta must be >= 0");
  require(loss_scale > 0.0 && lr > 0.0 && epochs >= 0 && hidden > 0 && khop > 0,
          "explainer: loss_scale, lr, hidden and khop must be positive");
  if (mode == ExplainerMode::kContrastive) {
    require(contrast_from >= 0 && contrast_to >= 0 && contrast_from != contrast_to,
            "explainer: contrastive mode needs two distinct classes");
  }
}

Json ExplainerConfig::to_json() const {
  Json j;
  j["mode"] = to_string(mode);
  j["lambda"] = lambda;
  j["beta"] = beta;
  j["mu"] = mu;
  j["eta"] = eta;
  j["loss_scale"] = loss_scale;
  j["lr"] = lr;
  j["epochs"] = epochs;
  j["hidden"] = hidden;
  j["khop"] = khop;
  j["contrast_from"] = contrast_from;
  j["contrast_to"] = contrast_to;
  j["seed"] = seed;
  return j;
}

ExplainerConfig ExplainerConfig::from_json(const nlohmann::json& j) {
  ExplainerConfig c;
  c.mode = explainer_mode_from_string(j.at("mode").get<std::string>());
  c.lambda = j.at("lambda").get<double>();
  c.beta = j.at("beta").get<double>();
  c.mu = j.at("mu").get<double>();
  c.eta = j.at("eta").get<double>();
  c.loss_scale = j.at("loss_scale").get<double>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.khop = j.at("khop").get<int>();
  c.contrast_from = j.at("contrast_from").get<int>();
  c.contrast_to = j.at("contrast_to").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

// --- Network -----------------------------------------------------------------

ExplainerNet ExplainerNet::zeros(int emb_dim, int hidden) {
  require(emb_dim > 0 && hidden > 0, "explainer: bad network sizes");
  ExplainerNet n;
  n.emb_dim = emb_dim;
  n.hidden = hidden;
  n.fc1 = Mat::Zero(2 * emb_dim, hidden);
  n.fc1_bias = Vec::Zero(hidden);
  n.fc2 = Vec::Zero(hidden);
  return n;
}

ExplainerNet ExplainerNet::init(int emb_dim, int hidden, std::uint64_t seed) {
  ExplainerNet n = zeros(emb_dim, hidden);
  Rng rng = make_rng(seed, "explainer-init");
  const double a1 = std::sqrt(6.0 / (2 * emb_dim + hidden));
  for (Eigen::Index i = 0; i < n.fc1.size(); ++i) n.fc1.data()[i] = (2 * uniform01(rng) - 1) * a1;
  const double a2 = std::sqrt(6.0 / (hidden + 1));
  for (Eigen::Index i = 0; i < n.fc2.size(); ++i) n.fc2[i] = (2 * uniform01(rng) - 1) * a2;
  return n;
}

void ExplainerNet::validate() const {
  require(fc1.rows() == 2 * emb_dim && fc1.cols() == hidden && fc1_bias.size() == hidden &&
              fc2.size() == hidden,
          "explainer: parameter shapes do not match emb_dim/hidden");
  if (!fc1.allFinite() || !fc1_bias.allFinite() || !fc2.allFinite() || !std::isfinite(fc2_bias))
    throw NumericError("explainer: non-finite parameter");
}

NetGrads NetGrads::zeros_like(const ExplainerNet& n) {
  NetGrads g;
  g.fc1 = Mat::Zero(n.fc1.rows(), n.fc1.cols());
  g.fc1_bias = Vec::Zero(n.fc1_bias.size());
  g.fc2 = Vec::Zero(n.fc2.size());
  return g;
}

NetGrads& NetGrads::operator+=(const NetGrads& o) {
  fc1 += o.fc1;
  fc1_bias += o.fc1_bias;
  fc2 += o.fc2;
  fc2_bias += o.fc2_bias;
  return *this;
}

NetGrads& NetGrads::operator*=(double s) {
  fc1 *= s;
  fc1_bias *= s;
  fc2 *= s;
  fc2_bias *= s;
  return *this;
}

MaskTrace mask_forward(const ExplainerNet& net, const Mat& z, const Graph& g) {
  require(z.cols() == net.emb_dim && z.rows() == g.num_nodes(),
          "explainer: embedding shape does not match graph / network");
  MaskTrace t;
  const int ne = g.num_edges();
  t.pre.resize(ne, net.hidden);
  t.mask.resize(ne);
  if (ne == 0) return t;
  // fc1 on a concatenation splits into a per-node projection for each half.
  const Mat left = z * net.fc1.topRows(net.emb_dim);
  const Mat right = z * net.fc1.bottomRows(net.emb_dim);
  const auto& edges = g.edges();
  for (int k = 0; k < ne; ++k) {
    t.pre.row(k) = left.row(edges[k].u) + right.row(edges[k].v) + net.fc1_bias.transpose();
    const double s = t.pre.row(k).cwiseMax(0.0).dot(net.fc2.transpose()) + net.fc2_bias;
    t.mask[k] = sigmoid(s);
  }
  return t;
}

void mask_backward(const ExplainerNet& net, const Mat& z, const Graph& g, const MaskTrace& t,
                   std::span<const double> d_mask, NetGrads& grads) {
  const int ne = g.num_edges();
  require(static_cast<int>(d_mask.size()) == ne, "explainer: mask gradient size mismatch");
  if (ne == 0) return;
  Mat d_left = Mat::Zero(g.num_nodes(), net.hidden);
  Mat d_right = Mat::Zero(g.num_nodes(), net.hidden);
  const auto& edges = g.edges();
  for (int k = 0; k < ne; ++k) {
    const double m = t.mask[k];
    const double ds = d_mask[k] * m * (1.0 - m);
    if (ds == 0.0) continue;
    const auto pre = t.pre.row(k);
    grads.fc2 += ds * pre.cwiseMax(0.0).transpose();
    grads.fc2_bias += ds;
    const Eigen::RowVectorXd dpre =
        (pre.array() > 0.0).select(ds * net.fc2.transpose().array(), 0.0).matrix();
    grads.fc1_bias += dpre.transpose();
    d_left.row(edges[k].u) += dpre;
    d_right.row(edges[k].v) += dpre;
  }
  grads.fc1.topRows(net.emb_dim).noalias() += z.transpose() * d_left;
  grads.fc1.bottomRows(net.emb_dim).noalias() += z.transpose() * d_right;
}

std::vector<double> predict_mask(const ExplainerNet& net, const GnnModel& m, const Graph& g) {
  const ForwardTrace t = forward(m, g);
  return mask_forward(net, t.node_embeddings, g).mask;
}

Mat dense_mask(const Graph& g, std::span<const double> mask) {
  require(static_cast<int>(mask.size()) == g.num_edges(), "mask size does not match graph");
  Mat d = Mat::Zero(g.num_nodes(), g.num_nodes());
  const auto& e = g.edges();
  for (std::size_t k = 0; k < mask.size(); ++k) d(e[k].u, e[k].v) = d(e[k].v, e[k].u) = mask[k];
  return d;
}

Proxies build_proxies(const Graph& g, std::span<const double> mask) {
  require(static_cast<int>(mask.size()) == g.num_edges(), "mask size does not match graph");
  std::vector<double> keep(mask.begin(), mask.end()), drop(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    require(mask[k] >= 0.0 && mask[k] <= 1.0, "mask entries must lie in [0, 1]");
    drop[k] = 1.0 - mask[k];
  }
  return {WeightedGraph(g, std::move(keep)), WeightedGraph(g, std::move(drop))};
}

// --- Losses ------------------------------------------------------------------

double loss_same(std::span<const LinearBoundary> bounds, const Eigen::RowVectorXd& alpha_g,
                 const Eigen::RowVectorXd& alpha_keep, Eigen::RowVectorXd* d_keep) {
  require(!bounds.empty(), "loss_same: region has no boundaries");
  const double inv = 1.0 / static_cast<double>(bounds.size());
  double loss = 0.0;
  for (const auto& b : bounds) {
    const double a = b.eval(alpha_g);
    const double s = sigmoid(-a * b.eval(alpha_keep));
    loss += s * inv;
    if (d_keep) *d_keep += (s * (1.0 - s) * -a * inv) * b.w.transpose();
  }
  return loss;
}

double loss_opp(std::span<const LinearBoundary> bounds, const Eigen::RowVectorXd& alpha_g,
                const Eigen::RowVectorXd& alpha_drop, Eigen::RowVectorXd* d_drop) {
  require(!bounds.empty(), "loss_opp: region has no boundaries");
  std::size_t arg = 0;
  double best = 0.0, best_a = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const double a = bounds[i].eval(alpha_g);
    const double s = sigmoid(a * bounds[i].eval(alpha_drop));
    if (i == 0 || s < best) {
      best = s;
      best_a = a;
      arg = i;
    }
  }
  if (d_drop) *d_drop += (best * (1.0 - best) * best_a) * bounds[arg].w.transpose();
  return best;
}

Regularizers regularizers(std::span<const double> mask, int num_nodes, std::vector<double>* d_sparse,
                          std::vector<double>* d_discrete) {
  require(num_nodes > 0, "regularizers: empty graph");
  const double scale = 2.0 / (static_cast<double>(num_nodes) * num_nodes);
  Regularizers r;
  if (d_sparse) d_sparse->assign(mask.size(), 2.0);
  if (d_discrete) d_discrete->assign(mask.size(), 0.0);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double m = mask[k];
    require(m >= 0.0 && m <= 1.0, "regularizers: mask entry outside [0, 1]");
    r.sparse += 2.0 * m;
    const double a = m > 0.0 ? m * std::log(m) : 0.0;
    const double b = m < 1.0 ? (1.0 - m) * std::log(1.0 - m) : 0.0;
    r.discrete -= scale * (a + b);
    if (d_discrete && m > 0.0 && m < 1.0) (*d_discrete)[k] = -scale * (std::log(m) - std::log(1.0 - m));
  }
  return r;
}

double confidence_loss(double p_keep, double p_drop, double eta, double* d_keep, double* d_drop) {
  constexpr double kLo = 1e-12, kHi = 1.0 - 1e-12;
  const double pk = std::clamp(p_keep, kLo, kHi);
  const double pd = std::clamp(p_drop, kLo, kHi);
  const double ld = std::log(pd);
  if (d_keep) *d_keep = (p_keep == pk) ? -1.0 / pk : 0.0;
  if (d_drop) *d_drop = (p_drop == pd) ? eta / (ld * ld * pd) : 0.0;
  return -std::log(pk) - eta / ld;
}

// --- Samples -----------------------------------------------------------------

SampleContext make_context(const GnnModel& m, const Dataset& ds, int id, int cls,
                           std::vector<LinearBoundary> bounds, int khop) {
  SampleContext ctx;
  ctx.id = id;
  ctx.cls = cls;
  ctx.bounds = std::move(bounds);
  if (ds.task == Task::kGraph) {
    ctx.graph = ds.graphs.at(id);
    ctx.row = 0;
  } else {
    Subgraph sg = khop_subgraph(ds.graphs.front(), id, khop);
    ctx.graph = std::move(sg.graph);
    ctx.row = sg.center;
    ctx.to_original = std::move(sg.to_original);
  }
  const ForwardTrace t = forward(m, ctx.graph);
  ctx.z = t.node_embeddings;
  ctx.alpha = t.embedding.row(ctx.row);
  return ctx;
}

LossBreakdown sample_loss(const ExplainerConfig& cfg, const GnnModel& m, const ExplainerNet& net,
                          const SampleContext& ctx, NetGrads* grads) {
  const Graph& g = ctx.graph;
  const MaskTrace mt = mask_forward(net, ctx.z, g);
  const Proxies px = build_proxies(g, mt.mask);
  const ForwardTrace tk = forward(m, px.keep);
  const ForwardTrace td = forward(m, px.drop);
  const Eigen::RowVectorXd ak = tk.embedding.row(ctx.row);
  const Eigen::RowVectorXd ad = td.embedding.row(ctx.row);
  const double s = cfg.loss_scale;

  LossBreakdown out;
  Upstream up_keep, up_drop;
  if (cfg.mode == ExplainerMode::kNoLdb) {
    const int c = ctx.cls;
    double dk = 0.0, dd = 0.0;
    out.conf = confidence_loss(tk.probabilities(ctx.row, c), td.probabilities(ctx.row, c), cfg.eta,
                               &dk, &dd);
    out.total = out.conf;
    if (grads) {
      // dp_c/dlogits = p_c (e_c - p).
      auto logit_grad = [&](const ForwardTrace& t, double dp) {
        Mat d = Mat::Zero(t.head.logits.rows(), t.head.logits.cols());
        const double pc = t.probabilities(ctx.row, c);
        d.row(ctx.row) = -s * dp * pc * t.probabilities.row(ctx.row);
        d(ctx.row, c) += s * dp * pc;
        return d;
      };
      up_keep.d_logits = logit_grad(tk, dk);
      up_drop.d_logits = logit_grad(td, dd);
    }
  } else {
    Eigen::RowVectorXd dak = Eigen::RowVectorXd::Zero(ak.size());
    Eigen::RowVectorXd dad = Eigen::RowVectorXd::Zero(ad.size());
    out.same = loss_same(ctx.bounds, ctx.alpha, ak, grads ? &dak : nullptr);
    out.opp = loss_opp(ctx.bounds, ctx.alpha, ad, grads ? &dad : nullptr);
    out.total = cfg.lambda * out.same + (1.0 - cfg.lambda) * out.opp;
    if (grads) {
      up_keep.d_embedding = Mat::Zero(tk.embedding.rows(), tk.embedding.cols());
      up_keep.d_embedding.row(ctx.row) = s * cfg.lambda * dak;
      up_drop.d_embedding = Mat::Zero(td.embedding.rows(), td.embedding.cols());
      up_drop.d_embedding.row(ctx.row) = s * (1.0 - cfg.lambda) * dad;
    }
  }

  std::vector<double> d_sparse, d_discrete;
  const Regularizers reg = regularizers(mt.mask, g.num_nodes(), grads ? &d_sparse : nullptr,
                                        grads ? &d_discrete : nullptr);
  out.sparse = reg.sparse;
  out.discrete = reg.discrete;
  out.total = s * (out.total + cfg.beta * reg.sparse + cfg.mu * reg.discrete);
  if (!std::isfinite(out.total)) throw NumericError("explainer: non-finite loss");

  if (grads) {
    const BackwardOptions edges_only{.params = false, .edges = true};
    const std::vector<double> gk = backward(m, px.keep, tk, up_keep, edges_only).edges;
    const std::vector<double> gd = backward(m, px.drop, td, up_drop, edges_only).edges;
    std::vector<double> d_mask(mt.mask.size());
    for (std::size_t k = 0; k < d_mask.size(); ++k) {
      d_mask[k] = gk[k] - gd[k] + s * (cfg.beta * d_sparse[k] + cfg.mu * d_discrete[k]);
    }
    mask_backward(net, ctx.z, g, mt, d_mask, *grads);
  }
  return out;
}

namespace {

std::vector<LinearBoundary> boundaries_for_region(const ExplainerConfig& cfg, const RegionSet& rs,
                                                  int region) {
  if (cfg.mode == ExplainerMode::kNoLdb) return {};
  if (region < 0) return {};
  const DecisionRegion& r = rs.regions[region];
  if (cfg.mode == ExplainerMode::kRcExplainer) return r.boundaries;
  auto match = [&](const LinearBoundary& b) {
    return b.top1 == cfg.contrast_from && b.top2 == cfg.contrast_to;
  };
  for (const auto& b : r.boundaries)
    if (match(b)) return {b};
  for (const auto& other : rs.regions) {
    if (other.cls != cfg.contrast_from) continue;
    for (const auto& b : other.boundaries)
      if (match(b)) return {b};
  }
  throw ConfigError("contrastive: no boundary between classes " + std::to_string(cfg.contrast_from) +
                    " and " + std::to_string(cfg.contrast_to) + " in the region store");
}

// Region for a sample that took no part in extraction: the first region of its
// class whose polytope holds it, else the first bounded region of that class.
int locate_region(const RegionSet& rs, const Eigen::RowVectorXd& alpha, int cls) {
  int fallback = -1;
  for (std::size_t r = 0; r < rs.regions.size(); ++r) {
    const auto& reg = rs.regions[r];
    if (reg.cls != cls || reg.boundaries.empty()) continue;
    if (reg.contains(alpha)) return static_cast<int>(r);
    if (fallback < 0) fallback = static_cast<int>(r);
  }
  return fallback;
}

}  // namespace

std::vector<LinearBoundary> boundaries_for(const ExplainerConfig& cfg, const RegionSet& rs, int id) {
  return boundaries_for_region(cfg, rs, rs.region_of(id));
}

std::vector<int> training_ids(const ExplainerConfig& cfg, const Dataset& ds, const RegionSet& rs,
                              std::span<const int> preds) {
  std::vector<int> ids;
  for (int id : ds.split.train) {
    if (cfg.mode == ExplainerMode::kNoLdb) {
      ids.push_back(id);
      continue;
    }
    if (cfg.mode == ExplainerMode::kContrastive && preds[id] != cfg.contrast_from) continue;
    const int r = rs.region_of(id);
    if (r >= 0 && !rs.regions[r].boundaries.empty()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

TrainedExplainer train_explainer(const Dataset& ds, const RegionSet& rs, const GnnModel& m,
                                 const ExplainerConfig& cfg) {
  cfg.validate();
  require(rs.task == ds.task && rs.num_classes == ds.num_classes,
          "train_explainer: regions were extracted for a different task");
  const SampleEmbeddings emb = embed_samples(m, ds);
  const std::vector<int> ids = training_ids(cfg, ds, rs, emb.preds);
  require(!ids.empty(), "train_explainer: no training samples for mode " + to_string(cfg.mode));

  const int n = static_cast<int>(ids.size());
  std::vector<SampleContext> train(n);
  parallel_for(n, [&](int k) {
    train[k] = make_context(m, ds, ids[k], emb.preds[ids[k]],
                            boundaries_for(cfg, rs, ids[k]), cfg.khop);
  });

  std::vector<SampleContext> val;
  for (int id : ds.split.val) {
    if (cfg.mode == ExplainerMode::kContrastive && emb.preds[id] != cfg.contrast_from) continue;
    std::vector<LinearBoundary> b;
    if (cfg.mode != ExplainerMode::kNoLdb) {
      b = boundaries_for_region(cfg, rs, locate_region(rs, emb.alpha.row(id), emb.preds[id]));
      if (b.empty()) continue;
    }
    val.push_back(make_context(m, ds, id, emb.preds[id], std::move(b), cfg.khop));
  }

  TrainedExplainer out;
  out.net = ExplainerNet::init(m.hidden, cfg.hidden, cfg.seed);
  ExplainerNet& net = out.net;
  Adam opt(cfg.lr);
  std::vector<NetGrads> parts(n);
  std::vector<double> losses(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    parallel_for(n, [&](int k) {
      parts[k] = NetGrads::zeros_like(net);
      losses[k] = sample_loss(cfg, m, net, train[k], &parts[k]).total;
    });
    NetGrads total = NetGrads::zeros_like(net);
    double loss = 0.0;
    for (int k = 0; k < n; ++k) {
      total += parts[k];
      loss += losses[k];
    }
    total *= 1.0 / n;
    loss /= n;
    if (!std::isfinite(loss)) {
      throw NumericError("train_explainer: non-finite loss at epoch " + std::to_string(epoch));
    }
    out.log.epoch_loss.push_back(loss);
    opt.begin_step();
    opt.update(0, net.fc1, total.fc1);
    opt.update(1, net.fc1_bias, total.fc1_bias);
    opt.update(2, net.fc2, total.fc2);
    opt.update(3, &net.fc2_bias, &total.fc2_bias, 1);

    if ((epoch + 1) % 50 == 0 && !val.empty()) {
      std::vector<double> vl(val.size());
      parallel_for(static_cast<int>(val.size()),
                   [&](int k) { vl[k] = sample_loss(cfg, m, net, val[k]).total; });
      out.log.val_loss.emplace_back(epoch + 1,
                                    std::accumulate(vl.begin(), vl.end(), 0.0) / vl.size());
    }
  }
  net.validate();
  return out;
}

// --- Inference -------------------------------------------------------------------

std::vector<double> explain_graph(const ExplainerNet& net, const GnnModel& m, const Graph& g) {
  return predict_mask(net, m, g);
}

NodeExplanation explain_node(const ExplainerNet& net, const GnnModel& m, const Graph& g, int v,
                             int khop) {
  const Subgraph sg = khop_subgraph(g, v, khop);
  const std::vector<double> local = predict_mask(net, m, sg.graph);
  NodeExplanation out;
  out.mask.assign(g.num_edges(), 0.0);
  out.in_scope.assign(g.num_edges(), 0);
  const auto& edges = sg.graph.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const int e = g.edge_index(sg.to_original[edges[k].u], sg.to_original[edges[k].v]);
    out.mask[e] = local[k];
    out.in_scope[e] = 1;
  }
  return out;
}

std::vector<int> select_threshold(std::span<const double> mask, double threshold,
                                  std::span<const char> eligible) {
  std::vector<int> out;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if ((eligible.empty() || eligible[k]) && mask[k] > threshold) out.push_back(static_cast<int>(k));
  return out;
}

std::vector<int> select_top_k(std::span<const double> mask, int k, std::span<const char> eligible) {
  std::vector<int> cand;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (eligible.empty() || eligible[i]) cand.push_back(static_cast<int>(i));
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return mask[a] > mask[b]; });
  cand.resize(std::min<std::size_t>(cand.size(), static_cast<std::size_t>(std::max(k, 0))));
  return cand;
}

// --- Checkpoints -----------------------------------------------------------------

Json explainer_to_json(const ExplainerNet& net, const ExplainerConfig& cfg, const Json& meta) {
  Json j;
  j["format"] = "rcx-explainer";
  j["version"] = 1;
  j["config"] = cfg.to_json();
  j["meta"] = meta;
  Json w;
  w["emb_dim"] = net.emb_dim;
  w["hidden"] = net.hidden;
  w["fc1"] = matrix_to_json(net.fc1);
  w["fc1_bias"] = matrix_to_json(net.fc1_bias.transpose());
  w["fc2"] = matrix_to_json(net.fc2.transpose());
  w["fc2_bias"] = net.fc2_bias;
  j["weights"] = w;
  return j;
}

std::pair<ExplainerNet, ExplainerConfig> explainer_from_json(const nlohmann::json& j, Json* meta) {
  try {
    require(j.value("format", "") == "rcx-explainer", "explainer: not an rcx-explainer checkpoint");
    const ExplainerConfig cfg = ExplainerConfig::from_json(j.at("config"));
    const auto& w = j.at("weights");
    ExplainerNet net = ExplainerNet::zeros(w.at("emb_dim").get<int>(), w.at("hidden").get<int>());
    net.fc1 = matrix_from_json(w.at("fc1"), 2 * net.emb_dim, net.hidden, "fc1");
    net.fc1_bias = matrix_from_json(w.at("fc1_bias"), 1, net.hidden, "fc1_bias").row(0).transpose();
    net.fc2 = matrix_from_json(w.at("fc2"), 1, net.hidden, "fc2").row(0).transpose();
    net.fc2_bias = w.at("fc2_bias").get<double>();
    net.validate();
    if (meta) *meta = j.value("meta", Json::object());
    return {net, cfg};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("explainer: malformed checkpoint: ") + e.what());
  }
}

void save_explainer(const ExplainerNet& net, const ExplainerConfig& cfg, const Json& meta,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << explainer_to_json(net, cfg, meta).dump(2) << '\n';
}

std::pair<ExplainerNet, ExplainerConfig> load_explainer(const std::filesystem::path& path,
                                                        Json* meta) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("explainer: invalid JSON in " + path.string());
  }
  return explainer_from_json(j, meta);
}

}  // namespace rcx
