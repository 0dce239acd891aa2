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


#include "rcx/gnn.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "rcx/parallel.hpp"

namespace rcx {

namespace {

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

// dx = dy where x > 0, else 0 (subgradient 0 at 0).
Mat relu_backward(const Mat& x, const Mat& dy) {
  return (x.array() > 0.0).select(dy, 0.0);
}

Mat glorot(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = (2.0 * uniform01(rng) - 1.0) * a;
  return m;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

void check_shape(const Mat& m, int r, int c, const std::string& name) {
  require(m.rows() == r && m.cols() == c,
          name + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::kMean:
      return "mean";
    case Pooling::kMax:
      return "max";
    case Pooling::kSum:
      return "sum";
  }
  return "?";
}

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::kMean;
  if (s == "max") return Pooling::kMax;
  if (s == "sum") return Pooling::kSum;
  throw ValidationError("unknown pooling '" + s + "'");
}

GnnModel GnnModel::zeros(Task task, int d_in, int hidden, int num_classes) {
  require(d_in > 0 && hidden > 0 && num_classes >= 2, "gnn: bad architecture sizes");
  GnnModel m;
  m.task = task;
  m.d_in = d_in;
  m.hidden = hidden;
  m.num_classes = num_classes;
  m.conv[0] = Mat::Zero(d_in, hidden);
  m.conv[1] = Mat::Zero(hidden, hidden);
  m.conv[2] = Mat::Zero(hidden, hidden);
  for (auto& b : m.conv_bias) b = Vec::Zero(hidden);
  m.fc1 = Mat::Zero(hidden, hidden);
  m.fc1_bias = Vec::Zero(hidden);
  m.fc2 = Mat::Zero(hidden, num_classes);
  m.fc2_bias = Vec::Zero(num_classes);
  return m;
}

GnnModel GnnModel::init(Task task, int d_in, int hidden, int num_classes, std::uint64_t seed) {
  GnnModel m = zeros(task, d_in, hidden, num_classes);
  Rng rng = make_rng(seed, "gnn-init");
  for (auto& w : m.conv) w = glorot(static_cast<int>(w.rows()), static_cast<int>(w.cols()), rng);
  m.fc1 = glorot(hidden, hidden, rng);
  m.fc2 = glorot(hidden, num_classes, rng);
  return m;
}

void GnnModel::validate() const {
  require(d_in > 0 && hidden > 0 && num_classes >= 2, "gnn: bad architecture sizes");
  check_shape(conv[0], d_in, hidden, "conv0");
  check_shape(conv[1], hidden, hidden, "conv1");
  check_shape(conv[2], hidden, hidden, "conv2");
  for (const auto& b : conv_bias) require(b.size() == hidden, "conv_bias: wrong length");
  check_shape(fc1, hidden, hidden, "fc1");
  check_shape(fc2, hidden, num_classes, "fc2");
  require(fc1_bias.size() == hidden, "fc1_bias: wrong length");
  require(fc2_bias.size() == num_classes, "fc2_bias: wrong length");
  bool finite = fc1.allFinite() && fc2.allFinite() && fc1_bias.allFinite() && fc2_bias.allFinite();
  for (const auto& w : conv) finite = finite && all_finite(w);
  for (const auto& b : conv_bias) finite = finite && b.allFinite();
  if (!finite) throw NumericError("gnn: non-finite parameter");
}

std::size_t GnnModel::num_parameters() const {
  std::size_t n = fc1.size() + fc1_bias.size() + fc2.size() + fc2_bias.size();
  for (const auto& w : conv) n += w.size();
  for (const auto& b : conv_bias) n += b.size();
  return n;
}

// --- Head ------------------------------------------------------------------

HeadTrace head_forward(const GnnModel& m, const Mat& alpha) {
  require(alpha.cols() == m.hidden, "head: embedding width mismatch");
  HeadTrace t;
  t.input = alpha;
  t.fc1_pre = alpha * m.fc1;
  t.fc1_pre.rowwise() += m.fc1_bias.transpose();
  t.fc1_act = relu(t.fc1_pre);
  t.logits = t.fc1_act * m.fc2;
  t.logits.rowwise() += m.fc2_bias.transpose();
  return t;
}

Mat head_backward(const GnnModel& m, const HeadTrace& t, const Mat& d_logits, GnnGrads* grads) {
  require(d_logits.rows() == t.logits.rows() && d_logits.cols() == t.logits.cols(),
          "head_backward: upstream shape mismatch");
  if (grads) {
    grads->fc2.noalias() += t.fc1_act.transpose() * d_logits;
    grads->fc2_bias += d_logits.colwise().sum().transpose();
  }
  const Mat d_pre = relu_backward(t.fc1_pre, d_logits * m.fc2.transpose());
  if (grads) {
    grads->fc1.noalias() += t.input.transpose() * d_pre;
    grads->fc1_bias += d_pre.colwise().sum().transpose();
  }
  return d_pre * m.fc1.transpose();
}

Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// --- Forward / backward ------------------------------------------------------

ForwardTrace forward(const GnnModel& m, const WeightedGraph& wg) {
  const Graph& g = wg.graph();
  require(g.feature_dim() == m.d_in, "forward: graph has " + std::to_string(g.feature_dim()) +
                                         " feature columns, model expects " +
                                         std::to_string(m.d_in));
  require(wg.weights.size() == static_cast<std::size_t>(g.num_edges()),
          "forward: edge weight count mismatch");
  require(g.num_nodes() > 0, "forward: empty graph");
  m.validate();
  ForwardTrace t;
  t.adj = normalize_edges(g, wg.weights);
  t.h[0] = g.features();
  for (int l = 0; l < 3; ++l) {
    propagate(g, t.adj, t.h[l], t.p[l]);
    t.z[l].noalias() = t.p[l] * m.conv[l];
    t.z[l].rowwise() += m.conv_bias[l].transpose();
    t.h[l + 1] = relu(t.z[l]);
  }
  t.node_embeddings = t.h[3];
  if (m.task == Task::kGraph) {
    switch (m.pooling) {
      case Pooling::kMean:
        t.embedding = t.h[3].colwise().mean();
        break;
      case Pooling::kSum:
        t.embedding = t.h[3].colwise().sum();
        break;
      case Pooling::kMax:
        t.embedding.resize(1, m.hidden);
        t.pool_arg.resize(m.hidden);
        for (int k = 0; k < m.hidden; ++k) {
          Eigen::Index arg;
          t.embedding(0, k) = t.h[3].col(k).maxCoeff(&arg);  // first maximum
          t.pool_arg[k] = static_cast<int>(arg);
        }
        break;
    }
  } else {
    t.embedding = t.h[3];
  }
  t.head = head_forward(m, t.embedding);
  t.probabilities = softmax_rows(t.head.logits);
  return t;
}

ForwardTrace forward(const GnnModel& m, const Graph& g) { return forward(m, WeightedGraph::unit(g)); }

GnnGrads GnnGrads::zeros_like(const GnnModel& m) {
  GnnGrads g;
  for (int l = 0; l < 3; ++l) {
    g.conv[l] = Mat::Zero(m.conv[l].rows(), m.conv[l].cols());
    g.conv_bias[l] = Vec::Zero(m.conv_bias[l].size());
  }
  g.fc1 = Mat::Zero(m.fc1.rows(), m.fc1.cols());
  g.fc1_bias = Vec::Zero(m.fc1_bias.size());
  g.fc2 = Mat::Zero(m.fc2.rows(), m.fc2.cols());
  g.fc2_bias = Vec::Zero(m.fc2_bias.size());
  return g;
}

GnnGrads& GnnGrads::operator+=(const GnnGrads& o) {
  for (int l = 0; l < 3; ++l) {
    conv[l] += o.conv[l];
    conv_bias[l] += o.conv_bias[l];
  }
  fc1 += o.fc1;
  fc1_bias += o.fc1_bias;
  fc2 += o.fc2;
  fc2_bias += o.fc2_bias;
  return *this;
}

GnnGrads& GnnGrads::operator*=(double s) {
  for (int l = 0; l < 3; ++l) {
    conv[l] *= s;
    conv_bias[l] *= s;
  }
  fc1 *= s;
  fc1_bias *= s;
  fc2 *= s;
  fc2_bias *= s;
  return *this;
}

Mat GradientBundle::dense_edges(const Graph& g) const {
  Mat d = Mat::Zero(g.num_nodes(), g.num_nodes());
  const auto& e = g.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) d(e[k].u, e[k].v) = d(e[k].v, e[k].u) = edges[k];
  return d;
}

GradientBundle backward(const GnnModel& m, const WeightedGraph& wg, const ForwardTrace& t,
                        const Upstream& up, BackwardOptions opt) {
  const Graph& g = wg.graph();
  const int n = g.num_nodes();
  require(t.h[3].rows() == n, "backward: trace does not match graph");
  GradientBundle out;
  GnnGrads* pg = nullptr;
  if (opt.params) {
    out.params = GnnGrads::zeros_like(m);
    pg = &out.params;
  }

  Mat d_emb = Mat::Zero(t.embedding.rows(), t.embedding.cols());
  if (up.d_logits.size() > 0) d_emb += head_backward(m, t.head, up.d_logits, pg);
  if (up.d_embedding.size() > 0) {
    require(up.d_embedding.rows() == d_emb.rows() && up.d_embedding.cols() == d_emb.cols(),
            "backward: d_embedding shape mismatch");
    d_emb += up.d_embedding;
  }

  Mat dh;
  if (m.task == Task::kGraph) {
    switch (m.pooling) {
      case Pooling::kMean:
        dh = d_emb.replicate(n, 1) / static_cast<double>(n);
        break;
      case Pooling::kSum:
        dh = d_emb.replicate(n, 1);
        break;
      case Pooling::kMax:
        dh = Mat::Zero(n, m.hidden);
        for (int k = 0; k < m.hidden; ++k) dh(t.pool_arg[k], k) = d_emb(0, k);
        break;
    }
  } else {
    dh = d_emb;
  }

  const auto& edges = g.edges();
  std::vector<double> d_coef(opt.edges ? edges.size() : 0, 0.0);
  std::vector<double> d_self(opt.edges ? n : 0, 0.0);
  for (int l = 2; l >= 0; --l) {
    const Mat dz = relu_backward(t.z[l], dh);
    if (pg) {
      pg->conv[l].noalias() += t.p[l].transpose() * dz;
      pg->conv_bias[l] += dz.colwise().sum().transpose();
    }
    if (!opt.edges && l == 0) break;
    const Mat dp = dz * m.conv[l].transpose();
    if (opt.edges) {
      const Mat& hl = t.h[l];
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const int u = edges[k].u, v = edges[k].v;
        d_coef[k] += dp.row(u).dot(hl.row(v)) + dp.row(v).dot(hl.row(u));
      }
      for (int i = 0; i < n; ++i) d_self[i] += dp.row(i).dot(hl.row(i));
    }
    if (l > 0) propagate(g, t.adj, dp, dh);  // A_hat is symmetric
  }
  if (opt.edges) out.edges = normalize_edges_backward(g, wg.weights, t.adj, d_coef, d_self);
  return out;
}

// --- Prediction ------------------------------------------------------------

Prediction argmax(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  Prediction p;
  p.cls = 0;
  p.confidence = probs(0);
  for (Eigen::Index c = 1; c < probs.size(); ++c) {
    if (probs(c) > p.confidence) {
      p.cls = static_cast<int>(c);
      p.confidence = probs(c);
    }
  }
  return p;
}

Prediction predict(const GnnModel& m, const Graph& g) {
  const ForwardTrace t = forward(m, g);
  return argmax(t.probabilities.row(0));
}

std::vector<Prediction> predict_nodes(const GnnModel& m, const Graph& g) {
  const ForwardTrace t = forward(m, g);
  std::vector<Prediction> out(t.probabilities.rows());
  for (Eigen::Index i = 0; i < t.probabilities.rows(); ++i) out[i] = argmax(t.probabilities.row(i));
  return out;
}

// --- Adam ------------------------------------------------------------------

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::begin_step() { ++t_; }

void Adam::update(std::size_t slot, double* param, const double* grad, std::size_t n) {
  require(t_ > 0, "adam: begin_step not called");
  if (slot >= m_.size()) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
  }
  auto& m = m_[slot];
  auto& v = v_[slot];
  if (m.empty()) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  require(m.size() == n, "adam: parameter block changed size");
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mh = m[i] / c1;
    const double vh = v[i] / c2;
    param[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
  }
}

// --- Training --------------------------------------------------------------

Json TrainConfig::to_json() const {
  Json j;
  j["lr"] = lr;
  j["epochs"] = epochs;
  j["weight_decay"] = weight_decay;
  j["seed"] = seed;
  j["hidden"] = hidden;
  j["pooling"] = rcx::to_string(pooling);
  j["batch_size"] = batch_size;
  return j;
}

TrainConfig TrainConfig::defaults_for(const Dataset& ds) {
  TrainConfig c;
  const std::string name =
      ds.generator.is_object() ? ds.generator.value("name", std::string()) : std::string();
  if (name == "ba-community") {
    c.lr = 0.01;
    c.epochs = 2000;
    c.weight_decay = 5e-3;
  } else if (ds.task == Task::kGraph) {
    c.lr = 0.01;
    c.pooling = Pooling::kMax;
  }
  return c;
}

namespace {

// Mean cross-entropy and its gradient over the listed samples.
struct LossResult {
  double loss = 0.0;
  int correct = 0;
  GnnGrads grads;
};

LossResult graph_task_loss(const GnnModel& m, const Dataset& ds, const std::vector<int>& ids) {
  const int count = static_cast<int>(ids.size());
  std::vector<LossResult> parts(count);
  parallel_for(count, [&](int k) {
    const Graph& g = ds.graphs[ids[k]];
    const WeightedGraph wg = WeightedGraph::unit(g);
    const ForwardTrace t = forward(m, wg);
    const int y = *g.graph_label();
    Upstream up;
    up.d_logits = t.probabilities;
    up.d_logits(0, y) -= 1.0;
    up.d_logits /= count;
    LossResult& r = parts[k];
    r.loss = -std::log(std::max(t.probabilities(0, y), 1e-300)) / count;
    r.correct = argmax(t.probabilities.row(0)).cls == y;
    r.grads = backward(m, wg, t, up, {.params = true, .edges = false}).params;
  });
  LossResult total;
  total.grads = GnnGrads::zeros_like(m);
  for (const auto& r : parts) {
    total.loss += r.loss;
    total.correct += r.correct;
    total.grads += r.grads;
  }
  return total;
}

LossResult node_task_loss(const GnnModel& m, const Dataset& ds, const std::vector<int>& ids) {
  const Graph& g = ds.graphs.front();
  const WeightedGraph wg = WeightedGraph::unit(g);
  const ForwardTrace t = forward(m, wg);
  const double count = static_cast<double>(ids.size());
  Upstream up;
  up.d_logits = Mat::Zero(t.probabilities.rows(), t.probabilities.cols());
  LossResult r;
  for (int id : ids) {
    const int y = g.node_labels()[id];
    up.d_logits.row(id) = t.probabilities.row(id) / count;
    up.d_logits(id, y) -= 1.0 / count;
    r.loss -= std::log(std::max(t.probabilities(id, y), 1e-300)) / count;
    r.correct += argmax(t.probabilities.row(id)).cls == y;
  }
  r.grads = backward(m, wg, t, up, {.params = true, .edges = false}).params;
  return r;
}

// Accuracy and mean cross-entropy without gradients.
std::pair<double, double> accuracy_and_loss(const GnnModel& m, const Dataset& ds,
                                            const std::vector<int>& ids) {
  if (ids.empty()) return {0.0, 0.0};
  std::vector<double> nll(ids.size());
  std::vector<char> hit(ids.size());
  auto score = [&](std::size_t k, const Eigen::RowVectorXd& p) {
    const int y = ds.label(ids[k]);
    nll[k] = -std::log(std::max(p(y), 1e-300));
    hit[k] = argmax(p).cls == y;
  };
  if (ds.task == Task::kNode) {
    const ForwardTrace t = forward(m, ds.graphs.front());
    for (std::size_t k = 0; k < ids.size(); ++k) score(k, t.probabilities.row(ids[k]));
  } else {
    parallel_for(static_cast<int>(ids.size()), [&](int k) {
      score(k, forward(m, ds.graphs[ids[k]]).probabilities.row(0));
    });
  }
  double loss = 0.0;
  int correct = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    loss += nll[k];
    correct += hit[k];
  }
  return {static_cast<double>(correct) / ids.size(), loss / ids.size()};
}

}  // namespace

double accuracy(const GnnModel& m, const Dataset& ds, const std::vector<int>& ids) {
  if (ids.empty()) return 0.0;
  const SampleEmbeddings e = embed_samples(m, ds);
  int correct = 0;
  for (int id : ids) correct += e.preds[id] == ds.label(id);
  return static_cast<double>(correct) / ids.size();
}

SampleEmbeddings embed_samples(const GnnModel& m, const Dataset& ds) {
  SampleEmbeddings out;
  if (ds.task == Task::kNode) {
    const ForwardTrace t = forward(m, ds.graphs.front());
    out.alpha = t.embedding;
    out.preds.resize(t.probabilities.rows());
    for (Eigen::Index i = 0; i < t.probabilities.rows(); ++i)
      out.preds[i] = argmax(t.probabilities.row(i)).cls;
    return out;
  }
  const int n = static_cast<int>(ds.graphs.size());
  out.alpha.resize(n, m.hidden);
  out.preds.resize(n);
  parallel_for(n, [&](int i) {
    const ForwardTrace t = forward(m, ds.graphs[i]);
    out.alpha.row(i) = t.embedding.row(0);
    out.preds[i] = argmax(t.probabilities.row(0)).cls;
  });
  return out;
}

std::pair<GnnModel, TrainMetrics> train_gnn(const Dataset& ds, const TrainConfig& cfg) {
  ds.validate();
  require(!ds.split.train.empty(), "train_gnn: empty training split");
  require(cfg.lr > 0 && cfg.epochs > 0 && cfg.weight_decay >= 0 &&
              cfg.batch_size >= 0, "train_gnn: bad config");
  GnnModel m = GnnModel::init(ds.task, ds.feature_dim(), cfg.hidden, ds.num_classes, cfg.seed);
  m.pooling = cfg.pooling;
  Adam opt(cfg.lr);
  GnnModel best = m;
  double best_val = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  TrainMetrics metrics;
  std::vector<int> order = ds.split.train;
  const int batch = ds.task == Task::kGraph && cfg.batch_size > 0
                        ? std::min<int>(cfg.batch_size, static_cast<int>(order.size()))
                        : static_cast<int>(order.size());
  Rng batch_rng = make_rng(cfg.seed, "gnn-batch");
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < static_cast<int>(order.size())) shuffle(order, batch_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::vector<int> ids(order.begin() + start,
                                 order.begin() + std::min(order.size(), start + batch));
      LossResult r = ds.task == Task::kGraph ? graph_task_loss(m, ds, ids)
                                             : node_task_loss(m, ds, ids);
      if (!std::isfinite(r.loss)) {
        throw NumericError("train_gnn: loss is not finite at epoch " + std::to_string(epoch));
      }
      epoch_loss += r.loss * ids.size() / order.size();
      GnnGrads& gr = r.grads;
      const double wd = cfg.weight_decay;
      for (int l = 0; l < 3; ++l) {
        gr.conv[l] += wd * m.conv[l];
        gr.conv_bias[l] += wd * m.conv_bias[l];
      }
      gr.fc1 += wd * m.fc1;
      gr.fc1_bias += wd * m.fc1_bias;
      gr.fc2 += wd * m.fc2;
      gr.fc2_bias += wd * m.fc2_bias;
      opt.begin_step();
      for (int l = 0; l < 3; ++l) {
        opt.update(2 * l, m.conv[l], gr.conv[l]);
        opt.update(2 * l + 1, m.conv_bias[l], gr.conv_bias[l]);
      }
      opt.update(6, m.fc1, gr.fc1);
      opt.update(7, m.fc1_bias, gr.fc1_bias);
      opt.update(8, m.fc2, gr.fc2);
      opt.update(9, m.fc2_bias, gr.fc2_bias);
    }
    metrics.final_loss = epoch_loss;

    const auto [val, val_loss] = accuracy_and_loss(m, ds, ds.split.val);
    if (val > best_val || (val == best_val && val_loss < best_val_loss)) {
      best_val = val;
      best_val_loss = val_loss;
      best = m;
      metrics.best_epoch = epoch + 1;
    }
  }
  best.validate();
  metrics.train_acc = accuracy(best, ds, ds.split.train);
  metrics.val_acc = accuracy(best, ds, ds.split.val);
  metrics.test_acc = accuracy(best, ds, ds.split.test);
  return {best, metrics};
}

// --- Checkpoints -------------------------------------------------------------

Json matrix_to_json(const Mat& m) {
  Json j;
  j["shape"] = {m.rows(), m.cols()};
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  j["data"] = std::move(data);
  return j;
}

Mat matrix_from_json(const nlohmann::json& j, int rows, int cols, const std::string& name) {
  require(j.is_object() && j.contains("shape") && j.contains("data"), name + ": missing shape/data");
  const auto shape = j.at("shape").get<std::vector<long long>>();
  require(shape.size() == 2 && shape[0] == rows && shape[1] == cols,
          name + ": shape does not match architecture");
  const auto& data = j.at("data");
  require(data.is_array() && data.size() == static_cast<std::size_t>(rows) * cols,
          name + ": wrong number of values");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) {
      require(data[k].is_number(), name + ": non-numeric value");
      m(i, c) = data[k++].get<double>();
    }
  return m;
}

Json model_to_json(const GnnModel& m, const Json& training) {
  Json j;
  j["format"] = "rcx-gnn";
  j["version"] = 1;
  Json arch;
  arch["task"] = to_string(m.task);
  arch["d_in"] = m.d_in;
  arch["hidden"] = m.hidden;
  arch["num_classes"] = m.num_classes;
  arch["conv_layers"] = 3;
  arch["fc_layers"] = 2;
  arch["activation"] = "relu";
  arch["pooling"] = to_string(m.pooling);
  j["architecture"] = arch;
  j["training"] = training;
  Json w;
  for (int l = 0; l < 3; ++l) {
    w["conv" + std::to_string(l)] = matrix_to_json(m.conv[l]);
    w["conv" + std::to_string(l) + "_bias"] = matrix_to_json(m.conv_bias[l].transpose());
  }
  w["fc1"] = matrix_to_json(m.fc1);
  w["fc1_bias"] = matrix_to_json(m.fc1_bias.transpose());
  w["fc2"] = matrix_to_json(m.fc2);
  w["fc2_bias"] = matrix_to_json(m.fc2_bias.transpose());
  j["weights"] = w;
  return j;
}

GnnModel model_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == "rcx-gnn", "model: not an rcx-gnn checkpoint");
    const auto& a = j.at("architecture");
    require(a.value("conv_layers", 0) == 3 && a.value("fc_layers", 0) == 2,
            "model: unsupported layer count");
    require(a.value("activation", "") == "relu", "model: unsupported activation");
    GnnModel m = GnnModel::zeros(task_from_string(a.at("task").get<std::string>()),
                                 a.at("d_in").get<int>(), a.at("hidden").get<int>(),
                                 a.at("num_classes").get<int>());
    m.pooling = pooling_from_string(a.at("pooling").get<std::string>());
    const auto& w = j.at("weights");
    const int h = m.hidden;
    m.conv[0] = matrix_from_json(w.at("conv0"), m.d_in, h, "conv0");
    m.conv[1] = matrix_from_json(w.at("conv1"), h, h, "conv1");
    m.conv[2] = matrix_from_json(w.at("conv2"), h, h, "conv2");
    for (int l = 0; l < 3; ++l) {
      const std::string name = "conv" + std::to_string(l) + "_bias";
      m.conv_bias[l] = matrix_from_json(w.at(name), 1, h, name).row(0).transpose();
    }
    m.fc1 = matrix_from_json(w.at("fc1"), h, h, "fc1");
    m.fc1_bias = matrix_from_json(w.at("fc1_bias"), 1, h, "fc1_bias").row(0).transpose();
    m.fc2 = matrix_from_json(w.at("fc2"), h, m.num_classes, "fc2");
    m.fc2_bias =
        matrix_from_json(w.at("fc2_bias"), 1, m.num_classes, "fc2_bias").row(0).transpose();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: malformed checkpoint: ") + e.what());
  }
}

void save_model(const GnnModel& m, const std::filesystem::path& path, const Json& training) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << model_to_json(m, training).dump(2) << '\n';
}

GnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model: invalid JSON in " + path.string());
  }
  return model_from_json(j);
}

}  // namespace rcx
