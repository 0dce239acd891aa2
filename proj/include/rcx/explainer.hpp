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


#ifndef RCX_EXPLAINER_HPP_
#define RCX_EXPLAINER_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcx/boundaries.hpp"
#include "rcx/common.hpp"
#include "rcx/gnn.hpp"
#include "rcx/graph.hpp"

namespace rcx {

enum class ExplainerMode { kRcExplainer, kNoLdb, kContrastive };

std::string to_string(ExplainerMode m);
ExplainerMode explainer_mode_from_string(const std::string& s);

struct ExplainerConfig {
  ExplainerMode mode = ExplainerMode::kRcExplainer;
  double lambda = 0.1;
  double beta = 6e-5;
  double mu = 0.66;
  double eta = 1.0;  // baseline only
  double loss_scale = 15.0;
  double lr = 1e-3;
  int epochs = 600;
  int hidden = 64;
  int khop = 3;  // computation-graph radius for node tasks
  int contrast_from = -1;
  int contrast_to = -1;
  std::uint64_t seed = 0;

  // Per-task loss weights: node tasks 0.85 / 0.006 / 0.66, graph tasks
  // 0.1 / 6e-5 / 0.66.
  static ExplainerConfig defaults(Task task);
  void validate() const;
  Json to_json() const;
  static ExplainerConfig from_json(const nlohmann::json& j);
};

// Edge scorer: sigmoid(fc2(relu(fc1([z_i, z_j])))) for each edge i < j.
struct ExplainerNet {
  int emb_dim = 0;
  int hidden = 64;
  Mat fc1;  // 2*emb_dim x hidden; rows [0, emb_dim) act on z_i, the rest on z_j
  Vec fc1_bias;
  Vec fc2;  // hidden
  double fc2_bias = 0.0;

  static ExplainerNet init(int emb_dim, int hidden, std::uint64_t seed);
  static ExplainerNet zeros(int emb_dim, int hidden);
  void validate() const;
};

struct NetGrads {
  Mat fc1;
  Vec fc1_bias;
  Vec fc2;
  double fc2_bias = 0.0;

  static NetGrads zeros_like(const ExplainerNet& n);
  NetGrads& operator+=(const NetGrads& o);
  NetGrads& operator*=(double s);
};

struct MaskTrace {
  Mat pre;                  // |E| x hidden pre-activations
  std::vector<double> mask; // per edge of the graph, in (0, 1)
};

// Mask of `g` given its node embeddings z (n x emb_dim).
MaskTrace mask_forward(const ExplainerNet& net, const Mat& z, const Graph& g);
// Accumulates dL/dtheta given dL/dmask.
void mask_backward(const ExplainerNet& net, const Mat& z, const Graph& g, const MaskTrace& t,
                   std::span<const double> d_mask, NetGrads& grads);

// Mask per edge of g, from the embeddings of the unweighted forward.
std::vector<double> predict_mask(const ExplainerNet& net, const GnnModel& m, const Graph& g);
// Dense symmetric n x n view of a per-edge mask.
Mat dense_mask(const Graph& g, std::span<const double> mask);

// Keep-proxy weighted by the mask and drop-proxy weighted by 1 - mask.
struct Proxies {
  WeightedGraph keep;
  WeightedGraph drop;
};
Proxies build_proxies(const Graph& g, std::span<const double> mask);

// Mean over boundaries of sigmoid(-B(alpha_g) * B(alpha_keep)). Adds
// dL/dalpha_keep to *d_keep when given.
double loss_same(std::span<const LinearBoundary> bounds, const Eigen::RowVectorXd& alpha_g,
                 const Eigen::RowVectorXd& alpha_keep, Eigen::RowVectorXd* d_keep = nullptr);
// Min over boundaries of sigmoid(B(alpha_g) * B(alpha_drop)); the gradient
// flows through the first minimizer only.
double loss_opp(std::span<const LinearBoundary> bounds, const Eigen::RowVectorXd& alpha_g,
                const Eigen::RowVectorXd& alpha_drop, Eigen::RowVectorXd* d_drop = nullptr);

struct Regularizers {
  double sparse = 0.0;
  double discrete = 0.0;
};
// Sparsity (L1 over both directed entries) and mean binary entropy over all
// n*n entries. d_sparse / d_discrete receive per-edge derivatives when given.
Regularizers regularizers(std::span<const double> mask, int num_nodes,
                          std::vector<double>* d_sparse = nullptr,
                          std::vector<double>* d_discrete = nullptr);

// -log p_keep - eta / log p_drop, both clamped to [1e-12, 1 - 1e-12]. Writes
// the partial derivatives when given (zero where clamped).
double confidence_loss(double p_keep, double p_drop, double eta, double* d_keep = nullptr,
                       double* d_drop = nullptr);

// Everything one training sample needs: the graph the GNN sees (the k-hop
// computation graph for node tasks), its node embeddings, the explained row,
// and the boundaries for the active mode.
struct SampleContext {
  int id = -1;
  Graph graph;
  int row = 0;  // embedding row: 0 for graph tasks, the center node otherwise
  std::vector<int> to_original;  // node map into the source graph (node tasks)
  Mat z;
  Eigen::RowVectorXd alpha;
  int cls = 0;
  std::vector<LinearBoundary> bounds;
};

SampleContext make_context(const GnnModel& m, const Dataset& ds, int id, int cls,
                           std::vector<LinearBoundary> bounds, int khop = 3);

struct LossBreakdown {
  double total = 0.0;
  double same = 0.0;
  double opp = 0.0;
  double conf = 0.0;
  double sparse = 0.0;
  double discrete = 0.0;
};

// Scaled loss of one sample in cfg.mode; accumulates dL/dtheta into *grads.
LossBreakdown sample_loss(const ExplainerConfig& cfg, const GnnModel& m, const ExplainerNet& net,
                          const SampleContext& ctx, NetGrads* grads = nullptr);

// Boundaries used for sample `id` in the given mode. Contrastive mode picks
// the first boundary in the sample's region with the requested class pair,
// falling back to the other regions of that class; ConfigError if none.
std::vector<LinearBoundary> boundaries_for(const ExplainerConfig& cfg, const RegionSet& rs,
                                           int id);

// Ids the explainer trains on in this mode: training samples with a bounded
// region (all training samples for the baseline), restricted to the
// contrast_from class in contrastive mode.
std::vector<int> training_ids(const ExplainerConfig& cfg, const Dataset& ds,
                              const RegionSet& rs, std::span<const int> preds);

struct TrainLog {
  std::vector<double> epoch_loss;                 // mean training loss per epoch
  std::vector<std::pair<int, double>> val_loss;   // (epoch, mean validation loss)
};

struct TrainedExplainer {
  ExplainerNet net;
  TrainLog log;
};

TrainedExplainer train_explainer(const Dataset& ds, const RegionSet& rs, const GnnModel& m,
                                 const ExplainerConfig& cfg);

// Mask for a graph-task sample, aligned with g.edges().
std::vector<double> explain_graph(const ExplainerNet& net, const GnnModel& m, const Graph& g);

// Mask for node v over its computation graph, mapped onto edges of g (edges
// outside the computation graph get 0). `in_scope` marks the edges that belong
// to the computation graph.
struct NodeExplanation {
  std::vector<double> mask;
  std::vector<char> in_scope;
};
NodeExplanation explain_node(const ExplainerNet& net, const GnnModel& m, const Graph& g, int v,
                             int khop = 3);

// Edge indices with mask > 0.5 (ascending), or the k highest (ties by edge
// index). `eligible` optionally restricts the candidates.
std::vector<int> select_threshold(std::span<const double> mask, double threshold = 0.5,
                                  std::span<const char> eligible = {});
std::vector<int> select_top_k(std::span<const double> mask, int k,
                              std::span<const char> eligible = {});

Json explainer_to_json(const ExplainerNet& net, const ExplainerConfig& cfg, const Json& meta);
std::pair<ExplainerNet, ExplainerConfig> explainer_from_json(const nlohmann::json& j,
                                                             Json* meta = nullptr);
void save_explainer(const ExplainerNet& net, const ExplainerConfig& cfg, const Json& meta,
                    const std::filesystem::path& path);
std::pair<ExplainerNet, ExplainerConfig> load_explainer(const std::filesystem::path& path,
                                                        Json* meta = nullptr);

}  // namespace rcx

#endif  // RCX_EXPLAINER_HPP_
