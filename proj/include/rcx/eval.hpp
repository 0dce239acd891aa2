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


#ifndef RCX_EVAL_HPP_
#define RCX_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcx/common.hpp"
#include "rcx/explainer.hpp"
#include "rcx/gnn.hpp"
#include "rcx/graph.hpp"

namespace rcx {

// The graph the GNN sees for one sample: the whole graph for graph tasks, the
// k-hop computation graph around the node for node tasks.
struct SampleGraph {
  int id = -1;
  Graph graph;
  int row = 0;                   // embedding row of the sample
  std::vector<int> to_original;  // node map into the source graph (node tasks)
};

SampleGraph sample_graph(const Dataset& ds, int id, int khop = 3);

// Prediction for the sample row of `g`.
Prediction predict_row(const GnnModel& m, const Graph& g, int row);
double class_probability(const GnnModel& m, const Graph& g, int row, int cls);

// Per-edge importance for a sample graph. `id` identifies the sample so that
// random controls can draw a reproducible stream per sample.
using MaskFn = std::function<std::vector<double>(const Graph& g, int id)>;

MaskFn explainer_masks(const ExplainerNet& net, const GnnModel& m);
// Uniform scores, i.e. a size-matched random edge set after top-k selection.
MaskFn random_masks(std::uint64_t seed);

// --- Fidelity and sparsity --------------------------------------------------

// P(c | g) - P(c | g without `removed`) for the class c predicted on g.
double fidelity(const GnnModel& m, const Graph& g, int row, std::span<const int> removed);
// 1 - selected / num_edges.
double sparsity(int selected, int num_edges);
// Edges to keep selected so that the explanation reaches sparsity `s`.
int edges_for_sparsity(double s, int num_edges);

// Graph-task samples labelled 1 among `ids`.
std::vector<int> positive_ids(const Dataset& ds, std::span<const int> ids);

// Fidelity of each sample after removing its top edges at sparsity `s`.
std::vector<double> sample_fidelities(const GnnModel& m, const Dataset& ds,
                                      std::span<const int> ids, const MaskFn& masks, double s);

struct CurvePoint {
  double sparsity = 0.0;
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
};

struct FidelityCurve {
  std::vector<CurvePoint> points;
};

// Mean fidelity over the positive samples of `ids` at each grid sparsity.
FidelityCurve fidelity_sparsity_curve(const GnnModel& m, const Dataset& ds,
                                      std::span<const int> ids, const MaskFn& masks,
                                      std::span<const double> grid);

// --- Noise ------------------------------------------------------------------

struct NoiseSpec {
  double pct = 0.0;
  Eigen::RowVectorXd feature_sigma;  // per feature dimension
  int max_retries = 20;
  std::uint64_t seed = 0;

  void validate(int feature_dim) const;
};

// 0.1 x the per-dimension standard deviation over all nodes. Dimensions with
// zero spread use 0.1 x their root mean square, or 0.1 when that is zero too.
Eigen::RowVectorXd feature_sigma(const Dataset& ds, double scale = 0.1);

struct Perturbed {
  Graph graph;
  std::vector<int> edge_source;  // per edge of graph: index in the original, -1 if added
  int attempts = 0;
};

// Noisy copy of g whose prediction at `row` is unchanged, or nullopt when
// every attempt flipped it. `counter` selects the random stream.
std::optional<Perturbed> perturb(const Graph& g, int row, const NoiseSpec& spec,
                                 const GnnModel& m, std::uint64_t counter);

// --- Ranking metrics ---------------------------------------------------------

// Rank-based ROC AUC; tied scores count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Node weight = largest mask value over incident edges, 0 for isolated nodes.
std::vector<double> node_weights(const Graph& g, std::span<const double> mask);

// Indices of the k largest values, ties by index.
std::vector<int> top_k_indices(std::span<const double> values, int k);

struct RobustnessConfig {
  std::vector<double> levels{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  std::vector<int> k{8};
  int seeds = 10;
  int max_retries = 20;
  double sigma_scale = 0.1;
  std::uint64_t seed = 0;
};

struct RobustnessRow {
  double noise_pct = 0.0;
  int k = 0;
  double mean = 0.0;  // mean over seeds of the per-seed sample mean
  double std = 0.0;   // across seeds
  int evaluated = 0;  // summed over seeds
  int skipped = 0;    // perturbation failures plus single-class label sets
};

// Edge AUC of the mask on G' against the top-k edges of the mask on G.
std::vector<RobustnessRow> robustness_auc(const GnnModel& m, const Dataset& ds,
                                          std::span<const int> ids, const MaskFn& masks,
                                          const RobustnessConfig& cfg, int khop = 3);

// Overlap of the top-k node weights on G and on G', divided by k.
std::vector<RobustnessRow> node_accuracy(const GnnModel& m, const Dataset& ds,
                                         std::span<const int> ids, const MaskFn& masks,
                                         const RobustnessConfig& cfg, int khop = 3);

// --- Ground truth -------------------------------------------------------------

struct GroundTruthResult {
  double auc = 0.0;       // pooled over all evaluated edges
  double accuracy = 0.0;  // mean precision of the top-|gt| edges per sample
  int evaluated = 0;
  int skipped = 0;        // samples without a motif edge in scope
};

// Samples touching at least one motif edge.
std::vector<int> motif_ids(const Dataset& ds);

GroundTruthResult ground_truth_auc_acc(const Dataset& ds, std::span<const int> ids,
                                       const MaskFn& masks, int khop = 3);

// --- Timing ---------------------------------------------------------------------

struct TimingResult {
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  double mean_edges = 0.0;
  int n = 0;
};

// Wall time of one explanation per sample, measured sequentially.
TimingResult time_inference(const ExplainerNet& net, const GnnModel& m, const Dataset& ds,
                            std::span<const int> ids, int khop = 3);

// --- CSV ----------------------------------------------------------------------

void write_fidelity_csv(const std::filesystem::path& path, const FidelityCurve& curve);
void write_robustness_csv(const std::filesystem::path& path, std::span<const RobustnessRow> rows,
                          const std::string& value_column);
void write_gt_csv(const std::filesystem::path& path, const GroundTruthResult& r);
void write_timing_csv(const std::filesystem::path& path, const TimingResult& r);

// Shortest round-trip decimal form, so reruns produce identical bytes.
std::string format_number(double x);

}  // namespace rcx

#endif  // RCX_EVAL_HPP_
