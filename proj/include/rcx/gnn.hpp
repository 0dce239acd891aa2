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


#ifndef RCX_GNN_HPP_
#define RCX_GNN_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "rcx/common.hpp"
#include "rcx/graph.hpp"

namespace rcx {

// Readout from node embeddings to the graph embedding (graph task only).
enum class Pooling { kMean, kMax, kSum };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

// Three graph convolutions followed by a two-layer ReLU head.
struct GnnModel {
  Task task = Task::kGraph;
  Pooling pooling = Pooling::kMean;
  int d_in = 0;
  int hidden = 20;
  int num_classes = 0;
  std::array<Mat, 3> conv;  // d_in x h, h x h, h x h
  std::array<Vec, 3> conv_bias;
  Mat fc1;                  // h x h
  Vec fc1_bias;
  Mat fc2;                  // h x C
  Vec fc2_bias;

  // Glorot-uniform weights, zero biases.
  static GnnModel init(Task task, int d_in, int hidden, int num_classes, std::uint64_t seed);
  static GnnModel zeros(Task task, int d_in, int hidden, int num_classes);

  // Shape and finiteness checks. Shapes raise ValidationError, non-finite
  // values raise NumericError.
  void validate() const;
  std::size_t num_parameters() const;
};

// Intermediate values of the fc head for a batch of embedding rows.
struct HeadTrace {
  Mat input;   // rows of alpha
  Mat fc1_pre;
  Mat fc1_act;
  Mat logits;
};

HeadTrace head_forward(const GnnModel& m, const Mat& alpha);

struct ForwardTrace {
  NormalizedAdjacency adj;
  std::array<Mat, 4> h;  // h[0] = X, h[l+1] = relu(z[l])
  std::array<Mat, 3> p;  // p[l] = A_hat h[l]
  std::array<Mat, 3> z;  // z[l] = p[l] conv[l] + conv_bias[l]
  Mat node_embeddings;   // = h[3]
  Mat embedding;         // 1 x h pooled (graph task) or n x h (node task)
  std::vector<int> pool_arg;  // max pooling: source row per column
  HeadTrace head;
  Mat probabilities;     // row-wise softmax of head.logits
};

ForwardTrace forward(const GnnModel& m, const WeightedGraph& wg);
ForwardTrace forward(const GnnModel& m, const Graph& g);

// Gradients with the same layout as GnnModel.
struct GnnGrads {
  std::array<Mat, 3> conv;
  std::array<Vec, 3> conv_bias;
  Mat fc1;
  Vec fc1_bias;
  Mat fc2;
  Vec fc2_bias;

  static GnnGrads zeros_like(const GnnModel& m);
  GnnGrads& operator+=(const GnnGrads& o);
  GnnGrads& operator*=(double s);
};

// Loss sensitivities flowing into the network. Either member may be empty.
// d_logits has the shape of trace.head.logits; d_embedding that of
// trace.embedding.
struct Upstream {
  Mat d_logits;
  Mat d_embedding;
};

struct GradientBundle {
  GnnGrads params;            // zero-sized when parameters were skipped
  std::vector<double> edges;  // dL/dw per undirected edge of the graph

  // Symmetric n x n view of `edges`.
  Mat dense_edges(const Graph& g) const;
};

struct BackwardOptions {
  bool params = true;
  bool edges = true;
};

GradientBundle backward(const GnnModel& m, const WeightedGraph& wg, const ForwardTrace& t,
                        const Upstream& up, BackwardOptions opt = {});

// Backprop through the fc head only. Accumulates parameter gradients into
// `grads` when non-null and returns dL/dalpha.
Mat head_backward(const GnnModel& m, const HeadTrace& t, const Mat& d_logits,
                  GnnGrads* grads = nullptr);

Mat softmax_rows(const Mat& logits);

struct Prediction {
  int cls = 0;
  double confidence = 0.0;
};

// Argmax of a probability row; ties go to the lowest class id.
Prediction argmax(const Eigen::Ref<const Eigen::RowVectorXd>& probs);
// Graph task: prediction for the graph. Node task: use predict_nodes.
Prediction predict(const GnnModel& m, const Graph& g);
std::vector<Prediction> predict_nodes(const GnnModel& m, const Graph& g);

// --- Training ------------------------------------------------------------

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Advances the step counter. Call once before the updates of a step.
  void begin_step();
  // In-place update of a parameter block; `slot` identifies its moment state.
  void update(std::size_t slot, double* param, const double* grad, std::size_t n);
  template <class M, class G>
  void update(std::size_t slot, M& param, const G& grad) {
    update(slot, param.data(), grad.data(), static_cast<std::size_t>(param.size()));
  }
  int steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
  double lr = 0.001;
  int epochs = 1000;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  int hidden = 20;
  Pooling pooling = Pooling::kMean;
  int batch_size = 0;  // graph tasks: samples per Adam step, 0 for full batch
  Json to_json() const;
  // Defaults tuned per generator. BA-Community needs a larger step and more
  // regularisation to get past its noisy features; graph tasks train with
  // max pooling, which keeps a single motif visible in the readout.
  static TrainConfig defaults_for(const Dataset& ds);
};

struct TrainMetrics {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double final_loss = 0.0;
  int best_epoch = 0;
};

// Adam on cross-entropy. Keeps the parameters of the epoch with the best
// validation accuracy, ties going to the lower validation loss.
std::pair<GnnModel, TrainMetrics> train_gnn(const Dataset& ds, const TrainConfig& cfg);

// Accuracy of the model on the listed sample ids.
double accuracy(const GnnModel& m, const Dataset& ds, const std::vector<int>& ids);

// Embedding (alpha) of every sample of the dataset, one row per sample id, and
// the model prediction for each.
struct SampleEmbeddings {
  Mat alpha;
  std::vector<int> preds;
};
SampleEmbeddings embed_samples(const GnnModel& m, const Dataset& ds);

// --- Checkpoints ---------------------------------------------------------

// {"shape": [r, c], "data": [row-major values]}; reading validates the shape.
Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j, int rows, int cols, const std::string& name);

Json model_to_json(const GnnModel& m, const Json& training = Json::object());
GnnModel model_from_json(const nlohmann::json& j);
void save_model(const GnnModel& m, const std::filesystem::path& path,
                const Json& training = Json::object());
GnnModel load_model(const std::filesystem::path& path);

}  // namespace rcx

#endif  // RCX_GNN_HPP_
