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


#ifndef RCX_BOUNDARIES_HPP_
#define RCX_BOUNDARIES_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rcx/common.hpp"
#include "rcx/gnn.hpp"
#include "rcx/graph.hpp"

namespace rcx {

// Hyperplane w.x + b = 0 in the embedding space. `top1`/`top2` are the two
// classes whose logit gap it linearizes.
struct LinearBoundary {
  Vec w;
  double b = 0.0;
  int source_id = -1;
  int top1 = -1;
  int top2 = -1;

  double eval(const Eigen::Ref<const Eigen::RowVectorXd>& alpha) const {
    return alpha.dot(w.transpose()) + b;
  }
};

// Raised when the top two logits tie exactly.
class DegenerateBoundary : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Linearization of (top-1 logit - top-2 logit) of the fc head at alpha.
LinearBoundary sample_ldb(const GnnModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& alpha,
                          int source_id = -1);
// Same, at the embedding of graph g (graph task).
LinearBoundary sample_ldb(const GnnModel& m, const Graph& g, int source_id = -1);

// Sign of B(alpha) with 0 mapped to +1.
inline int boundary_sign(double v) { return v >= 0.0 ? 1 : -1; }

// Sign of every boundary at every pool sample: signs(i, k) for pool sample i
// and boundary k.
using SignMatrix = Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
SignMatrix sign_matrix(std::span<const LinearBoundary> bounds, const Mat& alpha,
                       std::span<const int> pool);

struct Coverage {
  int g = 0;                      // class-c samples in the chosen polytope
  int h = 0;                      // other samples in the same polytope
  std::vector<int> sign_pattern;  // one entry per selected boundary
};

// Polytope coverage of the boundaries `subset` (column indices of `signs`).
// is_c[i] tells whether pool sample i is predicted as the target class. The
// chosen polytope is the realized sign pattern holding the most class-c
// samples, ties broken by the lexicographically smallest pattern (-1 < +1)
// read in ascending column order. The pattern is returned in `subset` order.
Coverage coverage(const SignMatrix& signs, std::span<const char> is_c, std::span<const int> subset);

// Convenience form over raw boundaries, embeddings and predictions.
Coverage coverage(std::span<const LinearBoundary> bounds, const Mat& alpha,
                  std::span<const int> preds, int c);

struct GreedyStep {
  int chosen = -1;  // column index of the added boundary
  int g = 0;
  int h = 0;
};

struct GreedyResult {
  std::vector<int> selected;  // column indices in selection order
  Coverage cov;
  int delta = 0;
  std::vector<GreedyStep> trace;
};

// Greedy boundary selection: starting from the empty set, repeatedly add the
// candidate minimizing (g-decrease + eps) / h-decrease among those that lower
// h, until h <= delta (= h of all candidates). When no candidate lowers h, the
// one with the smallest g-decrease among those leaving h unchanged is taken,
// and failing that the one raising h least.
GreedyResult greedy_select(const SignMatrix& signs, std::span<const char> is_c, double eps = 1e-6);

struct DecisionRegion {
  int cls = 0;
  std::vector<LinearBoundary> boundaries;
  std::vector<int> sign_pattern;
  std::vector<int> covered_ids;  // ascending sample ids
  int impurity = 0;
  int delta = 0;
  bool singleton = false;

  // True if alpha lies inside the polytope (sign 0 counts as +1).
  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& alpha) const;
};

struct RegionConfig {
  int ldbs_per_class = 50;
  double eps = 1e-6;
  int max_rounds = 20;
  bool redraw_per_round = true;
  std::uint64_t seed = 0;
  Json to_json() const;
};

struct RegionSet {
  Task task = Task::kGraph;
  int num_classes = 0;
  RegionConfig config;
  std::vector<DecisionRegion> regions;
  std::vector<std::pair<int, int>> assignment;  // (sample id, region index), by id
  std::vector<std::string> warnings;

  // Region index covering sample `id`, or -1.
  int region_of(int id) const;
};

// Peels decision regions off every class using the training samples.
// alpha/preds cover all sample ids; only `train_ids` take part.
RegionSet extract_regions(const GnnModel& m, const Mat& alpha, std::span<const int> preds,
                          std::span<const int> train_ids, const RegionConfig& cfg);
RegionSet extract_regions(const GnnModel& m, const Dataset& ds, const RegionConfig& cfg);

Json regions_to_json(const RegionSet& rs);
RegionSet regions_from_json(const nlohmann::json& j);
void save_regions(const RegionSet& rs, const std::filesystem::path& path);
RegionSet load_regions(const std::filesystem::path& path);

}  // namespace rcx

#endif  // RCX_BOUNDARIES_HPP_
