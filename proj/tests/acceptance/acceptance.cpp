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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "cli.hpp"
#include "eval_oracles.hpp"
#include "fd_oracles.hpp"
#include "rcx/boundaries.hpp"
#include "rcx/eval.hpp"
#include "rcx/explainer.hpp"
#include "rcx/gnn.hpp"
#include "rcx/parallel.hpp"
#include "rcx/synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace rcx;
using namespace rcx::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

// --- Shared trained models ---------------------------------------------------

struct Trained {
  Dataset ds;
  GnnModel model;
  TrainMetrics metrics;
  double seconds = 0.0;
};

std::map<std::string, Trained>& model_cache() {
  static std::map<std::string, Trained> cache;
  return cache;
}

// Dataset and GNN with seed 0, trained single-threaded on first use.
const Trained& trained(const std::string& name) {
  auto& cache = model_cache();
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  GeneratorConfig gc;
  gc.name = dataset_name_from_string(name);
  gc.seed = 0;
  Trained t;
  t.ds = generate(gc);
  TrainConfig tc = TrainConfig::defaults_for(t.ds);
  tc.seed = 0;
  const int keep = num_threads();
  set_num_threads(1);
  const auto t0 = Clock::now();
  auto [m, met] = train_gnn(t.ds, tc);
  t.seconds = seconds_since(t0);
  set_num_threads(keep);
  t.model = std::move(m);
  t.metrics = met;
  return cache.emplace(name, std::move(t)).first->second;
}

TrainedExplainer train_for(const Trained& t, ExplainerMode mode, std::uint64_t seed) {
  RegionConfig rc;
  rc.seed = 0;
  const RegionSet rs = extract_regions(t.model, t.ds, rc);
  ExplainerConfig cfg = ExplainerConfig::defaults(t.ds.task);
  cfg.mode = mode;
  cfg.seed = seed;
  return train_explainer(t.ds, rs, t.model, cfg);
}

// --- 1. Gradients --------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  double gnn = 0.0;
  gnn = std::max(gnn, gnn_gradient_error(Task::kGraph, 101, Pooling::kMean));
  gnn = std::max(gnn, gnn_gradient_error(Task::kGraph, 102, Pooling::kMax));
  gnn = std::max(gnn, gnn_gradient_error(Task::kGraph, 103, Pooling::kSum));
  gnn = std::max(gnn, gnn_gradient_error(Task::kNode, 104));
  // The four loss variants: the full boundary loss, its pure counterfactual
  // limit (min over boundaries only), the no-boundary baseline and the
  // contrastive pair loss.
  ExplainerConfig opp_only = mode_config(ExplainerMode::kRcExplainer);
  opp_only.lambda = 0.0;
  const std::vector<std::pair<std::string, ExplainerConfig>> modes{
      {"rcexplainer", mode_config(ExplainerMode::kRcExplainer)},
      {"rcexplainer-opp", opp_only},
      {"rcexp-noldb", mode_config(ExplainerMode::kNoLdb)},
      {"contrastive", mode_config(ExplainerMode::kContrastive)}};
  double expl = 0.0;
  std::uint64_t seed = 200;
  for (const auto& [name, cfg] : modes)
    for (Task task : {Task::kGraph, Task::kNode})
      expl = std::max(expl, max_grad_error(cfg, task, seed++, 20));
  const double secs = seconds_since(t0);
  const double worst = std::max(gnn, expl);
  return {worst < 1e-4 && secs < 60.0,
          "max rel err gnn " + fmt(gnn) + ", explainer " + fmt(expl) + " (4 modes x 2 tasks x 20 graphs), " +
              fmt(secs, 3) + " s"};
}

// --- 2. Submodularity ------------------------------------------------------------

struct CoverInstance {
  SignMatrix signs;
  std::vector<char> is_c;
};

CoverInstance random_cover_instance(Rng& rng, int max_bounds, int max_samples) {
  const int nb = 1 + static_cast<int>(uniform_index(rng, max_bounds));
  const int ns = 2 + static_cast<int>(uniform_index(rng, max_samples - 1));
  const int dim = 3;
  std::vector<LinearBoundary> bounds(nb);
  for (auto& b : bounds) {
    b.w = Vec(dim);
    for (int k = 0; k < dim; ++k) b.w(k) = standard_normal(rng);
    b.b = 0.5 * standard_normal(rng);
  }
  Mat alpha(ns, dim);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha.data()[i] = standard_normal(rng);
  std::vector<int> pool(ns);
  std::iota(pool.begin(), pool.end(), 0);
  CoverInstance in;
  in.signs = sign_matrix(bounds, alpha, pool);
  in.is_c.resize(ns);
  for (auto& c : in.is_c) c = uniform01(rng) < 0.5;
  in.is_c[0] = 1;
  return in;
}

std::vector<int> members(unsigned mask) {
  std::vector<int> out;
  for (int k = 0; mask >> k; ++k)
    if (mask >> k & 1u) out.push_back(k);
  return out;
}

Outcome submodularity() {
  Rng rng = make_rng(0, "acceptance-submodular");
  int violations = 0, bad_trials = 0;
  long checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const CoverInstance in = random_cover_instance(rng, 5, 20);
    const int nb = static_cast<int>(in.signs.cols());
    const int dc = static_cast<int>(std::count(in.is_c.begin(), in.is_c.end(), 1));
    const int dn = static_cast<int>(in.is_c.size()) - dc;
    std::vector<int> gp(1u << nb), hp(1u << nb);
    for (unsigned s = 0; s < (1u << nb); ++s) {
      const Coverage c = coverage(in.signs, in.is_c, members(s));
      gp[s] = dc - c.g;
      hp[s] = dn - c.h;
    }
    int before = violations;
    for (unsigned q = 0; q < (1u << nb); ++q) {
      for (unsigned p = q;; p = (p - 1) & q) {  // every subset P of Q
        for (int h = 0; h < nb; ++h) {
          if (q >> h & 1u) continue;
          const unsigned bit = 1u << h;
          ++checks;
          if (gp[p | bit] - gp[p] < gp[q | bit] - gp[q]) ++violations;
          if (hp[p | bit] - hp[p] < hp[q | bit] - hp[q]) ++violations;
        }
        if (p == 0) break;
      }
    }
    bad_trials += violations > before;
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) +
                               " marginal comparisons, " + std::to_string(bad_trials) +
                               "/50 trials affected"};
}

// --- 3. Greedy feasibility --------------------------------------------------------

Outcome greedy_feasibility() {
  Rng rng = make_rng(0, "acceptance-greedy");
  int infeasible = 0, brute_feasible = 0;
  const int trials = 300;
  for (int trial = 0; trial < trials; ++trial) {
    const CoverInstance in = random_cover_instance(rng, 8, 20);
    const int nb = static_cast<int>(in.signs.cols());
    std::vector<int> all(nb);
    std::iota(all.begin(), all.end(), 0);
    const int delta = coverage(in.signs, in.is_c, all).h;
    bool any = false;
    for (unsigned s = 0; s < (1u << nb) && !any; ++s)
      any = coverage(in.signs, in.is_c, members(s)).h <= delta;
    const GreedyResult r = greedy_select(in.signs, in.is_c);
    brute_feasible += any;
    if (any && (r.cov.h > r.delta || r.delta != delta)) ++infeasible;
  }
  int regions = 0, bad_regions = 0;
  for (const std::string name : {"ba-2motifs", "ba-shapes"}) {
    const Trained& t = trained(name);
    RegionConfig rc;
    const RegionSet rs = extract_regions(t.model, t.ds, rc);
    for (const auto& reg : rs.regions) {
      ++regions;
      bad_regions += reg.impurity > reg.delta;
    }
  }
  return {infeasible == 0 && bad_regions == 0,
          std::to_string(infeasible) + "/" + std::to_string(brute_feasible) +
              " brute-force-feasible instances missed; " + std::to_string(bad_regions) + "/" +
              std::to_string(regions) + " extracted regions above delta"};
}

// --- 4. GNN accuracy --------------------------------------------------------------

Outcome gnn_accuracy() {
  const std::vector<std::pair<std::string, double>> bars{
      {"ba-shapes", 0.93}, {"tree-cycles", 0.95}, {"tree-grid", 0.95},
      {"ba-2motifs", 0.85}, {"ba-community", 0.80}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, bar] : bars) {
    const Trained& t = trained(name);
    const bool ok = t.metrics.test_acc >= bar && t.seconds <= 900.0;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + name + " " + fmt(t.metrics.test_acc, 3) +
              (ok ? "" : " (bar " + fmt(bar, 3) + ")") + " in " + fmt(t.seconds, 3) + " s";
  }
  return {pass, detail};
}

// --- 5. Ground truth ----------------------------------------------------------------

Outcome ground_truth() {
  struct Bar {
    std::string name;
    double auc, reference_acc;
  };
  const std::vector<Bar> bars{
      {"ba-shapes", 0.95, 0.973}, {"tree-cycles", 0.93, 0.993}, {"tree-grid", 0.93, 0.974}};
  bool pass = true;
  std::string detail;
  for (const auto& b : bars) {
    const Trained& t = trained(b.name);
    const TrainedExplainer te = train_for(t, ExplainerMode::kRcExplainer, 0);
    const ExplainerConfig cfg = ExplainerConfig::defaults(t.ds.task);
    const GroundTruthResult r =
        ground_truth_auc_acc(t.ds, motif_ids(t.ds), explainer_masks(te.net, t.model), cfg.khop);
    const bool ok = r.auc >= b.auc && r.accuracy >= b.reference_acc - 0.08;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + b.name + " auc " + fmt(r.auc, 3) + " acc " +
              fmt(r.accuracy, 3);
  }
  return {pass, detail};
}

// --- 6 and 7. BA-2motifs counterfactual and robustness -------------------------------

struct MotifExplainers {
  std::vector<TrainedExplainer> rc, noldb;
};

const MotifExplainers& motif_explainers() {
  static MotifExplainers cache;
  if (!cache.rc.empty()) return cache;
  const Trained& t = trained("ba-2motifs");
  for (std::uint64_t s = 0; s < 10; ++s) {
    cache.rc.push_back(train_for(t, ExplainerMode::kRcExplainer, s));
    cache.noldb.push_back(train_for(t, ExplainerMode::kNoLdb, s));
  }
  return cache;
}

double mean_fidelity(const Trained& t, const MaskFn& masks, double s) {
  const std::vector<int> ids = positive_ids(t.ds, t.ds.split.test);
  const std::vector<double> f = sample_fidelities(t.model, t.ds, ids, masks, s);
  return std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
}

// One-sided paired t-test that a > b.
std::pair<double, double> paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (sd == 0.0) return {mean, mean > 0 ? 0.0 : 1.0};
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(n - 1);
  return {mean, boost::math::cdf(boost::math::complement(dist, t))};
}

Outcome counterfactual() {
  const Trained& t = trained("ba-2motifs");
  const MotifExplainers& ex = motif_explainers();
  std::vector<double> rc, noldb, random;
  for (std::uint64_t s = 0; s < 10; ++s) {
    rc.push_back(mean_fidelity(t, explainer_masks(ex.rc[s].net, t.model), 0.7));
    noldb.push_back(mean_fidelity(t, explainer_masks(ex.noldb[s].net, t.model), 0.7));
    random.push_back(mean_fidelity(t, random_masks(s), 0.7));
  }
  const auto [d_rand, p_rand] = paired_t(rc, random);
  const auto [d_base, p_base] = paired_t(rc, noldb);
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  return {d_rand > 0 && p_rand < 0.05 && d_base > 0 && p_base < 0.05,
          "fidelity@0.7 rcexplainer " + fmt(mean(rc)) + ", random " + fmt(mean(random)) +
              " (p " + fmt(p_rand, 3) + "), noldb " + fmt(mean(noldb)) + " (p " + fmt(p_base, 3) +
              ")"};
}

Outcome robustness() {
  const Trained& t = trained("ba-2motifs");
  const MotifExplainers& ex = motif_explainers();
  RobustnessConfig rc;
  rc.levels = {0.1};
  rc.k = {8};
  rc.seed = 0;
  const auto a = robustness_auc(t.model, t.ds, t.ds.split.test,
                                explainer_masks(ex.rc.front().net, t.model), rc);
  const auto b = robustness_auc(t.model, t.ds, t.ds.split.test,
                                explainer_masks(ex.noldb.front().net, t.model), rc);
  const double ra = a.front().mean, rb = b.front().mean;
  return {ra >= rb && ra >= 0.85,
          "auc at 10% noise, k=8: rcexplainer " + fmt(ra) + ", noldb " + fmt(rb)};
}

// --- 8. Property suites -----------------------------------------------------------

Outcome properties() {
  Rng rng = make_rng(0, "acceptance-properties");
  int fails[5] = {0, 0, 0, 0, 0};
  const int cases = 1000;
  for (int i = 0; i < cases; ++i) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 9));
    const Graph g = random_graph(rng, n, 3, 0.5);
    // Proxy identity: keep + drop weights reproduce the adjacency.
    std::vector<double> mask(g.num_edges());
    for (double& x : mask) x = uniform01(rng);
    const Proxies px = build_proxies(g, mask);
    const Mat sum = px.keep.dense_weights() + px.drop.dense_weights();
    if ((sum - g.adjacency()).cwiseAbs().maxCoeff() > 1e-15) ++fails[0];
    // Mask symmetry, zero off the edge set, open unit interval on edges.
    const GnnModel m = random_gnn(rng, i % 2 ? Task::kNode : Task::kGraph, 3, 4, 3);
    const ExplainerNet net = random_net(rng, 4, 8);
    const std::vector<double> pm = predict_mask(net, m, g);
    const Mat dm = dense_mask(g, pm);
    const Mat adj = g.adjacency();
    bool sym_ok = (dm - dm.transpose()).cwiseAbs().maxCoeff() == 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        sym_ok = sym_ok && (adj(r, c) == 0 ? dm(r, c) == 0 : dm(r, c) > 0 && dm(r, c) < 1);
    if (!sym_ok) ++fails[1];
    // Fidelity of the empty set.
    const int row = m.task == Task::kGraph ? 0 : static_cast<int>(uniform_index(rng, n));
    if (fidelity(m, g, row, {}) != 0.0) ++fails[2];
    // Sparsity arithmetic.
    const int e_count = 1 + static_cast<int>(uniform_index(rng, 300));
    const double s = uniform01(rng);
    const int keep = edges_for_sparsity(s, e_count);
    const int k = static_cast<int>(uniform_index(rng, e_count + 1));
    if (sparsity(keep, e_count) > s + 1e-9 || (keep > 0 && sparsity(keep - 1, e_count) <= s - 1e-9) ||
        sparsity(k, e_count) != 1.0 - static_cast<double>(k) / e_count)
      ++fails[3];
    // ROC AUC against the pairwise count, with ties.
    const int len = 2 + static_cast<int>(uniform_index(rng, 60));
    std::vector<double> sc(len);
    std::vector<int> y(len);
    for (int j = 0; j < len; ++j) {
      sc[j] = std::round(uniform01(rng) * 12) / 12;
      y[j] = uniform01(rng) < 0.5;
    }
    y[0] = 1;
    y[1] = 0;
    if (std::abs(roc_auc(sc, y) - pairwise_auc(sc, y)) > 1e-12) ++fails[4];
  }
  const int total = fails[0] + fails[1] + fails[2] + fails[3] + fails[4];
  return {total == 0, "failures out of 1000 each: proxy identity " + std::to_string(fails[0]) +
                          ", mask symmetry " + std::to_string(fails[1]) + ", empty fidelity " +
                          std::to_string(fails[2]) + ", sparsity " + std::to_string(fails[3]) +
                          ", roc auc " + std::to_string(fails[4])};
}

// --- 9. Determinism -------------------------------------------------------------------

int rcx_cmd(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = rcx::cli::run(args, out, err);
  if (rc != 0) std::cerr << "rcx";
  if (rc != 0)
    for (const auto& a : args) std::cerr << ' ' << a;
  if (rc != 0) std::cerr << " failed (" << rc << "): " << err.str();
  return rc;
}

bool run_pipeline(const fs::path& dir, int threads) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string() + "/";
  const std::string th = std::to_string(threads);
  const std::vector<std::vector<std::string>> steps{
      {"gen-data", "--dataset", "ba-2motifs", "--seed", "7", "--graph-count", "80", "--out", d + "data"},
      {"train-gnn", "--data", d + "data", "--out", d + "model.json", "--seed", "7", "--epochs", "150"},
      {"extract-regions", "--data", d + "data", "--model", d + "model.json", "--out",
       d + "regions.json", "--seed", "7"},
      {"train-explainer", "--data", d + "data", "--model", d + "model.json", "--regions",
       d + "regions.json", "--out", d + "explainer.json", "--seed", "7", "--epochs", "30"},
      {"explain", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--out", d + "masks.jsonl", "--split", "all"},
      {"explain", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--out", d + "mask.json", "--graph", "3", "--top-k", "8"},
      {"eval-fidelity", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--out", d + "fidelity"},
      {"eval-fidelity", "--data", d + "data", "--model", d + "model.json", "--control", "random",
       "--seed", "7", "--out", d + "fidelity-random"},
      {"eval-robustness", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--noise-seeds", "2", "--seed", "7", "--out", d + "robustness"},
      {"eval-gt", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--out", d + "gt"},
      {"eval-time", "--data", d + "data", "--model", d + "model.json", "--explainer",
       d + "explainer.json", "--out", d + "time"},
      {"sweep", "--data", d + "data", "--model", d + "model.json", "--regions", d + "regions.json",
       "--param", "lambda", "--values", "0.1,0.5", "--epochs", "10", "--seed", "7", "--out",
       d + "sweep"},
      {"gen-data", "--dataset", "tree-cycles", "--seed", "7", "--base-nodes", "63",
       "--motif-count", "8", "--out", d + "node-data"},
      {"train-gnn", "--data", d + "node-data", "--out", d + "node-model.json", "--seed", "7",
       "--epochs", "100"},
      {"extract-regions", "--data", d + "node-data", "--model", d + "node-model.json", "--out",
       d + "node-regions.json", "--seed", "7"},
      {"train-explainer", "--data", d + "node-data", "--model", d + "node-model.json",
       "--regions", d + "node-regions.json", "--out", d + "node-explainer.json", "--seed", "7",
       "--epochs", "5"},
      {"eval-gt", "--data", d + "node-data", "--model", d + "node-model.json", "--explainer",
       d + "node-explainer.json", "--out", d + "node-gt"},
  };
  for (auto step : steps) {
    step.insert(step.begin(), {"--threads", th});
    if (rcx_cmd(step) != 0) return false;
  }
  return true;
}

// Run records minus their wall time; other files verbatim. Timing tables
// measure the machine, not the pipeline, and are left out along with their
// digests.
std::map<std::string, std::string> artifact_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    const std::string name = entry.path().filename().string();
    if (name == "timing.csv") continue;
    std::string body = slurp(entry.path());
    if (name == "run.json" || name.ends_with(".run.json")) {
      Json j = Json::parse(body);
      j.erase("wall_time_seconds");
      if (j.contains("outputs")) j["outputs"].erase("timing.csv");
      body = j.dump();
    }
    out[rel] = std::move(body);
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "rcx_acceptance_determinism";
  const int keep = num_threads();
  const bool ok_a = run_pipeline(root / "a", 1);
  const bool ok_b = run_pipeline(root / "b", 2);
  set_num_threads(keep);
  if (!ok_a || !ok_b) return {false, "pipeline failed"};
  const auto a = artifact_contents(root / "a");
  const auto b = artifact_contents(root / "b");
  std::vector<std::string> differ;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) differ.push_back(k);
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) differ.push_back(k);
  std::string detail = std::to_string(a.size()) + " artifacts compared (1 vs 2 threads)";
  if (!differ.empty()) detail += ", differing: " + differ.front();
  return {differ.empty(), detail};
}

// --- 10. Inference scaling ------------------------------------------------------------

// Ring lattice with exactly `edges` edges: n = edges / 2 nodes, each joined to
// its two successors.
Graph lattice(int edges) {
  const int n = edges / 2;
  GraphData d;
  d.n = n;
  d.features = Mat::Zero(n, 10);
  d.features.col(1).setOnes();
  for (int i = 0; i < n; ++i) {
    d.edges.push_back(Edge::make(i, (i + 1) % n));
    d.edges.push_back(Edge::make(i, (i + 2) % n));
  }
  std::sort(d.edges.begin(), d.edges.end());
  return Graph(std::move(d));
}

double median_explain_seconds(const ExplainerNet& net, const GnnModel& m, const Graph& g) {
  int reps = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) explain_graph(net, m, g);
    if (seconds_since(t0) > 0.05) break;
    reps *= 2;
  }
  std::vector<double> blocks;
  for (int b = 0; b < 9; ++b) {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) explain_graph(net, m, g);
    blocks.push_back(seconds_since(t0) / reps);
  }
  std::nth_element(blocks.begin(), blocks.begin() + 4, blocks.end());
  return blocks[4];
}

Outcome scaling() {
  Rng rng = make_rng(0, "acceptance-scaling");
  const GnnModel m = random_gnn(rng, Task::kGraph, 10, 20, 2);
  const ExplainerNet net = random_net(rng, 20, 64);
  const int keep = num_threads();
  set_num_threads(1);
  std::vector<double> secs;
  for (int e : {50, 100, 200, 400, 800}) secs.push_back(median_explain_seconds(net, m, lattice(e)));
  set_num_threads(keep);
  double worst = 0.0;
  std::string detail = "ratios per doubling:";
  for (std::size_t i = 1; i < secs.size(); ++i) {
    const double r = secs[i] / secs[i - 1];
    worst = std::max(worst, r);
    detail += " " + fmt(r, 3);
  }
  detail += " (" + fmt(secs.front() * 1e6, 3) + " us at 50 edges)";
  return {worst <= 2.5, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      gradients, submodularity, greedy_feasibility, gnn_accuracy, ground_truth,
      counterfactual, robustness, properties, determinism, scaling};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  bool all = true;
  for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) {
    if (!wanted.empty() && !wanted.count(c)) continue;
    Outcome o;
    try {
      o = criteria[c - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
