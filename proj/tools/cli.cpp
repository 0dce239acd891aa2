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


#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "digest.hpp"
#include "rcx/boundaries.hpp"
#include "rcx/eval.hpp"
#include "rcx/explainer.hpp"
#include "rcx/gnn.hpp"
#include "rcx/parallel.hpp"
#include "rcx/synth.hpp"

namespace rcx::cli {
namespace {

namespace fs = std::filesystem;

// --- Artifact bookkeeping ----------------------------------------------------

// Run record of an artifact: <dir>/run.json for directories, <stem>.run.json
// next to a file.
fs::path record_path(const fs::path& artifact, bool is_dir) {
  if (is_dir) return artifact / "run.json";
  fs::path p = artifact;
  return p.replace_extension(".run.json");
}

Json dataset_digest(const fs::path& dir) {
  Json j;
  j["meta.json"] = file_digest(dir / "meta.json");
  j["graphs.jsonl"] = file_digest(dir / "graphs.jsonl");
  return j;
}

void require_file(const fs::path& p, const std::string& what) {
  require(!p.empty(), what + " path is required");
  require(fs::is_regular_file(p), what + " not found: " + p.string());
}

void require_dataset_dir(const fs::path& p) {
  require(!p.empty(), "dataset path is required");
  require(fs::is_directory(p) && fs::is_regular_file(p / "meta.json") &&
              fs::is_regular_file(p / "graphs.jsonl"),
          "dataset directory not found or incomplete: " + p.string());
}

bool same_path(const fs::path& a, const fs::path& b) {
  return fs::weakly_canonical(a) == fs::weakly_canonical(b);
}

void guard_outputs(const std::vector<fs::path>& outputs, const std::vector<fs::path>& inputs) {
  for (const auto& o : outputs)
    for (const auto& i : inputs)
      require(!same_path(o, i), "output would overwrite input " + i.string());
}

// Refuses an artifact whose run record names different input digests than the
// inputs of the current command. Artifacts without a record pass unchecked.
void check_lineage(const fs::path& artifact, const Json& expected, std::ostream& err) {
  const fs::path rec = record_path(artifact, false);
  if (!fs::is_regular_file(rec)) {
    err << "note: no run record for " << artifact.string() << ", input digests not checked\n";
    return;
  }
  nlohmann::json j;
  try {
    std::ifstream in(rec);
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("unreadable run record " + rec.string());
  }
  if (!j.contains("inputs") || !j["inputs"].is_object()) return;
  for (const auto& [key, value] : expected.items()) {
    if (!j["inputs"].contains(key)) continue;
    if (j["inputs"][key] != nlohmann::json(value)) {
      throw ConfigError(artifact.string() + " was produced from a different " + key +
                        " than the one given");
    }
  }
}

struct RunRecord {
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  Json outputs = Json::object();
};

void write_record(const fs::path& path, const RunRecord& r, double seconds) {
  Json j;
  j["command"] = r.command;
  j["seed"] = r.seed;
  j["config"] = r.config;
  j["inputs"] = r.inputs;
  j["outputs"] = r.outputs;
  j["wall_time_seconds"] = seconds;
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<int> split_ids(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.split.train;
  if (split == "val") return ds.split.val;
  if (split == "test") return ds.split.test;
  if (split == "all") {
    std::vector<int> all(ds.num_samples());
    for (int i = 0; i < ds.num_samples(); ++i) all[i] = i;
    return all;
  }
  throw ValidationError("unknown split '" + split + "' (train, val, test, all)");
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, int>) out.push_back(std::stoi(item, &used));
      else out.push_back(std::stod(item, &used));
      require(used == item.size(), "");
    } catch (const std::exception&) {
      throw ValidationError("bad value '" + item + "' in " + what);
    }
  }
  require(!out.empty(), what + " is empty");
  return out;
}

// --- Options ------------------------------------------------------------------

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  // paths
  std::string data, model, regions, explainer, out;
  // gen-data
  std::string dataset;
  std::optional<int> base_nodes, motif_count, graph_count;
  std::optional<double> noise_fraction;
  // train-gnn
  std::optional<double> gnn_lr, weight_decay;
  std::optional<int> gnn_epochs;
  int gnn_hidden = 20;
  std::optional<std::string> pooling;
  int batch_size = 0;
  // extract-regions
  int ldbs_per_class = 50;
  double region_eps = 1e-6;
  int max_rounds = 20;
  // train-explainer
  std::string mode = "rcexplainer";
  std::optional<double> lambda, beta, mu, eta, loss_scale, lr;
  std::optional<int> epochs, hidden, khop, contrast_from, contrast_to;
  // evaluation
  std::string split = "test";
  std::string control;
  std::string grid = "0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9";
  std::string levels = "0,0.05,0.1,0.15,0.2,0.25,0.3";
  std::string k = "8";
  std::string node_k = "2,4,8";
  int noise_seeds = 10;
  int max_retries = 20;
  double sigma_scale = 0.1;
  double threshold = 0.5;
  std::optional<int> graph, top_k;
  // sweep
  std::string param, values;
  double sparsity = 0.7;
};

ExplainerConfig explainer_config(const Options& o, Task task) {
  ExplainerConfig c = ExplainerConfig::defaults(task);
  c.mode = explainer_mode_from_string(o.mode);
  if (o.lambda) c.lambda = *o.lambda;
  if (o.beta) c.beta = *o.beta;
  if (o.mu) c.mu = *o.mu;
  if (o.eta) c.eta = *o.eta;
  if (o.loss_scale) c.loss_scale = *o.loss_scale;
  if (o.lr) c.lr = *o.lr;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.hidden) c.hidden = *o.hidden;
  if (o.khop) c.khop = *o.khop;
  if (o.contrast_from) c.contrast_from = *o.contrast_from;
  if (o.contrast_to) c.contrast_to = *o.contrast_to;
  c.seed = o.seed;
  c.validate();
  return c;
}

// Flat JSON config: keys are long option names (dashes or underscores);
// options given on the command line win.
void apply_config_file(CLI::App& sub, const std::string& file) {
  if (file.empty()) return;
  require_file(file, "config file");
  nlohmann::json j;
  try {
    std::ifstream in(file);
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config file is not valid JSON: " + file);
  }
  require(j.is_object(), "config file must hold a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    require(name != "config", "config file cannot name another config file");
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    require(opt != nullptr, "config key '" + key + "' is not an option of " + sub.get_name());
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        require(value[i].is_number(), "config key '" + key + "' must list numbers");
        text += (i ? "," : "") + value[i].dump();
      }
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw ValidationError("config key '" + key + "' has an unsupported type");
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

// --- Loading with consistency checks -------------------------------------------

struct Loaded {
  Dataset ds;
  GnnModel model;
  Json data_digest;
  std::string model_digest;
};

Loaded load_data_and_model(const Options& o, std::ostream& err) {
  require_dataset_dir(o.data);
  require_file(o.model, "model");
  Loaded l;
  l.ds = load_dataset(o.data);
  l.model = load_model(o.model);
  l.data_digest = dataset_digest(o.data);
  l.model_digest = file_digest(o.model);
  if (l.model.task != l.ds.task || l.model.d_in != l.ds.feature_dim() ||
      l.model.num_classes != l.ds.num_classes) {
    throw ConfigError("model does not match the dataset (task, feature width or classes)");
  }
  Json expect;
  expect["data"] = l.data_digest;
  check_lineage(o.model, expect, err);
  return l;
}

std::pair<ExplainerNet, ExplainerConfig> load_checked_explainer(const Options& o, const Loaded& l,
                                                                std::ostream& err) {
  require_file(o.explainer, "explainer");
  auto [net, cfg] = load_explainer(o.explainer);
  if (net.emb_dim != l.model.hidden) {
    throw ConfigError("explainer was trained on embeddings of a different width");
  }
  Json expect;
  expect["data"] = l.data_digest;
  expect["model"] = l.model_digest;
  check_lineage(o.explainer, expect, err);
  return {net, cfg};
}

MaskFn mask_source(const Options& o, const Loaded& l, Json& inputs, std::ostream& err,
                   int* khop) {
  if (o.control == "random") {
    inputs["control"] = "random";
    return random_masks(o.seed);
  }
  require(o.control.empty(), "unknown control '" + o.control + "' (random)");
  auto [net, cfg] = load_checked_explainer(o, l, err);
  inputs["explainer"] = file_digest(o.explainer);
  if (khop) *khop = cfg.khop;
  return explainer_masks(net, l.model);
}

// --- Commands --------------------------------------------------------------------

using Command = std::function<RunRecord(const Options&, std::ostream&, std::ostream&)>;

RunRecord cmd_gen_data(const Options& o, std::ostream& out, std::ostream&) {
  require(!o.out.empty(), "--out is required");
  GeneratorConfig gc;
  gc.name = dataset_name_from_string(o.dataset);
  gc.seed = o.seed;
  gc.base_nodes = o.base_nodes;
  gc.motif_count = o.motif_count;
  gc.graph_count = o.graph_count;
  gc.noise_fraction = o.noise_fraction;
  const Dataset ds = generate(gc);
  fs::create_directories(o.out);
  save_dataset(ds, o.out);
  RunRecord r;
  r.command = "gen-data";
  r.config = gc.to_json();
  r.outputs = dataset_digest(o.out);
  out << "wrote " << ds.num_samples() << " samples to " << o.out << '\n';
  return r;
}

RunRecord cmd_train_gnn(const Options& o, std::ostream& out, std::ostream&) {
  require_dataset_dir(o.data);
  require(!o.out.empty(), "--out is required");
  guard_outputs({o.out, record_path(o.out, false)},
                {fs::path(o.data) / "meta.json", fs::path(o.data) / "graphs.jsonl"});
  const Dataset ds = load_dataset(o.data);
  TrainConfig tc = TrainConfig::defaults_for(ds);
  if (o.gnn_lr) tc.lr = *o.gnn_lr;
  if (o.gnn_epochs) tc.epochs = *o.gnn_epochs;
  if (o.weight_decay) tc.weight_decay = *o.weight_decay;
  tc.seed = o.seed;
  tc.hidden = o.gnn_hidden;
  if (o.pooling) tc.pooling = pooling_from_string(*o.pooling);
  tc.batch_size = o.batch_size;
  const auto [model, metrics] = train_gnn(ds, tc);
  Json training = tc.to_json();
  training["train_accuracy"] = metrics.train_acc;
  training["val_accuracy"] = metrics.val_acc;
  training["test_accuracy"] = metrics.test_acc;
  training["final_loss"] = metrics.final_loss;
  training["best_epoch"] = metrics.best_epoch;
  save_model(model, o.out, training);
  RunRecord r;
  r.command = "train-gnn";
  r.config = tc.to_json();
  r.inputs["data"] = dataset_digest(o.data);
  r.outputs[fs::path(o.out).filename().string()] = file_digest(o.out);
  out << "accuracy train " << metrics.train_acc << " val " << metrics.val_acc << " test "
      << metrics.test_acc << '\n';
  return r;
}

RunRecord cmd_extract_regions(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  require(!o.out.empty(), "--out is required");
  guard_outputs({o.out, record_path(o.out, false)}, {o.model, record_path(o.model, false)});
  RegionConfig rc;
  rc.ldbs_per_class = o.ldbs_per_class;
  rc.eps = o.region_eps;
  rc.max_rounds = o.max_rounds;
  rc.seed = o.seed;
  const RegionSet rs = extract_regions(l.model, l.ds, rc);
  save_regions(rs, o.out);
  for (const auto& w : rs.warnings) err << "warning: " << w << '\n';
  RunRecord r;
  r.command = "extract-regions";
  r.config = rc.to_json();
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  r.outputs[fs::path(o.out).filename().string()] = file_digest(o.out);
  out << "extracted " << rs.regions.size() << " regions\n";
  return r;
}

RunRecord cmd_train_explainer(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  require_file(o.regions, "regions");
  require(!o.out.empty(), "--out is required");
  guard_outputs({o.out, record_path(o.out, false)},
                {o.model, o.regions, record_path(o.model, false), record_path(o.regions, false)});
  const std::string regions_digest = file_digest(o.regions);
  Json expect;
  expect["data"] = l.data_digest;
  expect["model"] = l.model_digest;
  check_lineage(o.regions, expect, err);
  const RegionSet rs = load_regions(o.regions);
  const ExplainerConfig cfg = explainer_config(o, l.ds.task);
  const TrainedExplainer te = train_explainer(l.ds, rs, l.model, cfg);
  Json meta;
  meta["final_loss"] = te.log.epoch_loss.empty() ? 0.0 : te.log.epoch_loss.back();
  meta["epoch_loss"] = te.log.epoch_loss;
  Json val = Json::array();
  for (const auto& [e, v] : te.log.val_loss) val.push_back({e, v});
  meta["val_loss"] = std::move(val);
  save_explainer(te.net, cfg, meta, o.out);
  RunRecord r;
  r.command = "train-explainer";
  r.config = cfg.to_json();
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  r.inputs["regions"] = regions_digest;
  r.outputs[fs::path(o.out).filename().string()] = file_digest(o.out);
  out << "final loss " << meta["final_loss"].get<double>() << '\n';
  return r;
}

RunRecord cmd_explain(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  auto [net, cfg] = load_checked_explainer(o, l, err);
  require(!o.out.empty(), "--out is required");
  guard_outputs({o.out, record_path(o.out, false)}, {o.model, o.explainer});
  std::vector<int> ids;
  if (o.graph) {
    require(*o.graph >= 0 && *o.graph < l.ds.num_samples(), "--graph id out of range");
    ids.push_back(*o.graph);
  } else {
    ids = split_ids(l.ds, o.split);
  }
  if (o.top_k) require(*o.top_k >= 0, "--top-k must be non-negative");
  std::vector<Json> records(ids.size());
  std::vector<char> truncated(ids.size(), 0);
  parallel_for(static_cast<int>(ids.size()), [&](int k) {
    const int id = ids[k];
    const Graph& g = l.ds.task == Task::kGraph ? l.ds.graphs[id] : l.ds.graphs.front();
    std::vector<double> mask;
    std::vector<char> scope;
    if (l.ds.task == Task::kGraph) {
      mask = explain_graph(net, l.model, g);
    } else {
      NodeExplanation e = explain_node(net, l.model, g, id, cfg.khop);
      mask = std::move(e.mask);
      scope = std::move(e.in_scope);
    }
    std::vector<int> chosen;
    if (o.top_k) {
      const long eligible = scope.empty() ? g.num_edges() : std::count(scope.begin(), scope.end(), 1);
      truncated[k] = *o.top_k > eligible;
      chosen = select_top_k(mask, *o.top_k, scope);
    } else {
      chosen = select_threshold(mask, o.threshold, scope);
    }
    Json j;
    j["id"] = id;
    Json edges = Json::array(), selected = Json::array();
    for (int e = 0; e < g.num_edges(); ++e) {
      if (!scope.empty() && !scope[e]) continue;
      edges.push_back({g.edges()[e].u, g.edges()[e].v, mask[e]});
    }
    for (int e : chosen) selected.push_back({g.edges()[e].u, g.edges()[e].v});
    j["edges"] = std::move(edges);
    j["selected"] = std::move(selected);
    records[k] = std::move(j);
  });
  for (std::size_t k = 0; k < ids.size(); ++k)
    if (truncated[k]) err << "warning: sample " << ids[k] << " has fewer than " << *o.top_k << " edges\n";
  std::ofstream f(o.out, std::ios::binary);
  require(f.good(), "cannot write " + o.out);
  if (o.graph) {
    f << records.front().dump() << '\n';
  } else {
    for (const auto& r : records) f << r.dump() << '\n';
  }
  f.close();
  RunRecord r;
  r.command = "explain";
  if (o.graph) r.config["graph"] = *o.graph;
  else r.config["split"] = o.split;
  if (o.top_k) r.config["top_k"] = *o.top_k;
  else r.config["threshold"] = o.threshold;
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  r.inputs["explainer"] = file_digest(o.explainer);
  r.outputs[fs::path(o.out).filename().string()] = file_digest(o.out);
  out << "explained " << ids.size() << (ids.size() == 1 ? " sample\n" : " samples\n");
  return r;
}

void prepare_out_dir(const Options& o, const std::vector<std::string>& files,
                     const std::vector<fs::path>& inputs) {
  require(!o.out.empty(), "--out is required");
  std::vector<fs::path> outputs{fs::path(o.out) / "run.json"};
  for (const auto& f : files) outputs.push_back(fs::path(o.out) / f);
  guard_outputs(outputs, inputs);
  fs::create_directories(o.out);
}

std::vector<fs::path> eval_inputs(const Options& o) {
  std::vector<fs::path> in{fs::path(o.data) / "meta.json", fs::path(o.data) / "graphs.jsonl",
                           fs::path(o.data) / "run.json", o.model, record_path(o.model, false)};
  if (!o.explainer.empty()) {
    in.push_back(o.explainer);
    in.push_back(record_path(o.explainer, false));
  }
  return in;
}

RunRecord cmd_eval_fidelity(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  RunRecord r;
  r.command = "eval-fidelity";
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  const MaskFn masks = mask_source(o, l, r.inputs, err, nullptr);
  prepare_out_dir(o, {"fidelity.csv"}, eval_inputs(o));
  const std::vector<double> grid = parse_list<double>(o.grid, "--grid");
  const std::vector<int> ids = split_ids(l.ds, o.split);
  const FidelityCurve curve = fidelity_sparsity_curve(l.model, l.ds, ids, masks, grid);
  const fs::path csv = fs::path(o.out) / "fidelity.csv";
  write_fidelity_csv(csv, curve);
  r.config["split"] = o.split;
  r.config["grid"] = grid;
  r.outputs["fidelity.csv"] = file_digest(csv);
  for (const auto& p : curve.points)
    out << "sparsity " << p.sparsity << " fidelity " << p.mean << " (n=" << p.n << ")\n";
  return r;
}

RunRecord cmd_eval_robustness(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  RunRecord r;
  r.command = "eval-robustness";
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  int khop = 3;
  const MaskFn masks = mask_source(o, l, r.inputs, err, &khop);
  prepare_out_dir(o, {"robustness.csv", "node_accuracy.csv"}, eval_inputs(o));
  RobustnessConfig rc;
  rc.levels = parse_list<double>(o.levels, "--levels");
  rc.k = parse_list<int>(o.k, "--k");
  rc.seeds = o.noise_seeds;
  rc.max_retries = o.max_retries;
  rc.sigma_scale = o.sigma_scale;
  rc.seed = o.seed;
  const std::vector<int> ids = split_ids(l.ds, o.split);
  const auto auc = robustness_auc(l.model, l.ds, ids, masks, rc, khop);
  RobustnessConfig nc = rc;
  nc.k = parse_list<int>(o.node_k, "--node-k");
  const auto acc = node_accuracy(l.model, l.ds, ids, masks, nc, khop);
  const fs::path auc_csv = fs::path(o.out) / "robustness.csv";
  const fs::path acc_csv = fs::path(o.out) / "node_accuracy.csv";
  write_robustness_csv(auc_csv, auc, "mean_auc");
  write_robustness_csv(acc_csv, acc, "mean_accuracy");
  r.config["split"] = o.split;
  r.config["levels"] = rc.levels;
  r.config["k"] = rc.k;
  r.config["node_k"] = nc.k;
  r.config["noise_seeds"] = rc.seeds;
  r.config["max_retries"] = rc.max_retries;
  r.config["sigma_scale"] = rc.sigma_scale;
  r.outputs["robustness.csv"] = file_digest(auc_csv);
  r.outputs["node_accuracy.csv"] = file_digest(acc_csv);
  for (const auto& row : auc)
    out << "noise " << row.noise_pct << " k " << row.k << " auc " << row.mean << " (skipped "
        << row.skipped << ")\n";
  return r;
}

RunRecord cmd_eval_gt(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  RunRecord r;
  r.command = "eval-gt";
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  int khop = 3;
  const MaskFn masks = mask_source(o, l, r.inputs, err, &khop);
  prepare_out_dir(o, {"gt_eval.csv"}, eval_inputs(o));
  const std::vector<int> pool = split_ids(l.ds, o.split);
  const std::vector<int> motif = motif_ids(l.ds);
  std::vector<int> ids;
  std::set_intersection(pool.begin(), pool.end(), motif.begin(), motif.end(),
                        std::back_inserter(ids));
  if (!std::is_sorted(pool.begin(), pool.end())) {
    std::vector<int> sorted = pool;
    std::sort(sorted.begin(), sorted.end());
    ids.clear();
    std::set_intersection(sorted.begin(), sorted.end(), motif.begin(), motif.end(),
                          std::back_inserter(ids));
  }
  require(!ids.empty(), "eval-gt: no motif samples in split '" + o.split + "'");
  const GroundTruthResult g = ground_truth_auc_acc(l.ds, ids, masks, khop);
  const fs::path csv = fs::path(o.out) / "gt_eval.csv";
  write_gt_csv(csv, g);
  r.config["split"] = o.split;
  r.outputs["gt_eval.csv"] = file_digest(csv);
  out << "auc " << g.auc << " accuracy " << g.accuracy << " (n=" << g.evaluated << ")\n";
  return r;
}

RunRecord cmd_eval_time(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  auto [net, cfg] = load_checked_explainer(o, l, err);
  prepare_out_dir(o, {"timing.csv"}, eval_inputs(o));
  const std::vector<int> ids = split_ids(l.ds, o.split);
  const TimingResult t = time_inference(net, l.model, l.ds, ids, cfg.khop);
  const fs::path csv = fs::path(o.out) / "timing.csv";
  write_timing_csv(csv, t);
  RunRecord r;
  r.command = "eval-time";
  r.config["split"] = o.split;
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  r.inputs["explainer"] = file_digest(o.explainer);
  r.outputs["timing.csv"] = file_digest(csv);
  out << "mean " << t.mean_seconds << " s per explanation (n=" << t.n << ")\n";
  return r;
}

RunRecord cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load_data_and_model(o, err);
  require_file(o.regions, "regions");
  Json expect;
  expect["data"] = l.data_digest;
  expect["model"] = l.model_digest;
  check_lineage(o.regions, expect, err);
  prepare_out_dir(o, {"sweep.csv"},
                  {o.model, o.regions, record_path(o.model, false), record_path(o.regions, false)});
  const RegionSet base_regions = load_regions(o.regions);
  const std::vector<double> values = parse_list<double>(o.values, "--values");
  const std::string param = o.param;
  const std::vector<std::string> known{"lambda", "beta", "mu", "eta", "loss-scale", "lr",
                                       "epochs", "hidden", "ldbs-per-class"};
  require(std::find(known.begin(), known.end(), param) != known.end(),
          "sweep: unknown --param '" + param + "'");
  const std::vector<int> ids = split_ids(l.ds, o.split);
  const bool binary_graph = l.ds.task == Task::kGraph && l.ds.num_classes == 2;
  const bool has_gt = std::all_of(l.ds.graphs.begin(), l.ds.graphs.end(),
                                  [](const Graph& g) { return g.has_gt(); });

  const fs::path csv = fs::path(o.out) / "sweep.csv";
  std::ostringstream rows;
  rows << "param,value,final_loss,fidelity,gt_auc,gt_accuracy\n";
  for (double v : values) {
    Options po = o;
    RegionSet rs = base_regions;
    if (param == "lambda") po.lambda = v;
    else if (param == "beta") po.beta = v;
    else if (param == "mu") po.mu = v;
    else if (param == "eta") po.eta = v;
    else if (param == "loss-scale") po.loss_scale = v;
    else if (param == "lr") po.lr = v;
    else if (param == "epochs") po.epochs = static_cast<int>(v);
    else if (param == "hidden") po.hidden = static_cast<int>(v);
    if (param == "ldbs-per-class") {
      RegionConfig rc = base_regions.config;
      rc.ldbs_per_class = static_cast<int>(v);
      rs = extract_regions(l.model, l.ds, rc);
    }
    const ExplainerConfig cfg = explainer_config(po, l.ds.task);
    const TrainedExplainer te = train_explainer(l.ds, rs, l.model, cfg);
    const MaskFn masks = explainer_masks(te.net, l.model);
    rows << param << ',' << format_number(v) << ','
         << format_number(te.log.epoch_loss.empty() ? 0.0 : te.log.epoch_loss.back()) << ',';
    if (binary_graph && !positive_ids(l.ds, ids).empty()) {
      const std::vector<double> grid{o.sparsity};
      rows << format_number(
          fidelity_sparsity_curve(l.model, l.ds, ids, masks, grid).points.front().mean);
    }
    rows << ',';
    if (has_gt) {
      const GroundTruthResult g = ground_truth_auc_acc(l.ds, motif_ids(l.ds), masks, cfg.khop);
      rows << format_number(g.auc) << ',' << format_number(g.accuracy);
    } else {
      rows << ',';
    }
    rows << '\n';
    out << param << " = " << v << " done\n";
  }
  {
    std::ofstream f(csv, std::ios::binary);
    require(f.good(), "cannot write " + csv.string());
    f << rows.str();
  }
  RunRecord r;
  r.command = "sweep";
  r.config["param"] = param;
  r.config["values"] = values;
  r.config["split"] = o.split;
  r.config["sparsity"] = o.sparsity;
  r.config["explainer"] = explainer_config(o, l.ds.task).to_json();
  r.inputs["data"] = l.data_digest;
  r.inputs["model"] = l.model_digest;
  r.inputs["regions"] = file_digest(o.regions);
  r.outputs["sweep.csv"] = file_digest(csv);
  return r;
}

// --- Wiring -------------------------------------------------------------------------

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "Flat JSON file of option values");
  sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
}

void add_data_model(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--model", o.model, "GNN checkpoint")->required();
}

void add_explainer_params(CLI::App* sub, Options& o) {
  sub->add_option("--mode", o.mode, "rcexplainer, rcexp-noldb or contrastive")
      ->capture_default_str();
  sub->add_option("--lambda", o.lambda, "Weight of the boundary loss terms");
  sub->add_option("--beta", o.beta, "Sparsity weight");
  sub->add_option("--mu", o.mu, "Discreteness weight");
  sub->add_option("--eta", o.eta, "Baseline confidence weight");
  sub->add_option("--loss-scale", o.loss_scale, "Overall loss scale");
  sub->add_option("--lr", o.lr, "Explainer learning rate");
  sub->add_option("--epochs", o.epochs, "Explainer epochs");
  sub->add_option("--hidden", o.hidden, "Explainer hidden width");
  sub->add_option("--khop", o.khop, "Computation-graph radius (node tasks)");
  sub->add_option("--contrast-from", o.contrast_from, "Contrastive source class");
  sub->add_option("--contrast-to", o.contrast_to, "Contrastive target class");
}

void add_mask_source(CLI::App* sub, Options& o) {
  sub->add_option("--explainer", o.explainer, "Explainer checkpoint");
  sub->add_option("--control", o.control, "Use a control instead of an explainer: random");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rcx: robust counterfactual explanations for graph neural networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: RCX_THREADS or all cores)");

  std::vector<std::pair<CLI::App*, Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, Command cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    commands.emplace_back(sub, std::move(cmd));
    return sub;
  };

  CLI::App* gen = add("gen-data", "Generate a synthetic dataset", cmd_gen_data);
  gen->add_option("--dataset", o.dataset,
                  "ba-shapes, ba-community, tree-cycles, tree-grid, ba-2motifs, tri-motifs")
      ->required();
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--base-nodes", o.base_nodes, "Override the base graph size");
  gen->add_option("--motif-count", o.motif_count, "Override the motif count");
  gen->add_option("--graph-count", o.graph_count, "Override the graph count");
  gen->add_option("--noise-fraction", o.noise_fraction, "Override the noise-edge fraction");

  CLI::App* tg = add("train-gnn", "Train the GCN", cmd_train_gnn);
  tg->add_option("--data", o.data, "Dataset directory")->required();
  tg->add_option("--out", o.out, "Model checkpoint to write")->required();
  tg->add_option("--lr", o.gnn_lr, "Learning rate (default 0.001, 0.01 on ba-community and graph tasks)");
  tg->add_option("--epochs", o.gnn_epochs, "Epochs (default 1000, 2000 on ba-community)");
  tg->add_option("--weight-decay", o.weight_decay, "L2 weight decay (default 5e-4, 5e-3 on ba-community)");
  tg->add_option("--hidden", o.gnn_hidden, "Hidden width")->capture_default_str();
  tg->add_option("--pooling", o.pooling, "mean, max or sum (default max on graph tasks)");
  tg->add_option("--batch-size", o.batch_size, "Graphs per step, 0 for full batch")
      ->capture_default_str();

  CLI::App* er = add("extract-regions", "Extract decision regions", cmd_extract_regions);
  add_data_model(er, o);
  er->add_option("--out", o.out, "Regions file to write")->required();
  er->add_option("--ldbs-per-class", o.ldbs_per_class, "Boundaries sampled per class")
      ->capture_default_str();
  er->add_option("--eps", o.region_eps, "Greedy cost smoothing")->capture_default_str();
  er->add_option("--max-rounds", o.max_rounds, "Peeling rounds per class")->capture_default_str();

  CLI::App* te = add("train-explainer", "Train the explanation network", cmd_train_explainer);
  add_data_model(te, o);
  te->add_option("--regions", o.regions, "Regions file")->required();
  te->add_option("--out", o.out, "Explainer checkpoint to write")->required();
  add_explainer_params(te, o);

  CLI::App* ex = add("explain", "Write edge masks and selected edges", cmd_explain);
  add_data_model(ex, o);
  ex->add_option("--explainer", o.explainer, "Explainer checkpoint")->required();
  ex->add_option("--out", o.out, "Output file: JSON for --graph, JSON lines otherwise")
      ->required();
  ex->add_option("--graph", o.graph, "Explain a single sample (graph id, or node id)");
  ex->add_option("--split", o.split, "Samples to explain without --graph")
      ->capture_default_str();
  ex->add_option("--top-k", o.top_k, "Select the k highest-mask edges");
  ex->add_option("--threshold", o.threshold, "Select edges with mask above this value")
      ->capture_default_str();

  CLI::App* ef = add("eval-fidelity", "Fidelity / sparsity curve", cmd_eval_fidelity);
  add_data_model(ef, o);
  add_mask_source(ef, o);
  ef->add_option("--out", o.out, "Output directory")->required();
  ef->add_option("--split", o.split, "train, val, test or all")->capture_default_str();
  ef->add_option("--grid", o.grid, "Comma-separated sparsity levels")->capture_default_str();

  CLI::App* rb = add("eval-robustness", "Noise robustness (edge AUC, node accuracy)",
                     cmd_eval_robustness);
  add_data_model(rb, o);
  add_mask_source(rb, o);
  rb->add_option("--out", o.out, "Output directory")->required();
  rb->add_option("--split", o.split, "train, val, test or all")->capture_default_str();
  rb->add_option("--levels", o.levels, "Comma-separated noise fractions")->capture_default_str();
  rb->add_option("--k", o.k, "Top-k edges treated as ground truth")->capture_default_str();
  rb->add_option("--node-k", o.node_k, "Top-k nodes for node accuracy")->capture_default_str();
  rb->add_option("--noise-seeds", o.noise_seeds, "Perturbation seeds averaged")
      ->capture_default_str();
  rb->add_option("--max-retries", o.max_retries, "Attempts to keep the prediction")
      ->capture_default_str();
  rb->add_option("--sigma-scale", o.sigma_scale, "Feature noise as a fraction of the spread")
      ->capture_default_str();

  CLI::App* gt = add("eval-gt", "Ground-truth edge AUC and accuracy", cmd_eval_gt);
  add_data_model(gt, o);
  add_mask_source(gt, o);
  gt->add_option("--out", o.out, "Output directory")->required();
  gt->add_option("--split", o.split, "train, val, test or all")->default_val("all");

  CLI::App* tm = add("eval-time", "Explanation wall time", cmd_eval_time);
  add_data_model(tm, o);
  tm->add_option("--explainer", o.explainer, "Explainer checkpoint")->required();
  tm->add_option("--out", o.out, "Output directory")->required();
  tm->add_option("--split", o.split, "train, val, test or all")->capture_default_str();

  CLI::App* sw = add("sweep", "Train and evaluate one explainer per parameter value", cmd_sweep);
  add_data_model(sw, o);
  sw->add_option("--regions", o.regions, "Regions file")->required();
  sw->add_option("--out", o.out, "Output directory")->required();
  sw->add_option("--param", o.param,
                 "lambda, beta, mu, eta, loss-scale, lr, epochs, hidden or ldbs-per-class")
      ->required();
  sw->add_option("--values", o.values, "Comma-separated values")->required();
  sw->add_option("--split", o.split, "Split for the fidelity column")->capture_default_str();
  sw->add_option("--sparsity", o.sparsity, "Sparsity of the fidelity column")
      ->capture_default_str();
  add_explainer_params(sw, o);

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 takes them reversed
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (threads < 0) throw ValidationError("--threads must be positive");
    if (threads > 0) set_num_threads(threads);
    for (auto& [sub, cmd] : commands) {
      if (!sub->parsed()) continue;
      apply_config_file(*sub, o.config);
      const auto t0 = std::chrono::steady_clock::now();
      RunRecord r = cmd(o, out, err);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.seed = o.seed;
      const bool dir_output = r.command == "gen-data" || r.command.rfind("eval-", 0) == 0 ||
                              r.command == "sweep";
      write_record(record_path(o.out, dir_output), r, secs);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rcx::cli
