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


#include "rcx/boundaries.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "rcx/parallel.hpp"

namespace rcx {

LinearBoundary sample_ldb(const GnnModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& alpha,
                          int source_id) {
  require(alpha.size() == m.hidden, "sample_ldb: embedding width mismatch");
  const Mat a = alpha;
  const HeadTrace t = head_forward(m, a);
  const auto logits = t.logits.row(0);
  int top1 = 0;
  for (int c = 1; c < m.num_classes; ++c)
    if (logits(c) > logits(top1)) top1 = c;
  int top2 = top1 == 0 ? 1 : 0;
  for (int c = 0; c < m.num_classes; ++c)
    if (c != top1 && logits(c) > logits(top2)) top2 = c;
  const double gap = logits(top1) - logits(top2);
  if (!(gap > 0.0)) throw DegenerateBoundary("sample_ldb: top-1 and top-2 logits tie");

  Mat d_logits = Mat::Zero(1, m.num_classes);
  d_logits(0, top1) = 1.0;
  d_logits(0, top2) = -1.0;
  const Mat w = head_backward(m, t, d_logits);
  LinearBoundary lb;
  lb.w = w.row(0).transpose();
  if (!lb.w.allFinite()) throw NumericError("sample_ldb: non-finite boundary");
  if (lb.w.isZero(0)) throw DegenerateBoundary("sample_ldb: zero boundary normal");
  lb.b = gap - alpha.dot(lb.w.transpose());
  lb.source_id = source_id;
  lb.top1 = top1;
  lb.top2 = top2;
  return lb;
}

LinearBoundary sample_ldb(const GnnModel& m, const Graph& g, int source_id) {
  require(m.task == Task::kGraph, "sample_ldb: graph overload needs a graph-task model");
  const ForwardTrace t = forward(m, g);
  return sample_ldb(m, t.embedding.row(0), source_id);
}

SignMatrix sign_matrix(std::span<const LinearBoundary> bounds, const Mat& alpha,
                       std::span<const int> pool) {
  SignMatrix s(pool.size(), bounds.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t k = 0; k < bounds.size(); ++k)
      s(i, k) = static_cast<signed char>(boundary_sign(bounds[k].eval(alpha.row(pool[i]))));
  return s;
}

Coverage coverage(const SignMatrix& signs, std::span<const char> is_c, std::span<const int> subset) {
  require(static_cast<std::size_t>(signs.rows()) == is_c.size(), "coverage: size mismatch");
  // Patterns are keyed in ascending column order so the result depends only on
  // the set of boundaries, not on the order they were listed in.
  std::vector<std::size_t> order(subset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return subset[x] < subset[y]; });
  std::map<std::vector<signed char>, std::pair<int, int>> cells;
  std::vector<signed char> key(subset.size());
  for (Eigen::Index i = 0; i < signs.rows(); ++i) {
    for (std::size_t k = 0; k < subset.size(); ++k) key[k] = signs(i, subset[order[k]]);
    auto& cell = cells[key];
    if (is_c[i]) {
      ++cell.first;
    } else {
      ++cell.second;
    }
  }
  Coverage best;
  bool found = false;
  for (const auto& [pattern, counts] : cells) {
    if (!found || counts.first > best.g) {
      found = true;
      best.g = counts.first;
      best.h = counts.second;
      best.sign_pattern.resize(subset.size());
      for (std::size_t k = 0; k < subset.size(); ++k) best.sign_pattern[order[k]] = pattern[k];
    }
  }
  if (!found) best.sign_pattern.assign(subset.size(), 1);
  return best;
}

Coverage coverage(std::span<const LinearBoundary> bounds, const Mat& alpha,
                  std::span<const int> preds, int c) {
  std::vector<int> pool(alpha.rows());
  std::iota(pool.begin(), pool.end(), 0);
  require(preds.size() == pool.size(), "coverage: one prediction per embedding row required");
  const SignMatrix s = sign_matrix(bounds, alpha, pool);
  std::vector<char> is_c(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) is_c[i] = preds[i] == c;
  std::vector<int> all(bounds.size());
  std::iota(all.begin(), all.end(), 0);
  return coverage(s, is_c, all);
}

GreedyResult greedy_select(const SignMatrix& signs, std::span<const char> is_c, double eps) {
  const int k = static_cast<int>(signs.cols());
  require(k > 0, "greedy_select: no candidate boundaries");
  std::vector<int> all(k);
  std::iota(all.begin(), all.end(), 0);
  GreedyResult r;
  r.delta = coverage(signs, is_c, all).h;
  r.cov = coverage(signs, is_c, {});
  std::vector<char> used(k, 0);
  while (r.cov.h > r.delta) {
    int pick = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    int flat_pick = -1, flat_gdec = 0;
    int up_pick = -1, up_hinc = 0, up_gdec = 0;
    Coverage pick_cov, flat_cov, up_cov;
    std::vector<int> trial = r.selected;
    trial.push_back(-1);
    for (int cand = 0; cand < k; ++cand) {
      if (used[cand]) continue;
      trial.back() = cand;
      const Coverage cov = coverage(signs, is_c, trial);
      const int hdec = r.cov.h - cov.h;
      const int gdec = r.cov.g - cov.g;
      if (hdec > 0) {
        const double ratio = (gdec + eps) / hdec;
        if (ratio < best_ratio) {
          best_ratio = ratio;
          pick = cand;
          pick_cov = cov;
        }
      } else if (hdec == 0) {
        if (flat_pick < 0 || gdec < flat_gdec) {
          flat_pick = cand;
          flat_gdec = gdec;
          flat_cov = cov;
        }
      } else if (up_pick < 0 || -hdec < up_hinc || (-hdec == up_hinc && gdec < up_gdec)) {
        up_pick = cand;
        up_hinc = -hdec;
        up_gdec = gdec;
        up_cov = cov;
      }
    }
    if (pick < 0 && flat_pick >= 0) {
      pick = flat_pick;
      pick_cov = flat_cov;
    } else if (pick < 0 && up_pick >= 0) {
      pick = up_pick;
      pick_cov = up_cov;
    }
    if (pick < 0) {
      throw NumericError("greedy_select: stalled at g=" + std::to_string(r.cov.g) +
                         " h=" + std::to_string(r.cov.h));
    }
    used[pick] = 1;
    r.selected.push_back(pick);
    r.cov = pick_cov;
    r.trace.push_back({pick, r.cov.g, r.cov.h});
  }
  return r;
}

bool DecisionRegion::contains(const Eigen::Ref<const Eigen::RowVectorXd>& alpha) const {
  for (std::size_t i = 0; i < boundaries.size(); ++i)
    if (boundary_sign(boundaries[i].eval(alpha)) != sign_pattern[i]) return false;
  return true;
}

Json RegionConfig::to_json() const {
  Json j;
  j["ldbs_per_class"] = ldbs_per_class;
  j["eps"] = eps;
  j["max_rounds"] = max_rounds;
  j["redraw_per_round"] = redraw_per_round;
  j["seed"] = seed;
  return j;
}

int RegionSet::region_of(int id) const {
  auto it = std::lower_bound(assignment.begin(), assignment.end(), std::make_pair(id, -1));
  return it != assignment.end() && it->first == id ? it->second : -1;
}

namespace {

bool same_boundary(const LinearBoundary& a, const LinearBoundary& b) {
  return std::abs(a.b - b.b) <= 1e-9 && (a.w - b.w).cwiseAbs().maxCoeff() <= 1e-9;
}

// Boundaries sampled at `count` draws from `from`: without replacement when
// enough samples exist, else with replacement and deduplicated.
std::vector<LinearBoundary> draw_boundaries(const GnnModel& m, const Mat& alpha,
                                            const std::vector<int>& from, int count, Rng& rng) {
  std::vector<int> picks;
  if (static_cast<int>(from.size()) >= count) {
    std::vector<int> order = from;
    for (int i = 0; i < count; ++i) {
      const std::size_t j = i + uniform_index(rng, order.size() - i);
      std::swap(order[i], order[j]);
    }
    picks.assign(order.begin(), order.begin() + count);
  } else {
    for (int i = 0; i < count; ++i) picks.push_back(from[uniform_index(rng, from.size())]);
  }
  std::vector<LinearBoundary> out;
  for (int id : picks) {
    LinearBoundary lb;
    try {
      lb = sample_ldb(m, alpha.row(id), id);
    } catch (const DegenerateBoundary&) {
      continue;
    }
    bool dup = false;
    for (const auto& o : out) dup = dup || same_boundary(o, lb);
    if (!dup) out.push_back(std::move(lb));
  }
  return out;
}

}  // namespace

RegionSet extract_regions(const GnnModel& m, const Mat& alpha, std::span<const int> preds,
                          std::span<const int> train_ids, const RegionConfig& cfg) {
  require(cfg.ldbs_per_class > 0 && cfg.max_rounds > 0 && cfg.eps > 0, "extract_regions: bad config");
  require(static_cast<Eigen::Index>(preds.size()) == alpha.rows(),
          "extract_regions: one prediction per embedding row required");
  RegionSet rs;
  rs.task = m.task;
  rs.num_classes = m.num_classes;
  rs.config = cfg;
  std::vector<int> train(train_ids.begin(), train_ids.end());
  std::sort(train.begin(), train.end());

  for (int c = 0; c < m.num_classes; ++c) {
    std::vector<int> remaining, others;
    for (int id : train) (preds[id] == c ? remaining : others).push_back(id);
    std::vector<LinearBoundary> fixed;
    for (int round = 0; !remaining.empty(); ++round) {
      Rng rng = make_rng(cfg.seed, "ldb", static_cast<std::uint64_t>(c) * 1000003u + round);
      if (round >= cfg.max_rounds) {
        // Singleton fallback: each leftover sample gets its own boundary.
        for (int id : remaining) {
          DecisionRegion reg;
          reg.cls = c;
          reg.singleton = true;
          reg.covered_ids = {id};
          try {
            reg.boundaries.push_back(sample_ldb(m, alpha.row(id), id));
            reg.sign_pattern = {1};
          } catch (const DegenerateBoundary&) {
          }
          std::vector<int> pool = others;
          pool.push_back(id);
          std::vector<char> is_c(pool.size(), 0);
          is_c.back() = 1;
          std::vector<int> cols(reg.boundaries.size());
          std::iota(cols.begin(), cols.end(), 0);
          reg.impurity = reg.delta =
              coverage(sign_matrix(reg.boundaries, alpha, pool), is_c, cols).h;
          rs.warnings.push_back("class " + std::to_string(c) + ": sample " + std::to_string(id) +
                                " placed in a singleton region after " +
                                std::to_string(cfg.max_rounds) + " rounds");
          rs.regions.push_back(std::move(reg));
        }
        break;
      }
      std::vector<LinearBoundary> cands;
      if (cfg.redraw_per_round || round == 0) {
        cands = draw_boundaries(m, alpha, remaining, cfg.ldbs_per_class, rng);
        if (!cfg.redraw_per_round) fixed = cands;
      } else {
        cands = fixed;
      }

      std::vector<int> pool = remaining;
      pool.insert(pool.end(), others.begin(), others.end());
      std::vector<char> is_c(pool.size(), 0);
      std::fill(is_c.begin(), is_c.begin() + remaining.size(), 1);

      DecisionRegion reg;
      reg.cls = c;
      if (cands.empty()) {
        // Every draw was degenerate: one region with no boundaries holds the rest.
        const Coverage cov = coverage(SignMatrix(pool.size(), 0), is_c, {});
        reg.impurity = reg.delta = cov.h;
        reg.covered_ids = remaining;
        rs.warnings.push_back("class " + std::to_string(c) + ": no usable boundary; region left unbounded");
        rs.regions.push_back(std::move(reg));
        break;
      }
      const SignMatrix signs = sign_matrix(cands, alpha, pool);
      const GreedyResult gr = greedy_select(signs, is_c, cfg.eps);
      for (int k : gr.selected) reg.boundaries.push_back(cands[k]);
      reg.sign_pattern = gr.cov.sign_pattern;
      reg.impurity = gr.cov.h;
      reg.delta = gr.delta;
      std::vector<int> rest;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        bool inside = true;
        for (std::size_t k = 0; k < gr.selected.size() && inside; ++k)
          inside = signs(i, gr.selected[k]) == reg.sign_pattern[k];
        (inside ? reg.covered_ids : rest).push_back(remaining[i]);
      }
      remaining = std::move(rest);
      rs.regions.push_back(std::move(reg));
    }
  }

  for (std::size_t r = 0; r < rs.regions.size(); ++r)
    for (int id : rs.regions[r].covered_ids) rs.assignment.emplace_back(id, static_cast<int>(r));
  std::sort(rs.assignment.begin(), rs.assignment.end());
  return rs;
}

RegionSet extract_regions(const GnnModel& m, const Dataset& ds, const RegionConfig& cfg) {
  const SampleEmbeddings e = embed_samples(m, ds);
  return extract_regions(m, e.alpha, e.preds, ds.split.train, cfg);
}

// --- Serialization ------------------------------------------------------------

Json regions_to_json(const RegionSet& rs) {
  Json j;
  j["format"] = "rcx-regions";
  j["version"] = 1;
  j["task"] = to_string(rs.task);
  j["num_classes"] = rs.num_classes;
  j["config"] = rs.config.to_json();
  Json regions = Json::array();
  for (const auto& r : rs.regions) {
    Json jr;
    jr["class"] = r.cls;
    Json bs = Json::array();
    for (const auto& b : r.boundaries) {
      Json jb;
      jb["w"] = std::vector<double>(b.w.data(), b.w.data() + b.w.size());
      jb["b"] = b.b;
      jb["source_id"] = b.source_id;
      jb["classes"] = {b.top1, b.top2};
      bs.push_back(std::move(jb));
    }
    jr["boundaries"] = std::move(bs);
    jr["sign_pattern"] = r.sign_pattern;
    jr["covered_ids"] = r.covered_ids;
    jr["impurity"] = r.impurity;
    jr["delta"] = r.delta;
    jr["singleton"] = r.singleton;
    regions.push_back(std::move(jr));
  }
  j["regions"] = std::move(regions);
  j["warnings"] = rs.warnings;
  return j;
}

RegionSet regions_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == "rcx-regions", "regions: not an rcx-regions file");
    RegionSet rs;
    rs.task = task_from_string(j.at("task").get<std::string>());
    rs.num_classes = j.at("num_classes").get<int>();
    const auto& c = j.at("config");
    rs.config.ldbs_per_class = c.at("ldbs_per_class").get<int>();
    rs.config.eps = c.at("eps").get<double>();
    rs.config.max_rounds = c.at("max_rounds").get<int>();
    rs.config.redraw_per_round = c.at("redraw_per_round").get<bool>();
    rs.config.seed = c.at("seed").get<std::uint64_t>();
    int dim = -1;
    for (const auto& jr : j.at("regions")) {
      DecisionRegion r;
      r.cls = jr.at("class").get<int>();
      require(r.cls >= 0 && r.cls < rs.num_classes, "regions: class out of range");
      for (const auto& jb : jr.at("boundaries")) {
        LinearBoundary b;
        const auto w = jb.at("w").get<std::vector<double>>();
        require(!w.empty(), "regions: empty boundary normal");
        if (dim < 0) dim = static_cast<int>(w.size());
        require(static_cast<int>(w.size()) == dim, "regions: inconsistent boundary width");
        b.w = Eigen::Map<const Vec>(w.data(), w.size());
        b.b = jb.at("b").get<double>();
        b.source_id = jb.value("source_id", -1);
        const auto cls = jb.at("classes").get<std::vector<int>>();
        require(cls.size() == 2, "regions: boundary needs two classes");
        b.top1 = cls[0];
        b.top2 = cls[1];
        r.boundaries.push_back(std::move(b));
      }
      r.sign_pattern = jr.at("sign_pattern").get<std::vector<int>>();
      require(r.sign_pattern.size() == r.boundaries.size(), "regions: sign pattern length mismatch");
      for (int s : r.sign_pattern) require(s == 1 || s == -1, "regions: sign must be +1 or -1");
      r.covered_ids = jr.at("covered_ids").get<std::vector<int>>();
      r.impurity = jr.at("impurity").get<int>();
      r.delta = jr.at("delta").get<int>();
      r.singleton = jr.value("singleton", false);
      rs.regions.push_back(std::move(r));
    }
    for (std::size_t r = 0; r < rs.regions.size(); ++r)
      for (int id : rs.regions[r].covered_ids) rs.assignment.emplace_back(id, static_cast<int>(r));
    std::sort(rs.assignment.begin(), rs.assignment.end());
    for (std::size_t i = 1; i < rs.assignment.size(); ++i)
      require(rs.assignment[i].first != rs.assignment[i - 1].first,
              "regions: sample " + std::to_string(rs.assignment[i].first) + " covered twice");
    if (j.contains("warnings")) rs.warnings = j.at("warnings").get<std::vector<std::string>>();
    return rs;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("regions: malformed file: ") + e.what());
  }
}

void save_regions(const RegionSet& rs, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << regions_to_json(rs).dump(2) << '\n';
}

RegionSet load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("regions: invalid JSON in " + path.string());
  }
  return regions_from_json(j);
}

}  // namespace rcx
