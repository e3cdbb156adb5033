/* Copyright 2026 The laughtrack Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Binary random forest: bootstrap-sampled CART trees with Gini splits over a
// random feature subset at each node. Class 0 is "other", class 1 "laughter".
//
// Each tree draws from its own generator seeded with (seed, tree index), so a
// forest trained on N threads is identical to one trained serially.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "laughtrack/error.hpp"
#include "laughtrack/parallel.hpp"

namespace laughtrack {

// SplitMix64: small, fully specified generator so models are reproducible
// across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound) by rejection.
  std::uint64_t Below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do v = (*this)();
    while (v >= limit);
    return v % bound;
  }

  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  mix();
  return mix();
}

enum class Label : int { kOther = 0, kLaughter = 1 };

inline std::string_view ToString(Label l) { return l == Label::kLaughter ? "laughter" : "other"; }

struct ForestConfig {
  int n_estimators = 50;
  int max_depth = 13;
  int min_samples_split = 2;
  // Features tried per split; 0 means floor(sqrt(feature count)).
  int max_features = 0;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.15;

  void Validate() const {
    if (n_estimators < 1) throw ValidationError("n_estimators must be >= 1");
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
    if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
    if (max_features < 0) throw ValidationError("max_features must be >= 0");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
      throw ValidationError("holdout_fraction must be in (0, 1)");
  }

  std::size_t FeaturesPerSplit(std::size_t n_features) const {
    if (max_features > 0) return std::min<std::size_t>(max_features, n_features);
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
  }
};

struct TreeNode {
  // feature < 0 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, 2> counts{};  // in-bag class counts reaching the node

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& Leaf(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& node = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                       ? node.left
                                       : node.right);
    }
    return nodes[i];
  }

  // Laughter probability = laughter share of the leaf's samples.
  double ProbLaughter(std::span<const double> x) const {
    const auto& c = Leaf(x).counts;
    const double total = c[0] + c[1];
    return total > 0.0 ? c[1] / total : 0.0;
  }

  int Depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      deepest = std::max(deepest, depth[i]);
      if (!nodes[i].is_leaf()) {
        depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
        depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
      }
    }
    return deepest;
  }

  bool operator==(const DecisionTree&) const = default;
};

struct Prediction {
  Label label = Label::kOther;
  double probability = 0.0;  // of laughter

  double prob_other() const { return 1.0 - probability; }
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_order;
  ForestConfig config;

  std::size_t n_features() const { return feature_order.size(); }

  Prediction Predict(std::span<const double> x) const {
    if (x.size() != feature_order.size())
      throw ValidationError("feature vector has " + std::to_string(x.size()) +
                            " values, model expects " + std::to_string(feature_order.size()));
    if (trees.empty()) throw ValidationError("model has no trees");
    double p = 0.0;
    for (const auto& t : trees) p += t.ProbLaughter(x);
    p /= static_cast<double>(trees.size());
    // Ties go to "other".
    return {p > 0.5 ? Label::kLaughter : Label::kOther, p};
  }
};

struct Example {
  std::vector<double> x;
  Label y = Label::kOther;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const Example> data, const ForestConfig& cfg, std::size_t n_features,
              SplitMix64& rng)
      : data_(data), cfg_(cfg), n_features_(n_features), rng_(rng) {}

  DecisionTree Build(std::vector<std::size_t> sample) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    Grow(tree, 0, sample, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  static double Gini(double c0, double c1) {
    const double n = c0 + c1;
    if (n <= 0.0) return 0.0;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
  }

  void Grow(DecisionTree& tree, std::size_t node, std::vector<std::size_t>& sample, int depth) {
    std::array<double, 2> counts{};
    for (auto i : sample) counts[static_cast<std::size_t>(data_[i].y)] += 1.0;
    tree.nodes[node].counts = counts;
    const bool pure = counts[0] == 0.0 || counts[1] == 0.0;
    if (pure || depth >= cfg_.max_depth ||
        sample.size() < static_cast<std::size_t>(cfg_.min_samples_split))
      return;

    const Split best = FindSplit(sample, counts);
    if (best.feature < 0) return;

    std::vector<std::size_t> left, right;
    for (auto i : sample)
      (data_[i].x[static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right)
          .push_back(i);
    if (left.empty() || right.empty()) return;

    const auto l = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    tree.nodes[node].feature = best.feature;
    tree.nodes[node].threshold = best.threshold;
    tree.nodes[node].left = static_cast<int>(l);
    tree.nodes[node].right = static_cast<int>(l + 1);
    sample.clear();
    sample.shrink_to_fit();
    Grow(tree, l, left, depth + 1);
    Grow(tree, l + 1, right, depth + 1);
  }

  // Tries features in a random order; after the first `mtry` it keeps going
  // only while no valid split has been found.
  Split FindSplit(const std::vector<std::size_t>& sample, const std::array<double, 2>& counts) {
    std::vector<std::size_t> order(n_features_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.Below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    const std::size_t mtry = cfg_.FeaturesPerSplit(n_features_);
    const double n = static_cast<double>(sample.size());
    const double parent = Gini(counts[0], counts[1]);

    Split best;
    best.impurity = parent;
    std::vector<std::pair<double, int>> column(sample.size());
    for (std::size_t tried = 0; tried < order.size(); ++tried) {
      if (tried >= mtry && best.feature >= 0) break;
      const std::size_t f = order[tried];
      for (std::size_t s = 0; s < sample.size(); ++s)
        column[s] = {data_[sample[s]].x[f], static_cast<int>(data_[sample[s]].y)};
      std::sort(column.begin(), column.end());
      std::array<double, 2> left{};
      for (std::size_t s = 0; s + 1 < column.size(); ++s) {
        left[static_cast<std::size_t>(column[s].second)] += 1.0;
        if (column[s].first == column[s + 1].first) continue;
        const double nl = static_cast<double>(s + 1);
        const double nr = n - nl;
        const double impurity = (nl * Gini(left[0], left[1]) +
                                 nr * Gini(counts[0] - left[0], counts[1] - left[1])) / n;
        if (impurity < best.impurity - 1e-12 || (best.feature < 0 && impurity <= parent)) {
          best.feature = static_cast<int>(f);
          best.threshold = column[s].first + (column[s + 1].first - column[s].first) / 2.0;
          if (best.threshold >= column[s + 1].first) best.threshold = column[s].first;
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  std::span<const Example> data_;
  const ForestConfig& cfg_;
  std::size_t n_features_;
  SplitMix64& rng_;
};

}  // namespace detail

inline ForestModel TrainForest(std::span<const Example> data, std::vector<std::string> feature_order,
                               const ForestConfig& cfg, unsigned jobs = 1) {
  cfg.Validate();
  if (data.size() < static_cast<std::size_t>(cfg.min_samples_split))
    throw ValidationError("need at least min_samples_split (" +
                          std::to_string(cfg.min_samples_split) + ") examples, got " +
                          std::to_string(data.size()));
  const std::size_t n_features = feature_order.size();
  std::array<std::size_t, 2> per_class{};
  for (const auto& e : data) {
    if (e.x.size() != n_features)
      throw ValidationError("example has " + std::to_string(e.x.size()) + " features, expected " +
                            std::to_string(n_features));
    ++per_class[static_cast<std::size_t>(e.y)];
  }
  if (per_class[0] == 0 || per_class[1] == 0)
    throw ValidationError("training data must contain both laughter and other examples");

  ForestModel model;
  model.feature_order = std::move(feature_order);
  model.config = cfg;
  model.trees.resize(static_cast<std::size_t>(cfg.n_estimators));
  ParallelFor(model.trees.size(), jobs, [&](std::size_t t) {
    SplitMix64 rng(DeriveSeed(cfg.seed, t));
    std::vector<std::size_t> bootstrap(data.size());
    for (auto& i : bootstrap) i = static_cast<std::size_t>(rng.Below(data.size()));
    detail::TreeBuilder builder(data, cfg, n_features, rng);
    model.trees[t] = builder.Build(std::move(bootstrap));
  });
  return model;
}

// ---------------------------------------------------------------------------
// model.json

inline nlohmann::ordered_json ForestToJson(const ForestModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "laughtrack-forest";
  j["version"] = 1;
  j["config"] = {{"n_estimators", m.config.n_estimators},
                 {"max_depth", m.config.max_depth},
                 {"min_samples_split", m.config.min_samples_split},
                 {"max_features", m.config.max_features},
                 {"features_per_split", m.config.FeaturesPerSplit(m.n_features())},
                 {"seed", m.config.seed},
                 {"holdout_fraction", m.config.holdout_fraction}};
  j["classes"] = {"other", "laughter"};
  j["feature_order"] = m.feature_order;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline ForestModel ForestFromJson(const nlohmann::json& j, const std::string& name = "model") {
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(name, 0, what); };
  try {
    if (j.at("format") != "laughtrack-forest") throw fail("not a laughtrack forest model");
    if (j.at("version") != 1) throw fail("unsupported model version");
    ForestModel m;
    const auto& c = j.at("config");
    m.config.n_estimators = c.at("n_estimators").get<int>();
    m.config.max_depth = c.at("max_depth").get<int>();
    m.config.min_samples_split = c.at("min_samples_split").get<int>();
    m.config.max_features = c.at("max_features").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.holdout_fraction = c.at("holdout_fraction").get<double>();
    m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.counts = {n.at(4).get<double>(), n.at(5).get<double>()};
        tree.nodes.push_back(node);
      }
      m.trees.push_back(std::move(tree));
    }
    // Structural checks so a corrupt file cannot send traversal out of bounds.
    for (const auto& t : m.trees) {
      if (t.nodes.empty()) throw fail("empty tree");
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& n = t.nodes[i];
        if (n.is_leaf()) continue;
        if (static_cast<std::size_t>(n.feature) >= m.feature_order.size())
          throw fail("split feature index out of range");
        const auto size = static_cast<int>(t.nodes.size());
        if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
            n.right >= size)
          throw fail("invalid child index");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed model: ") + e.what());
  }
}

inline std::string SerializeForest(const ForestModel& m) { return ForestToJson(m).dump() + "\n"; }

inline void SaveForest(const std::filesystem::path& path, const ForestModel& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << SerializeForest(m);
}

inline ForestModel LoadForest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
  return ForestFromJson(j, path.string());
}

}  // namespace laughtrack
