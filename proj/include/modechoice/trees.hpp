#pragma once

// From-scratch tree classifiers over the eight mode classes: a greedy
// decision tree with minimal cost-complexity pruning, a bootstrap random
// forest with per-split feature subsampling, and second-order gradient
// boosting with softmax multiclass output.
//
// Split search is exact greedy: candidate thresholds are midpoints between
// consecutive distinct sorted values. Ties break on the lowest feature
// index, then the lowest threshold, so training is deterministic.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "modechoice/data.hpp"

namespace modechoice {

enum class SplitCriterion { Entropy, Gini };

inline const char* criterion_name(SplitCriterion c) {
  return c == SplitCriterion::Entropy ? "entropy" : "gini";
}

using ClassCounts = std::array<std::int64_t, kNumModes>;

// Entropy in bits, or Gini impurity, of a class-count vector.
inline double impurity(const ClassCounts& counts, SplitCriterion criterion) {
  std::int64_t total = 0;
  for (auto c : counts) {
    require(c >= 0, Errc::EmptyNode, "negative class count");
    total += c;
  }
  require(total > 0, Errc::EmptyNode, "impurity of an empty node");
  const double n = static_cast<double>(total);
  if (criterion == SplitCriterion::Gini) {
    double sq = 0;
    for (auto c : counts) {
      const double p = static_cast<double>(c) / n;
      sq += p * p;
    }
    return 1.0 - sq;
  }
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

struct TreeHyper {
  int min_samples_leaf = 1;
  int max_depth = 20;
  double ccp_alpha = 0.0;
  SplitCriterion criterion = SplitCriterion::Entropy;
};

// Flat-array tree node; feature == -1 marks a leaf.
struct DtNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  ClassCounts counts{};
  std::int64_t n_samples = 0;
  double impurity = 0;
  double impurity_decrease = 0;  // parent-local gain of this node's split

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<DtNode> nodes;  // root at index 0
  SplitCriterion criterion = SplitCriterion::Entropy;
  int n_features = 0;

  const DtNode& leaf_for(std::span<const double> x) const {
    int at = 0;
    while (!nodes[at].is_leaf())
      at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                        : nodes[at].right;
    return nodes[at];
  }
};

namespace detail {

// Splits with gains below this are treated as zero (pure rounding noise in
// the impurity arithmetic).
inline constexpr double kMinGain = 1e-12;

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0;
  double gain = 0;
  double child_impurity_l = 0, child_impurity_r = 0;
};

// Exact greedy scan of one feature over the node's rows.
inline void scan_feature_for_split(const NumMatrix& X,
                                   const std::vector<int>& y,
                                   std::span<const std::size_t> rows,
                                   int feature, SplitCriterion criterion,
                                   double parent_impurity, int min_samples_leaf,
                                   std::vector<std::pair<double, int>>& scratch,
                                   BestSplit& best) {
  const std::size_t m = rows.size();
  scratch.clear();
  scratch.reserve(m);
  for (auto r : rows) scratch.push_back({X(r, feature), y[r]});
  std::sort(scratch.begin(), scratch.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (scratch.front().first == scratch.back().first) return;  // constant

  ClassCounts left{}, right{};
  for (const auto& [v, label] : scratch) ++right[label - 1];
  const double n = static_cast<double>(m);

  std::size_t i = 0;
  while (i < m) {
    // Advance over one block of equal values.
    const double v = scratch[i].first;
    while (i < m && scratch[i].first == v) {
      ++left[scratch[i].second - 1];
      --right[scratch[i].second - 1];
      ++i;
    }
    if (i >= m) break;
    const std::size_t nl = i, nr = m - i;
    if (nl < static_cast<std::size_t>(min_samples_leaf) ||
        nr < static_cast<std::size_t>(min_samples_leaf))
      continue;
    const double il = impurity(left, criterion);
    const double ir = impurity(right, criterion);
    const double gain =
        parent_impurity -
        (static_cast<double>(nl) * il + static_cast<double>(nr) * ir) / n;
    if (gain > best.gain + kMinGain ||
        (!best.found && gain > kMinGain)) {
      best.found = true;
      best.feature = feature;
      // Midpoint between the block's value and the next distinct value; if
      // they are adjacent doubles the midpoint rounds up and would misplace
      // the right block, so fall back to the block value itself (the `<=`
      // routing keeps the scanned partition either way).
      double thr = v + 0.5 * (scratch[i].first - v);
      if (!(thr < scratch[i].first)) thr = v;
      best.threshold = thr;
      best.gain = gain;
      best.child_impurity_l = il;
      best.child_impurity_r = ir;
    }
  }
}

// Shared grower for plain trees and forest member trees. The feature
// sampler, when present, returns the candidate features for one split in
// ascending order.
template <class FeatureSampler>
DecisionTree grow_tree(const NumMatrix& X, const std::vector<int>& y,
                       std::vector<std::size_t> rows, SplitCriterion criterion,
                       int max_depth, int min_samples_leaf,
                       FeatureSampler&& sample_features) {
  DecisionTree tree;
  tree.criterion = criterion;
  tree.n_features = static_cast<int>(X.cols);

  struct Work {
    std::size_t lo, hi;
    int depth;
    int slot;
  };
  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, rows.size(), 0, 0});

  std::vector<std::pair<double, int>> scratch;
  std::vector<int> candidates;
  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    DtNode& node = tree.nodes[w.slot];
    node.n_samples = static_cast<std::int64_t>(w.hi - w.lo);
    node.counts = ClassCounts{};
    for (std::size_t i = w.lo; i < w.hi; ++i) ++node.counts[y[rows[i]] - 1];
    node.impurity = impurity(node.counts, criterion);

    const bool pure = node.impurity <= 0.0;
    if (pure || w.depth >= max_depth ||
        node.n_samples < 2 * min_samples_leaf) {
      continue;  // stays a leaf
    }

    BestSplit best;
    candidates = sample_features(static_cast<int>(X.cols));
    std::span<const std::size_t> span(rows.data() + w.lo, w.hi - w.lo);
    for (int f : candidates)
      scan_feature_for_split(X, y, span, f, criterion, node.impurity,
                             min_samples_leaf, scratch, best);
    if (!best.found) continue;

    auto mid_it = std::stable_partition(
        rows.begin() + static_cast<std::ptrdiff_t>(w.lo),
        rows.begin() + static_cast<std::ptrdiff_t>(w.hi),
        [&](std::size_t r) { return X(r, best.feature) <= best.threshold; });
    const std::size_t mid =
        static_cast<std::size_t>(mid_it - rows.begin());

    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // re-fetch: emplace_back may have reallocated the node array
    DtNode& parent = tree.nodes[w.slot];
    parent.feature = best.feature;
    parent.threshold = best.threshold;
    parent.impurity_decrease = best.gain;
    parent.left = left;
    parent.right = right;
    stack.push_back({mid, w.hi, w.depth + 1, right});
    stack.push_back({w.lo, mid, w.depth + 1, left});
  }
  return tree;
}

inline std::vector<int> all_features(int p) {
  std::vector<int> f(p);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Minimal cost-complexity pruning

// Ordered effective alphas of the weakest-link collapse sequence, from the
// full tree down to a root stump.
inline std::vector<double> ccp_alpha_sequence(const DecisionTree& t);

// Weakest-link pruning with training misclassification rate as the risk
// measure: collapse the internal node with minimal
//   g(t) = (R(leaf) - R(subtree)) / (|leaves| - 1)
// while g(t) < alpha. Strict comparison keeps alpha = 0 a no-op, so the
// unpruned tree's predictions are preserved exactly.
inline DecisionTree ccp_prune(const DecisionTree& t, double alpha) {
  require(alpha >= 0, Errc::ConfigError, "ccp alpha must be non-negative");
  if (t.nodes.empty() || alpha == 0) return t;

  const double n_root = static_cast<double>(t.nodes[0].n_samples);
  std::vector<DtNode> nodes = t.nodes;

  auto leaf_risk = [&](const DtNode& nd) {
    std::int64_t best = 0;
    for (auto c : nd.counts) best = std::max(best, c);
    return static_cast<double>(nd.n_samples - best) / n_root;
  };

  // Subtree risk and leaf count under the current (partially pruned) tree.
  struct SubStats {
    double risk;
    int leaves;
  };
  std::function<SubStats(int)> stats = [&](int at) -> SubStats {
    const DtNode& nd = nodes[at];
    if (nd.is_leaf()) return {leaf_risk(nd), 1};
    auto l = stats(nd.left);
    auto r = stats(nd.right);
    return {l.risk + r.risk, l.leaves + r.leaves};
  };

  while (true) {
    int weakest = -1;
    double weakest_g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (nodes[i].is_leaf()) continue;
      // Unreachable nodes keep stale children; they are skipped because
      // collapse marks whole subtrees as leaves.
      auto s = stats(i);
      const double g = (leaf_risk(nodes[i]) - s.risk) /
                       static_cast<double>(s.leaves - 1);
      if (g < weakest_g) {
        weakest_g = g;
        weakest = i;
      }
    }
    if (weakest < 0 || !(weakest_g < alpha)) break;
    // Collapse: the subtree below becomes unreachable.
    std::function<void(int)> detach = [&](int at) {
      if (nodes[at].is_leaf()) return;
      detach(nodes[at].left);
      detach(nodes[at].right);
      nodes[at].feature = -1;
    };
    detach(weakest);
    nodes[weakest].feature = -1;
    nodes[weakest].impurity_decrease = 0;
  }

  // Compact the surviving nodes into a fresh preorder array.
  DecisionTree out;
  out.criterion = t.criterion;
  out.n_features = t.n_features;
  std::function<int(int)> copy = [&](int at) -> int {
    const int slot = static_cast<int>(out.nodes.size());
    out.nodes.push_back(nodes[at]);
    if (!nodes[at].is_leaf()) {
      out.nodes[slot].left = copy(nodes[at].left);
      out.nodes[slot].right = copy(nodes[at].right);
    } else {
      out.nodes[slot].left = out.nodes[slot].right = -1;
    }
    return slot;
  };
  copy(0);
  return out;
}

inline std::vector<double> ccp_alpha_sequence(const DecisionTree& t) {
  std::vector<double> seq;
  if (t.nodes.empty()) return seq;
  std::vector<DtNode> nodes = t.nodes;
  const double n_root = static_cast<double>(t.nodes[0].n_samples);

  auto leaf_risk = [&](const DtNode& nd) {
    std::int64_t best = 0;
    for (auto c : nd.counts) best = std::max(best, c);
    return static_cast<double>(nd.n_samples - best) / n_root;
  };
  struct SubStats {
    double risk;
    int leaves;
  };
  std::function<SubStats(int)> stats = [&](int at) -> SubStats {
    const DtNode& nd = nodes[at];
    if (nd.is_leaf()) return {leaf_risk(nd), 1};
    auto l = stats(nd.left);
    auto r = stats(nd.right);
    return {l.risk + r.risk, l.leaves + r.leaves};
  };

  while (!nodes[0].is_leaf()) {
    int weakest = -1;
    double weakest_g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (nodes[i].is_leaf()) continue;
      auto s = stats(i);
      const double g = (leaf_risk(nodes[i]) - s.risk) /
                       static_cast<double>(s.leaves - 1);
      if (g < weakest_g) {
        weakest_g = g;
        weakest = i;
      }
    }
    std::function<void(int)> detach = [&](int at) {
      if (nodes[at].is_leaf()) return;
      detach(nodes[at].left);
      detach(nodes[at].right);
      nodes[at].feature = -1;
    };
    detach(weakest);
    nodes[weakest].feature = -1;
    seq.push_back(weakest_g);
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Decision tree

inline DecisionTree fit_decision_tree(const NumMatrix& X,
                                      const std::vector<int>& y,
                                      const TreeHyper& h) {
  require(X.rows >= 1 && X.rows == y.size(), Errc::LengthMismatch,
          "X and y must be non-empty and aligned");
  require(h.min_samples_leaf >= 1 && h.max_depth >= 1 && h.ccp_alpha >= 0,
          Errc::ConfigError, "invalid tree hyperparameters");
  for (int label : y)
    require(label >= 1 && label <= kNumModes, Errc::BadLabel,
            "label " + std::to_string(label));

  std::vector<std::size_t> rows(X.rows);
  std::iota(rows.begin(), rows.end(), 0);
  DecisionTree tree = detail::grow_tree(
      X, y, std::move(rows), h.criterion, h.max_depth, h.min_samples_leaf,
      [](int p) { return detail::all_features(p); });
  if (h.ccp_alpha > 0) tree = ccp_prune(tree, h.ccp_alpha);
  return tree;
}

inline std::array<double, kNumModes> predict_proba(const DecisionTree& t,
                                                   std::span<const double> x) {
  require(static_cast<int>(x.size()) == t.n_features, Errc::DimensionMismatch,
          "feature dimension mismatch");
  const DtNode& leaf = t.leaf_for(x);
  std::array<double, kNumModes> p{};
  for (int c = 0; c < kNumModes; ++c)
    p[c] = static_cast<double>(leaf.counts[c]) /
           static_cast<double>(leaf.n_samples);
  return p;
}

// Argmax with the lowest mode code winning ties.
inline int predict_label(const std::array<double, kNumModes>& probs) {
  int best = 0;
  for (int c = 1; c < kNumModes; ++c)
    if (probs[c] > probs[best]) best = c;
  return best + 1;
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestHyper {
  int n_trees = 100;
  int max_depth = 11;
  int features_per_split = 0;  // 0 = ceil(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestHyper hyper;
};

inline RandomForest fit_random_forest(const NumMatrix& X,
                                      const std::vector<int>& y,
                                      const ForestHyper& h) {
  require(X.rows >= 1 && X.rows == y.size(), Errc::LengthMismatch,
          "X and y must be non-empty and aligned");
  require(h.n_trees >= 1 && h.max_depth >= 1, Errc::ConfigError,
          "invalid forest hyperparameters");
  const int p = static_cast<int>(X.cols);
  const int k = h.features_per_split > 0
                    ? h.features_per_split
                    : static_cast<int>(
                          std::ceil(std::sqrt(static_cast<double>(p))));
  require(k >= 1 && k <= p, Errc::ConfigError,
          "features_per_split outside 1..p");

  RandomForest forest;
  forest.hyper = h;
  forest.trees.resize(static_cast<std::size_t>(h.n_trees));
  parallel_for(static_cast<std::size_t>(h.n_trees), [&](std::size_t t) {
    auto rng = make_rng(h.seed, "rf-tree", t);
    std::vector<std::size_t> rows(X.rows);
    if (h.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    auto sampler = [&rng, k](int nf) {
      std::vector<int> all = detail::all_features(nf);
      if (k >= nf) return all;
      // Partial Fisher-Yates, then ascending order for the scan.
      for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, nf - 1);
        std::swap(all[i], all[pick(rng)]);
      }
      all.resize(static_cast<std::size_t>(k));
      std::sort(all.begin(), all.end());
      return all;
    };
    forest.trees[t] = detail::grow_tree(X, y, std::move(rows),
                                        SplitCriterion::Gini, h.max_depth,
                                        /*min_samples_leaf=*/1, sampler);
  });
  return forest;
}

// Hard-vote fractions: the share of trees whose argmax is each class.
inline std::array<double, kNumModes> predict_proba(const RandomForest& f,
                                                   std::span<const double> x) {
  std::array<double, kNumModes> votes{};
  for (const auto& tree : f.trees)
    ++votes[predict_label(predict_proba(tree, x)) - 1];
  for (auto& v : votes) v /= static_cast<double>(f.trees.size());
  return votes;
}

// ---------------------------------------------------------------------------
// Gradient boosting

struct BoostHyper {
  int max_depth = 3;
  double eta = 0.1;
  double gamma = 0.0;           // minimum loss reduction per split
  int n_rounds = 100;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  std::uint64_t seed = 0;         // reserved; training is deterministic
};

struct RegNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double weight = 0;      // leaf output
  double gain = 0;        // split gain (internal nodes)
  double hessian_sum = 0;
  std::int64_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
};

// One regression tree on gradients/hessians; empty when no split cleared
// the gamma / min_child_weight bar (such trees contribute nothing).
struct RegTree {
  std::vector<RegNode> nodes;

  double value(std::span<const double> x) const {
    if (nodes.empty()) return 0.0;
    int at = 0;
    while (!nodes[at].is_leaf())
      at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                        : nodes[at].right;
    return nodes[at].weight;
  }
};

struct BoostedModel {
  BoostHyper hyper;
  std::array<bool, kNumModes> class_present{};
  std::array<double, kNumModes> base_score{};
  // rounds[r][c] is round r's tree for class c (empty for absent classes).
  std::vector<std::array<RegTree, kNumModes>> rounds;
  int n_features = 0;

  std::array<double, kNumModes> scores(std::span<const double> x) const {
    std::array<double, kNumModes> s = base_score;
    for (const auto& round : rounds)
      for (int c = 0; c < kNumModes; ++c)
        if (class_present[c]) s[c] += hyper.eta * round[c].value(x);
    return s;
  }
};

namespace detail {

inline constexpr double kBoostLambda = 1.0;  // L2 leaf regularization

// Second-order split gain:
//   1/2 [ GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l) ] - gamma
inline RegTree grow_boost_tree(const NumMatrix& X,
                               const std::vector<double>& grad,
                               const std::vector<double>& hess,
                               const BoostHyper& h) {
  struct Work {
    std::size_t lo, hi;
    int depth;
    int slot;
  };
  RegTree tree;
  std::vector<std::size_t> rows(X.rows);
  std::iota(rows.begin(), rows.end(), 0);

  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, rows.size(), 0, 0});
  std::vector<std::tuple<double, double, double>> scratch;  // value, g, h

  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    double G = 0, H = 0;
    for (std::size_t i = w.lo; i < w.hi; ++i) {
      G += grad[rows[i]];
      H += hess[rows[i]];
    }
    RegNode& node = tree.nodes[w.slot];
    node.n_samples = static_cast<std::int64_t>(w.hi - w.lo);
    node.hessian_sum = H;
    node.weight = -G / (H + kBoostLambda);
    if (w.depth >= h.max_depth || w.hi - w.lo < 2) continue;

    const double parent_score = G * G / (H + kBoostLambda);
    bool found = false;
    int best_feature = -1;
    double best_threshold = 0, best_gain = 0;
    for (int f = 0; f < static_cast<int>(X.cols); ++f) {
      scratch.clear();
      for (std::size_t i = w.lo; i < w.hi; ++i)
        scratch.push_back({X(rows[i], f), grad[rows[i]], hess[rows[i]]});
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) {
                  return std::get<0>(a) < std::get<0>(b);
                });
      if (std::get<0>(scratch.front()) == std::get<0>(scratch.back()))
        continue;
      double GL = 0, HL = 0;
      std::size_t i = 0;
      const std::size_t m = scratch.size();
      while (i < m) {
        const double v = std::get<0>(scratch[i]);
        while (i < m && std::get<0>(scratch[i]) == v) {
          GL += std::get<1>(scratch[i]);
          HL += std::get<2>(scratch[i]);
          ++i;
        }
        if (i >= m) break;
        const double GR = G - GL, HR = H - HL;
        if (HL < h.min_child_weight || HR < h.min_child_weight) continue;
        const double gain =
            0.5 * (GL * GL / (HL + kBoostLambda) + GR * GR / (HR + kBoostLambda) -
                   parent_score) -
            h.gamma;
        if (gain > best_gain + kMinGain || (!found && gain > kMinGain)) {
          found = true;
          best_feature = f;
          double thr = v + 0.5 * (std::get<0>(scratch[i]) - v);
          if (!(thr < std::get<0>(scratch[i]))) thr = v;
          best_threshold = thr;
          best_gain = gain;
        }
      }
    }
    if (!found) continue;

    auto mid_it = std::stable_partition(
        rows.begin() + static_cast<std::ptrdiff_t>(w.lo),
        rows.begin() + static_cast<std::ptrdiff_t>(w.hi), [&](std::size_t r) {
          return X(r, best_feature) <= best_threshold;
        });
    const std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // re-fetch: emplace_back may have reallocated the node array
    RegNode& parent = tree.nodes[w.slot];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.gain = best_gain;
    parent.left = left;
    parent.right = right;
    stack.push_back({mid, w.hi, w.depth + 1, right});
    stack.push_back({w.lo, mid, w.depth + 1, left});
  }

  if (tree.nodes.size() == 1) tree.nodes.clear();  // no split accepted
  return tree;
}

}  // namespace detail

inline BoostedModel fit_gradient_boost(const NumMatrix& X,
                                       const std::vector<int>& y,
                                       const BoostHyper& h) {
  require(X.rows >= 2 && X.rows == y.size(), Errc::LengthMismatch,
          "need at least two aligned rows");
  require(h.eta > 0 && h.gamma >= 0 && h.min_child_weight >= 0 &&
              h.max_depth >= 1 && h.n_rounds >= 0,
          Errc::ConfigError, "invalid boosting hyperparameters");

  BoostedModel model;
  model.hyper = h;
  model.n_features = static_cast<int>(X.cols);
  int n_classes = 0;
  for (int label : y) {
    require(label >= 1 && label <= kNumModes, Errc::BadLabel,
            "label " + std::to_string(label));
    if (!model.class_present[label - 1]) {
      model.class_present[label - 1] = true;
      ++n_classes;
    }
  }
  require(n_classes >= 2, Errc::SingleClassData,
          "boosting needs at least two classes");

  const std::size_t n = X.rows;
  NumMatrix scores(n, kNumModes, 0.0);
  std::vector<double> grad(n), hess(n);

  model.rounds.resize(static_cast<std::size_t>(h.n_rounds));
  for (int round = 0; round < h.n_rounds; ++round) {
    // Softmax over the classes present in training.
    NumMatrix probs(n, kNumModes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < kNumModes; ++c)
        if (model.class_present[c]) mx = std::max(mx, scores(i, c));
      double z = 0;
      for (int c = 0; c < kNumModes; ++c)
        if (model.class_present[c]) {
          probs(i, c) = std::exp(scores(i, c) - mx);
          z += probs(i, c);
        }
      for (int c = 0; c < kNumModes; ++c) probs(i, c) /= z;
    }

    auto& round_trees = model.rounds[static_cast<std::size_t>(round)];
    for (int c = 0; c < kNumModes; ++c) {
      if (!model.class_present[c]) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = probs(i, c);
        grad[i] = p - (y[i] - 1 == c ? 1.0 : 0.0);
        hess[i] = p * (1.0 - p);
      }
      round_trees[c] = detail::grow_boost_tree(X, grad, hess, h);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < kNumModes; ++c)
        if (model.class_present[c])
          scores(i, c) += h.eta * round_trees[c].value(X.row(i));
  }
  return model;
}

// Softmax over the classes present in training; absent classes get zero.
inline std::array<double, kNumModes> predict_proba(const BoostedModel& m,
                                                   std::span<const double> x) {
  require(static_cast<int>(x.size()) == m.n_features, Errc::DimensionMismatch,
          "feature dimension mismatch");
  const auto s = m.scores(x);
  double mx = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < kNumModes; ++c)
    if (m.class_present[c]) mx = std::max(mx, s[c]);
  std::array<double, kNumModes> p{};
  double z = 0;
  for (int c = 0; c < kNumModes; ++c)
    if (m.class_present[c]) {
      p[c] = std::exp(s[c] - mx);
      z += p[c];
    }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace modechoice
