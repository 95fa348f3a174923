#include "hmmrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "hmmrf/errors.hpp"
#include "hmmrf/parallel.hpp"

namespace hmmrf {
namespace {

void check_probabilities(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw argument_error("class probability is negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw argument_error("class probabilities do not sum to 1");
}

double entropy_unchecked(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

double gini_unchecked(std::span<const double> p) {
  double sum_sq = 0.0;
  for (double v : p) sum_sq += v * v;
  return 1.0 - sum_sq;
}

std::vector<std::size_t> count_labels(std::span<const Label> labels, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (Label l : labels) ++counts[l];
  return counts;
}

std::size_t majority(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

bool is_pure(std::span<const std::size_t> counts) {
  std::size_t non_empty = 0;
  for (std::size_t c : counts) non_empty += c > 0 ? 1 : 0;
  return non_empty <= 1;
}

// allow_zero_gain accepts the best split even when it does not reduce impurity.
std::optional<Split> search_splits(const Dataset& data, std::span<const std::size_t> rows,
                                   std::span<const std::size_t> candidate_features,
                                   SplitCriterion criterion, bool allow_zero_gain) {
  if (rows.size() < 2) return std::nullopt;

  std::vector<std::size_t> parent(data.n_classes, 0);
  for (std::size_t r : rows) ++parent[data.labels[r]];
  if (is_pure(parent)) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  std::optional<Split> best;
  std::vector<std::pair<double, Label>> column(rows.size());
  std::vector<std::size_t> left(data.n_classes);
  std::vector<std::size_t> right(data.n_classes);

  for (std::size_t f : features) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      column[k] = {data.at(rows[k], f), data.labels[rows[k]]};
    }
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) continue;

    std::fill(left.begin(), left.end(), 0);
    for (std::size_t k = 0; k + 1 < column.size(); ++k) {
      ++left[column[k].second];
      const double lo = column[k].first;
      const double hi = column[k + 1].first;
      if (lo == hi) continue;

      for (std::size_t c = 0; c < parent.size(); ++c) right[c] = parent[c] - left[c];
      const double gain = gain_from_counts(parent, left, right, criterion);
      if (!best || gain > best->gain) {
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        best = Split{f, threshold, gain};
      }
    }
  }

  if (best && !allow_zero_gain && best->gain <= kMinSplitGain) return std::nullopt;
  return best;
}

struct TreeBuilder {
  const Dataset& data;
  const ForestConfig& config;
  Rng& rng;
  std::vector<DecisionTree::Node> nodes;
  std::vector<std::size_t> feature_pool;
  std::size_t draw_count;

  TreeBuilder(const Dataset& d, const ForestConfig& c, Rng& r)
      : data(d), config(c), rng(r), feature_pool(d.n_features),
        draw_count(features_per_node(c.max_features, d.n_features)) {}

  std::span<const std::size_t> draw_features() {
    std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
    if (draw_count < feature_pool.size()) {
      for (std::size_t i = 0; i < draw_count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(feature_pool.size() - i));
        std::swap(feature_pool[i], feature_pool[j]);
      }
    }
    return {feature_pool.data(), draw_count};
  }

  std::size_t build(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t index = nodes.size();
    nodes.emplace_back();

    std::vector<std::size_t> counts(data.n_classes, 0);
    for (std::size_t r : rows) ++counts[data.labels[r]];

    const bool depth_reached = config.max_depth && depth >= *config.max_depth;
    std::optional<Split> split;
    if (!is_pure(counts) && !depth_reached && rows.size() >= config.min_samples_split) {
      const auto features = draw_features();
      split = search_splits(data, rows, features, config.criterion, true);
    }

    if (!split) {
      auto& leaf = nodes[index];
      leaf.leaf = true;
      leaf.label = static_cast<Label>(majority(counts));
      leaf.class_counts = std::move(counts);
      return index;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (data.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const std::size_t left = build(std::move(left_rows), depth + 1);
    const std::size_t right = build(std::move(right_rows), depth + 1);
    auto& node = nodes[index];
    node.leaf = false;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return index;
  }
};

}  // namespace

std::string_view to_string(SplitCriterion c) {
  switch (c) {
    case SplitCriterion::gini: return "gini";
    case SplitCriterion::entropy: return "entropy";
    case SplitCriterion::log_loss: return "log_loss";
  }
  return "gini";
}

std::string_view to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::sqrt: return "sqrt";
    case MaxFeatures::log2: return "log2";
    case MaxFeatures::all: return "all";
  }
  return "all";
}

SplitCriterion parse_criterion(std::string_view text) {
  if (text == "gini") return SplitCriterion::gini;
  if (text == "entropy") return SplitCriterion::entropy;
  if (text == "log_loss") return SplitCriterion::log_loss;
  throw config_error("unknown split criterion '" + std::string(text) + "'");
}

MaxFeatures parse_max_features(std::string_view text) {
  if (text == "sqrt") return MaxFeatures::sqrt;
  if (text == "log2") return MaxFeatures::log2;
  if (text == "all" || text == "None" || text == "none") return MaxFeatures::all;
  throw config_error("unknown max_features '" + std::string(text) + "'");
}

void ForestConfig::validate() const {
  if (n_estimators == 0) throw config_error("n_estimators must be at least 1");
  if (min_samples_split == 0) throw config_error("min_samples_split must be positive");
  if (max_depth && *max_depth == 0) throw config_error("max_depth must be positive");
}

std::size_t features_per_node(MaxFeatures mode, std::size_t n_features) {
  if (n_features == 0) return 0;
  std::size_t k = 1;
  switch (mode) {
    case MaxFeatures::all:
      return n_features;
    case MaxFeatures::sqrt:
      while (k * k < n_features) ++k;
      return k;
    case MaxFeatures::log2: {
      std::size_t bits = 0;
      while ((std::size_t{1} << bits) < n_features) ++bits;
      return std::max<std::size_t>(bits, 1);
    }
  }
  return n_features;
}

void Dataset::add(std::span<const double> features, Label label) {
  if (labels.empty() && n_features == 0) n_features = features.size();
  if (features.size() != n_features) throw argument_error("feature vector length mismatch");
  values.insert(values.end(), features.begin(), features.end());
  labels.push_back(label);
  n_classes = std::max<std::size_t>(n_classes, label + 1);
}

double entropy(std::span<const double> class_probabilities) {
  check_probabilities(class_probabilities);
  return entropy_unchecked(class_probabilities);
}

double gini(std::span<const double> class_probabilities) {
  check_probabilities(class_probabilities);
  return gini_unchecked(class_probabilities);
}

double impurity(std::span<const double> class_probabilities, SplitCriterion criterion) {
  return criterion == SplitCriterion::gini ? gini(class_probabilities)
                                           : entropy(class_probabilities);
}

double impurity_from_counts(std::span<const std::size_t> counts, SplitCriterion criterion) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0) return 0.0;
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return criterion == SplitCriterion::gini ? gini_unchecked(p) : entropy_unchecked(p);
}

double gain_from_counts(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right, SplitCriterion criterion) {
  const auto total = static_cast<double>(std::accumulate(parent.begin(), parent.end(), std::size_t{0}));
  if (total == 0.0) throw argument_error("information gain of an empty parent");
  const auto n_left = static_cast<double>(std::accumulate(left.begin(), left.end(), std::size_t{0}));
  const auto n_right = static_cast<double>(std::accumulate(right.begin(), right.end(), std::size_t{0}));
  return impurity_from_counts(parent, criterion) -
         (n_left / total) * impurity_from_counts(left, criterion) -
         (n_right / total) * impurity_from_counts(right, criterion);
}

double information_gain(std::span<const Label> parent, std::span<const Label> left,
                        std::span<const Label> right, SplitCriterion criterion) {
  if (parent.empty()) throw argument_error("information gain of an empty parent");
  if (left.size() + right.size() != parent.size()) {
    throw argument_error("children do not partition the parent");
  }
  Label max_label = 0;
  for (Label l : parent) max_label = std::max(max_label, l);
  for (Label l : left) max_label = std::max(max_label, l);
  for (Label l : right) max_label = std::max(max_label, l);
  const std::size_t n_classes = std::size_t{max_label} + 1;

  const auto p = count_labels(parent, n_classes);
  const auto l = count_labels(left, n_classes);
  const auto r = count_labels(right, n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (l[c] + r[c] != p[c]) throw argument_error("children do not partition the parent");
  }
  return gain_from_counts(p, l, r, criterion);
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features,
                                SplitCriterion criterion) {
  return search_splits(data, rows, candidate_features, criterion, false);
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> candidate_features,
                                SplitCriterion criterion) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return best_split(data, rows, candidate_features, criterion);
}

Label DecisionTree::predict(std::span<const double> sample) const {
  std::size_t index = 0;
  while (!nodes_[index].leaf) {
    const Node& node = nodes_[index];
    index = sample[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[index].label;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [index, depth] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, depth);
    if (!nodes_[index].leaf) {
      stack.emplace_back(nodes_[index].left, depth + 1);
      stack.emplace_back(nodes_[index].right, depth + 1);
    }
  }
  return deepest;
}

DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> rows,
                        const ForestConfig& config, Rng& rng) {
  config.validate();
  if (rows.empty()) throw training_error("cannot train a tree on zero samples");
  if (data.n_features == 0) throw training_error("cannot train a tree on zero features");
  TreeBuilder builder(data, config, rng);
  builder.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
  return DecisionTree(std::move(builder.nodes));
}

ForestModel train_forest(const Dataset& data, const ForestConfig& config) {
  config.validate();
  if (data.size() < 2) throw training_error("a forest needs at least 2 samples");
  const auto present = count_labels(data.labels, data.n_classes);
  if (std::count_if(present.begin(), present.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw training_error("a forest needs at least 2 classes present");
  }

  ForestModel model;
  model.config = config;
  model.n_classes = data.n_classes;
  model.n_features = data.n_features;
  model.trees.resize(config.n_estimators);

  parallel_for(config.n_estimators, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::size_t> rows(data.size());
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.index(data.size()));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees[t] = train_tree(data, rows, config, rng);
  });
  return model;
}

Prediction predict(const ForestModel& model, std::span<const double> sample) {
  if (sample.size() != model.n_features) {
    throw argument_error("sample has " + std::to_string(sample.size()) + " features, model expects " +
                         std::to_string(model.n_features));
  }
  Prediction result;
  result.votes.assign(model.n_classes, 0);
  for (const auto& tree : model.trees) ++result.votes[tree.predict(sample)];
  result.label = static_cast<Label>(majority(result.votes));
  return result;
}

}  // namespace hmmrf
