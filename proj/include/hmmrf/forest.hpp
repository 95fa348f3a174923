#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmmrf/random.hpp"

namespace hmmrf {

/// log_loss is an alias of entropy; it is kept as its own value so grids can
/// name it.
enum class SplitCriterion { gini, entropy, log_loss };

enum class MaxFeatures { sqrt, log2, all };

std::string_view to_string(SplitCriterion c);
std::string_view to_string(MaxFeatures m);
SplitCriterion parse_criterion(std::string_view text);
MaxFeatures parse_max_features(std::string_view text);

struct ForestConfig {
  std::size_t n_estimators = 100;
  SplitCriterion criterion = SplitCriterion::gini;
  MaxFeatures max_features = MaxFeatures::sqrt;
  bool bootstrap = true;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 42;

  void validate() const;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Number of features drawn per node for `n_features` total.
std::size_t features_per_node(MaxFeatures mode, std::size_t n_features);

using Label = std::uint32_t;

/// Row-major feature matrix with one label per row.
struct Dataset {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> values;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_features, n_features};
  }
  double at(std::size_t r, std::size_t f) const { return values[r * n_features + f]; }

  /// Appends one sample; the first call fixes n_features.
  void add(std::span<const double> features, Label label);
};

// Impurity measures over class probability vectors. Entropy uses log base 2.
double entropy(std::span<const double> class_probabilities);
double gini(std::span<const double> class_probabilities);
double impurity(std::span<const double> class_probabilities, SplitCriterion criterion);

/// Impurity of the class distribution given by integer counts.
double impurity_from_counts(std::span<const std::size_t> counts, SplitCriterion criterion);

/// impurity(parent) - sum_child |child|/|parent| * impurity(child), from counts.
double gain_from_counts(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right, SplitCriterion criterion);

/// Same quantity computed from label multisets. left + right must equal parent.
double information_gain(std::span<const Label> parent, std::span<const Label> left,
                        std::span<const Label> right, SplitCriterion criterion);

/// Gains at or below this are treated as no improvement.
inline constexpr double kMinSplitGain = 1e-12;

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exhaustive search over midpoints between consecutive distinct values of each
/// candidate feature, restricted to `rows` (duplicates allowed, e.g. from a
/// bootstrap draw). Ties go to the lowest feature index, then the lowest
/// threshold. Returns nothing for a pure node or when no split has positive gain.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features,
                                SplitCriterion criterion);

/// best_split over every row of `data`.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> candidate_features,
                                SplitCriterion criterion);

/// Binary tree stored as a node array; node 0 is the root. Samples with
/// value <= threshold go left.
class DecisionTree {
 public:
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    Label label = 0;
    std::vector<std::size_t> class_counts;

    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  Label predict(std::span<const double> sample) const;
  std::span<const Node> nodes() const { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

/// Greedy recursive construction on `rows` of `data`. A fresh feature subset
/// is drawn at every node. When the drawn features admit no positive-gain
/// split but still separate the node's samples, the best zero-gain split is
/// taken so that consistent data can always be fit exactly.
DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> rows,
                        const ForestConfig& config, Rng& rng);

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Tree t uses its own stream seeded by derive_seed(config.seed, t), so the
/// result does not depend on how trees are scheduled across threads.
ForestModel train_forest(const Dataset& data, const ForestConfig& config);

struct Prediction {
  Label label = 0;
  std::vector<std::size_t> votes;
};

/// Plurality vote over trees, ties to the lowest class index.
Prediction predict(const ForestModel& model, std::span<const double> sample);

}  // namespace hmmrf
