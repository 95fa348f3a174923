#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmmrf/corpus.hpp"
#include "hmmrf/forest.hpp"
#include "hmmrf/pipeline.hpp"

namespace hmmrf {

/// counts[actual][predicted].
struct ConfusionMatrix {
  std::vector<std::string> family_order;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t correct() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          const std::vector<std::string>& family_order);

ConfusionMatrix confusion(std::span<const Label> actual, std::span<const Label> predicted,
                          const std::vector<std::string>& family_order);

double accuracy(const ConfusionMatrix& matrix);

/// Support-weighted mean of per-class F1; F1 is 0 when precision + recall is 0.
double weighted_f1(const ConfusionMatrix& matrix);

struct ClassMetrics {
  std::string family;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct EvaluationReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  ConfusionMatrix confusion;
  /// Rows divided by their sum; rows with no samples stay zero and are flagged.
  std::vector<std::vector<double>> scaled_confusion;
  std::vector<bool> empty_rows;
  std::vector<ClassMetrics> per_class;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

EvaluationReport make_report(const ConfusionMatrix& matrix);

/// Classifies every sample. Failures are rethrown with the sample_id prepended.
EvaluationReport evaluate(const ClassifierModel& model, const std::vector<LabeledSequence>& test);

enum class PipelineKind { hmm_rf, raw_rf };

std::string_view to_string(PipelineKind kind);
PipelineKind parse_pipeline_kind(std::string_view text);

struct GridCell {
  std::size_t index = 0;
  std::size_t length = 0;
  std::size_t n_estimators = 0;
  SplitCriterion criterion = SplitCriterion::gini;
  MaxFeatures max_features = MaxFeatures::sqrt;
};

/// Axes in enumeration order: L, n_estimators, criterion, max_features. The
/// last axis varies fastest.
struct GridSpec {
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> n_estimators;
  std::vector<SplitCriterion> criteria;
  std::vector<MaxFeatures> max_features;

  void validate() const;
  std::size_t cell_count() const;
  GridCell cell(std::size_t index) const;

  /// HMM-RF grid: 4 x 5 x 3 x 3 = 180 cells.
  static GridSpec hmm_rf_default();
  /// Raw-opcode RF grid: 4 x 4 x 3 x 3 = 144 cells.
  static GridSpec raw_rf_default();
};

struct GridOptions {
  PipelineKind kind = PipelineKind::hmm_rf;
  TrainingConfig hmm;
  std::size_t max_train_symbols = kDefaultMaxTrainSymbols;
  /// Template for every cell; n_estimators, criterion, max_features and seed
  /// are overwritten per cell.
  ForestConfig forest;
  std::uint64_t seed = 42;
  bool use_cache = true;
  /// When positive, a stratified validation set is carved out of the training
  /// split and used for selection; the best cell is then scored on test.
  double validation_fraction = 0.0;
};

struct GridRow {
  GridCell cell;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double wall_time_ms = 0.0;
};

struct GridFailure {
  std::size_t cell_index = 0;
  std::string message;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::vector<GridFailure> failures;
  GridRow best;
  EvaluationReport best_report;
  ClassifierModel best_model;
};

/// Forest seed for cell i is derive_seed(options.seed, i).
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index);

/// Every sample in the split must have at least max(grid.lengths) symbols.
/// Best is the highest accuracy, first in enumeration order on ties.
GridResult grid_search(const CorpusSplit& split, const GridSpec& grid, const GridOptions& options);

struct SweepPoint {
  std::string value;
  double mean_accuracy = 0.0;
  std::size_t cells = 0;
};

/// Axis names: "L", "n_estimators", "criterion", "max_features". Values are
/// reported in first-appearance order.
std::vector<SweepPoint> sweep_report(const std::vector<GridRow>& rows, std::string_view axis);

inline constexpr std::string_view kSweepAxes[] = {"L", "n_estimators", "criterion", "max_features"};

void write_results_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points);

}  // namespace hmmrf
