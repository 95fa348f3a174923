#include "hmmrf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <tuple>

#include "hmmrf/errors.hpp"
#include "hmmrf/parallel.hpp"

namespace hmmrf {
namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct PerClass {
  std::vector<ClassMetrics> metrics;
  double weighted_f1 = 0.0;
};

PerClass per_class_metrics(const ConfusionMatrix& m) {
  const std::size_t n = m.family_order.size();
  const std::size_t total = m.total();
  PerClass out;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t support = 0;
    std::size_t predicted = 0;
    for (std::size_t k = 0; k < n; ++k) {
      support += m.counts[c][k];
      predicted += m.counts[k][c];
    }
    const auto tp = static_cast<double>(m.counts[c][c]);
    ClassMetrics cm;
    cm.family = m.family_order[c];
    cm.support = support;
    cm.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    cm.recall = support > 0 ? tp / static_cast<double>(support) : 0.0;
    const double pr = cm.precision + cm.recall;
    cm.f1 = pr > 0.0 ? 2.0 * cm.precision * cm.recall / pr : 0.0;
    if (total > 0) {
      out.weighted_f1 += static_cast<double>(support) / static_cast<double>(total) * cm.f1;
    }
    out.metrics.push_back(std::move(cm));
  }
  return out;
}

// Scaled training features and test vectors for one L.
struct CellInputs {
  Dataset train;
  std::vector<std::vector<double>> test;
  std::vector<Label> test_labels;
  StandardScaler scaler;  // unused for raw-rf
};

class GridRunner {
 public:
  GridRunner(const CorpusSplit& selection, const GridOptions& options)
      : split_(selection), options_(options), families_(selection.families()) {}

  const std::vector<std::string>& families() const { return families_; }

  FamilyModels family_models() {
    if (!options_.use_cache) return train_models();
    FamilyModels out;
    out.families = families_;
    std::vector<std::string> missing;
    for (const auto& f : families_) {
      if (!hmm_cache_.contains(key(f))) missing.push_back(f);
    }
    if (!missing.empty()) {
      FamilyModels trained = train_family_hmms(missing, split_.train, split_.vocabulary.size(),
                                               options_.hmm, options_.max_train_symbols);
      for (std::size_t i = 0; i < missing.size(); ++i) {
        hmm_cache_.emplace(key(missing[i]), std::move(trained.models[i]));
      }
    }
    for (const auto& f : families_) out.models.push_back(hmm_cache_.at(key(f)));
    return out;
  }

  const CellInputs& inputs(std::size_t length) {
    if (options_.use_cache) {
      auto it = feature_cache_.find(length);
      if (it == feature_cache_.end()) it = feature_cache_.emplace(length, build_inputs(length)).first;
      return it->second;
    }
    scratch_ = build_inputs(length);
    return scratch_;
  }

 private:
  using HmmKey = std::tuple<std::string, std::size_t, std::uint64_t>;

  HmmKey key(const std::string& family) const {
    return {family, options_.hmm.n_states, options_.hmm.seed};
  }

  FamilyModels train_models() const {
    return train_family_hmms(families_, split_.train, split_.vocabulary.size(), options_.hmm,
                             options_.max_train_symbols);
  }

  CellInputs build_inputs(std::size_t length) {
    CellInputs in;
    in.test.resize(split_.test.size());
    for (const auto& s : split_.test) in.test_labels.push_back(family_index(families_, s.family));

    if (options_.kind == PipelineKind::raw_rf) {
      for (const auto& s : split_.train) {
        in.train.add(raw_features(s.symbols, length), family_index(families_, s.family));
      }
      for (std::size_t i = 0; i < split_.test.size(); ++i) {
        in.test[i] = raw_features(split_.test[i].symbols, length);
      }
    } else {
      const FamilyModels models = family_models();
      FeatureStage stage = build_feature_stage(models, split_.train, length);
      in.train = std::move(stage.train);
      in.scaler = std::move(stage.scaler);
      parallel_for(split_.test.size(), [&](std::size_t i) {
        in.test[i] = transform(in.scaler, extract_features(models, split_.test[i].symbols, length));
      });
    }
    in.train.n_classes = std::max(in.train.n_classes, families_.size());
    return in;
  }

  const CorpusSplit& split_;
  const GridOptions& options_;
  std::vector<std::string> families_;
  std::map<HmmKey, HmmModel> hmm_cache_;
  std::map<std::size_t, CellInputs> feature_cache_;
  CellInputs scratch_;
};

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) sum += c;
  }
  return sum;
}

std::size_t ConfusionMatrix::correct() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
  return sum;
}

ConfusionMatrix confusion(std::span<const Label> actual, std::span<const Label> predicted,
                          const std::vector<std::string>& family_order) {
  if (actual.size() != predicted.size()) {
    throw argument_error("actual and predicted label lists differ in length");
  }
  const std::size_t n = family_order.size();
  ConfusionMatrix m;
  m.family_order = family_order;
  m.counts.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= n || predicted[i] >= n) throw argument_error("label index out of range");
    ++m.counts[actual[i]][predicted[i]];
  }
  return m;
}

ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          const std::vector<std::string>& family_order) {
  if (actual.size() != predicted.size()) {
    throw argument_error("actual and predicted label lists differ in length");
  }
  std::vector<Label> a;
  std::vector<Label> p;
  for (const auto& s : actual) a.push_back(family_index(family_order, s));
  for (const auto& s : predicted) p.push_back(family_index(family_order, s));
  return confusion(a, p, family_order);
}

double accuracy(const ConfusionMatrix& matrix) {
  const std::size_t total = matrix.total();
  if (total == 0) throw argument_error("accuracy of an empty confusion matrix");
  return static_cast<double>(matrix.correct()) / static_cast<double>(total);
}

double weighted_f1(const ConfusionMatrix& matrix) {
  if (matrix.total() == 0) throw argument_error("weighted F1 of an empty confusion matrix");
  return per_class_metrics(matrix).weighted_f1;
}

EvaluationReport make_report(const ConfusionMatrix& matrix) {
  EvaluationReport report;
  report.accuracy = accuracy(matrix);
  PerClass pc = per_class_metrics(matrix);
  report.weighted_f1 = pc.weighted_f1;
  report.per_class = std::move(pc.metrics);
  report.confusion = matrix;

  const std::size_t n = matrix.family_order.size();
  report.scaled_confusion.assign(n, std::vector<double>(n, 0.0));
  report.empty_rows.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t row_total = 0;
    for (std::size_t c : matrix.counts[i]) row_total += c;
    if (row_total == 0) {
      report.empty_rows[i] = true;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      report.scaled_confusion[i][j] =
          static_cast<double>(matrix.counts[i][j]) / static_cast<double>(row_total);
    }
  }
  return report;
}

EvaluationReport evaluate(const ClassifierModel& model, const std::vector<LabeledSequence>& test) {
  if (test.empty()) throw argument_error("cannot evaluate on an empty test set");
  const auto& families = families_of(model);

  std::vector<Label> actual(test.size());
  std::vector<Label> predicted(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    try {
      actual[i] = family_index(families, test[i].family);
      predicted[i] = classify(model, test[i].symbols).label;
    } catch (const error& e) {
      rethrow_with_context(e, test[i].sample_id);
    }
  });
  return make_report(confusion(actual, predicted, families));
}

std::string_view to_string(PipelineKind kind) {
  return kind == PipelineKind::hmm_rf ? "hmm-rf" : "raw-rf";
}

PipelineKind parse_pipeline_kind(std::string_view text) {
  if (text == "hmm-rf") return PipelineKind::hmm_rf;
  if (text == "raw-rf") return PipelineKind::raw_rf;
  throw config_error("unknown pipeline kind '" + std::string(text) + "'");
}

void GridSpec::validate() const {
  if (lengths.empty() || n_estimators.empty() || criteria.empty() || max_features.empty()) {
    throw config_error("every grid axis needs at least one value");
  }
  for (std::size_t l : lengths) {
    if (l == 0) throw config_error("grid L values must be positive");
  }
  for (std::size_t t : n_estimators) {
    if (t == 0) throw config_error("grid n_estimators values must be positive");
  }
}

std::size_t GridSpec::cell_count() const {
  return lengths.size() * n_estimators.size() * criteria.size() * max_features.size();
}

GridCell GridSpec::cell(std::size_t index) const {
  if (index >= cell_count()) throw argument_error("grid cell index out of range");
  GridCell c;
  c.index = index;
  std::size_t rest = index;
  c.max_features = max_features[rest % max_features.size()];
  rest /= max_features.size();
  c.criterion = criteria[rest % criteria.size()];
  rest /= criteria.size();
  c.n_estimators = n_estimators[rest % n_estimators.size()];
  rest /= n_estimators.size();
  c.length = lengths[rest];
  return c;
}

GridSpec GridSpec::hmm_rf_default() {
  return {{25, 50, 100, 200},
          {1, 10, 100, 150, 200},
          {SplitCriterion::gini, SplitCriterion::entropy, SplitCriterion::log_loss},
          {MaxFeatures::sqrt, MaxFeatures::log2, MaxFeatures::all}};
}

GridSpec GridSpec::raw_rf_default() {
  return {{25, 50, 100, 200},
          {1, 10, 100, 150},
          {SplitCriterion::gini, SplitCriterion::entropy, SplitCriterion::log_loss},
          {MaxFeatures::sqrt, MaxFeatures::log2, MaxFeatures::all}};
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
  return derive_seed(master_seed, cell_index);
}

GridResult grid_search(const CorpusSplit& split, const GridSpec& grid, const GridOptions& options) {
  grid.validate();
  if (options.kind == PipelineKind::hmm_rf) options.hmm.validate();

  std::optional<CorpusSplit> carved;
  if (options.validation_fraction > 0.0) {
    auto [train, validation] =
        stratified_split(split.train, options.validation_fraction, derive_seed(options.seed, ~0ULL));
    carved = CorpusSplit{std::move(train), std::move(validation), split.vocabulary, {}};
  }
  const CorpusSplit& selection = carved ? *carved : split;
  if (selection.test.empty()) throw search_error("grid search needs a non-empty held-out split");

  GridRunner runner(selection, options);
  if (runner.families().size() < 2) throw search_error("grid search needs at least 2 families");

  GridResult result;
  std::optional<std::size_t> best_row;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const GridCell cell = grid.cell(i);
    const auto start = std::chrono::steady_clock::now();
    try {
      ForestConfig forest = options.forest;
      forest.n_estimators = cell.n_estimators;
      forest.criterion = cell.criterion;
      forest.max_features = cell.max_features;
      forest.seed = cell_seed(options.seed, i);

      const CellInputs& in = runner.inputs(cell.length);
      ForestModel trained = train_forest(in.train, forest);
      std::vector<Label> predicted(in.test.size());
      for (std::size_t k = 0; k < in.test.size(); ++k) predicted[k] = predict(trained, in.test[k]).label;
      EvaluationReport report = make_report(confusion(in.test_labels, predicted, runner.families()));

      GridRow row;
      row.cell = cell;
      row.accuracy = report.accuracy;
      row.weighted_f1 = report.weighted_f1;
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      result.rows.push_back(row);

      if (!best_row || row.accuracy > result.best.accuracy) {
        best_row = result.rows.size() - 1;
        result.best = row;
        result.best_report = std::move(report);
        if (options.kind == PipelineKind::hmm_rf) {
          PipelineModel model;
          model.family_models = runner.family_models();
          model.scaler = in.scaler;
          model.forest = std::move(trained);
          model.length = cell.length;
          model.vocabulary = selection.vocabulary;
          model.hmm_config = options.hmm;
          model.max_train_symbols = options.max_train_symbols;
          result.best_model = std::move(model);
        } else {
          RawBaselineModel model;
          model.families = runner.families();
          model.forest = std::move(trained);
          model.length = cell.length;
          model.vocabulary = selection.vocabulary;
          result.best_model = std::move(model);
        }
      }
    } catch (const error& e) {
      result.failures.push_back({i, e.what()});
    }
  }

  if (result.rows.empty()) {
    throw search_error("every grid cell failed; first failure: " + result.failures.front().message);
  }
  if (carved) result.best_report = evaluate(result.best_model, split.test);
  return result;
}

std::vector<SweepPoint> sweep_report(const std::vector<GridRow>& rows, std::string_view axis) {
  if (rows.empty()) throw argument_error("sweep report of an empty results table");
  auto value_of = [&](const GridCell& c) -> std::string {
    if (axis == "L") return std::to_string(c.length);
    if (axis == "n_estimators") return std::to_string(c.n_estimators);
    if (axis == "criterion") return std::string(to_string(c.criterion));
    if (axis == "max_features") return std::string(to_string(c.max_features));
    throw argument_error("unknown sweep axis '" + std::string(axis) + "'");
  };

  std::vector<SweepPoint> points;
  std::vector<double> sums;
  for (const auto& row : rows) {
    const std::string v = value_of(row.cell);
    auto it = std::find_if(points.begin(), points.end(), [&](const SweepPoint& p) { return p.value == v; });
    if (it == points.end()) {
      points.push_back({v, 0.0, 0});
      sums.push_back(0.0);
      it = points.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - points.begin());
    sums[k] += row.accuracy;
    ++it->cells;
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    points[k].mean_accuracy = sums[k] / static_cast<double>(points[k].cells);
  }
  return points;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << "cell,L,n_estimators,criterion,max_features,accuracy,weighted_f1,wall_time_ms\n";
  for (const auto& r : rows) {
    out << r.cell.index << ',' << r.cell.length << ',' << r.cell.n_estimators << ','
        << to_string(r.cell.criterion) << ',' << to_string(r.cell.max_features) << ','
        << fixed4(r.accuracy) << ',' << fixed4(r.weighted_f1) << ',' << fixed4(r.wall_time_ms) << '\n';
  }
  if (!out) throw io_error("error while writing " + path.string());
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << "axis_value,mean_accuracy\n";
  for (const auto& p : points) out << p.value << ',' << fixed4(p.mean_accuracy) << '\n';
  if (!out) throw io_error("error while writing " + path.string());
}

}  // namespace hmmrf
