#include "hmmrf/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "hmmrf/errors.hpp"
#include "hmmrf/parallel.hpp"

namespace hmmrf {
namespace {

void check_length(std::span<const Symbol> sample, std::size_t length) {
  if (length == 0) throw argument_error("feature length L must be positive");
  if (sample.size() < length) {
    throw short_sample_error("sample has " + std::to_string(sample.size()) +
                             " opcodes, at least " + std::to_string(length) + " are required");
  }
}

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const error& e) {
    rethrow_with_context(e, stage);
  }
}

}  // namespace

FamilyModels train_family_hmms(const std::vector<std::string>& families,
                               const std::vector<LabeledSequence>& train, std::size_t n_symbols,
                               const TrainingConfig& config, std::size_t max_train_symbols) {
  config.validate();
  if (families.empty()) throw training_error("no families to train");

  std::vector<std::vector<Symbol>> observations(families.size());
  for (std::size_t f = 0; f < families.size(); ++f) {
    auto& obs = observations[f];
    bool any = false;
    for (const auto& sample : train) {
      if (sample.family != families[f]) continue;
      any = true;
      if (max_train_symbols > 0 && obs.size() >= max_train_symbols) break;
      std::size_t take = sample.symbols.size();
      if (max_train_symbols > 0) take = std::min(take, max_train_symbols - obs.size());
      obs.insert(obs.end(), sample.symbols.begin(), sample.symbols.begin() + static_cast<std::ptrdiff_t>(take));
    }
    if (!any) throw training_error("family '" + families[f] + "' has no training samples");
  }

  FamilyModels out;
  out.families = families;
  out.models.resize(families.size());
  parallel_for(families.size(), [&](std::size_t f) {
    try {
      out.models[f] = baum_welch(observations[f], n_symbols, config).model;
    } catch (const error& e) {
      rethrow_with_context(e, "HMM training for family '" + families[f] + "'");
    }
  });
  return out;
}

HiddenStateFeatures extract_features(const FamilyModels& models, std::span<const Symbol> sample,
                                     std::size_t length) {
  check_length(sample, length);
  const auto prefix = sample.first(length);

  HiddenStateFeatures features;
  features.length = length;
  features.family_order = models.families;
  features.values.reserve(models.size() * length);
  for (const auto& model : models.models) {
    for (State s : posterior_decode(model, prefix)) features.values.push_back(static_cast<double>(s));
  }
  return features;
}

StandardScaler fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw fit_error("the scaler needs at least 2 training vectors");
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim) throw argument_error("training vectors differ in length");
  }

  const auto n = static_cast<double>(rows.size());
  StandardScaler scaler;
  scaler.means.assign(dim, 0.0);
  scaler.stds.assign(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < dim; ++k) scaler.means[k] += r[k];
  }
  for (double& m : scaler.means) m /= n;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = r[k] - scaler.means[k];
      scaler.stds[k] += d * d;
    }
  }
  for (double& s : scaler.stds) {
    s = std::sqrt(s / n);
    if (!(s > 0.0)) s = 1.0;
  }
  return scaler;
}

StandardScaler fit_scaler(const std::vector<HiddenStateFeatures>& training_features) {
  std::vector<std::vector<double>> rows;
  rows.reserve(training_features.size());
  for (const auto& f : training_features) rows.push_back(f.values);
  return fit_scaler(rows);
}

std::vector<double> transform(const StandardScaler& scaler, std::span<const double> features) {
  if (features.size() != scaler.size()) {
    throw argument_error("feature vector has " + std::to_string(features.size()) +
                         " entries, scaler expects " + std::to_string(scaler.size()));
  }
  std::vector<double> out(features.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = (features[k] - scaler.means[k]) / scaler.stds[k];
  }
  return out;
}

std::vector<double> transform(const StandardScaler& scaler, const HiddenStateFeatures& features) {
  return transform(scaler, std::span<const double>(features.values));
}

Label family_index(const std::vector<std::string>& families, const std::string& family) {
  auto it = std::find(families.begin(), families.end(), family);
  if (it == families.end()) throw argument_error("unknown family '" + family + "'");
  return static_cast<Label>(it - families.begin());
}

FeatureStage build_feature_stage(const FamilyModels& models,
                                 const std::vector<LabeledSequence>& train, std::size_t length) {
  std::vector<HiddenStateFeatures> features(train.size());
  in_stage("feature extraction", [&] {
    parallel_for(train.size(), [&](std::size_t i) {
      try {
        features[i] = extract_features(models, train[i].symbols, length);
      } catch (const error& e) {
        rethrow_with_context(e, train[i].sample_id);
      }
    });
    return 0;
  });

  FeatureStage stage;
  stage.scaler = in_stage("scaling", [&] { return fit_scaler(features); });
  for (std::size_t i = 0; i < train.size(); ++i) {
    stage.train.add(transform(stage.scaler, features[i]), family_index(models.families, train[i].family));
  }
  stage.train.n_classes = std::max(stage.train.n_classes, models.size());
  return stage;
}

PipelineModel fit_pipeline(FamilyModels models, const CorpusSplit& split,
                           const ForestConfig& forest_config, std::size_t length) {
  FeatureStage stage = build_feature_stage(models, split.train, length);
  PipelineModel model;
  model.forest = in_stage("forest training", [&] { return train_forest(stage.train, forest_config); });
  model.family_models = std::move(models);
  model.scaler = std::move(stage.scaler);
  model.length = length;
  model.vocabulary = split.vocabulary;
  return model;
}

PipelineModel train_pipeline(const CorpusSplit& split, const TrainingConfig& hmm_config,
                             const ForestConfig& forest_config, std::size_t length,
                             std::size_t max_train_symbols) {
  const auto families = split.families();
  if (families.size() < 2) throw training_error("the pipeline needs at least 2 families");
  forest_config.validate();

  FamilyModels models = in_stage("HMM training", [&] {
    return train_family_hmms(families, split.train, split.vocabulary.size(), hmm_config,
                             max_train_symbols);
  });
  PipelineModel model = fit_pipeline(std::move(models), split, forest_config, length);
  model.hmm_config = hmm_config;
  model.max_train_symbols = max_train_symbols;
  return model;
}

Classification classify_features(const ForestModel& forest, const std::vector<std::string>& families,
                                 std::span<const double> scaled) {
  Prediction p = predict(forest, scaled);
  if (p.label >= families.size()) throw format_error("forest predicted an unknown class index");
  return {families[p.label], p.label, std::move(p.votes)};
}

Classification classify(const PipelineModel& model, std::span<const Symbol> sample) {
  const HiddenStateFeatures features = extract_features(model.family_models, sample, model.length);
  return classify_features(model.forest, model.families(), transform(model.scaler, features));
}

std::vector<double> raw_features(std::span<const Symbol> sample, std::size_t length) {
  check_length(sample, length);
  std::vector<double> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = static_cast<double>(sample[t]);
  return out;
}

RawBaselineModel train_raw_baseline(const CorpusSplit& split, const ForestConfig& forest_config,
                                    std::size_t length) {
  RawBaselineModel model;
  model.families = split.families();
  if (model.families.size() < 2) throw training_error("the baseline needs at least 2 families");

  Dataset data;
  in_stage("raw features", [&] {
    for (const auto& s : split.train) {
      try {
        data.add(raw_features(s.symbols, length), family_index(model.families, s.family));
      } catch (const error& e) {
        rethrow_with_context(e, s.sample_id);
      }
    }
    return 0;
  });
  data.n_classes = std::max(data.n_classes, model.families.size());

  model.forest = in_stage("forest training", [&] { return train_forest(data, forest_config); });
  model.length = length;
  model.vocabulary = split.vocabulary;
  return model;
}

Classification classify(const RawBaselineModel& model, std::span<const Symbol> sample) {
  return classify_features(model.forest, model.families, raw_features(sample, model.length));
}

Classification classify(const ClassifierModel& model, std::span<const Symbol> sample) {
  return std::visit([&](const auto& m) { return classify(m, sample); }, model);
}

const OpcodeVocabulary& vocabulary_of(const ClassifierModel& model) {
  return std::visit([](const auto& m) -> const OpcodeVocabulary& { return m.vocabulary; }, model);
}

const std::vector<std::string>& families_of(const ClassifierModel& model) {
  if (const auto* p = std::get_if<PipelineModel>(&model)) return p->families();
  return std::get<RawBaselineModel>(model).families;
}

std::size_t length_of(const ClassifierModel& model) {
  return std::visit([](const auto& m) { return m.length; }, model);
}

}  // namespace hmmrf
