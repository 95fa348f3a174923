#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmmrf/corpus.hpp"
#include "hmmrf/forest.hpp"
#include "hmmrf/hmm.hpp"

namespace hmmrf {

/// One trained HMM per family, in the persisted family order.
struct FamilyModels {
  std::vector<std::string> families;
  std::vector<HmmModel> models;

  std::size_t size() const { return families.size(); }
  friend bool operator==(const FamilyModels&, const FamilyModels&) = default;
};

/// Decoded states of the first `length` symbols under every family model,
/// concatenated in family order. values.size() == families * length.
struct HiddenStateFeatures {
  std::vector<double> values;
  std::size_t length = 0;
  std::vector<std::string> family_order;
};

/// Per-coordinate standardization. Zero-variance coordinates keep std = 1.
struct StandardScaler {
  std::vector<double> means;
  std::vector<double> stds;

  std::size_t size() const { return means.size(); }
  friend bool operator==(const StandardScaler&, const StandardScaler&) = default;
};

inline constexpr std::size_t kDefaultMaxTrainSymbols = 50'000;

struct PipelineModel {
  FamilyModels family_models;
  StandardScaler scaler;
  ForestModel forest;
  std::size_t length = 0;
  OpcodeVocabulary vocabulary;
  TrainingConfig hmm_config;
  std::size_t max_train_symbols = kDefaultMaxTrainSymbols;

  const std::vector<std::string>& families() const { return family_models.families; }
};

/// Random forest on the first `length` raw opcode ids.
struct RawBaselineModel {
  std::vector<std::string> families;
  ForestModel forest;
  std::size_t length = 0;
  OpcodeVocabulary vocabulary;
};

using ClassifierModel = std::variant<PipelineModel, RawBaselineModel>;

struct Classification {
  std::string family;
  Label label = 0;
  std::vector<std::size_t> votes;
};

/// Trains one HMM per family on that family's training sequences
/// concatenated in corpus order and cut at max_train_symbols.
FamilyModels train_family_hmms(const std::vector<std::string>& families,
                               const std::vector<LabeledSequence>& train, std::size_t n_symbols,
                               const TrainingConfig& config, std::size_t max_train_symbols);

/// Throws short_sample_error if the sample has fewer than `length` symbols.
HiddenStateFeatures extract_features(const FamilyModels& models, std::span<const Symbol> sample,
                                     std::size_t length);

StandardScaler fit_scaler(const std::vector<std::vector<double>>& rows);
StandardScaler fit_scaler(const std::vector<HiddenStateFeatures>& training_features);

std::vector<double> transform(const StandardScaler& scaler, std::span<const double> features);
std::vector<double> transform(const StandardScaler& scaler, const HiddenStateFeatures& features);

/// Index of `family` in `families`; throws argument_error if absent.
Label family_index(const std::vector<std::string>& families, const std::string& family);

/// Scaled hidden-state features for a training split given already trained
/// family models. The scaler is fitted on these samples only.
struct FeatureStage {
  StandardScaler scaler;
  Dataset train;
};

FeatureStage build_feature_stage(const FamilyModels& models,
                                 const std::vector<LabeledSequence>& train, std::size_t length);

/// Assemble a pipeline from trained family models: features, scaler, forest.
PipelineModel fit_pipeline(FamilyModels models, const CorpusSplit& split,
                           const ForestConfig& forest_config, std::size_t length);

PipelineModel train_pipeline(const CorpusSplit& split, const TrainingConfig& hmm_config,
                             const ForestConfig& forest_config, std::size_t length,
                             std::size_t max_train_symbols = kDefaultMaxTrainSymbols);

Classification classify(const PipelineModel& model, std::span<const Symbol> sample);

/// Classify a sample given its scaled feature vector directly.
Classification classify_features(const ForestModel& forest, const std::vector<std::string>& families,
                                 std::span<const double> scaled);

/// First `length` opcode ids as reals.
std::vector<double> raw_features(std::span<const Symbol> sample, std::size_t length);

RawBaselineModel train_raw_baseline(const CorpusSplit& split, const ForestConfig& forest_config,
                                    std::size_t length);

Classification classify(const RawBaselineModel& model, std::span<const Symbol> sample);

Classification classify(const ClassifierModel& model, std::span<const Symbol> sample);
const OpcodeVocabulary& vocabulary_of(const ClassifierModel& model);
const std::vector<std::string>& families_of(const ClassifierModel& model);
std::size_t length_of(const ClassifierModel& model);

}  // namespace hmmrf
