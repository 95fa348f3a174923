#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hmmrf/corpus.hpp"
#include "hmmrf/eval.hpp"
#include "hmmrf/forest.hpp"
#include "hmmrf/hmm.hpp"
#include "hmmrf/pipeline.hpp"

namespace hmmrf {

using json = nlohmann::json;

inline constexpr const char* kModelFormatVersion = "hmmrf-1";

// Decoding functions throw format_error on missing keys, wrong types or
// violated invariants.

json to_json(const HmmModel& model);
HmmModel hmm_from_json(const json& j);

json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const json& j);

json to_json(const ForestConfig& config);
ForestConfig forest_config_from_json(const json& j);

json to_json(const ForestModel& model);
ForestModel forest_from_json(const json& j);

json to_json(const OpcodeVocabulary& vocabulary);
OpcodeVocabulary vocabulary_from_json(const json& j);

json to_json(const StandardScaler& scaler);
StandardScaler scaler_from_json(const json& j);

json to_json(const PipelineModel& model);
json to_json(const RawBaselineModel& model);
json to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const json& j);

json to_json(const PlantedCorpusConfig& config);

json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const json& j);

/// Pretty-printed with a trailing newline.
std::string dump(const json& j);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace hmmrf
