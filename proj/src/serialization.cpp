#include "hmmrf/serialization.hpp"

#include <fstream>
#include <sstream>

#include "hmmrf/errors.hpp"

namespace hmmrf {
namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw format_error(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw format_error(std::string("field '") + key + "': " + e.what());
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const char* name) {
  const auto values = j.get<std::vector<std::vector<double>>>();
  if (values.size() != rows) throw format_error(std::string(name) + " has the wrong row count");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (values[r].size() != cols) throw format_error(std::string(name) + " has the wrong column count");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = values[r][c];
  }
  return m;
}

json node_to_json(const DecisionTree& tree, std::size_t index) {
  const auto& node = tree.nodes()[index];
  if (node.leaf) return {{"label", node.label}, {"counts", node.class_counts}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_to_json(tree, node.left)},
          {"right", node_to_json(tree, node.right)}};
}

std::size_t node_from_json(const json& j, std::vector<DecisionTree::Node>& nodes,
                           std::size_t n_classes, std::size_t n_features) {
  const std::size_t index = nodes.size();
  nodes.emplace_back();
  if (j.contains("label")) {
    DecisionTree::Node leaf;
    leaf.leaf = true;
    leaf.label = get<Label>(j, "label");
    leaf.class_counts = get<std::vector<std::size_t>>(j, "counts");
    if (leaf.label >= n_classes || leaf.class_counts.size() != n_classes) {
      throw format_error("tree leaf disagrees with the class count");
    }
    nodes[index] = std::move(leaf);
    return index;
  }
  const auto feature = get<std::size_t>(j, "feature");
  if (feature >= n_features) throw format_error("tree references a feature out of range");
  const auto threshold = get<double>(j, "threshold");
  const std::size_t left = node_from_json(field(j, "left"), nodes, n_classes, n_features);
  const std::size_t right = node_from_json(field(j, "right"), nodes, n_classes, n_features);
  auto& node = nodes[index];
  node.leaf = false;
  node.feature = feature;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  return index;
}

void check_version(const json& j) {
  if (get<std::string>(j, "version") != kModelFormatVersion) {
    throw format_error("unsupported model version '" + get<std::string>(j, "version") + "'");
  }
}

}  // namespace

json to_json(const HmmModel& model) {
  return {{"n_states", model.n_states},
          {"n_symbols", model.n_symbols},
          {"initial", model.initial},
          {"transition", matrix_to_json(model.transition)},
          {"emission", matrix_to_json(model.emission)}};
}

HmmModel hmm_from_json(const json& j) {
  HmmModel model;
  try {
    model.n_states = get<std::size_t>(j, "n_states");
    model.n_symbols = get<std::size_t>(j, "n_symbols");
    model.initial = get<std::vector<double>>(j, "initial");
    model.transition = matrix_from_json(field(j, "transition"), model.n_states, model.n_states, "transition");
    model.emission = matrix_from_json(field(j, "emission"), model.n_states, model.n_symbols, "emission");
    model.validate();
  } catch (const json::exception& e) {
    throw format_error(std::string("HMM model: ") + e.what());
  } catch (const config_error& e) {
    throw format_error(std::string("HMM model: ") + e.what());
  }
  return model;
}

json to_json(const TrainingConfig& config) {
  return {{"n_states", config.n_states},
          {"min_iterations", config.min_iterations},
          {"epsilon", config.epsilon},
          {"max_iterations", config.max_iterations},
          {"seed", config.seed},
          {"init_jitter", config.init_jitter}};
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  c.n_states = get<std::size_t>(j, "n_states");
  c.min_iterations = get<std::size_t>(j, "min_iterations");
  c.epsilon = get<double>(j, "epsilon");
  c.max_iterations = get<std::size_t>(j, "max_iterations");
  c.seed = get<std::uint64_t>(j, "seed");
  c.init_jitter = get<double>(j, "init_jitter");
  return c;
}

json to_json(const ForestConfig& config) {
  json j = {{"n_estimators", config.n_estimators},
            {"criterion", to_string(config.criterion)},
            {"max_features", to_string(config.max_features)},
            {"bootstrap", config.bootstrap},
            {"min_samples_split", config.min_samples_split},
            {"seed", config.seed}};
  j["max_depth"] = config.max_depth ? json(*config.max_depth) : json(nullptr);
  return j;
}

ForestConfig forest_config_from_json(const json& j) {
  ForestConfig c;
  c.n_estimators = get<std::size_t>(j, "n_estimators");
  try {
    c.criterion = parse_criterion(get<std::string>(j, "criterion"));
    c.max_features = parse_max_features(get<std::string>(j, "max_features"));
  } catch (const config_error& e) {
    throw format_error(e.what());
  }
  c.bootstrap = get<bool>(j, "bootstrap");
  c.min_samples_split = get<std::size_t>(j, "min_samples_split");
  c.seed = get<std::uint64_t>(j, "seed");
  if (const json& depth = field(j, "max_depth"); !depth.is_null()) {
    c.max_depth = depth.get<std::size_t>();
  }
  return c;
}

json to_json(const ForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(tree, 0));
  return {{"config", to_json(model.config)},
          {"n_classes", model.n_classes},
          {"n_features", model.n_features},
          {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& j) {
  ForestModel model;
  model.config = forest_config_from_json(field(j, "config"));
  model.n_classes = get<std::size_t>(j, "n_classes");
  model.n_features = get<std::size_t>(j, "n_features");
  const json& trees = field(j, "trees");
  if (!trees.is_array() || trees.size() != model.config.n_estimators) {
    throw format_error("forest tree count does not match n_estimators");
  }
  for (const auto& t : trees) {
    std::vector<DecisionTree::Node> nodes;
    node_from_json(t, nodes, model.n_classes, model.n_features);
    model.trees.emplace_back(std::move(nodes));
  }
  return model;
}

json to_json(const OpcodeVocabulary& vocabulary) {
  return {{"hash", vocabulary.hash()}, {"mnemonics", vocabulary.mnemonics()}};
}

OpcodeVocabulary vocabulary_from_json(const json& j) {
  OpcodeVocabulary vocabulary(get<std::vector<std::string>>(j, "mnemonics"));
  if (vocabulary.hash() != get<std::string>(j, "hash")) {
    throw format_error("vocabulary hash does not match its mnemonic list");
  }
  return vocabulary;
}

json to_json(const StandardScaler& scaler) {
  return {{"means", scaler.means}, {"stds", scaler.stds}};
}

StandardScaler scaler_from_json(const json& j) {
  StandardScaler s;
  s.means = get<std::vector<double>>(j, "means");
  s.stds = get<std::vector<double>>(j, "stds");
  if (s.means.size() != s.stds.size()) throw format_error("scaler means and stds differ in length");
  for (double v : s.stds) {
    if (!(v > 0.0)) throw format_error("scaler std must be positive");
  }
  return s;
}

json to_json(const PipelineModel& model) {
  json families = json::array();
  for (const auto& m : model.family_models.models) families.push_back(to_json(m));
  return {{"version", kModelFormatVersion},
          {"kind", "hmm-rf"},
          {"L", model.length},
          {"families", model.family_models.families},
          {"vocabulary", to_json(model.vocabulary)},
          {"hmm_config", to_json(model.hmm_config)},
          {"max_train_symbols", model.max_train_symbols},
          {"family_models", std::move(families)},
          {"scaler", to_json(model.scaler)},
          {"forest", to_json(model.forest)}};
}

json to_json(const RawBaselineModel& model) {
  return {{"version", kModelFormatVersion},
          {"kind", "raw-rf"},
          {"L", model.length},
          {"families", model.families},
          {"vocabulary", to_json(model.vocabulary)},
          {"forest", to_json(model.forest)}};
}

json to_json(const ClassifierModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

ClassifierModel classifier_from_json(const json& j) {
  check_version(j);
  const auto kind = get<std::string>(j, "kind");
  const auto length = get<std::size_t>(j, "L");
  const auto families = get<std::vector<std::string>>(j, "families");
  OpcodeVocabulary vocabulary = vocabulary_from_json(field(j, "vocabulary"));
  ForestModel forest = forest_from_json(field(j, "forest"));
  if (forest.n_classes != families.size()) {
    throw format_error("forest class count does not match the family list");
  }

  if (kind == "raw-rf") {
    if (forest.n_features != length) throw format_error("raw baseline forest expects L features");
    RawBaselineModel model;
    model.families = families;
    model.forest = std::move(forest);
    model.length = length;
    model.vocabulary = std::move(vocabulary);
    return model;
  }
  if (kind != "hmm-rf") throw format_error("unknown model kind '" + kind + "'");

  PipelineModel model;
  model.family_models.families = families;
  for (const auto& m : field(j, "family_models")) model.family_models.models.push_back(hmm_from_json(m));
  if (model.family_models.models.size() != families.size()) {
    throw format_error("family model count does not match the family list");
  }
  for (const auto& m : model.family_models.models) {
    if (m.n_symbols != vocabulary.size()) throw format_error("family model alphabet differs from vocabulary");
  }
  model.scaler = scaler_from_json(field(j, "scaler"));
  model.forest = std::move(forest);
  model.length = length;
  model.vocabulary = std::move(vocabulary);
  model.hmm_config = training_config_from_json(field(j, "hmm_config"));
  model.max_train_symbols = get<std::size_t>(j, "max_train_symbols");
  if (model.forest.n_features != families.size() * length || model.scaler.size() != model.forest.n_features) {
    throw format_error("feature width disagrees with families x L");
  }
  return model;
}

json to_json(const PlantedCorpusConfig& config) {
  return {{"n_families", config.n_families},
          {"n_states", config.n_states},
          {"n_symbols", config.n_symbols},
          {"samples_per_family", config.samples_per_family},
          {"min_length", config.min_length},
          {"max_length", config.max_length},
          {"separation", config.separation},
          {"seed", config.seed},
          {"short_samples", config.short_samples},
          {"short_length", config.short_length}};
}

json to_json(const EvaluationReport& report) {
  json per_class = json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"family", c.family},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support}});
  }
  return {{"accuracy", report.accuracy},
          {"weighted_f1", report.weighted_f1},
          {"families", report.confusion.family_order},
          {"confusion", report.confusion.counts},
          {"scaled_confusion", report.scaled_confusion},
          {"empty_rows", report.empty_rows},
          {"per_class", std::move(per_class)}};
}

EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  r.accuracy = get<double>(j, "accuracy");
  r.weighted_f1 = get<double>(j, "weighted_f1");
  r.confusion.family_order = get<std::vector<std::string>>(j, "families");
  r.confusion.counts = get<std::vector<std::vector<std::size_t>>>(j, "confusion");
  r.scaled_confusion = get<std::vector<std::vector<double>>>(j, "scaled_confusion");
  r.empty_rows = get<std::vector<bool>>(j, "empty_rows");
  for (const auto& c : field(j, "per_class")) {
    r.per_class.push_back({get<std::string>(c, "family"), get<double>(c, "precision"),
                           get<double>(c, "recall"), get<double>(c, "f1"),
                           get<std::size_t>(c, "support")});
  }
  return r;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << dump(j);
  if (!out) throw io_error("error while writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

}  // namespace hmmrf
