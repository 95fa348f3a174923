// hmmrf: command-line front end.
//
//   gen-corpus  write a planted synthetic corpus
//   train       split, train HMM-RF (or the raw-opcode RF) and report
//   grid        hyperparameter grid search with sweep tables
//   classify    label .opseq files with a trained model
//   eval        full evaluation report for a model on a labelled corpus
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hmmrf/corpus.hpp"
#include "hmmrf/errors.hpp"
#include "hmmrf/eval.hpp"
#include "hmmrf/pipeline.hpp"
#include "hmmrf/serialization.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace hmmrf;
using hmmrf::cli::Manifest;

namespace {

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
auto as_usage(const std::string& flag, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw usage_error(flag + ": " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw usage_error("empty entry in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw usage_error("empty list");
  return out;
}

std::size_t parse_count(const std::string& text) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(text, &pos);
  if (pos != text.size() || text.front() == '-') throw std::invalid_argument("not a non-negative integer: " + text);
  return static_cast<std::size_t>(v);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_report(const EvaluationReport& r) {
  std::printf("accuracy %s  weighted F1 %s  (%zu samples)\n", fixed4(r.accuracy).c_str(),
              fixed4(r.weighted_f1).c_str(), r.confusion.total());
  std::size_t width = 6;
  for (const auto& f : r.confusion.family_order) width = std::max(width, f.size());
  std::printf("confusion (rows actual, columns predicted):\n");
  std::printf("  %-*s", static_cast<int>(width), "");
  for (const auto& f : r.confusion.family_order) std::printf(" %*s", static_cast<int>(width), f.c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < r.confusion.counts.size(); ++i) {
    std::printf("  %-*s", static_cast<int>(width), r.confusion.family_order[i].c_str());
    for (std::size_t c : r.confusion.counts[i]) std::printf(" %*zu", static_cast<int>(width), c);
    std::printf("\n");
  }
  for (const auto& m : r.per_class) {
    std::printf("  %-*s precision %s recall %s f1 %s support %zu\n", static_cast<int>(width), m.family.c_str(),
                fixed4(m.precision).c_str(), fixed4(m.recall).c_str(), fixed4(m.f1).c_str(), m.support);
  }
}

// ---------------------------------------------------------------- options

struct HmmFlags {
  std::size_t states = 20;
  double epsilon = 0.001;
  std::size_t min_iters = 10;
  std::size_t max_iters = 200;
  double jitter = 0.01;
  std::size_t max_train_symbols = kDefaultMaxTrainSymbols;

  void add(CLI::App& app) {
    app.add_option("--states", states, "hidden states per family HMM")->capture_default_str();
    app.add_option("--epsilon", epsilon, "Baum-Welch stopping threshold on |delta log-likelihood|")
        ->capture_default_str();
    app.add_option("--min-iters", min_iters, "minimum Baum-Welch iterations")->capture_default_str();
    app.add_option("--max-iters", max_iters, "Baum-Welch iteration cap")->capture_default_str();
    app.add_option("--jitter", jitter, "multiplicative jitter of the near-uniform initial model")
        ->capture_default_str();
    app.add_option("--max-train-symbols", max_train_symbols,
                   "cap on concatenated training symbols per family (0 = no cap)")
        ->capture_default_str();
  }

  TrainingConfig config(std::uint64_t seed) const {
    TrainingConfig c;
    c.n_states = states;
    c.epsilon = epsilon;
    c.min_iterations = min_iters;
    c.max_iterations = max_iters;
    c.init_jitter = jitter;
    c.seed = seed;
    return c;
  }
};

struct SplitFlags {
  std::string corpus;
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::size_t min_samples = 50;

  void add(CLI::App& app) {
    app.add_option("--corpus", corpus, "corpus root (one directory per family)")->required();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--test-fraction", test_fraction, "held-out fraction per family")->capture_default_str();
    app.add_option("--min-samples", min_samples, "drop families with fewer samples")->capture_default_str();
  }

  json echo() const {
    return {{"corpus", corpus}, {"seed", seed}, {"test_fraction", test_fraction}, {"min_samples", min_samples}};
  }
};

std::vector<RawSequence> load_filtered(const std::string& root, std::size_t min_samples) {
  try {
    LoadedCorpus loaded = load_corpus(root);
    print_warnings(loaded.warnings);
    return filter_small_classes(std::move(loaded.sequences), min_samples);
  } catch (const error& e) {
    rethrow_with_context(e, "loading corpus");
  }
}

CorpusSplit make_split(const SplitFlags& flags, std::size_t min_length) {
  const auto sequences = load_filtered(flags.corpus, flags.min_samples);
  try {
    return split_corpus(sequences, flags.test_fraction, min_length, flags.seed);
  } catch (const error& e) {
    rethrow_with_context(e, "splitting corpus");
  }
}

// ---------------------------------------------------------------- gen-corpus

struct GenFlags {
  PlantedCorpusConfig config;
  std::string lengths = "300:800";
  std::string out;
};

int cmd_gen_corpus(GenFlags& flags, const std::vector<std::string>& argv) {
  const auto colon = flags.lengths.find(':');
  if (colon == std::string::npos) throw usage_error("--len expects min:max, got '" + flags.lengths + "'");
  as_usage("--len", [&] {
    flags.config.min_length = parse_count(flags.lengths.substr(0, colon));
    flags.config.max_length = parse_count(flags.lengths.substr(colon + 1));
    return 0;
  });

  Manifest manifest("gen-corpus", argv);
  const fs::path root(flags.out);
  const PlantedCorpus corpus = generate_planted_corpus(flags.config, root);

  manifest.config(to_json(flags.config));
  manifest.seed(flags.config.seed);
  manifest.corpus(root);
  manifest.output(root / "_planted.json");
  manifest.write(root / "_manifest.json");

  std::printf("wrote %zu families, %zu samples, %zu total symbols to %s\n", corpus.families.size(),
              corpus.sequences.size(), corpus.total_symbols, root.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainFlags {
  SplitFlags split;
  HmmFlags hmm;
  std::size_t length = 50;
  std::size_t trees = 150;
  std::string criterion = "gini";
  std::string max_features = "sqrt";
  std::size_t max_depth = 0;
  std::string baseline;
  std::string out;
};

ForestConfig forest_from(std::size_t trees, const std::string& criterion, const std::string& max_features,
                         std::size_t max_depth, std::uint64_t seed) {
  ForestConfig c;
  c.n_estimators = trees;
  c.criterion = as_usage("--criterion", [&] { return parse_criterion(criterion); });
  c.max_features = as_usage("--max-features", [&] { return parse_max_features(max_features); });
  if (max_depth > 0) c.max_depth = max_depth;
  c.seed = seed;
  return c;
}

int cmd_train(const TrainFlags& flags, const std::vector<std::string>& argv) {
  if (!flags.baseline.empty() && flags.baseline != "raw") {
    throw usage_error("--baseline accepts only 'raw'");
  }
  const bool raw = flags.baseline == "raw";
  const ForestConfig forest =
      forest_from(flags.trees, flags.criterion, flags.max_features, flags.max_depth, flags.split.seed);
  const TrainingConfig hmm = flags.hmm.config(flags.split.seed);
  if (flags.length == 0) throw usage_error("--L must be positive");

  Manifest manifest("train", argv);
  const CorpusSplit split = make_split(flags.split, flags.length);

  ClassifierModel model;
  if (raw) {
    model = train_raw_baseline(split, forest, flags.length);
  } else {
    model = train_pipeline(split, hmm, forest, flags.length, flags.hmm.max_train_symbols);
  }
  EvaluationReport report;
  try {
    report = evaluate(model, split.test);
  } catch (const error& e) {
    rethrow_with_context(e, "evaluation");
  }

  const fs::path out(flags.out);
  ensure_parent(out);
  const fs::path dir = out.parent_path();
  const fs::path report_path = dir / (out.stem().string() + ".report.json");
  write_json(out, to_json(model));
  write_json(report_path, to_json(report));
  write_dropped_csv(dir / "dropped.csv", split.dropped);

  json config = flags.split.echo();
  config["kind"] = raw ? "raw-rf" : "hmm-rf";
  config["L"] = flags.length;
  config["forest"] = to_json(forest);
  if (!raw) {
    config["hmm"] = to_json(hmm);
    config["max_train_symbols"] = flags.hmm.max_train_symbols;
  }
  manifest.config(config);
  manifest.seed(flags.split.seed);
  manifest.corpus(flags.split.corpus);
  manifest.output(out);
  manifest.output(report_path);
  manifest.output(dir / "dropped.csv");
  manifest.write(cli::manifest_path_for(out));

  std::printf("%s model: %zu families, %zu train / %zu test samples, %zu dropped, vocabulary %zu\n",
              raw ? "raw-rf" : "hmm-rf", families_of(model).size(), split.train.size(), split.test.size(),
              split.dropped.size(), split.vocabulary.size());
  std::printf("held-out ");
  print_report(report);
  std::printf("model written to %s\n", out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- grid

struct GridFlags {
  SplitFlags split;
  HmmFlags hmm;
  std::string kind = "hmm-rf";
  std::string lengths;
  std::string trees;
  std::string criteria;
  std::string max_features;
  double validation_fraction = 0.0;
  bool no_cache = false;
  std::string out;
};

int cmd_grid(const GridFlags& flags, const std::vector<std::string>& argv) {
  GridOptions options;
  options.kind = as_usage("--kind", [&] { return parse_pipeline_kind(flags.kind); });
  GridSpec grid = options.kind == PipelineKind::hmm_rf ? GridSpec::hmm_rf_default() : GridSpec::raw_rf_default();
  if (!flags.lengths.empty()) {
    grid.lengths.clear();
    for (const auto& v : split_list(flags.lengths)) grid.lengths.push_back(as_usage("--L", [&] { return parse_count(v); }));
  }
  if (!flags.trees.empty()) {
    grid.n_estimators.clear();
    for (const auto& v : split_list(flags.trees)) {
      grid.n_estimators.push_back(as_usage("--trees", [&] { return parse_count(v); }));
    }
  }
  if (!flags.criteria.empty()) {
    grid.criteria.clear();
    for (const auto& v : split_list(flags.criteria)) {
      grid.criteria.push_back(as_usage("--criterion", [&] { return parse_criterion(v); }));
    }
  }
  if (!flags.max_features.empty()) {
    grid.max_features.clear();
    for (const auto& v : split_list(flags.max_features)) {
      grid.max_features.push_back(as_usage("--max-features", [&] { return parse_max_features(v); }));
    }
  }
  as_usage("grid", [&] {
    grid.validate();
    return 0;
  });
  if (flags.validation_fraction < 0.0 || flags.validation_fraction >= 1.0) {
    throw usage_error("--validation-fraction must lie in [0, 1)");
  }
  options.hmm = flags.hmm.config(flags.split.seed);
  options.max_train_symbols = flags.hmm.max_train_symbols;
  options.seed = flags.split.seed;
  options.use_cache = !flags.no_cache;
  options.validation_fraction = flags.validation_fraction;

  Manifest manifest("grid", argv);
  // one split for every cell: samples must be long enough for the largest L
  const std::size_t longest = *std::max_element(grid.lengths.begin(), grid.lengths.end());
  const CorpusSplit split = make_split(flags.split, longest);
  const GridResult result = grid_search(split, grid, options);

  const fs::path out(flags.out);
  fs::create_directories(out);
  write_results_csv(out / "results.csv", result.rows);
  write_json(out / "best_model.json", to_json(result.best_model));
  write_json(out / "best_report.json", to_json(result.best_report));
  write_dropped_csv(out / "dropped.csv", split.dropped);
  for (auto axis : kSweepAxes) {
    const fs::path path = out / ("sweep_" + std::string(axis) + ".csv");
    write_sweep_csv(path, sweep_report(result.rows, axis));
    manifest.output(path);
  }
  for (const auto& f : result.failures) std::cerr << "cell " << f.cell_index << " failed: " << f.message << "\n";

  auto names = [](const auto& values, auto&& show) {
    json a = json::array();
    for (const auto& v : values) a.push_back(show(v));
    return a;
  };
  json config = flags.split.echo();
  config["kind"] = std::string(to_string(options.kind));
  config["grid"] = {
      {"L", grid.lengths},
      {"n_estimators", grid.n_estimators},
      {"criterion", names(grid.criteria, [](SplitCriterion c) { return std::string(to_string(c)); })},
      {"max_features", names(grid.max_features, [](MaxFeatures m) { return std::string(to_string(m)); })}};
  config["forest_template"] = to_json(options.forest);
  if (options.kind == PipelineKind::hmm_rf) config["hmm"] = to_json(options.hmm);
  config["max_train_symbols"] = options.max_train_symbols;
  config["use_cache"] = options.use_cache;
  config["validation_fraction"] = options.validation_fraction;
  manifest.config(config);
  manifest.seed(options.seed);
  manifest.corpus(flags.split.corpus);
  for (const char* name : {"results.csv", "best_model.json", "best_report.json", "dropped.csv"}) {
    manifest.output(out / name);
  }
  manifest.write(out / "manifest.json");

  const GridCell& b = result.best.cell;
  std::printf("%zu cells evaluated, %zu failed\n", result.rows.size(), result.failures.size());
  std::printf("best cell %zu: L=%zu n_estimators=%zu criterion=%s max_features=%s accuracy %s weighted F1 %s\n",
              b.index, b.length, b.n_estimators, std::string(to_string(b.criterion)).c_str(),
              std::string(to_string(b.max_features)).c_str(), fixed4(result.best.accuracy).c_str(),
              fixed4(result.best.weighted_f1).c_str());
  if (options.validation_fraction > 0.0) {
    std::printf("selected on validation; test accuracy %s weighted F1 %s\n",
                fixed4(result.best_report.accuracy).c_str(), fixed4(result.best_report.weighted_f1).c_str());
  }
  std::printf("results written to %s\n", out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyFlags {
  std::string model;
  std::vector<std::string> inputs;
  bool json_lines = false;
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".opseq") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

int cmd_classify(const ClassifyFlags& flags) {
  const ClassifierModel model = classifier_from_json(read_json(flags.model));
  const OpcodeVocabulary& vocabulary = vocabulary_of(model);

  int failed = 0;
  for (const auto& file : expand_inputs(flags.inputs)) {
    try {
      const Encoded encoded = encode(vocabulary, read_opseq_file(file));
      const Classification c = classify(model, encoded.symbols);
      if (flags.json_lines) {
        std::cout << json{{"file", file.string()},
                          {"family", c.family},
                          {"votes", c.votes},
                          {"unseen", encoded.unseen_count}}
                         .dump()
                  << "\n";
      } else {
        std::cout << file.string() << "\t" << c.family << "\tvotes=" << join_counts(c.votes);
        if (encoded.unseen_count > 0) std::cout << "\tunseen=" << encoded.unseen_count;
        std::cout << "\n";
      }
    } catch (const std::exception& e) {
      ++failed;
      if (flags.json_lines) {
        std::cout << json{{"file", file.string()}, {"error", e.what()}}.dump() << "\n";
      } else {
        std::cerr << "error: " << file.string() << ": " << e.what() << "\n";
      }
    }
  }
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  std::string model;
  std::string corpus;
  std::string out;
  double test_fraction = 0.0;
  std::uint64_t seed = 42;
  std::size_t min_samples = 1;
  bool min_samples_given = false;
};

int cmd_eval(EvalFlags& flags, const std::vector<std::string>& argv) {
  const bool resplit = flags.test_fraction > 0.0;
  if (resplit && !flags.min_samples_given) flags.min_samples = 50;  // mirror train
  if (flags.test_fraction < 0.0 || flags.test_fraction >= 1.0) throw usage_error("--test-fraction must lie in (0, 1)");

  Manifest manifest("eval", argv);
  const ClassifierModel model = classifier_from_json(read_json(flags.model));
  const auto& families = families_of(model);
  const std::size_t length = length_of(model);

  std::vector<RawSequence> sequences = load_filtered(flags.corpus, flags.min_samples);
  std::vector<DroppedSample> dropped;
  if (resplit) {
    CorpusSplit split;
    try {
      split = split_corpus(sequences, flags.test_fraction, length, flags.seed);
    } catch (const error& e) {
      rethrow_with_context(e, "splitting corpus");
    }
    std::set<std::string> test_ids;
    for (const auto& s : split.test) test_ids.insert(s.sample_id);
    std::erase_if(sequences, [&](const RawSequence& s) { return !test_ids.count(s.sample_id); });
    dropped = split.dropped;
  }

  std::vector<LabeledSequence> test;
  const std::set<std::string> known(families.begin(), families.end());
  for (const auto& raw : sequences) {
    if (!known.count(raw.family)) {
      dropped.push_back({raw.sample_id, raw.family, raw.mnemonics.size(), "unknown_family"});
    } else if (raw.mnemonics.size() < length) {
      dropped.push_back({raw.sample_id, raw.family, raw.mnemonics.size(), "short"});
    } else {
      test.push_back(encode_sample(vocabulary_of(model), raw));
    }
  }
  if (test.empty()) throw empty_corpus_error("no evaluable samples in " + flags.corpus);

  EvaluationReport report;
  try {
    report = evaluate(model, test);
  } catch (const error& e) {
    rethrow_with_context(e, "evaluation");
  }

  const fs::path out(flags.out);
  ensure_parent(out);
  write_json(out, to_json(report));
  const fs::path dropped_path = out.parent_path() / "dropped.csv";
  write_dropped_csv(dropped_path, dropped);

  json config{{"model", flags.model}, {"corpus", flags.corpus}, {"min_samples", flags.min_samples},
              {"L", length},          {"seed", flags.seed}};
  config["test_fraction"] = resplit ? json(flags.test_fraction) : json(nullptr);
  manifest.config(config);
  manifest.seed(flags.seed);
  manifest.corpus(flags.corpus);
  manifest.output(out);
  manifest.output(dropped_path);
  manifest.write(cli::manifest_path_for(out));

  std::printf("evaluated %zu samples, %zu dropped\n", test.size(), dropped.size());
  print_report(report);
  std::printf("report written to %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"HMM hidden-state features + Random Forest malware family classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "write a planted synthetic corpus");
  gen_cmd->add_option("--families", gen.config.n_families, "number of families")->capture_default_str();
  gen_cmd->add_option("--samples", gen.config.samples_per_family, "samples per family")->capture_default_str();
  gen_cmd->add_option("--states", gen.config.n_states, "planted hidden states")->capture_default_str();
  gen_cmd->add_option("--symbols", gen.config.n_symbols, "alphabet size")->capture_default_str();
  gen_cmd->add_option("--len", gen.lengths, "sequence length range min:max")->capture_default_str();
  gen_cmd->add_option("--separation", gen.config.separation, "family separation in [0, 1]")->capture_default_str();
  gen_cmd->add_option("--seed", gen.config.seed, "seed")->capture_default_str();
  gen_cmd->add_option("--short-samples", gen.config.short_samples, "extra deliberately short samples")
      ->capture_default_str();
  gen_cmd->add_option("--short-length", gen.config.short_length, "length of the short samples")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output corpus root")->required();

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "train a model and report held-out metrics");
  train.split.add(*train_cmd);
  train.hmm.add(*train_cmd);
  train_cmd->add_option("--L", train.length, "hidden-state prefix length")->capture_default_str();
  train_cmd->add_option("--trees", train.trees, "number of trees")->capture_default_str();
  train_cmd->add_option("--criterion", train.criterion, "gini, entropy or log_loss")->capture_default_str();
  train_cmd->add_option("--max-features", train.max_features, "sqrt, log2 or all")->capture_default_str();
  train_cmd->add_option("--max-depth", train.max_depth, "tree depth limit (0 = unlimited)")->capture_default_str();
  train_cmd->add_option("--baseline", train.baseline, "'raw' trains the raw-opcode Random Forest instead");
  train_cmd->add_option("--out", train.out, "model JSON path")->required();

  GridFlags grid;
  auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search");
  grid.split.add(*grid_cmd);
  grid.hmm.add(*grid_cmd);
  grid_cmd->add_option("--kind", grid.kind, "hmm-rf or raw-rf")->capture_default_str();
  grid_cmd->add_option("--L", grid.lengths, "comma-separated L values");
  grid_cmd->add_option("--trees", grid.trees, "comma-separated tree counts");
  grid_cmd->add_option("--criterion", grid.criteria, "comma-separated criteria");
  grid_cmd->add_option("--max-features", grid.max_features, "comma-separated max_features values");
  grid_cmd->add_option("--validation-fraction", grid.validation_fraction,
                       "select on a validation carve-out of train (0 = select on test)")
      ->capture_default_str();
  grid_cmd->add_flag("--no-cache", grid.no_cache, "recompute HMMs and features for every cell");
  grid_cmd->add_option("--out", grid.out, "output directory")->required();

  ClassifyFlags classify_flags;
  auto* classify_cmd = app.add_subcommand("classify", "classify .opseq files");
  classify_cmd->add_option("--model", classify_flags.model, "model JSON")->required();
  classify_cmd->add_flag("--json", classify_flags.json_lines, "one JSON object per line");
  classify_cmd->add_option("inputs", classify_flags.inputs, ".opseq files or directories")->required();

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a labelled corpus");
  eval_cmd->add_option("--model", eval.model, "model JSON")->required();
  eval_cmd->add_option("--corpus", eval.corpus, "labelled corpus root")->required();
  eval_cmd->add_option("--out", eval.out, "report JSON path")->required();
  eval_cmd->add_option("--test-fraction", eval.test_fraction,
                       "re-split the corpus and evaluate only its held-out side");
  eval_cmd->add_option("--seed", eval.seed, "split seed when re-splitting")->capture_default_str();
  auto* min_opt = eval_cmd->add_option("--min-samples", eval.min_samples,
                                       "drop families with fewer samples (default 1, or 50 with --test-fraction)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  eval.min_samples_given = min_opt->count() > 0;

  try {
    if (gen_cmd->parsed()) return cmd_gen_corpus(gen, args);
    if (train_cmd->parsed()) return cmd_train(train, args);
    if (grid_cmd->parsed()) return cmd_grid(grid, args);
    if (classify_cmd->parsed()) return cmd_classify(classify_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval, args);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
