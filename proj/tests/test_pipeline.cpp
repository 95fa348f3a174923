#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "hmmrf/errors.hpp"
#include "hmmrf/eval.hpp"
#include "hmmrf/pipeline.hpp"
#include "hmmrf/serialization.hpp"
#include "oracles.hpp"

using namespace hmmrf;

namespace {

CorpusSplit planted_split(std::size_t families, std::size_t per_family, double separation,
                          std::uint64_t seed = 42) {
  PlantedCorpusConfig c;
  c.n_families = families;
  c.samples_per_family = per_family;
  c.min_length = 120;
  c.max_length = 200;
  c.separation = separation;
  c.seed = seed;
  return split_corpus(make_planted_corpus(c).sequences, 0.25, 1, seed);
}

TrainingConfig small_hmm() {
  TrainingConfig c;
  c.n_states = 4;
  c.max_iterations = 30;
  return c;
}

ForestConfig small_forest() {
  ForestConfig c;
  c.n_estimators = 40;
  return c;
}

LabeledSequence labeled(const std::string& family, std::vector<Symbol> symbols) {
  return {family + "/x", family, std::move(symbols), 0};
}

}  // namespace

TEST_SUITE("family HMMs") {
  TEST_CASE("one family with one sequence equals a direct fit") {
    const std::vector<Symbol> obs{0, 1, 2, 1, 0, 2, 2, 1, 0, 0, 1, 2};
    const std::vector<LabeledSequence> train{labeled("a", obs)};
    const TrainingConfig cfg = small_hmm();
    const FamilyModels fm = train_family_hmms({"a"}, train, 3, cfg, 0);
    REQUIRE(fm.size() == 1);
    CHECK(fm.models[0] == baum_welch(obs, 3, cfg).model);
  }

  TEST_CASE("sequences are concatenated and capped") {
    const std::vector<LabeledSequence> train{labeled("a", {0, 1, 2, 0}), labeled("b", {2, 2, 1}),
                                             labeled("a", {1, 1, 0, 2})};
    const TrainingConfig cfg = small_hmm();
    const FamilyModels capped = train_family_hmms({"a", "b"}, train, 3, cfg, 6);
    const std::vector<Symbol> first_six{0, 1, 2, 0, 1, 1};
    CHECK(capped.models[0] == baum_welch(first_six, 3, cfg).model);
    CHECK(capped.models[1].n_states == 4);

    const FamilyModels full = train_family_hmms({"a", "b"}, train, 3, cfg, 0);
    const std::vector<Symbol> all_a{0, 1, 2, 0, 1, 1, 0, 2};
    CHECK(full.models[0] == baum_welch(all_a, 3, cfg).model);
  }

  TEST_CASE("a family without samples is named in the error") {
    const std::vector<LabeledSequence> train{labeled("a", {0, 1, 0})};
    try {
      train_family_hmms({"a", "ghost"}, train, 2, small_hmm(), 0);
      FAIL("expected training_error");
    } catch (const training_error& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
}

TEST_SUITE("hidden-state features") {
  TEST_CASE("layout, range and determinism") {
    std::mt19937_64 gen(2);
    FamilyModels fm{{"a", "b", "c"},
                    {oracle::random_model(3, 5, gen), oracle::random_model(3, 5, gen), oracle::random_model(3, 5, gen)}};
    const FamilyModels before = fm;
    const auto obs = oracle::random_obs(40, 5, gen);
    const HiddenStateFeatures f = extract_features(fm, obs, 25);
    CHECK(f.values.size() == 75);
    CHECK(f.family_order == fm.families);
    for (double v : f.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 2.0);
      CHECK(v == std::floor(v));
    }
    // block k is the decode of the prefix under model k
    const auto decoded = posterior_decode(fm.models[1], std::span<const Symbol>(obs).first(25));
    for (std::size_t t = 0; t < 25; ++t) CHECK(f.values[25 + t] == decoded[t]);
    CHECK(extract_features(fm, obs, 25).values == f.values);
    CHECK(fm == before);
  }

  TEST_CASE("single-state models give all-zero features") {
    const HmmModel one = oracle::make_model({{1.0}}, {{0.5, 0.5}}, {1.0});
    const FamilyModels fm{{"a", "b"}, {one, one}};
    const std::vector<Symbol> obs{0, 1, 1, 0};
    CHECK(extract_features(fm, obs, 4).values == std::vector<double>(8, 0.0));
  }

  TEST_CASE("length boundary") {
    const FamilyModels fm{{"a"}, {init_model(2, 3, 1, 0.01)}};
    const std::vector<Symbol> obs{0, 1, 2};
    CHECK(extract_features(fm, obs, 3).values.size() == 3);
    CHECK_THROWS_AS(extract_features(fm, obs, 4), short_sample_error);
    CHECK_THROWS_AS(extract_features(fm, obs, 0), argument_error);
  }
}

TEST_SUITE("scaler") {
  TEST_CASE("worked example") {
    const StandardScaler s = fit_scaler(std::vector<std::vector<double>>{{0, 2}, {2, 2}});
    CHECK(s.means == std::vector<double>{1, 2});
    CHECK(s.stds == std::vector<double>{1, 1});
    const std::vector<double> x{3, 2};
    CHECK(transform(s, x) == std::vector<double>{2, 0});
  }

  TEST_CASE("identical vectors become zero") {
    const std::vector<std::vector<double>> rows(4, {3.0, -1.0, 7.0});
    const StandardScaler s = fit_scaler(rows);
    for (const auto& r : rows) CHECK(transform(s, r) == std::vector<double>(3, 0.0));
  }

  TEST_CASE("training vectors are standardized and order is preserved") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-5, 5);
    std::vector<std::vector<double>> rows(30, std::vector<double>(4));
    for (auto& r : rows) {
      for (double& v : r) v = u(gen);
    }
    const StandardScaler s = fit_scaler(rows);
    for (std::size_t k = 0; k < 4; ++k) {
      double mean = 0.0;
      double sq = 0.0;
      for (const auto& r : rows) mean += transform(s, r)[k] / 30.0;
      for (const auto& r : rows) sq += std::pow(transform(s, r)[k] - mean, 2) / 30.0;
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::vector<double> lo{0, 0, 0, 0};
    std::vector<double> hi{0, 1, 0, 0};
    CHECK(transform(s, lo)[1] < transform(s, hi)[1]);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(fit_scaler(std::vector<std::vector<double>>{{1.0}}), fit_error);
    const StandardScaler s = fit_scaler(std::vector<std::vector<double>>{{0, 2}, {2, 2}});
    CHECK_THROWS_AS(transform(s, std::vector<double>{1.0}), argument_error);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("end to end on a well-separated planted corpus") {
    const CorpusSplit split = planted_split(2, 16, 0.95);
    const PipelineModel model = train_pipeline(split, small_hmm(), small_forest(), 60);
    CHECK(model.families() == std::vector<std::string>{"family_00", "family_01"});
    CHECK(model.scaler.size() == 120);
    CHECK(model.forest.n_features == 120);
    const EvaluationReport r = evaluate(ClassifierModel{model}, split.test);
    CHECK(r.accuracy >= 0.9);

    for (const auto& s : split.test) {
      const Classification a = classify(model, s.symbols);
      const Classification b = classify(model, s.symbols);
      CHECK(a.family == b.family);
      CHECK(a.votes == b.votes);
      std::size_t votes = 0;
      for (auto v : a.votes) votes += v;
      CHECK(votes == 40);
    }
  }

  TEST_CASE("same inputs, same model") {
    const CorpusSplit split = planted_split(2, 10, 0.8, 5);
    const PipelineModel a = train_pipeline(split, small_hmm(), small_forest(), 40);
    const PipelineModel b = train_pipeline(split, small_hmm(), small_forest(), 40);
    CHECK(dump(to_json(a)) == dump(to_json(b)));
  }

  TEST_CASE("parallel and sequential training agree") {
    const CorpusSplit split = planted_split(3, 8, 0.8, 9);
    const PipelineModel a = train_pipeline(split, small_hmm(), small_forest(), 40);
    ::setenv("HMMRF_THREADS", "0", 1);
    const PipelineModel b = train_pipeline(split, small_hmm(), small_forest(), 40);
    ::unsetenv("HMMRF_THREADS");
    CHECK(dump(to_json(a)) == dump(to_json(b)));
  }

  TEST_CASE("classification boundaries") {
    const CorpusSplit split = planted_split(2, 10, 0.9, 3);
    const PipelineModel model = train_pipeline(split, small_hmm(), small_forest(), 50);
    const auto& probe = split.test.front().symbols;
    CHECK_NOTHROW(classify(model, std::span<const Symbol>(probe).first(50)));
    CHECK_THROWS_AS(classify(model, std::span<const Symbol>(probe).first(49)), short_sample_error);
  }

  TEST_CASE("a training sample shorter than L names the sample") {
    CorpusSplit split = planted_split(2, 10, 0.9, 3);
    split.train[1].symbols.resize(10);
    try {
      train_pipeline(split, small_hmm(), small_forest(), 50);
      FAIL("expected short_sample_error");
    } catch (const short_sample_error& e) {
      CHECK(std::string(e.what()).find(split.train[1].sample_id) != std::string::npos);
    }
  }

  TEST_CASE("needs two families") {
    CorpusSplit split = planted_split(2, 10, 0.9, 3);
    std::erase_if(split.train, [](const LabeledSequence& s) { return s.family == "family_01"; });
    CHECK_THROWS_AS(train_pipeline(split, small_hmm(), small_forest(), 50), training_error);
  }
}

TEST_SUITE("raw baseline") {
  TEST_CASE("features are the symbol prefix") {
    const std::vector<Symbol> obs{4, 0, 2, 9};
    CHECK(raw_features(obs, 3) == std::vector<double>{4, 0, 2});
    CHECK_THROWS_AS(raw_features(obs, 5), short_sample_error);
  }

  TEST_CASE("trains and beats chance on a separated corpus") {
    const CorpusSplit split = planted_split(2, 16, 0.95);
    const RawBaselineModel model = train_raw_baseline(split, small_forest(), 60);
    CHECK(model.forest.n_features == 60);
    CHECK(evaluate(ClassifierModel{model}, split.test).accuracy > 0.6);
  }
}
