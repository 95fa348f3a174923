#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "hmmrf/errors.hpp"
#include "hmmrf/forest.hpp"
#include "oracles.hpp"

using namespace hmmrf;

namespace {

Dataset make_data(std::size_t n_features, const std::vector<std::vector<double>>& rows,
                  const std::vector<Label>& labels) {
  Dataset d;
  d.n_features = n_features;
  for (std::size_t r = 0; r < rows.size(); ++r) d.add(rows[r], labels[r]);
  return d;
}

Dataset random_dataset(std::mt19937_64& gen, std::size_t max_samples, std::size_t max_features) {
  const std::size_t n = 2 + gen() % (max_samples - 1);
  const std::size_t f = 1 + gen() % max_features;
  const std::size_t k = 2 + gen() % 3;
  Dataset d;
  d.n_features = f;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> row(f);
    for (double& v : row) v = static_cast<double>(gen() % 6);  // coarse values to force duplicates
    d.add(row, static_cast<Label>(gen() % k));
  }
  return d;
}

double training_accuracy(const DecisionTree& tree, const Dataset& d) {
  std::size_t ok = 0;
  for (std::size_t r = 0; r < d.size(); ++r) ok += tree.predict(d.row(r)) == d.labels[r];
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

bool has_conflicting_duplicates(const Dataset& d) {
  for (std::size_t a = 0; a < d.size(); ++a) {
    for (std::size_t b = a + 1; b < d.size(); ++b) {
      if (d.labels[a] != d.labels[b] && std::equal(d.row(a).begin(), d.row(a).end(), d.row(b).begin())) return true;
    }
  }
  return false;
}

ForestConfig single_tree_config() {
  ForestConfig c;
  c.n_estimators = 1;
  c.bootstrap = false;
  c.max_features = MaxFeatures::all;
  return c;
}

DecisionTree leaf_tree(Label label) {
  DecisionTree::Node n;
  n.label = label;
  n.class_counts = {1, 1};
  return DecisionTree({n});
}

}  // namespace

TEST_SUITE("impurity") {
  TEST_CASE("entropy examples") {
    const std::vector<double> half{0.5, 0.5};
    const std::vector<double> pure{1.0};
    const std::vector<double> pure_with_zero{1.0, 0.0};
    CHECK(entropy(half) == doctest::Approx(1.0));
    CHECK(entropy(pure) == 0.0);
    CHECK(entropy(pure_with_zero) == 0.0);
    const std::vector<double> quarter(4, 0.25);
    CHECK(entropy(quarter) == doctest::Approx(2.0));
  }

  TEST_CASE("gini examples") {
    const std::vector<double> skew{0.9, 0.1};
    const std::vector<double> pure{1.0};
    const std::vector<double> half{0.5, 0.5};
    CHECK(gini(skew) == doctest::Approx(0.18));
    CHECK(gini(pure) == 0.0);
    CHECK(gini(half) == doctest::Approx(0.5));
  }

  TEST_CASE("log_loss is an alias of entropy") {
    const std::vector<double> p{0.2, 0.3, 0.5};
    CHECK(impurity(p, SplitCriterion::log_loss) == impurity(p, SplitCriterion::entropy));
  }

  TEST_CASE("invalid distributions") {
    const std::vector<double> negative{1.2, -0.2};
    const std::vector<double> short_mass{0.3, 0.3};
    CHECK_THROWS_AS(entropy(negative), argument_error);
    CHECK_THROWS_AS(gini(short_mass), argument_error);
  }

  TEST_CASE("information gain examples") {
    const std::vector<Label> parent{0, 0, 1, 1};
    const std::vector<Label> l00{0, 0};
    const std::vector<Label> l11{1, 1};
    const std::vector<Label> l01{0, 1};
    CHECK(information_gain(parent, l00, l11, SplitCriterion::entropy) == doctest::Approx(1.0));
    CHECK(information_gain(parent, l01, l01, SplitCriterion::entropy) == doctest::Approx(0.0));

    const std::vector<Label> p3{0, 0, 0, 1};
    const std::vector<Label> a{0, 0};
    const std::vector<Label> b{0, 1};
    CHECK(information_gain(p3, a, b, SplitCriterion::gini) == doctest::Approx(0.375 - 0.25));
  }

  TEST_CASE("gain is never negative") {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<Label> parent(2 + gen() % 12);
      for (auto& l : parent) l = static_cast<Label>(gen() % 3);
      const std::size_t cut = 1 + gen() % (parent.size() - 1);
      const std::vector<Label> left(parent.begin(), parent.begin() + static_cast<std::ptrdiff_t>(cut));
      const std::vector<Label> right(parent.begin() + static_cast<std::ptrdiff_t>(cut), parent.end());
      for (auto c : {SplitCriterion::gini, SplitCriterion::entropy}) {
        CHECK(information_gain(parent, left, right, c) >= -1e-12);
      }
    }
  }

  TEST_CASE("errors") {
    const std::vector<Label> none;
    const std::vector<Label> one{0};
    CHECK_THROWS_AS(information_gain(none, none, none, SplitCriterion::gini), argument_error);
    CHECK_THROWS_AS(information_gain(one, one, one, SplitCriterion::gini), argument_error);
  }
}

TEST_SUITE("best_split") {
  TEST_CASE("separable one-dimensional data") {
    const Dataset d = make_data(1, {{1}, {2}, {10}, {11}}, {0, 0, 1, 1});
    const std::vector<std::size_t> f{0};
    const auto s = best_split(d, f, SplitCriterion::entropy);
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->threshold == doctest::Approx(6.0));
    CHECK(s->gain == doctest::Approx(1.0));
    const auto g = best_split(d, f, SplitCriterion::gini);
    REQUIRE(g);
    CHECK(g->gain == doctest::Approx(0.5));
  }

  TEST_CASE("pure node has no split") {
    const Dataset d = make_data(1, {{1}, {2}, {3}}, {1, 1, 1});
    const std::vector<std::size_t> f{0};
    CHECK_FALSE(best_split(d, f, SplitCriterion::gini));
  }

  TEST_CASE("constant feature has no candidate thresholds") {
    const Dataset d = make_data(2, {{5, 1}, {5, 2}, {5, 3}}, {0, 1, 0});
    const std::vector<std::size_t> only_constant{0};
    CHECK_FALSE(best_split(d, only_constant, SplitCriterion::gini));
  }

  TEST_CASE("ties go to the lowest feature index") {
    const Dataset d = make_data(2, {{0, 0}, {1, 1}}, {0, 1});
    const std::vector<std::size_t> f{1, 0};
    const auto s = best_split(d, f, SplitCriterion::gini);
    REQUIRE(s);
    CHECK(s->feature == 0);
  }

  TEST_CASE("matches exhaustive search on random datasets") {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 150; ++rep) {
      const Dataset d = random_dataset(gen, 20, 5);
      std::vector<std::size_t> features(d.n_features);
      std::iota(features.begin(), features.end(), 0);
      for (auto c : {SplitCriterion::gini, SplitCriterion::entropy}) {
        std::vector<double> gains;
        const auto expected = oracle::best_split(d, features, c, &gains);
        const auto actual = best_split(d, features, c);
        REQUIRE(expected.has_value() == actual.has_value());
        if (expected) {
          CHECK(actual->feature == expected->feature);
          CHECK(actual->threshold == expected->threshold);
          CHECK(actual->gain == doctest::Approx(expected->gain).epsilon(1e-12));
        }
        for (double g : gains) CHECK(g >= -1e-12);
      }
    }
  }
}

TEST_SUITE("decision tree") {
  TEST_CASE("unrestricted tree memorizes consistent data") {
    std::mt19937_64 gen(13);
    int checked = 0;
    for (int rep = 0; rep < 150; ++rep) {
      const Dataset d = random_dataset(gen, 20, 5);
      if (has_conflicting_duplicates(d)) continue;
      ++checked;
      std::vector<std::size_t> rows(d.size());
      std::iota(rows.begin(), rows.end(), 0);
      Rng rng(1);
      const DecisionTree tree = train_tree(d, rows, single_tree_config(), rng);
      CHECK(training_accuracy(tree, d) == 1.0);
    }
    CHECK(checked > 30);
  }

  TEST_CASE("xor needs a zero-gain first split") {
    const Dataset d = make_data(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    Rng rng(1);
    const DecisionTree full = train_tree(d, rows, single_tree_config(), rng);
    CHECK(training_accuracy(full, d) == 1.0);

    ForestConfig stump = single_tree_config();
    stump.max_depth = 1;
    const DecisionTree shallow = train_tree(d, rows, stump, rng);
    CHECK(shallow.depth() <= 1);
    CHECK(training_accuracy(shallow, d) <= 0.75);
  }

  TEST_CASE("conflicting duplicates give a majority leaf") {
    const Dataset d = make_data(1, {{1}, {1}, {1}}, {0, 1, 1});
    const std::vector<std::size_t> rows{0, 1, 2};
    Rng rng(1);
    const DecisionTree tree = train_tree(d, rows, single_tree_config(), rng);
    CHECK(tree.nodes().size() == 1);
    CHECK(tree.predict(d.row(0)) == 1);
  }

  TEST_CASE("min_samples_split and max_depth bound the tree") {
    std::mt19937_64 gen(19);
    Dataset d;
    d.n_features = 3;
    for (int r = 0; r < 60; ++r) {
      const std::vector<double> row{static_cast<double>(gen() % 100), static_cast<double>(gen() % 100),
                                    static_cast<double>(gen() % 100)};
      d.add(row, static_cast<Label>(gen() % 3));
    }
    std::vector<std::size_t> rows(d.size());
    std::iota(rows.begin(), rows.end(), 0);
    ForestConfig c = single_tree_config();
    c.max_depth = 3;
    Rng rng(2);
    CHECK(train_tree(d, rows, c, rng).depth() <= 3);

    c.max_depth.reset();
    c.min_samples_split = 61;
    CHECK(train_tree(d, rows, c, rng).nodes().size() == 1);
  }
}

TEST_SUITE("forest") {
  TEST_CASE("features per node") {
    CHECK(features_per_node(MaxFeatures::sqrt, 10) == 4);
    CHECK(features_per_node(MaxFeatures::sqrt, 16) == 4);
    CHECK(features_per_node(MaxFeatures::log2, 1) == 1);
    CHECK(features_per_node(MaxFeatures::log2, 2) == 1);
    CHECK(features_per_node(MaxFeatures::log2, 1000) == 10);
    CHECK(features_per_node(MaxFeatures::all, 7) == 7);
  }

  TEST_CASE("a single unbootstrapped tree on all features equals a plain tree") {
    std::mt19937_64 gen(43);
    const Dataset d = random_dataset(gen, 20, 4);
    Dataset two_class = d;
    two_class.labels[0] = 0;
    two_class.labels[1] = 1;
    two_class.n_classes = std::max<std::size_t>(two_class.n_classes, 2);
    const ForestModel f = train_forest(two_class, single_tree_config());
    std::vector<std::size_t> rows(two_class.size());
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(derive_seed(42, 0));
    const DecisionTree tree = train_tree(two_class, rows, single_tree_config(), rng);
    REQUIRE(f.trees.size() == 1);
    CHECK(f.trees[0] == tree);
  }

  TEST_CASE("majority vote with lowest-index ties") {
    ForestModel m;
    m.n_classes = 2;
    m.n_features = 1;
    m.trees = {leaf_tree(0), leaf_tree(0), leaf_tree(1)};
    const std::vector<double> x{0.0};
    Prediction p = predict(m, x);
    CHECK(p.label == 0);
    CHECK(p.votes == std::vector<std::size_t>{2, 1});

    m.trees = {leaf_tree(1), leaf_tree(0)};
    CHECK(predict(m, x).label == 0);
    CHECK_THROWS_AS(predict(m, std::vector<double>{0.0, 1.0}), argument_error);
  }

  TEST_CASE("deterministic for a fixed seed and independent of threads") {
    std::mt19937_64 gen(47);
    Dataset d;
    d.n_features = 6;
    for (int r = 0; r < 80; ++r) {
      std::vector<double> row(6);
      for (double& v : row) v = static_cast<double>(gen() % 50);
      d.add(row, static_cast<Label>(r % 3));
    }
    ForestConfig c;
    c.n_estimators = 25;
    const ForestModel a = train_forest(d, c);
    const ForestModel b = train_forest(d, c);
    CHECK(a == b);

    ::setenv("HMMRF_THREADS", "0", 1);
    const ForestModel sequential = train_forest(d, c);
    ::unsetenv("HMMRF_THREADS");
    CHECK(a == sequential);

    c.seed = 7;
    CHECK_FALSE(train_forest(d, c) == a);
  }

  TEST_CASE("entropy and log_loss grow identical forests") {
    std::mt19937_64 gen(53);
    Dataset d;
    d.n_features = 4;
    for (int r = 0; r < 40; ++r) {
      std::vector<double> row(4);
      for (double& v : row) v = static_cast<double>(gen() % 9);
      d.add(row, static_cast<Label>(gen() % 2));
    }
    ForestConfig c;
    c.n_estimators = 10;
    c.criterion = SplitCriterion::entropy;
    ForestModel e = train_forest(d, c);
    c.criterion = SplitCriterion::log_loss;
    ForestModel l = train_forest(d, c);
    CHECK(e.trees == l.trees);
  }

  TEST_CASE("errors") {
    const Dataset one_class = make_data(1, {{1}, {2}}, {0, 0});
    CHECK_THROWS_AS(train_forest(one_class, ForestConfig{}), training_error);
    const Dataset one_sample = make_data(1, {{1}}, {0});
    CHECK_THROWS_AS(train_forest(one_sample, ForestConfig{}), training_error);
    ForestConfig bad;
    bad.n_estimators = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    CHECK_THROWS_AS(parse_criterion("variance"), config_error);
    CHECK(parse_max_features("None") == MaxFeatures::all);
    CHECK(parse_criterion("log_loss") == SplitCriterion::log_loss);
  }
}
