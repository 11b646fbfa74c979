#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "matrix_helpers.hpp"
#include "xferlag/error.hpp"
#include "xferlag/validation.hpp"

using namespace xferlag;
using testutil::iota;
using testutil::numeric_matrix;

TEST_CASE("rmse") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) ==
        doctest::Approx(3.5355339).epsilon(1e-7));
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == std::sqrt(12.5));
  CHECK(rmse(std::vector<double>{4, 0, 1}, std::vector<double>{0, 3, 7}) ==
        rmse(std::vector<double>{1, 4, 0}, std::vector<double>{7, 0, 3}));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidArgument);
}

TEST_CASE("hyperparameter sampling") {
  SearchSpace s;
  Rng a(3), b(3);
  for (int i = 0; i < 10000; ++i) {
    const auto p = sample_hyperparams(s, a);
    REQUIRE(p == sample_hyperparams(s, b));
    REQUIRE(p.learning_rate >= s.learning_rate_min);
    REQUIRE(p.learning_rate <= s.learning_rate_max);
    REQUIRE(p.n_estimators >= s.n_estimators_min);
    REQUIRE(p.n_estimators <= s.n_estimators_max);
    REQUIRE(p.max_depth >= s.max_depth_min);
    REQUIRE(p.max_depth <= s.max_depth_max);
    REQUIRE(p.min_samples_split >= s.min_samples_split_min);
    REQUIRE(p.min_samples_split <= s.min_samples_split_max);
    REQUIRE(p.min_samples_leaf >= s.min_samples_leaf_min);
    REQUIRE(p.min_samples_leaf <= std::min(s.min_samples_leaf_max, p.min_samples_split));
    REQUIRE(p.max_features >= s.max_features_min);
    REQUIRE(p.max_features <= s.max_features_max);
    REQUIRE(p.subsample >= s.subsample_min);
    REQUIRE(p.subsample <= s.subsample_max);
  }
  SearchSpace fixed;
  fixed.learning_rate_min = fixed.learning_rate_max = 0.1;
  fixed.n_estimators_min = fixed.n_estimators_max = 600;
  fixed.max_depth_min = fixed.max_depth_max = 11;
  fixed.min_samples_split_min = fixed.min_samples_split_max = 700;
  fixed.min_samples_leaf_min = fixed.min_samples_leaf_max = 10;
  fixed.max_features_min = fixed.max_features_max = 4.12;
  fixed.subsample_min = fixed.subsample_max = 1.0;
  Rng r(9);
  for (int i = 0; i < 20; ++i) {
    const auto p = sample_hyperparams(fixed, r);
    CHECK(p.learning_rate == doctest::Approx(0.1));
    CHECK(p.n_estimators == 600);
    CHECK(p.max_depth == 11);
    CHECK(p.min_samples_split == 700);
    CHECK(p.min_samples_leaf == 10);
    CHECK(p.max_features == 4.12);
  }
  SearchSpace empty;
  empty.max_depth_min = 5;
  empty.max_depth_max = 4;
  CHECK_THROWS_AS(validate(empty), InvalidArgument);
}

TEST_CASE("fold placement") {
  CvConfig c;
  c.k = 5;
  c.train_width = 80;
  c.test_width = 20;
  c.train_size = 80;
  c.test_size = 10;
  Rng rng(1);
  const auto folds = make_folds(100, c, rng);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    CHECK(f.region_start == 0);
    CHECK(f.train_rows == iota(80));
    CHECK(f.test_rows.size() == 10);
  }
  c.train_width = 90;
  CHECK_THROWS_AS(make_folds(100, c, rng), InvalidArgument);
  c.train_width = 50;
  c.train_size = 51;
  CHECK_THROWS_AS(make_folds(100, c, rng), InvalidArgument);
}

TEST_CASE("every fold trains strictly before it tests") {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 1000; ++trial) {
    CvConfig c;
    const std::size_t n = 50 + g() % 3000;
    c.k = 1 + g() % 6;
    c.train_width = 1 + g() % (n - 1);
    c.test_width = 1 + g() % (n - c.train_width);
    c.train_size = 1 + g() % c.train_width;
    c.test_size = 1 + g() % c.test_width;
    c.seed = g();
    Rng rng(c.seed);
    const auto folds = make_folds(n, c, rng);
    REQUIRE(folds.size() == c.k);
    for (const auto& f : folds) {
      REQUIRE(f.train_rows.size() == c.train_size);
      REQUIRE(f.test_rows.size() == c.test_size);
      REQUIRE(f.train_rows.back() < f.test_rows.front());
      REQUIRE(f.train_rows.front() >= f.region_start);
      REQUIRE(f.test_rows.back() < f.region_start + c.train_width + c.test_width);
      REQUIRE(std::set<std::size_t>(f.train_rows.begin(), f.train_rows.end()).size() == c.train_size);
      REQUIRE(std::is_sorted(f.test_rows.begin(), f.test_rows.end()));
    }
  }
}

namespace {

struct Planted {
  FeatureMatrix x;
  std::vector<double> y;
};

Planted planted(std::size_t n) {
  std::mt19937_64 g(5);
  std::vector<double> v;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(g() % 1000) / 100.0;
    const double b = static_cast<double>(g() % 1000) / 100.0;
    v.push_back(a);
    v.push_back(b);
    y.push_back(a > 5.0 ? 30.0 + (b > 2.0 ? 10.0 : 0.0) : 5.0);
  }
  return {numeric_matrix(n, 2, v), y};
}

}  // namespace

TEST_CASE("a single candidate is returned whatever its score") {
  auto d = planted(600);
  CvConfig c;
  c.num_params = 1;
  c.k = 2;
  c.train_width = 300;
  c.test_width = 100;
  c.train_size = 200;
  c.test_size = 50;
  const auto r = nested_cv(d.x, d.y, c, ModelFamily::Gbt, SearchSpace{});
  CHECK(r.candidates.size() == 1);
  CHECK(r.best_index == 0);
  CHECK(r.best_params == r.candidates[0].params);
  CHECK(r.candidates[0].fold_rmse.size() == 2);
}

TEST_CASE("the generating model wins over a crippled one") {
  auto d = planted(1500);
  CvConfig c;
  c.k = 3;
  c.train_width = 800;
  c.test_width = 200;
  c.train_size = 600;
  c.test_size = 150;
  c.seed = 8;
  HyperParams weak;
  weak.n_estimators = 1;
  weak.max_depth = 1;
  weak.learning_rate = 0.01;
  HyperParams truth;
  truth.n_estimators = 1;
  truth.learning_rate = 1.0;
  truth.max_depth = 2;
  const std::vector<HyperParams> cands = {weak, truth};
  const auto r = evaluate_candidates(d.x, d.y, c, ModelFamily::Gbt, cands);
  CHECK(r.best_index == 1);
  CHECK(r.candidates[1].mean_rmse < 1e-9);
  // Ties go to the earlier candidate: a constant target scores exactly 0 everywhere.
  const std::vector<double> flat(d.y.size(), 7.0);
  const std::vector<HyperParams> same = {weak, truth};
  const auto tie = evaluate_candidates(d.x, flat, c, ModelFamily::Gbt, same);
  CHECK(tie.candidates[0].mean_rmse == 0.0);
  CHECK(tie.candidates[1].mean_rmse == 0.0);
  CHECK(tie.best_index == 0);
}

TEST_CASE("CV is deterministic and serializes") {
  auto d = planted(800);
  CvConfig c;
  c.num_params = 3;
  c.k = 2;
  c.train_width = 400;
  c.test_width = 100;
  c.train_size = 300;
  c.test_size = 80;
  c.seed = 21;
  SearchSpace s;
  s.n_estimators_max = 60;
  const auto a = nested_cv(d.x, d.y, c, ModelFamily::Rf, s);
  const auto b = nested_cv(d.x, d.y, c, ModelFamily::Rf, s);
  CHECK(a.best_params == b.best_params);
  CHECK(cv_result_to_json(a, c, ModelFamily::Rf) == cv_result_to_json(b, c, ModelFamily::Rf));
  const auto back = cv_result_from_json(cv_result_to_json(a, c, ModelFamily::Rf));
  CHECK(back.best_index == a.best_index);
  CHECK(back.best_params == a.best_params);
  CHECK(params_from_json_text(cv_result_to_json(a, c, ModelFamily::Rf)) == a.best_params);
  CHECK(params_from_json_text(params_to_json_text(a.best_params)) == a.best_params);
}

TEST_CASE("holdout split") {
  HoldoutConfig h;
  const auto s = holdout_split(10, h);
  CHECK(s.train_rows == iota(9));
  CHECK(s.test_rows == std::vector<std::size_t>{9});

  h.train_subset = 30;
  h.test_subset = 5;
  h.seed = 3;
  const auto a = holdout_split(100, h);
  const auto b = holdout_split(100, h);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.test_rows == b.test_rows);
  CHECK(a.train_rows.size() == 30);
  CHECK(a.train_rows.back() < 90);
  CHECK(a.test_rows.front() >= 90);
  h.test_subset = 11;
  CHECK_THROWS_AS(holdout_split(100, h), InvalidArgument);
}

TEST_CASE("holdout with a perfect model scores zero and clamps") {
  auto d = planted(500);
  HyperParams truth;
  truth.n_estimators = 1;
  truth.learning_rate = 1.0;
  truth.max_depth = 2;
  CHECK(holdout_eval(d.x, d.y, HoldoutConfig{}, truth, ModelFamily::Gbt).rmse < 1e-9);

  std::vector<double> neg;
  for (double v : d.y) neg.push_back(-v);
  const auto r = holdout_eval(d.x, neg, HoldoutConfig{}, HyperParams{}, ModelFamily::Gbt);
  for (double p : r.predicted) CHECK(p >= 0.0);
  // All predictions are 0, so the error is the root mean square of the targets.
  double s = 0;
  for (double a : r.actual) s += a * a;
  CHECK(r.rmse == doctest::Approx(std::sqrt(s / static_cast<double>(r.actual.size()))));
}
