#include <doctest.h>

#include <cmath>
#include <numbers>

#include "srcsel/divergence.hpp"
#include "srcsel/error.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/models.hpp"
#include "srcsel/synth.hpp"
#include "support.hpp"

using namespace srcsel;

namespace {

GaussianScenario plain(std::size_t d, std::vector<std::vector<double>> shifts, std::size_t n, std::uint64_t seed) {
  GaussianScenario s;
  s.d = d;
  s.mean_shifts = std::move(shifts);
  s.sizes.assign(s.mean_shifts.size(), n);
  s.label_weights.assign(d, 1.0);
  s.seed = seed;
  return s;
}

double sine_accuracy(const Source& train, const Source& test) {
  const auto model = fit_scaled_logistic(train.features(), train.label_vector());
  const Eigen::VectorXd p = model.predict_proba(test.features());
  std::vector<double> scores(p.data(), p.data() + p.size());
  return accuracy_at_threshold(scores, test.labels(), 0.5);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is deterministic under a fixed seed") {
  const auto s = plain(3, {{}, {1.0, 0.0, 0.0}}, 50, 9);
  const auto a = generate_gaussian_sources(s);
  const auto b = generate_gaussian_sources(s);
  CHECK(a[1].features() == b[1].features());
  CHECK(a[1].labels() == b[1].labels());
  CHECK(a[0].id() == "S00");
  auto t = s;
  t.seed = 10;
  CHECK(generate_gaussian_sources(t)[1].features() != a[1].features());
}

TEST_CASE("exchangeable sources look alike to the domain classifier") {
  const auto sources = generate_gaussian_sources(plain(2, {{}, {}, {}}, 1000, 4));
  for (std::size_t i = 0; i + 1 < sources.size(); ++i) {
    const auto clf = fit_domain_classifier(sources[i], sources[i + 1], false, 1);
    CHECK(std::abs(score_distance(clf, sources[i]).value - 0.5) <= 0.03);
  }
}

TEST_CASE("mean shift of 2 shows up in the empirical moments") {
  const std::size_t n = 4000;
  const auto sources = generate_gaussian_sources(plain(3, {{}, {2.0, 2.0, 2.0}}, n, 12));
  const double se = std::sqrt(2.0 / static_cast<double>(n));  // unit variances, independent samples
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double diff = sources[1].features().col(c).mean() - sources[0].features().col(c).mean();
    CHECK(std::abs(diff - 2.0) <= 3.0 * se);
  }
}

TEST_CASE("covariance scale sets the per-feature variance") {
  auto s = plain(2, {{}, {}}, 5000, 3);
  s.cov_scale = {1.0, 4.0};
  const auto sources = generate_gaussian_sources(s);
  const auto& x = sources[1].features();
  const double var = (x.col(0).array() - x.col(0).mean()).square().mean();
  CHECK(var == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("flip rate 0.5 leaves no signal") {
  auto s = plain(3, {{}, {}}, 1000, 5);
  s.label_flip_rate = {0.5};
  const auto sources = generate_gaussian_sources(s);
  ExperimentConfig cfg;
  cfg.split = {5, 1, 1};
  const double a = run_experiment(sources[0], sources[1], cfg).mean_of(Metric::Auc);
  CHECK(a >= 0.45);
  CHECK(a <= 0.55);
}

TEST_CASE("groups split the group feature at normal quantiles") {
  auto s = plain(2, {{}}, 6000, 8);
  s.n_groups = 3;
  s.group_feature = 1;
  const auto src = generate_gaussian_sources(s).front();
  std::map<std::string, int> counts;
  for (const auto& g : src.groups()) ++counts[g];
  REQUIRE(counts.size() == 3);
  for (const auto& [g, c] : counts) CHECK(c / 6000.0 == doctest::Approx(1.0 / 3.0).epsilon(0.08));
  // g0 holds the lowest values of the group feature
  for (std::size_t r = 0; r < src.rows(); ++r) {
    if (src.groups()[r] == "g0") CHECK(src.features()(static_cast<Eigen::Index>(r), 1) < 0.0);
  }
}

TEST_CASE("invalid gaussian scenarios") {
  auto bad_scale = plain(2, {{}, {}}, 10, 1);
  bad_scale.cov_scale = {0.0};
  CHECK_THROWS_AS(validate(bad_scale), Error);
  auto bad_flip = plain(2, {{}, {}}, 10, 1);
  bad_flip.label_flip_rate = {1.5};
  CHECK_THROWS_AS(validate(bad_flip), Error);
  auto bad_shift = plain(2, {{1.0, 2.0, 3.0}}, 10, 1);
  CHECK_THROWS_AS(validate(bad_shift), Error);
  auto bad_weights = plain(2, {{}}, 10, 1);
  bad_weights.label_weights = {1.0};
  CHECK_THROWS_AS(validate(bad_weights), Error);
}

TEST_CASE("sine toy: A alone is learnable") {
  const auto toy = generate_sine_toy(200, 0, 0.1, 3, 500);
  CHECK(toy.train_sequence[1].rows() == 0);
  CHECK(sine_accuracy(toy.train_sequence[0], toy.test) > 0.9);
}

TEST_CASE("sine toy: adding B after A hurts on A's test distribution") {
  std::vector<double> a_only, a_plus_b;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto toy = generate_sine_toy(10, 90, 0.1, seed);
    a_only.push_back(sine_accuracy(toy.train_sequence[0], toy.test));
    a_plus_b.push_back(sine_accuracy(concat(toy.train_sequence), toy.test));
  }
  CHECK(testing::mean_of(a_plus_b) < testing::mean_of(a_only));
}

TEST_CASE("sine toy labels of A and B are complementary away from the noise band") {
  const auto exact = generate_sine_toy(300, 300, 0.0, 1);
  for (int y : exact.train_sequence[0].labels()) CHECK(y == 1);
  for (int y : exact.train_sequence[1].labels()) CHECK(y == 0);

  // With Gaussian noise each label agrees with its noiseless rule with probability
  // at least Phi(2) ~ 0.977 where |sin x| > 2 sd.
  const double sd = 0.1;
  const auto toy = generate_sine_toy(4000, 4000, sd, 2);
  for (int which = 0; which < 2; ++which) {
    const Source& s = toy.train_sequence[static_cast<std::size_t>(which)];
    int eligible = 0, agree = 0;
    for (std::size_t r = 0; r < s.rows(); ++r) {
      const double x = s.features()(static_cast<Eigen::Index>(r), 0);
      if (std::abs(std::sin(x)) <= 2 * sd) continue;
      ++eligible;
      agree += s.labels()[r] == (which == 0 ? 1 : 0);
    }
    CHECK(static_cast<double>(agree) / eligible > 0.97);
  }
}

TEST_CASE("discrete sources are one-hot with atom frequencies near the pmf") {
  DiscreteScenario sc;
  sc.support_size = 3;
  sc.source_pmfs = {{0.2, 0.5, 0.3}};
  sc.test_pmf = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  sc.sizes = {20000};
  const auto ds = generate_discrete_sources(sc, 5);
  const auto& x = ds.sources[0].features();
  CHECK((x.rowwise().sum().array() == 1.0).all());
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double freq = x.col(j).mean();
    const double p = sc.source_pmfs[0][static_cast<std::size_t>(j)];
    CHECK(std::abs(freq - p) <= 4.0 * std::sqrt(p * (1 - p) / 20000.0));
  }
  for (std::size_t r = 0; r < 50; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::Index atom = 0;
    x.row(row).maxCoeff(&atom);
    CHECK(ds.sources[0].labels()[r] == static_cast<int>(atom % 2));
  }
  CHECK(ds.test.rows() == 1000);
  CHECK(exact_kl(ds.test_pmf, ds.test_pmf) == 0.0);
}

TEST_CASE("pmf that does not sum to one is rejected") {
  DiscreteScenario sc;
  sc.support_size = 2;
  sc.source_pmfs = {{0.5, 0.49}};
  sc.test_pmf = {0.5, 0.5};
  sc.sizes = {10};
  try {
    validate(sc);
    FAIL("expected InvalidScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScenario);
  }
}

TEST_CASE("scenario files") {
  const auto sf = read_scenario_file(testing::scenario_path("hospital_suite.cfg"));
  CHECK(sf.kind == ScenarioKind::Gaussian);
  CHECK(sf.gaussian.sizes.size() == 12);
  CHECK(sf.gaussian.mean_shifts[11][1] == doctest::Approx(2.0));
  CHECK(sf.gaussian.ids.front() == "H00");
  const auto sources = generate_scenario(sf);
  CHECK(sources.size() == 12);

  const auto sine = read_scenario_file(testing::scenario_path("sine.cfg"));
  CHECK(generate_scenario(sine).back().id() == "test");
  const auto disc = read_scenario_file(testing::scenario_path("discrete.cfg"));
  CHECK(generate_scenario(disc).size() == 3);

  CHECK_THROWS_AS(scenario_from_key_values({{"kind", "gaussian"}, {"dims", "2"}}), Error);
  CHECK_THROWS_AS(scenario_from_key_values({{"kind", "weird"}}), Error);
}

TEST_CASE("zero-shift sources sit inside every estimator's null band") {
  std::map<DivergenceKind, std::vector<double>> values;
  const DivergenceKind kinds[] = {DivergenceKind::ScoreX, DivergenceKind::ScoreXY, DivergenceKind::KlRatioX,
                                  DivergenceKind::KlRatioXY, DivergenceKind::KdePcaKL};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = generate_gaussian_sources(plain(3, {{}, {}}, 600, 100 + seed));
    for (auto k : kinds) values[k].push_back(estimate_divergence(k, s[0], s[1], seed).value);
  }
  for (auto k : kinds) {
    CAPTURE(to_string(k));
    const double m = testing::mean_of(values[k]);
    if (k == DivergenceKind::ScoreX || k == DivergenceKind::ScoreXY) {
      CHECK(std::abs(m - 0.5) <= 0.05);
    } else {
      CHECK(std::abs(m) <= 0.05);
    }
  }
}

TEST_CASE("score X is non-decreasing along a mean-shift family") {
  const double shifts[] = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> means;
  for (double shift : shifts) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = generate_gaussian_sources(plain(2, {{shift, 0.0}, {}}, 500, 300 + seed));
      v.push_back(estimate_divergence(DivergenceKind::ScoreX, s[0], s[1], seed).value);
    }
    means.push_back(testing::mean_of(v));
  }
  for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] >= means[i - 1]);
}

}  // TEST_SUITE
