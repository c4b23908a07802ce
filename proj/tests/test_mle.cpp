#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "topicident/mixing.hpp"
#include "topicident/mle.hpp"
#include "topicident/model.hpp"
#include "topicident/rng.hpp"

using namespace topicident;

namespace {

Eigen::VectorXd vec_from(std::initializer_list<double> entries) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(entries.size()));
  int i = 0;
  for (double x : entries) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("projection onto the floored simplex") {
  SUBCASE("feasible inputs are fixed points, bitwise") {
    const Eigen::VectorXd x = vec_from({0.5, 0.3, 0.2});
    CHECK(project_row(x, 0.1) == x);
    CHECK(project_row(x, 0.0) == x);
  }
  SUBCASE("worked example at zero floor") {
    const Eigen::VectorXd out = project_row(vec_from({0.9, 0.2, -0.1}), 0.0);
    CHECK(out[0] == doctest::Approx(0.85).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(out[2] == 0.0);
  }
  SUBCASE("outputs are feasible and idempotent on random inputs") {
    std::mt19937_64 rng = make_engine(401);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const int v = 2 + static_cast<int>(rng() % 7);
      const double c0 = (t % 3 == 0) ? 0.0 : 0.5 / (v + 2);
      Eigen::VectorXd raw(v);
      for (int i = 0; i < v; ++i) raw[i] = 2.0 * normal(rng);
      const Eigen::VectorXd out = project_row(raw, c0);
      CHECK(out.minCoeff() >= c0);
      CHECK(std::abs(out.sum() - 1.0) <= 1e-12);
      CHECK((project_row(out, c0) - out).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
  SUBCASE("matches the exhaustive active-set oracle") {
    std::mt19937_64 rng = make_engine(409);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
      const int v = 3 + static_cast<int>(rng() % 4);
      const double c0 = (t % 2 == 0) ? 0.0 : 0.8 / (v * 2);
      Eigen::VectorXd raw(v);
      for (int i = 0; i < v; ++i) raw[i] = 1.5 * normal(rng);
      const Eigen::VectorXd fast = project_row(raw, c0);
      const Eigen::VectorXd slow = oracles::qp_project(raw, c0);
      CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("floor validation") {
    CHECK_THROWS_AS(project_row(vec_from({0.5, 0.5}), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(project_row(vec_from({0.5, 0.5}), -0.01), std::invalid_argument);
    CHECK_THROWS_AS(project_row(Eigen::VectorXd(), 0.0), std::invalid_argument);
  }
}

TEST_CASE("fit option validation") {
  FitOptions options;
  options.starts = 0;
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
  options = {};
  options.max_iterations = 0;
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
  options = {};
  options.shrink = 1.0;
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
  options = {};
  options.sufficient_increase = 0.0;
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
  options = {};
  options.gradient_tolerance = 0.0;
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
  options = {};
  options.starts = 3;
  options.explicit_inits.resize(2, Eigen::MatrixXd::Zero(1, 2));
  CHECK_THROWS_AS(options.validate(), std::invalid_argument);
}

TEST_CASE("single-topic fit recovers projected empirical frequencies") {
  const Corpus corpus =
      Corpus::create(3, {{0, 1}, {0, 0}, {2, 0}, {1, 0}, {0, 2}, {0, 0}});
  const auto nu = MixingDistribution::uniform_vertex(1);
  const double c0 = 0.05;
  FitOptions options;
  options.starts = 1;  // the EM-warmed start solves the multinomial exactly
  options.seed = 3;
  options.workers = 1;
  const FitResult fit = fit_mle(corpus, 1, c0, nu, options);

  Eigen::VectorXd freq(3);
  freq << 8.0 / 12, 2.0 / 12, 2.0 / 12;
  const Eigen::VectorXd target = project_row(freq, c0);
  CHECK((fit.theta_hat.rows.row(0).transpose() - target).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(fit.converged);

  // The converged iterate satisfies the projected-gradient criterion.
  const Eigen::MatrixXd grad =
      log_likelihood_gradient(fit.theta_hat, nu, corpus) / static_cast<double>(corpus.size());
  const Eigen::VectorXd mapped =
      project_row((fit.theta_hat.rows.row(0).transpose() + grad.row(0).transpose()).eval(), c0) -
      fit.theta_hat.rows.row(0).transpose();
  CHECK(mapped.norm() <= 1e-8 + 1e-12);
}

TEST_CASE("fit output contract") {
  std::mt19937_64 rng = make_engine(419);
  const TopicMatrix truth = random_topic_matrix(4, 2, 0.0, rng, 0.05);
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
  const Corpus corpus = sample_corpus(truth, nu, 2, 200, rng);
  FitOptions options;
  options.starts = 3;
  options.max_iterations = 300;
  options.seed = 11;
  options.workers = 1;
  const double c0 = 0.02;
  const FitResult fit = fit_mle(corpus, 2, c0, nu, options);

  SUBCASE("feasible estimate, monotone trace, consistent reported objective") {
    CHECK(fit.theta_hat.rows.minCoeff() >= c0);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(fit.theta_hat.rows.row(j).sum() - 1.0) <= 1e-12);
    REQUIRE(fit.trace.size() >= 1);
    for (std::size_t i = 1; i < fit.trace.size(); ++i)
      CHECK(fit.trace[i] >= fit.trace[i - 1] - 1e-10);
    CHECK(fit.trace.back() == doctest::Approx(fit.log_likelihood).epsilon(1e-12));
    CHECK(fit.log_likelihood ==
          doctest::Approx(log_likelihood(fit.theta_hat, nu, corpus)).epsilon(1e-9));
    CHECK(fit.winner_start >= 0);
    CHECK(fit.winner_start < options.starts);
  }
  SUBCASE("deterministic regardless of worker count") {
    FitOptions wide = options;
    wide.workers = 4;
    const FitResult again = fit_mle(corpus, 2, c0, nu, options);
    const FitResult parallel = fit_mle(corpus, 2, c0, nu, wide);
    CHECK(fit.theta_hat.rows == again.theta_hat.rows);
    CHECK(fit.theta_hat.rows == parallel.theta_hat.rows);
    CHECK(fit.log_likelihood == parallel.log_likelihood);
    CHECK(fit.winner_start == parallel.winner_start);
  }
  SUBCASE("iteration budget of one leaves converged unset") {
    FitOptions strict = options;
    strict.max_iterations = 1;
    const FitResult rough = fit_mle(corpus, 2, c0, nu, strict);
    CHECK_FALSE(rough.converged);
    CHECK(rough.iterations <= 1);
    CHECK(rough.theta_hat.rows.minCoeff() >= c0);
  }
}

TEST_CASE("relabeling the initializer relabels the fit") {
  std::mt19937_64 rng = make_engine(431);
  const TopicMatrix truth = random_topic_matrix(4, 2, 0.0, rng, 0.05);
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
  const Corpus corpus = sample_corpus(truth, nu, 2, 150, rng);
  const double c0 = 0.02;

  const TopicMatrix init = random_topic_matrix(4, 2, c0, rng, 0.05);
  const std::vector<int> perm = {1, 0};

  FitOptions options;
  options.starts = 1;
  options.max_iterations = 150;
  options.seed = 5;
  options.workers = 1;
  options.explicit_inits = {init.rows};
  const FitResult base = fit_mle(corpus, 2, c0, nu, options);

  options.explicit_inits = {init.permuted(perm).rows};
  const FitResult swapped = fit_mle(corpus, 2, c0, nu, options);

  CHECK((swapped.theta_hat.rows - base.theta_hat.permuted(perm).rows)
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK(swapped.log_likelihood == doctest::Approx(base.log_likelihood).epsilon(1e-13));
}

TEST_CASE("explicit initializer shape is validated") {
  const Corpus corpus = Corpus::create(3, {{0, 1}, {2, 1}});
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
  FitOptions options;
  options.starts = 1;
  options.workers = 1;
  options.explicit_inits = {Eigen::MatrixXd::Constant(2, 2, 0.5)};  // V mismatch
  CHECK_THROWS_AS(fit_mle(corpus, 2, 0.01, nu, options), std::invalid_argument);
}

TEST_CASE("degenerate corpora are legal") {
  const Corpus corpus = Corpus::create(3, std::vector<Document>(40, Document{1, 1}));
  const auto nu = MixingDistribution::uniform_vertex(2);
  FitOptions options;
  options.starts = 2;
  options.seed = 7;
  options.workers = 1;
  options.max_iterations = 100;
  const FitResult fit = fit_mle(corpus, 2, 0.05, nu, options);
  CHECK(fit.theta_hat.rows.minCoeff() >= 0.05);
  // All mass concentrates on the observed word, up to the floor.
  CHECK(fit.theta_hat.rows(fit.theta_hat.rows.row(0)[1] > 0.5 ? 0 : 1, 1) >= 0.5);
}

TEST_CASE("recovery from a large identifiable corpus") {
  std::mt19937_64 rng = make_engine(443);
  const TopicMatrix truth = random_topic_matrix(5, 2, 0.0, rng, 0.08);
  const auto nu = MixingDistribution::uniform_vertex(2);
  const Corpus corpus = sample_corpus(truth, nu, 3, 50000, rng);
  FitOptions options;
  options.starts = 4;
  options.seed = 13;
  options.workers = 0;
  const FitResult fit = fit_mle(corpus, 2, 0.01, nu, options);
  CHECK(wasserstein_distance(fit.theta_hat, truth) <= 0.1);
}

TEST_CASE("fit validation") {
  const Corpus corpus = Corpus::create(3, {{0, 1}, {2, 1}});
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
  FitOptions options;
  options.workers = 1;
  CHECK_THROWS_AS(fit_mle(corpus, 2, 0.0, nu, options), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle(corpus, 2, 0.34, nu, options), std::invalid_argument);  // c0*V >= 1
  const auto nu3 = MixingDistribution::symmetric_dirichlet(3, 1.0);
  CHECK_THROWS_AS(fit_mle(corpus, 2, 0.01, nu3, options), std::invalid_argument);
}
