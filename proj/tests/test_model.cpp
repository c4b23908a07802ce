#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "topicident/errors.hpp"
#include "topicident/mixing.hpp"
#include "topicident/model.hpp"
#include "topicident/rng.hpp"

using namespace topicident;

namespace {

TopicMatrix matrix_from(std::initializer_list<std::initializer_list<double>> rows,
                        double c0 = 0.0) {
  const int k = static_cast<int>(rows.size());
  const int v = static_cast<int>(rows.begin()->size());
  Eigen::MatrixXd m(k, v);
  int j = 0;
  for (const auto& row : rows) {
    int w = 0;
    for (double x : row) m(j, w++) = x;
    ++j;
  }
  return TopicMatrix::create(std::move(m), c0);
}

// The running two-vertex example: theta1=(0.6,0.4), theta2=(0.3,0.7).
TopicMatrix two_vertex_example() { return matrix_from({{0.6, 0.4}, {0.3, 0.7}}); }

}  // namespace

TEST_CASE("topic matrix validation") {
  CHECK_THROWS_AS(matrix_from({{0.5, 0.4}}), std::invalid_argument);   // row sum
  CHECK_THROWS_AS(matrix_from({{0.6, 0.4}}, 0.5), std::invalid_argument);  // floor breach
  CHECK_THROWS_AS(matrix_from({{0.6, 0.4}}, 0.6), std::invalid_argument);  // c0*V >= 1
  CHECK_THROWS_AS(matrix_from({{0.6, 0.4}}, -0.1), std::invalid_argument);
  const TopicMatrix ok = matrix_from({{0.6, 0.4}}, 0.1);
  CHECK(ok.topic_count() == 1);
  CHECK(ok.vocab_size() == 2);
}

TEST_CASE("row permutation reorders topics") {
  const TopicMatrix theta = two_vertex_example();
  const std::vector<int> perm = {1, 0};
  const TopicMatrix swapped = theta.permuted(perm);
  CHECK(swapped.rows(0, 0) == 0.3);
  CHECK(swapped.rows(1, 0) == 0.6);
  const std::vector<int> bad = {0, 0};
  CHECK_THROWS_AS(theta.permuted(bad), std::invalid_argument);
}

TEST_CASE("likelihood closed cases") {
  SUBCASE("single topic is a plain product") {
    const TopicMatrix theta = matrix_from({{0.2, 0.3, 0.5}});
    const auto nu = MixingDistribution::uniform_vertex(1);
    CHECK(likelihood(theta, nu, {0, 2, 2}) ==
          doctest::Approx(0.2 * 0.5 * 0.5).epsilon(1e-14));
  }
  SUBCASE("two-vertex mixture enumerates both corners") {
    const TopicMatrix theta = two_vertex_example();
    const auto nu = MixingDistribution::uniform_vertex(2);
    CHECK(likelihood(theta, nu, {0, 0}) == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(likelihood(theta, nu, {1, 1}) == doctest::Approx(0.325).epsilon(1e-14));
  }
  SUBCASE("uniform topics give V^-m regardless of mixing") {
    const TopicMatrix theta = matrix_from({{0.25, 0.25, 0.25, 0.25},
                                           {0.25, 0.25, 0.25, 0.25}});
    for (const auto& nu : {MixingDistribution::uniform_vertex(2),
                           MixingDistribution::symmetric_dirichlet(2, 0.8)}) {
      CHECK(likelihood(theta, nu, {0, 3, 1}) ==
            doctest::Approx(std::pow(0.25, 3)).epsilon(1e-13));
    }
  }
}

TEST_CASE("likelihood matches Monte Carlo integration over the mixing weights") {
  std::mt19937_64 rng = make_engine(101);
  const TopicMatrix theta = random_topic_matrix(3, 2, 0.0, rng, 0.05);
  const double alpha = 1.5;
  const auto nu = MixingDistribution::symmetric_dirichlet(2, alpha);
  const Document doc = {0, 2, 1};
  const auto mc = oracles::mc_likelihood_dirichlet(theta, alpha, doc, 200000, rng);
  CHECK(std::abs(mc.mean - likelihood(theta, nu, doc)) <= 5.0 * mc.standard_error);
}

TEST_CASE("likelihood never falls below the floor power") {
  std::mt19937_64 rng = make_engine(103);
  const double c0 = 0.05;
  const auto nu = MixingDistribution::symmetric_dirichlet(3, 1.0);
  for (int t = 0; t < 20; ++t) {
    const TopicMatrix theta = random_topic_matrix(4, 3, c0, rng);
    const Document doc = {static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)};
    CHECK(likelihood(theta, nu, doc) >= std::pow(c0, 2) - 1e-15);
  }
}

TEST_CASE("likelihood is exactly invariant under topic relabeling") {
  std::mt19937_64 rng = make_engine(107);
  const auto nu = MixingDistribution::symmetric_dirichlet(3, 1.2);
  const TopicMatrix theta = random_topic_matrix(4, 3, 0.0, rng, 0.02);
  std::vector<int> perm = {2, 0, 1};
  const TopicMatrix relabeled = theta.permuted(perm);
  for (int t = 0; t < 20; ++t) {
    const Document doc = {static_cast<int>(rng() % 4), static_cast<int>(rng() % 4),
                          static_cast<int>(rng() % 4)};
    // Bitwise equality: sums are reduced in value order, not label order.
    CHECK(likelihood(theta, nu, doc) == likelihood(relabeled, nu, doc));
  }
}

TEST_CASE("enumerate_distribution") {
  SUBCASE("uniform topics give the flat distribution") {
    const TopicMatrix theta = matrix_from({{0.5, 0.5}, {0.5, 0.5}});
    const auto nu = MixingDistribution::uniform_vertex(2);
    const Eigen::VectorXd dist = enumerate_distribution(theta, nu, 2);
    REQUIRE(dist.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(dist[i] == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("two-vertex example in lexicographic order") {
    const Eigen::VectorXd dist =
        enumerate_distribution(two_vertex_example(), MixingDistribution::uniform_vertex(2), 2);
    REQUIRE(dist.size() == 4);
    CHECK(dist[0] == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(dist[1] == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(dist[2] == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(dist[3] == doctest::Approx(0.325).epsilon(1e-14));
  }
  SUBCASE("cells match per-document likelihoods and sum to 1") {
    std::mt19937_64 rng = make_engine(109);
    const TopicMatrix theta = random_topic_matrix(3, 2, 0.0, rng, 0.01);
    const auto nu = MixingDistribution::symmetric_dirichlet(2, 0.7);
    const Eigen::VectorXd dist = enumerate_distribution(theta, nu, 3);
    REQUIRE(dist.size() == 27);
    CHECK(dist.sum() == doctest::Approx(1.0).epsilon(1e-10));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          CHECK(dist[a * 9 + b * 3 + c] == likelihood(theta, nu, {a, b, c}));
  }
}

TEST_CASE("document sampling") {
  std::mt19937_64 rng = make_engine(113);
  const TopicMatrix theta = random_topic_matrix(3, 2, 0.0, rng, 0.05);
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);

  SUBCASE("fixed seed reproduces the corpus bitwise") {
    std::mt19937_64 a = make_engine(7), b = make_engine(7);
    const Corpus ca = sample_corpus(theta, nu, 3, 50, a);
    const Corpus cb = sample_corpus(theta, nu, 3, 50, b);
    CHECK(ca.documents == cb.documents);
  }
  SUBCASE("empirical cell frequencies match the exact enumeration") {
    const int n = 100000, m = 2;
    const Eigen::VectorXd dist = enumerate_distribution(theta, nu, m);
    std::vector<long long> counts(9, 0);
    std::mt19937_64 sampler = make_engine(127);
    for (int i = 0; i < n; ++i) {
      const Document doc = sample_document(theta, nu, m, sampler);
      ++counts[static_cast<std::size_t>(doc[0] * 3 + doc[1])];
    }
    for (int cell = 0; cell < 9; ++cell) {
      const double p = dist[cell];
      const double se = std::sqrt(p * (1.0 - p) * n);
      CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(cell)]) - p * n) <=
            6.0 * se);
    }
  }
  SUBCASE("uniform topics give uniform unigrams") {
    const TopicMatrix flat = matrix_from({{0.25, 0.25, 0.25, 0.25},
                                          {0.25, 0.25, 0.25, 0.25}});
    std::mt19937_64 sampler = make_engine(131);
    std::vector<long long> counts(4, 0);
    for (int i = 0; i < 50000; ++i)
      for (int word : sample_document(flat, nu, 2, sampler))
        ++counts[static_cast<std::size_t>(word)];
    const std::vector<double> expected(4, 100000.0 / 4);
    // 1% chi-square critical value at 3 degrees of freedom.
    CHECK(oracles::chi_square_statistic(counts, expected) <= 11.34);
  }
}

TEST_CASE("log likelihood and gradient") {
  SUBCASE("single topic reduces to the multinomial formula") {
    const TopicMatrix theta = matrix_from({{0.2, 0.3, 0.5}});
    const auto nu = MixingDistribution::uniform_vertex(1);
    const Corpus corpus = Corpus::create(3, {{0, 2}, {2, 2}});
    CHECK(log_likelihood(theta, nu, corpus) ==
          doctest::Approx(std::log(0.2) + 3 * std::log(0.5)).epsilon(1e-13));
    const Eigen::MatrixXd grad = log_likelihood_gradient(theta, nu, corpus);
    CHECK(grad(0, 0) == doctest::Approx(1.0 / 0.2).epsilon(1e-12));
    CHECK(grad(0, 1) == doctest::Approx(0.0));
    CHECK(grad(0, 2) == doctest::Approx(3.0 / 0.5).epsilon(1e-12));
  }
  SUBCASE("duplicating the corpus doubles the value") {
    std::mt19937_64 rng = make_engine(137);
    const TopicMatrix theta = random_topic_matrix(3, 2, 0.0, rng, 0.05);
    const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
    const Corpus once = sample_corpus(theta, nu, 2, 20, rng);
    std::vector<Document> doubled = once.documents;
    doubled.insert(doubled.end(), once.documents.begin(), once.documents.end());
    const Corpus twice = Corpus::create(3, std::move(doubled));
    CHECK(log_likelihood(theta, nu, twice) ==
          doctest::Approx(2.0 * log_likelihood(theta, nu, once)).epsilon(1e-13));
  }
  SUBCASE("gradient matches central finite differences") {
    std::mt19937_64 rng = make_engine(139);
    const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
    for (int t = 0; t < 10; ++t) {
      const TopicMatrix theta = random_topic_matrix(4, 2, 0.0, rng, 0.05);
      const Corpus corpus = sample_corpus(theta, nu, 3, 30, rng);
      const Eigen::MatrixXd grad = log_likelihood_gradient(theta, nu, corpus);
      const Eigen::MatrixXd fd = oracles::finite_difference_gradient(
          theta, [&](const TopicMatrix& at) { return log_likelihood(at, nu, corpus); });
      CHECK((fd - grad).norm() <= 1e-5 * std::max(grad.norm(), 1e-12));
    }
  }
}

TEST_CASE("expansion terms reconstruct the likelihood difference") {
  std::mt19937_64 rng = make_engine(149);
  const auto nu = MixingDistribution::symmetric_dirichlet(3, 1.0);
  for (int t = 0; t < 50; ++t) {
    const TopicMatrix theta = random_topic_matrix(4, 3, 0.01, rng, 0.1);
    const PerturbationDirection delta = oracles::random_unit_direction(3, 4, rng);
    const double scale = 0.05;
    PerturbationDirection scaled = delta;
    scaled.entries *= scale;
    TopicMatrix shifted = theta;
    shifted.rows += scaled.entries;
    REQUIRE(shifted.rows.minCoeff() > 0.0);
    const int m = 3;
    Document doc(static_cast<std::size_t>(m));
    for (int& w : doc) w = static_cast<int>(rng() % 4);
    long double total = 0.0L;
    for (int order = 1; order <= m; ++order)
      total += static_cast<long double>(expansion_term(theta, nu, scaled, order, doc));
    const long double exact = oracles::likelihood_difference(theta, scaled, nu, doc);
    CHECK(static_cast<double>(std::abs(total - exact)) <=
          1e-12 * static_cast<double>(std::max(std::abs(exact), 1.0e-6L)));
    // The double-precision likelihoods agree too, up to their own
    // subtraction cancellation.
    const double diff = likelihood(shifted, nu, doc) - likelihood(theta, nu, doc);
    CHECK(std::abs(diff - static_cast<double>(exact)) <= 1e-13);
  }
}

TEST_CASE("expansion term edge cases") {
  const TopicMatrix theta = two_vertex_example();
  const auto nu = MixingDistribution::uniform_vertex(2);
  SUBCASE("zero direction gives zero at every order") {
    PerturbationDirection zero;
    zero.entries = Eigen::MatrixXd::Zero(2, 2);
    for (int order = 1; order <= 2; ++order)
      CHECK(expansion_term(theta, nu, zero, order, {0, 1}) == 0.0);
  }
  SUBCASE("duplicate topics cancel the first-order term for every document") {
    const TopicMatrix dup = matrix_from({{0.6, 0.3, 0.1}, {0.6, 0.3, 0.1}});
    Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(2, 3);
    entries(0, 0) = 0.25;
    entries(0, 1) = -0.25;
    entries.row(1) = -entries.row(0);
    const PerturbationDirection delta = PerturbationDirection::create_unit(entries);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        CHECK(std::abs(expansion_term(dup, nu, delta, 1, {a, b})) <= 1e-15);
  }
  SUBCASE("order out of range") {
    PerturbationDirection zero;
    zero.entries = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(expansion_term(theta, nu, zero, 0, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(expansion_term(theta, nu, zero, 3, {0, 1}), std::invalid_argument);
  }
}

TEST_CASE("distances between enumerated distributions") {
  std::mt19937_64 rng = make_engine(151);
  const auto nu = MixingDistribution::symmetric_dirichlet(2, 1.0);
  const double c0 = 0.05;
  const TopicMatrix theta = random_topic_matrix(3, 2, c0, rng);

  SUBCASE("identical parameters give exactly zero") {
    CHECK(tv_distance(theta, theta, nu, 2) == 0.0);
    CHECK(kl_divergence(theta, theta, nu, 2) == 0.0);
  }
  SUBCASE("row-permuted parameters give exactly zero TV") {
    const std::vector<int> perm = {1, 0};
    CHECK(tv_distance(theta, theta.permuted(perm), nu, 2) == 0.0);
  }
  SUBCASE("Pinsker sandwich on random pairs") {
    const int m = 2;
    const double reverse_constant =
        1.0 / (2.0 * std::pow(c0, 2 * m)) + 1.0 / std::pow(c0, m);
    for (int t = 0; t < 200; ++t) {
      // Half far-apart independent pairs, half small perturbations.
      TopicMatrix other = random_topic_matrix(3, 2, c0, rng);
      if (t % 2 == 0) {
        for (int guard = 0; guard < 1000; ++guard) {
          const PerturbationDirection dir = oracles::random_unit_direction(2, 3, rng);
          Eigen::MatrixXd moved = theta.rows + 0.01 * dir.entries;
          if (moved.minCoeff() >= c0) {
            other = TopicMatrix::create(std::move(moved), c0);
            break;
          }
        }
      }
      const double tv = tv_distance(theta, other, nu, m);
      const double kl = kl_divergence(theta, other, nu, m);
      CHECK(kl >= 2.0 * tv * tv - 1e-12);
      CHECK(kl <= reverse_constant * tv * tv + 1e-12);
    }
  }
  SUBCASE("TV is bounded by the (2V)^m multiple of the entrywise l2 distance") {
    const int m = 2;
    const double constant = std::pow(2.0 * 3, m);
    for (int t = 0; t < 200; ++t) {
      const TopicMatrix other = random_topic_matrix(3, 2, c0, rng);
      const double tv = tv_distance(theta, other, nu, m);
      CHECK(tv <= constant * (other.rows - theta.rows).norm() + 1e-12);
    }
  }
  SUBCASE("marginalizing to two words cannot increase TV") {
    const int m = 3;
    for (int t = 0; t < 20; ++t) {
      const TopicMatrix other = random_topic_matrix(3, 2, c0, rng);
      const Eigen::VectorXd p = enumerate_distribution(theta, nu, m);
      const Eigen::VectorXd q = enumerate_distribution(other, nu, m);
      const Eigen::VectorXd pm = oracles::marginalize_prefix(p, 3, m, 2);
      const Eigen::VectorXd qm = oracles::marginalize_prefix(q, 3, m, 2);
      const double tv_full = tv_distance(theta, other, nu, m);
      const double tv_marginal = 0.5 * (pm - qm).cwiseAbs().sum();
      CHECK(tv_full >= tv_marginal - 1e-12);
    }
  }
}

TEST_CASE("parameter distance by optimal topic matching") {
  const TopicMatrix theta = two_vertex_example();
  SUBCASE("zero for identical and for permuted parameters") {
    CHECK(wasserstein_distance(theta, theta) == 0.0);
    const std::vector<int> perm = {1, 0};
    CHECK(wasserstein_distance(theta, theta.permuted(perm)) == 0.0);
  }
  SUBCASE("worked two-topic example") {
    const TopicMatrix other = matrix_from({{0.5, 0.5}, {0.3, 0.7}});
    CHECK(wasserstein_distance(theta, other) == doctest::Approx(0.2).epsilon(1e-13));
  }
  SUBCASE("symmetry, triangle inequality, simultaneous relabeling") {
    std::mt19937_64 rng = make_engine(157);
    for (int t = 0; t < 10; ++t) {
      const TopicMatrix a = random_topic_matrix(4, 3, 0.0, rng, 0.01);
      const TopicMatrix b = random_topic_matrix(4, 3, 0.0, rng, 0.01);
      const TopicMatrix c = random_topic_matrix(4, 3, 0.0, rng, 0.01);
      CHECK(wasserstein_distance(a, b) == doctest::Approx(wasserstein_distance(b, a)));
      CHECK(wasserstein_distance(a, c) <=
            wasserstein_distance(a, b) + wasserstein_distance(b, c) + 1e-12);
      const std::vector<int> perm = {2, 0, 1};
      CHECK(wasserstein_distance(a.permuted(perm), b.permuted(perm)) ==
            doctest::Approx(wasserstein_distance(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("random topic matrices respect the floor and the minimum entry") {
  std::mt19937_64 rng = make_engine(163);
  for (int t = 0; t < 20; ++t) {
    const TopicMatrix theta = random_topic_matrix(5, 3, 0.02, rng, 0.05);
    CHECK(theta.rows.minCoeff() >= 0.05);
    for (int j = 0; j < 3; ++j)
      CHECK(theta.rows.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("corpus and histogram") {
  CHECK_THROWS_AS(Corpus::create(3, {}), std::invalid_argument);
  CHECK_THROWS_AS(Corpus::create(3, {{0}}), std::invalid_argument);       // m = 1
  CHECK_THROWS_AS(Corpus::create(3, {{0, 1}, {0, 1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(Corpus::create(3, {{0, 3}}), std::invalid_argument);    // word range

  const Corpus corpus = Corpus::create(3, {{0, 1}, {0, 1}, {2, 2}, {0, 1}});
  const DocumentHistogram hist = DocumentHistogram::from(corpus);
  CHECK(hist.words_per_document == 2);
  REQUIRE(hist.types.size() == 2);
  long long total = 0;
  for (const auto& [doc, count] : hist.types) total += count;
  CHECK(total == corpus.size());
}

TEST_CASE("perturbation direction validation") {
  Eigen::MatrixXd bad(1, 2);
  bad << 0.2, 0.1;
  CHECK_THROWS_AS(PerturbationDirection::create(bad), std::invalid_argument);

  Eigen::MatrixXd ok(1, 2);
  ok << 0.2, -0.2;
  CHECK(PerturbationDirection::create(ok).l1_norm() == doctest::Approx(0.4));
  CHECK_THROWS_AS(PerturbationDirection::create_unit(ok), std::invalid_argument);
  CHECK(PerturbationDirection::create(ok).normalized().l1_norm() ==
        doctest::Approx(1.0).epsilon(1e-13));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS_AS(PerturbationDirection::create(zero).normalized(), std::invalid_argument);
}

TEST_CASE("symmetric sums are order independent bitwise") {
  std::mt19937_64 rng = make_engine(167);
  std::vector<double> terms;
  for (int i = 0; i < 50; ++i)
    terms.push_back(std::ldexp(static_cast<double>(rng() % 1000) - 500.0,
                               static_cast<int>(rng() % 40) - 20));
  std::vector<double> a = terms;
  const double base = symmetric_sum(a);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> shuffled = terms;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(symmetric_sum(shuffled) == base);
  }
}

TEST_CASE("sizing guards fail fast") {
  SUBCASE("topic tuple budget") {
    std::mt19937_64 rng = make_engine(173);
    const TopicMatrix theta = random_topic_matrix(2, 16, 0.0, rng, 0.001);
    const auto nu = MixingDistribution::uniform_vertex(16);
    const Document doc(6, 0);  // 16^6 > 1e7
    CHECK_THROWS_AS(likelihood(theta, nu, doc), GuardError);
  }
  SUBCASE("document cell budget") {
    std::mt19937_64 rng = make_engine(179);
    const TopicMatrix theta = random_topic_matrix(200, 2, 0.0, rng);
    const auto nu = MixingDistribution::uniform_vertex(2);
    CHECK_THROWS_AS(enumerate_distribution(theta, nu, 3), GuardError);  // 200^3 > 2e6
  }
  SUBCASE("document longer than the moment cache") {
    const TopicMatrix theta = two_vertex_example();
    const auto nu = MixingDistribution::uniform_vertex(2);
    const Document doc(7, 0);  // order 7 > default cache 6
    CHECK_THROWS_AS(likelihood(theta, nu, doc), GuardError);
  }
}
