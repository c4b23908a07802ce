#pragma once

// Independent reference implementations used only by the test suite: brute
// force and Monte Carlo counterparts of the library's analytic routines.
// Nothing here shares code with the implementations under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "topicident/mixing.hpp"
#include "topicident/model.hpp"

namespace oracles {

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline Eigen::VectorXd dirichlet_draw(int topic_count, double alpha,
                                      std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Eigen::VectorXd h(topic_count);
  double total = 0.0;
  do {
    for (int j = 0; j < topic_count; ++j) h[j] = gamma(rng);
    total = h.sum();
  } while (total <= 0.0);
  return h / total;
}

// E[prod_j h_j^{a_j}] under a symmetric Dirichlet, by direct sampling.
inline MonteCarloEstimate mc_dirichlet_moment(int topic_count, double alpha,
                                              const std::vector<int>& exponents,
                                              long long draws,
                                              std::mt19937_64& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (long long t = 0; t < draws; ++t) {
    const Eigen::VectorXd h = dirichlet_draw(topic_count, alpha, rng);
    double prod = 1.0;
    for (int j = 0; j < topic_count; ++j)
      for (int a = 0; a < exponents[static_cast<std::size_t>(j)]; ++a) prod *= h[j];
    sum += prod;
    sum_sq += prod * prod;
  }
  MonteCarloEstimate out;
  out.mean = sum / static_cast<double>(draws);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(draws) - out.mean * out.mean);
  out.standard_error = std::sqrt(var / static_cast<double>(draws));
  return out;
}

// p(x) = E_h[prod_i (sum_k h_k theta_k(x_i))] under a symmetric Dirichlet,
// by direct sampling of h.
inline MonteCarloEstimate mc_likelihood_dirichlet(const topicident::TopicMatrix& theta,
                                                  double alpha,
                                                  const topicident::Document& doc,
                                                  long long draws,
                                                  std::mt19937_64& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (long long t = 0; t < draws; ++t) {
    const Eigen::VectorXd h = dirichlet_draw(theta.topic_count(), alpha, rng);
    double prod = 1.0;
    for (int word : doc) prod *= h.dot(theta.rows.col(word));
    sum += prod;
    sum_sq += prod * prod;
  }
  MonteCarloEstimate out;
  out.mean = sum / static_cast<double>(draws);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(draws) - out.mean * out.mean);
  out.standard_error = std::sqrt(var / static_cast<double>(draws));
  return out;
}

// p(x; theta + delta) - p(x; theta) enumerated over topic assignments in
// extended precision. Differencing two double-precision likelihoods would
// cancel away several digits; here every summand is O(delta).
inline long double likelihood_difference(const topicident::TopicMatrix& theta,
                                         const topicident::PerturbationDirection& delta,
                                         const topicident::MixingDistribution& nu,
                                         const topicident::Document& doc) {
  const int k = theta.topic_count();
  const int m = static_cast<int>(doc.size());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  long double acc = 0.0L;
  auto rec = [&](auto&& self, int i, long double base, long double shifted) -> void {
    if (i == m) {
      acc += (shifted - base) * static_cast<long double>(nu.moment_of_counts(counts));
      return;
    }
    const int word = doc[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      ++counts[j];
      const auto t = static_cast<long double>(theta.rows(j, word));
      const auto d = static_cast<long double>(delta.entries(j, word));
      self(self, i + 1, base * t, shifted * (t + d));
      --counts[j];
    }
  };
  rec(rec, 0, 1.0L, 1.0L);
  return acc;
}

// Central finite differences of the corpus log-likelihood in each entry.
// Bumped matrices break row normalization on purpose: the gradient under
// test is the unconstrained partial of the moment-expansion polynomial.
template <typename LogLikelihood>
Eigen::MatrixXd finite_difference_gradient(const topicident::TopicMatrix& theta,
                                           const LogLikelihood& value,
                                           double step = 1e-6) {
  Eigen::MatrixXd grad(theta.topic_count(), theta.vocab_size());
  for (int j = 0; j < theta.topic_count(); ++j) {
    for (int w = 0; w < theta.vocab_size(); ++w) {
      topicident::TopicMatrix plus = theta;
      topicident::TopicMatrix minus = theta;
      plus.rows(j, w) += step;
      minus.rows(j, w) -= step;
      grad(j, w) = (value(plus) - value(minus)) / (2.0 * step);
    }
  }
  return grad;
}

// Euclidean projection onto {x >= c0, sum x = 1} by exhaustive active-set
// enumeration: every subset of coordinates pinned at the floor yields one
// equality-constrained candidate; the feasible one nearest the input wins.
inline Eigen::VectorXd qp_project(const Eigen::VectorXd& raw, double c0) {
  const int v = static_cast<int>(raw.size());
  if (v < 1 || v > 20) throw std::invalid_argument("oracle supports 1..20 coordinates");
  if (c0 * v >= 1.0) throw std::invalid_argument("infeasible floor");
  Eigen::VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << v); ++mask) {
    int free_count = 0;
    double free_sum = 0.0;
    for (int i = 0; i < v; ++i) {
      if (!(mask & (1u << i))) {
        ++free_count;
        free_sum += raw[i];
      }
    }
    if (free_count == 0) continue;
    const double pinned_mass = c0 * (v - free_count);
    const double tau = (free_sum - (1.0 - pinned_mass)) / free_count;
    Eigen::VectorXd candidate(v);
    bool feasible = true;
    double dist = 0.0;
    for (int i = 0; i < v; ++i) {
      if (mask & (1u << i)) {
        candidate[i] = c0;
      } else {
        candidate[i] = raw[i] - tau;
        if (candidate[i] < c0 - 1e-12) feasible = false;
      }
      const double d = candidate[i] - raw[i];
      dist += d * d;
    }
    if (feasible && dist < best_dist) {
      best_dist = dist;
      best = candidate;
    }
  }
  return best;
}

// kappa_1 from the explicit inverse: ||B||_1 * ||B^-1||_1.
inline double exact_condition_1(const Eigen::MatrixXd& b) {
  const auto norm1 = [](const Eigen::MatrixXd& m) {
    return m.cwiseAbs().colwise().sum().maxCoeff();
  };
  const Eigen::MatrixXd inverse = b.fullPivLu().inverse();
  return norm1(b) * norm1(inverse);
}

// Marginal over the first `keep` words of a [V]^m array in lexicographic
// order (first word most significant).
inline Eigen::VectorXd marginalize_prefix(const Eigen::VectorXd& dist, int vocab_size,
                                          int m, int keep) {
  if (keep < 1 || keep > m) throw std::invalid_argument("bad prefix length");
  long long groups = 1, tail = 1;
  for (int i = 0; i < keep; ++i) groups *= vocab_size;
  for (int i = keep; i < m; ++i) tail *= vocab_size;
  if (groups * tail != dist.size()) throw std::invalid_argument("size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(groups);
  for (long long g = 0; g < groups; ++g)
    for (long long t = 0; t < tail; ++t) out[g] += dist[g * tail + t];
  return out;
}

// sup_x |F_n(x) - x| against the uniform CDF on [0, 1].
inline double ks_statistic_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    worst = std::max({worst, std::abs(x - lo), std::abs(x - hi)});
  }
  return worst;
}

// Pearson chi-square statistic for observed counts against expected counts.
inline double chi_square_statistic(const std::vector<long long>& observed,
                                   const std::vector<double>& expected) {
  if (observed.size() != expected.size()) throw std::invalid_argument("size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

// Zero-row-sum direction with unit l1 mass, for property sweeps.
inline topicident::PerturbationDirection random_unit_direction(int topic_count,
                                                               int vocab_size,
                                                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd entries(topic_count, vocab_size);
  for (;;) {
    for (int j = 0; j < topic_count; ++j) {
      for (int w = 0; w < vocab_size; ++w) entries(j, w) = normal(rng);
      entries.row(j).array() -= entries.row(j).mean();
    }
    if (entries.cwiseAbs().sum() > 1e-8)
      return topicident::PerturbationDirection::create(entries).normalized();
  }
}

}  // namespace oracles
