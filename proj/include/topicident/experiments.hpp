#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicident/mixing.hpp"
#include "topicident/mle.hpp"
#include "topicident/model.hpp"

namespace topicident {

struct RateCurve {
  std::string theta_label;
  std::vector<long long> n_grid;
  std::vector<std::vector<double>> errors;  // [n index][replicate]
  std::vector<double> mean_error;
  std::vector<double> median_error;
  double slope = 0.0;       // log median error vs log n, least squares
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Recovery-error curve for the constrained MLE: per (n, replicate), sample a
/// corpus, fit, and record the Wasserstein error against the truth, minimized
/// over the equivalent set when it is enumerable (K = 2, m = 2). Needs at
/// least 3 grid points and 5 replicates for the slope fit.
RateCurve rate_experiment(const TopicMatrix& theta, const MixingDistribution& nu,
                          int m, const std::vector<long long>& n_grid,
                          int replicates, const FitOptions& fit_options,
                          std::uint64_t seed, const std::string& label = "",
                          int workers = 0);

struct TwoPointResult {
  long long n = 0;
  double distance = 0.0;
  int replicates = 0;
  double type1_rate = 0.0;  // truth theta, decided theta'
  double type2_rate = 0.0;  // truth theta', decided theta
  double error_rate = 0.0;  // max of the two
};

/// Optimal-test error between theta and a perturbation at the given l1
/// distance: per replicate the truth is a fair coin, the corpus has n
/// documents, and the decision is the sign of the exact log-likelihood ratio
/// (ties resolved by a seeded coin). The perturbation direction is drawn from
/// the seed and must keep theta' feasible.
TwoPointResult two_point_test_at_distance(const TopicMatrix& theta,
                                          const MixingDistribution& nu, int m,
                                          double distance, long long n,
                                          int replicates, std::uint64_t seed);

/// Same, at the rate-matched distance r * n^(-1 / (2 * p_order)).
TwoPointResult two_point_test(const TopicMatrix& theta, const MixingDistribution& nu,
                              int m, int p_order, double radius_constant,
                              long long n, int replicates, std::uint64_t seed);

/// (1/n) sum_i log( p_theta(X_i) / p_theta'(X_i) ); unbiased for the KL
/// divergence when the corpus is drawn from theta.
double empirical_kl(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                    const MixingDistribution& nu, const Corpus& corpus);

struct BoundSuiteOptions {
  int trials = 500;
  double scale_min = 1e-4;  // perturbation sizes log-uniform on [scale_min, scale_max]
  double scale_max = 1e-1;
  /// Multiplies the vocabulary-power constants; only the checker-sanity tests
  /// ever set this away from 1.
  double constant_scale = 1.0;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct BoundTrial {
  double epsilon = 0.0;  // Wasserstein distance of the pair
  double l2 = 0.0;       // Frobenius distance of the pair
  double tv = 0.0;
  double kl = 0.0;
};

struct BoundCheck {
  std::string name;
  long long violations = 0;
  double worst_slack = 0.0;  // min over trials of (bound - observed)
};

struct BoundReport {
  int p_order = 0;
  int trials = 0;
  std::vector<BoundCheck> checks;
  std::vector<BoundTrial> trial_data;
  bool all_pass = false;
};

/// Random feasible perturbations of theta, each checked against the distance
/// bounds: TV against the Wasserstein power law and the l2 comparison, and KL
/// against the Pinsker pair with the floor-dependent reverse constant.
BoundReport bound_suite(const TopicMatrix& theta, const MixingDistribution& nu,
                        int m, const BoundSuiteOptions& options);

}  // namespace topicident
