#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "topicident/mixing.hpp"
#include "topicident/model.hpp"

namespace topicident {

/// Euclidean projection onto { x : x >= c0, sum x = 1 }. Exact sort-based
/// threshold search on the shifted simplex; returns feasible input unchanged.
Eigen::VectorXd project_row(const Eigen::VectorXd& raw, double c0);

struct FitOptions {
  int starts = 8;
  int max_iterations = 2000;
  /// On the projected-gradient mapping of the per-document mean objective.
  double gradient_tolerance = 1e-8;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_increase = 1e-4;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: all hardware threads
  /// Start 0 warms up with this many EM sweeps under the vertex prior, where
  /// the model is exactly a uniform mixture of product multinomials.
  int em_warm_iterations = 100;
  /// When nonempty, overrides the random initializer per start (tests).
  std::vector<Eigen::MatrixXd> explicit_inits;

  void validate() const;
};

struct FitResult {
  TopicMatrix theta_hat;
  double log_likelihood = 0.0;  // sum over documents at theta_hat
  int iterations = 0;           // winning start's ascent iterations
  int winner_start = 0;
  bool converged = false;       // projected-gradient norm met the tolerance
  std::vector<double> trace;    // winning start's objective after each accept
};

/// Constrained maximum likelihood over the floored simplex by multi-start
/// projected gradient ascent with backtracking line search. Deterministic for
/// fixed (seed, options) regardless of worker count.
FitResult fit_mle(const Corpus& corpus, int topic_count, double c0,
                  const MixingDistribution& nu, const FitOptions& options = {});

}  // namespace topicident
