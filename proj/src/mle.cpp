#include "topicident/mle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "topicident/parallel.hpp"
#include "topicident/rng.hpp"

namespace topicident {
namespace {

Eigen::MatrixXd project_rows(const Eigen::MatrixXd& raw, double c0) {
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.rows(); ++k)
    out.row(k) = project_row(raw.row(k).transpose(), c0).transpose();
  return out;
}

// Reductions over topics go through symmetric_sum so every objective,
// inner product, and norm is exactly invariant under topic relabeling.
double topic_reduced_sum(std::vector<double>& per_topic) {
  return symmetric_sum(per_topic);
}

struct Evaluator {
  const MixingDistribution& nu;
  const DocumentHistogram hist;
  const int k;
  const int v;
  const double n;

  Evaluator(const Corpus& corpus, int topic_count, int vocab_size,
            const MixingDistribution& mixing)
      : nu(mixing),
        hist(DocumentHistogram::from(corpus)),
        k(topic_count),
        v(vocab_size),
        n(static_cast<double>(corpus.size())) {}

  // mean log-likelihood per document
  double value(const TopicMatrix& theta) const {
    double total = 0.0;
    for (const auto& [doc, count] : hist.types)
      total += static_cast<double>(count) * std::log(likelihood(theta, nu, doc));
    return total / n;
  }

  double value_and_gradient(const TopicMatrix& theta, Eigen::MatrixXd& grad) const {
    grad.setZero(k, v);
    double total = 0.0;
    const int m = hist.words_per_document;
    std::vector<Eigen::VectorXd> xi(static_cast<std::size_t>(m));
    for (const auto& [doc, count] : hist.types) {
      const double p = likelihood(theta, nu, doc);
      total += static_cast<double>(count) * std::log(p);
      for (int i = 0; i < m; ++i) xi[static_cast<std::size_t>(i)] = xi_row(theta, nu, doc, i);
      const double weight = static_cast<double>(count) / (p * n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j)
          grad(j, doc[static_cast<std::size_t>(i)]) += weight * xi[static_cast<std::size_t>(i)][j];
    }
    return total / n;
  }
};

// The vertex prior makes the model a uniform mixture of product multinomials,
// where EM steps are exact; used to warm up one start.
void em_warm_start(const Evaluator& eval, double c0, int iterations, TopicMatrix& theta) {
  const int k = eval.k;
  const int v = eval.v;
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, v);
    for (const auto& [doc, count] : eval.hist.types) {
      for (int j = 0; j < k; ++j) {
        double w = 1.0;
        for (int word : doc) w *= theta.rows(j, word);
        weights[static_cast<std::size_t>(j)] = w;
      }
      std::vector<double> denom_terms = weights;
      const double denom = topic_reduced_sum(denom_terms);
      if (denom <= 0.0) continue;
      for (int j = 0; j < k; ++j) {
        const double resp = static_cast<double>(count) * weights[static_cast<std::size_t>(j)] / denom;
        for (int word : doc) acc(j, word) += resp;
      }
    }
    for (int j = 0; j < k; ++j) {
      const double mass = acc.row(j).sum();
      if (mass <= 0.0) continue;
      theta.rows.row(j) = project_row((acc.row(j) / mass).transpose(), c0).transpose();
    }
  }
}

struct StartOutcome {
  TopicMatrix theta;
  double mean_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective as a corpus sum, one entry per accept
};

}  // namespace

Eigen::VectorXd project_row(const Eigen::VectorXd& raw, double c0) {
  const int v = static_cast<int>(raw.size());
  if (v < 1) throw std::invalid_argument("cannot project an empty row");
  if (!raw.allFinite()) throw std::invalid_argument("row entries must be finite");
  if (!std::isfinite(c0) || c0 < 0.0 || c0 * v >= 1.0)
    throw std::invalid_argument("infeasible floor: need 0 <= c0 and c0 * V < 1");
  if (raw.minCoeff() >= c0 && std::abs(raw.sum() - 1.0) <= 1e-12)
    return raw;  // feasible points are fixed points, exactly

  // Shift by the floor and project onto the simplex of the remaining mass.
  Eigen::VectorXd shifted = raw.array() - c0;
  const double mass = 1.0 - c0 * v;
  std::vector<double> sorted(shifted.data(), shifted.data() + v);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double prefix = 0.0, tau = 0.0;
  int support = 0;
  for (int i = 0; i < v; ++i) {
    prefix += sorted[static_cast<std::size_t>(i)];
    const double candidate = (prefix - mass) / (i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) {
      support = i + 1;
      tau = candidate;
    }
  }
  Eigen::VectorXd out(v);
  for (int i = 0; i < v; ++i)
    out[i] = std::max(shifted[i] - tau, 0.0) + c0;
  (void)support;
  return out;
}

void FitOptions::validate() const {
  if (starts < 1) throw std::invalid_argument("need at least one start");
  if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("gradient tolerance must be positive");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial step must be positive");
  if (!(shrink > 0.0) || !(shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
  if (!(sufficient_increase > 0.0) || sufficient_increase >= 1.0)
    throw std::invalid_argument("sufficient-increase must lie in (0, 1)");
  if (em_warm_iterations < 0) throw std::invalid_argument("EM warm iterations must be nonnegative");
  if (!explicit_inits.empty() && static_cast<int>(explicit_inits.size()) != starts)
    throw std::invalid_argument("explicit initializers must cover every start");
}

FitResult fit_mle(const Corpus& corpus, int topic_count, double c0,
                  const MixingDistribution& nu, const FitOptions& options) {
  options.validate();
  if (topic_count < 1) throw std::invalid_argument("need at least one topic");
  if (nu.topic_count() != topic_count)
    throw std::invalid_argument("mixing distribution and requested K disagree");
  if (!(c0 > 0.0) || c0 * 1.0 >= 1.0)
    throw std::invalid_argument("floor must satisfy 0 < c0 and c0 * V < 1");
  int vocab_size = 0;
  for (const Document& doc : corpus.documents)
    for (int w : doc) vocab_size = std::max(vocab_size, w + 1);
  if (c0 * vocab_size >= 1.0)
    throw std::invalid_argument("floor must satisfy 0 < c0 and c0 * V < 1");

  const Evaluator eval(corpus, topic_count, vocab_size, nu);
  const int k = topic_count;
  const int v = vocab_size;

  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(options.starts));
  parallel_for(options.starts, options.workers, [&](int start) {
    std::mt19937_64 rng = make_engine(
        derive_seed(options.seed, {0xf17ULL, static_cast<std::uint64_t>(start)}));
    TopicMatrix theta;
    if (!options.explicit_inits.empty()) {
      theta = TopicMatrix::create(options.explicit_inits[static_cast<std::size_t>(start)], c0);
      if (theta.topic_count() != k || theta.vocab_size() != v)
        throw std::invalid_argument("explicit initializer shape mismatch");
    } else {
      // Uniform draws on the floored simplex: Dirichlet(1) rows, projected.
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Eigen::MatrixXd rows(k, v);
      for (int j = 0; j < k; ++j) {
        Eigen::VectorXd row(v);
        for (int w = 0; w < v; ++w) row[w] = -std::log1p(-unif(rng));
        row /= row.sum();
        rows.row(j) = project_row(row, c0).transpose();
      }
      theta = TopicMatrix::create(std::move(rows), c0);
    }
    if (nu.kind() == MixingKind::UniformVertex && start == 0 && options.em_warm_iterations > 0)
      em_warm_start(eval, c0, options.em_warm_iterations, theta);

    StartOutcome outcome;
    Eigen::MatrixXd grad(k, v);
    double objective = eval.value(theta);
    outcome.trace.push_back(objective * eval.n);
    std::vector<double> per_topic(static_cast<std::size_t>(k));
    int stalled = 0;  // consecutive accepts with machine-flat objective
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
      eval.value_and_gradient(theta, grad);
      // Projected-gradient mapping at unit step decides convergence.
      Eigen::MatrixXd mapped = project_rows(theta.rows + grad, c0) - theta.rows;
      for (int j = 0; j < k; ++j)
        per_topic[static_cast<std::size_t>(j)] = mapped.row(j).squaredNorm();
      std::vector<double> sq = per_topic;
      if (std::sqrt(topic_reduced_sum(sq)) <= options.gradient_tolerance) {
        outcome.converged = true;
        break;
      }
      double step = options.initial_step;
      bool accepted = false;
      while (step >= 1e-18) {
        Eigen::MatrixXd trial = project_rows(theta.rows + step * grad, c0);
        Eigen::MatrixXd move = trial - theta.rows;
        for (int j = 0; j < k; ++j)
          per_topic[static_cast<std::size_t>(j)] = grad.row(j).dot(move.row(j));
        std::vector<double> dots = per_topic;
        const double inner = topic_reduced_sum(dots);
        TopicMatrix trial_theta;
        trial_theta.rows = std::move(trial);
        trial_theta.c0 = c0;
        const double trial_objective = eval.value(trial_theta);
        if (trial_objective >= objective + options.sufficient_increase * inner) {
          stalled = trial_objective <= objective ? stalled + 1 : 0;
          theta = std::move(trial_theta);
          objective = trial_objective;
          outcome.iterations = iter;
          outcome.trace.push_back(objective * eval.n);
          accepted = true;
          break;
        }
        step *= options.shrink;
      }
      if (!accepted) break;  // flat to machine precision along the arc
      if (stalled >= 20) break;
    }
    outcome.theta = std::move(theta);
    outcome.mean_objective = objective;
    outcomes[static_cast<std::size_t>(start)] = std::move(outcome);
  });

  int winner = 0;
  for (int s = 1; s < options.starts; ++s)
    if (outcomes[static_cast<std::size_t>(s)].mean_objective >
        outcomes[static_cast<std::size_t>(winner)].mean_objective)
      winner = s;

  StartOutcome& best = outcomes[static_cast<std::size_t>(winner)];
  FitResult result;
  result.theta_hat = std::move(best.theta);
  result.log_likelihood = best.mean_objective * eval.n;
  result.iterations = best.iterations;
  result.winner_start = winner;
  result.converged = best.converged;
  result.trace = std::move(best.trace);
  return result;
}

}  // namespace topicident
