#include "topicident/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "topicident/errors.hpp"
#include "topicident/identifiability.hpp"
#include "topicident/parallel.hpp"
#include "topicident/rng.hpp"

namespace topicident {
namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Least squares of y on x with the slope's standard error from the residuals.
void fit_line(const std::vector<double>& x, const std::vector<double>& y,
              double& slope, double& intercept, double& slope_stderr) {
  const int k = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i)];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - mx;
    sxx += dx * dx;
    sxy += dx * (y[static_cast<std::size_t>(i)] - my);
  }
  slope = sxy / sxx;
  intercept = my - slope * mx;
  double rss = 0.0;
  for (int i = 0; i < k; ++i) {
    const double r = y[static_cast<std::size_t>(i)] - intercept -
                     slope * x[static_cast<std::size_t>(i)];
    rss += r * r;
  }
  slope_stderr = k > 2 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
}

// Random direction with zero row sums and unit total l1 mass.
PerturbationDirection random_direction(int topic_count, int vocab_size,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd entries(topic_count, vocab_size);
  for (int j = 0; j < topic_count; ++j) {
    for (int w = 0; w < vocab_size; ++w) entries(j, w) = gauss(rng);
    entries.row(j).array() -= entries.row(j).mean();
  }
  return PerturbationDirection::create(std::move(entries)).normalized();
}

// theta + scale * delta when it stays on the floored simplex.
bool try_perturb(const TopicMatrix& theta, const PerturbationDirection& delta,
                 double scale, TopicMatrix& out) {
  Eigen::MatrixXd rows = theta.rows + scale * delta.entries;
  if (rows.minCoeff() < theta.c0) return false;
  out = TopicMatrix::create(std::move(rows), theta.c0);
  return true;
}

// One document type drawn per independent binomial thinning of the cell
// distribution; the likelihood-ratio statistic only sees type counts, so this
// is distribution-identical to sampling n documents and far cheaper.
void sample_cell_counts(const Eigen::VectorXd& cells, long long n,
                        std::mt19937_64& rng, std::vector<long long>& counts) {
  const int c = static_cast<int>(cells.size());
  counts.assign(static_cast<std::size_t>(c), 0);
  long long remaining = n;
  double mass = 1.0;
  for (int i = 0; i < c && remaining > 0; ++i) {
    if (i == c - 1 || mass <= cells[i]) {
      counts[static_cast<std::size_t>(i)] = remaining;
      remaining = 0;
      break;
    }
    const double p = std::clamp(cells[i] / mass, 0.0, 1.0);
    std::binomial_distribution<long long> binom(remaining, p);
    const long long k = binom(rng);
    counts[static_cast<std::size_t>(i)] = k;
    remaining -= k;
    mass -= cells[i];
  }
}

}  // namespace

RateCurve rate_experiment(const TopicMatrix& theta, const MixingDistribution& nu,
                          int m, const std::vector<long long>& n_grid,
                          int replicates, const FitOptions& fit_options,
                          std::uint64_t seed, const std::string& label,
                          int workers) {
  if (m < 1) throw std::invalid_argument("documents need at least one word");
  if (static_cast<int>(n_grid.size()) < 3)
    throw std::invalid_argument("log-log slope undefined for fewer than 3 grid points");
  for (std::size_t i = 0; i + 1 < n_grid.size(); ++i)
    if (n_grid[i] >= n_grid[i + 1])
      throw std::invalid_argument("sample-size grid must be strictly increasing");
  if (n_grid.front() < 1) throw std::invalid_argument("sample sizes must be positive");
  if (replicates < 5) throw std::invalid_argument("need at least 5 replicates");
  if (nu.topic_count() != theta.topic_count())
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");

  const int k = theta.topic_count();
  // The recovery target is the whole equivalent set; it is enumerable only in
  // the two-topic pairs case, and reduces to the permutation orbit elsewhere.
  std::vector<TopicMatrix> targets{theta};
  if (k == 2 && m == 2) targets = enumerate_equivalents_k2(theta, nu);

  RateCurve curve;
  curve.theta_label = label;
  curve.n_grid = n_grid;
  const int grid = static_cast<int>(n_grid.size());
  curve.errors.assign(static_cast<std::size_t>(grid),
                      std::vector<double>(static_cast<std::size_t>(replicates), 0.0));

  parallel_for(grid * replicates, workers, [&](int job) {
    const int ni = job / replicates;
    const int rep = job % replicates;
    std::mt19937_64 rng = make_engine(derive_seed(
        seed, {1ULL, static_cast<std::uint64_t>(ni), static_cast<std::uint64_t>(rep)}));
    const Corpus corpus =
        sample_corpus(theta, nu, m, n_grid[static_cast<std::size_t>(ni)], rng);
    FitOptions opts = fit_options;
    opts.seed = derive_seed(
        seed, {2ULL, static_cast<std::uint64_t>(ni), static_cast<std::uint64_t>(rep)});
    opts.workers = 1;  // the outer loop owns the parallelism
    const FitResult fit = fit_mle(corpus, k, theta.c0, nu, opts);
    double error = std::numeric_limits<double>::infinity();
    for (const TopicMatrix& target : targets)
      error = std::min(error, wasserstein_distance(target, fit.theta_hat));
    curve.errors[static_cast<std::size_t>(ni)][static_cast<std::size_t>(rep)] = error;
  });

  curve.mean_error.resize(static_cast<std::size_t>(grid));
  curve.median_error.resize(static_cast<std::size_t>(grid));
  std::vector<double> log_n(static_cast<std::size_t>(grid));
  std::vector<double> log_med(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    const auto& row = curve.errors[static_cast<std::size_t>(i)];
    double mean = 0.0;
    for (double e : row) mean += e;
    curve.mean_error[static_cast<std::size_t>(i)] = mean / replicates;
    curve.median_error[static_cast<std::size_t>(i)] = median_of(row);
    log_n[static_cast<std::size_t>(i)] =
        std::log(static_cast<double>(n_grid[static_cast<std::size_t>(i)]));
    log_med[static_cast<std::size_t>(i)] =
        std::log(curve.median_error[static_cast<std::size_t>(i)]);
  }
  fit_line(log_n, log_med, curve.slope, curve.intercept, curve.slope_stderr);
  return curve;
}

namespace {

void check_two_point_args(const TopicMatrix& theta, const MixingDistribution& nu,
                          int m, double distance, long long n, int replicates) {
  if (m < 1) throw std::invalid_argument("documents need at least one word");
  if (!(distance >= 0.0) || !std::isfinite(distance))
    throw std::invalid_argument("distance must be finite and nonnegative");
  if (n < 1) throw std::invalid_argument("need at least one document");
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (nu.topic_count() != theta.topic_count())
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");
}

TwoPointResult two_point_core(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                              const MixingDistribution& nu, int m, long long n,
                              int replicates, std::uint64_t seed);

}  // namespace

TwoPointResult two_point_test_at_distance(const TopicMatrix& theta,
                                          const MixingDistribution& nu, int m,
                                          double distance, long long n,
                                          int replicates, std::uint64_t seed) {
  check_two_point_args(theta, nu, m, distance, n, replicates);
  TopicMatrix theta_prime = theta;
  if (distance > 0.0) {
    std::mt19937_64 dir_rng = make_engine(derive_seed(seed, {3ULL}));
    bool feasible = false;
    for (int attempt = 0; attempt < 1000 && !feasible; ++attempt) {
      const PerturbationDirection delta =
          random_direction(theta.topic_count(), theta.vocab_size(), dir_rng);
      feasible = try_perturb(theta, delta, distance, theta_prime);
    }
    if (!feasible)
      throw std::invalid_argument("perturbed parameter infeasible at the requested distance");
  }
  return two_point_core(theta, theta_prime, nu, m, n, replicates, seed);
}

namespace {

TwoPointResult two_point_core(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                              const MixingDistribution& nu, int m, long long n,
                              int replicates, std::uint64_t seed) {
  const Eigen::VectorXd p = enumerate_distribution(theta, nu, m);
  const Eigen::VectorXd q = enumerate_distribution(theta_prime, nu, m);
  const int cells = static_cast<int>(p.size());
  std::vector<double> log_ratio(static_cast<std::size_t>(cells));
  for (int c = 0; c < cells; ++c)
    log_ratio[static_cast<std::size_t>(c)] = std::log(p[c]) - std::log(q[c]);

  long long truth_counts[2] = {0, 0};
  long long error_counts[2] = {0, 0};
  std::vector<long long> counts;
  for (int rep = 0; rep < replicates; ++rep) {
    std::mt19937_64 rng = make_engine(
        derive_seed(seed, {4ULL, static_cast<std::uint64_t>(rep)}));
    std::bernoulli_distribution coin(0.5);
    const int truth = coin(rng) ? 1 : 0;
    sample_cell_counts(truth == 0 ? p : q, n, rng, counts);
    double llr = 0.0;
    for (int c = 0; c < cells; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        llr += static_cast<double>(counts[static_cast<std::size_t>(c)]) *
               log_ratio[static_cast<std::size_t>(c)];
    int decided;
    if (llr > 0.0)
      decided = 0;
    else if (llr < 0.0)
      decided = 1;
    else
      decided = coin(rng) ? 1 : 0;
    ++truth_counts[truth];
    if (decided != truth) ++error_counts[truth];
  }

  TwoPointResult result;
  result.n = n;
  result.distance = wasserstein_distance(theta, theta_prime);
  result.replicates = replicates;
  result.type1_rate =
      truth_counts[0] > 0
          ? static_cast<double>(error_counts[0]) / static_cast<double>(truth_counts[0])
          : 0.0;
  result.type2_rate =
      truth_counts[1] > 0
          ? static_cast<double>(error_counts[1]) / static_cast<double>(truth_counts[1])
          : 0.0;
  result.error_rate = std::max(result.type1_rate, result.type2_rate);
  return result;
}

}  // namespace

TwoPointResult two_point_test(const TopicMatrix& theta, const MixingDistribution& nu,
                              int m, int p_order, double radius_constant,
                              long long n, int replicates, std::uint64_t seed) {
  if (p_order < 1 || p_order > 2)
    throw std::invalid_argument("degeneracy order must be 1 or 2");
  if (!(radius_constant > 0.0))
    throw std::invalid_argument("radius constant must be positive");
  const double distance =
      radius_constant * std::pow(static_cast<double>(n), -1.0 / (2.0 * p_order));
  if (p_order == 1)
    return two_point_test_at_distance(theta, nu, m, distance, n, replicates, seed);

  // Order 2 demands a direction whose first-order term cancels; a generic
  // direction separates at first order and the indistinguishability window
  // closes. Duplicated rows admit the split direction; pairs admit the cycle.
  check_two_point_args(theta, nu, m, distance, n, replicates);
  const int k = theta.topic_count();
  PerturbationDirection delta;
  bool found = false;
  for (int j = 0; j < k && !found; ++j)
    for (int l = j + 1; l < k && !found; ++l)
      if (theta.rows.row(j) == theta.rows.row(l)) {
        delta = duplicate_topic_direction(k, theta.vocab_size(), j, l);
        found = true;
      }
  if (!found && k >= 3 && m == 2) {
    delta = cyclic_difference_direction(theta);
    found = true;
  }
  if (!found)
    throw std::invalid_argument(
        "no first-order-degenerate direction available at this configuration");
  TopicMatrix theta_prime;
  if (!try_perturb(theta, delta, distance, theta_prime))
    throw std::invalid_argument("perturbed parameter infeasible at the requested distance");
  return two_point_core(theta, theta_prime, nu, m, n, replicates, seed);
}

double empirical_kl(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                    const MixingDistribution& nu, const Corpus& corpus) {
  if (theta.topic_count() != theta_prime.topic_count() ||
      theta.vocab_size() != theta_prime.vocab_size())
    throw std::invalid_argument("parameter shapes disagree");
  if (corpus.documents.empty()) throw std::invalid_argument("corpus is empty");
  const DocumentHistogram hist = DocumentHistogram::from(corpus);
  double total = 0.0;
  for (const auto& [doc, count] : hist.types)
    total += static_cast<double>(count) *
             (std::log(likelihood(theta, nu, doc)) -
              std::log(likelihood(theta_prime, nu, doc)));
  return total / static_cast<double>(corpus.size());
}

BoundReport bound_suite(const TopicMatrix& theta, const MixingDistribution& nu,
                        int m, const BoundSuiteOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("need at least one trial");
  if (!(options.scale_min > 0.0) || !(options.scale_max >= options.scale_min))
    throw std::invalid_argument("perturbation scales must satisfy 0 < min <= max");
  if (!(options.constant_scale > 0.0))
    throw std::invalid_argument("constant scale must be positive");

  BoundReport report;
  report.p_order = classify_order(theta, nu, m).p_order;
  report.trials = options.trials;
  report.trial_data.resize(static_cast<std::size_t>(options.trials));

  const int k = theta.topic_count();
  const int v = theta.vocab_size();
  const double log_min = std::log(options.scale_min);
  const double log_max = std::log(options.scale_max);
  parallel_for(options.trials, options.workers, [&](int t) {
    std::mt19937_64 rng = make_engine(
        derive_seed(options.seed, {5ULL, static_cast<std::uint64_t>(t)}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    TopicMatrix theta_prime;
    bool feasible = false;
    for (int attempt = 0; attempt < 1000 && !feasible; ++attempt) {
      const PerturbationDirection delta = random_direction(k, v, rng);
      const double scale = std::exp(log_min + unif(rng) * (log_max - log_min));
      feasible = try_perturb(theta, delta, scale, theta_prime);
    }
    if (!feasible)
      throw GuardError("no feasible perturbation found; theta sits on the floor");
    BoundTrial& trial = report.trial_data[static_cast<std::size_t>(t)];
    trial.epsilon = wasserstein_distance(theta, theta_prime);
    trial.l2 = (theta_prime.rows - theta.rows).norm();
    trial.tv = tv_distance(theta, theta_prime, nu, m);
    trial.kl = kl_divergence(theta, theta_prime, nu, m);
  });

  const double vm = std::pow(static_cast<double>(v), m) * options.constant_scale;
  const double two_vm = std::pow(2.0 * v, m) * options.constant_scale;
  const double c0m = std::pow(theta.c0, m);
  const double reverse_const =
      (1.0 / (2.0 * c0m * c0m) + 1.0 / c0m) * options.constant_scale;

  report.checks = {
      {"tv_wasserstein_power", 0, std::numeric_limits<double>::infinity()},
      {"tv_l2", 0, std::numeric_limits<double>::infinity()},
      {"pinsker_lower", 0, std::numeric_limits<double>::infinity()},
      {"pinsker_reverse", 0, std::numeric_limits<double>::infinity()},
  };
  auto tally = [&](int check, double slack) {
    if (slack < 0.0) ++report.checks[static_cast<std::size_t>(check)].violations;
    report.checks[static_cast<std::size_t>(check)].worst_slack =
        std::min(report.checks[static_cast<std::size_t>(check)].worst_slack, slack);
  };
  for (const BoundTrial& trial : report.trial_data) {
    if (trial.epsilon >= 0.5)
      throw GuardError("perturbation left the small-distance regime of the power bound");
    const double power = std::pow(trial.epsilon, report.p_order);
    tally(0, vm / (1.0 - trial.epsilon) * power - trial.tv);
    tally(1, two_vm * trial.l2 - trial.tv);
    tally(2, trial.kl - 2.0 * trial.tv * trial.tv);
    tally(3, reverse_const * trial.tv * trial.tv - trial.kl);
  }
  report.all_pass = true;
  for (const BoundCheck& check : report.checks)
    if (check.violations > 0) report.all_pass = false;
  return report;
}

}  // namespace topicident
