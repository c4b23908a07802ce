#include "topicident/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "topicident/rng.hpp"

namespace topicident {
namespace {

constexpr int kMaxTopicsForPacking = 16;  // pattern parts pack 4 bits each

std::uint64_t pack_sorted_pattern(std::span<const int> sorted_desc) {
  std::uint64_t key = 0;
  for (int part : sorted_desc) {
    if (part == 0) break;
    key = (key << 4) | static_cast<std::uint64_t>(part);
  }
  return key;
}

// All exponent patterns (non-increasing part lists) with at most max_parts
// parts and total order at most max_order, including the empty pattern.
void enumerate_patterns(int max_parts, int max_order,
                        std::vector<std::vector<int>>& out) {
  std::vector<int> current;
  auto rec = [&](auto&& self, int max_next, int remaining) -> void {
    out.push_back(current);
    if (static_cast<int>(current.size()) == max_parts) return;
    for (int p = std::min(max_next, remaining); p >= 1; --p) {
      current.push_back(p);
      self(self, p, remaining - p);
      current.pop_back();
    }
  };
  rec(rec, max_order, max_order);
}

double log_rising_factorial(double x, int n) {
  return std::lgamma(x + n) - std::lgamma(x);
}

}  // namespace

MixingDistribution MixingDistribution::symmetric_dirichlet(int topic_count,
                                                           double alpha,
                                                           int max_order) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("dirichlet concentration must be positive and finite");
  MixingDistribution nu;
  nu.kind_ = MixingKind::SymmetricDirichlet;
  nu.topic_count_ = topic_count;
  nu.max_order_ = max_order;
  nu.alpha_ = alpha;
  int k = topic_count;
  nu.fill_cache([alpha, k](const std::vector<int>& exponents) {
    int total = std::accumulate(exponents.begin(), exponents.end(), 0);
    double log_m = -log_rising_factorial(k * alpha, total);
    for (int a : exponents)
      if (a > 0) log_m += log_rising_factorial(alpha, a);
    return std::exp(log_m);
  });
  nu.sampler_ = [alpha, k](std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    Eigen::VectorXd h(k);
    for (int tries = 0; tries < 100; ++tries) {
      double total = 0.0;
      for (int j = 0; j < k; ++j) {
        h[j] = gamma(rng);
        total += h[j];
      }
      if (total > 0.0) return Eigen::VectorXd(h / total);
    }
    throw std::runtime_error("dirichlet sampler kept drawing zero mass");
  };
  return nu;
}

MixingDistribution MixingDistribution::uniform_vertex(int topic_count, int max_order) {
  MixingDistribution nu;
  nu.kind_ = MixingKind::UniformVertex;
  nu.topic_count_ = topic_count;
  nu.max_order_ = max_order;
  int k = topic_count;
  nu.fill_cache([k](const std::vector<int>& exponents) {
    int touched = 0;
    for (int a : exponents) touched += (a > 0);
    if (touched == 0) return 1.0;
    return touched == 1 ? 1.0 / k : 0.0;
  });
  nu.sampler_ = [k](std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k);
    h[pick(rng)] = 1.0;
    return h;
  };
  return nu;
}

MixingDistribution MixingDistribution::custom_moments(int topic_count,
                                                      MomentOracle oracle,
                                                      int max_order,
                                                      Sampler sampler) {
  if (!oracle) throw std::invalid_argument("custom mixing needs a moment oracle");
  MixingDistribution nu;
  nu.kind_ = MixingKind::CustomMoments;
  nu.topic_count_ = topic_count;
  nu.max_order_ = max_order;
  nu.sampler_ = std::move(sampler);
  nu.fill_cache(oracle);
  nu.verify_exchangeable(oracle);
  return nu;
}

void MixingDistribution::fill_cache(const MomentOracle& oracle) {
  if (topic_count_ < 1) throw std::invalid_argument("need at least one topic");
  if (topic_count_ > kMaxTopicsForPacking)
    throw std::invalid_argument("mixed-moment cache supports at most 16 topics");
  if (max_order_ < 1 || max_order_ > 15)
    throw std::invalid_argument("moment cache order must be in [1, 15]");
  std::vector<std::vector<int>> patterns;
  enumerate_patterns(topic_count_, max_order_, patterns);
  moments_.reserve(patterns.size() * 2);
  for (const auto& pattern : patterns) {
    std::vector<int> exponents(static_cast<std::size_t>(topic_count_), 0);
    for (std::size_t i = 0; i < pattern.size(); ++i) exponents[i] = pattern[i];
    double value = oracle(exponents);
    if (!std::isfinite(value) || value < -1e-12 || value > 1.0 + 1e-12)
      throw std::invalid_argument("moment oracle returned a value outside [0, 1]");
    moments_[pack_sorted_pattern(pattern)] = value;
  }
}

void MixingDistribution::verify_exchangeable(const MomentOracle& oracle) const {
  // Fixed-seed spot checks: the cached canonical assignment must match the
  // oracle under random index permutations of each pattern.
  std::mt19937_64 rng = make_engine(0x45584348u);
  std::vector<std::vector<int>> patterns;
  enumerate_patterns(topic_count_, max_order_, patterns);
  std::vector<int> indices(static_cast<std::size_t>(topic_count_));
  for (const auto& pattern : patterns) {
    if (pattern.empty()) {
      std::vector<int> zero(static_cast<std::size_t>(topic_count_), 0);
      if (std::abs(oracle(zero) - 1.0) > 1e-12)
        throw std::invalid_argument("moment of the empty exponent set must be 1");
      continue;
    }
    double canonical = moments_.at(pack_sorted_pattern(pattern));
    for (int rep = 0; rep < 3; ++rep) {
      std::iota(indices.begin(), indices.end(), 0);
      std::shuffle(indices.begin(), indices.end(), rng);
      std::vector<int> exponents(static_cast<std::size_t>(topic_count_), 0);
      for (std::size_t i = 0; i < pattern.size(); ++i) exponents[indices[i]] = pattern[i];
      double permuted = oracle(exponents);
      if (std::abs(permuted - canonical) > 1e-12 * std::max(1.0, std::abs(canonical)))
        throw std::invalid_argument("moment oracle is not exchangeable");
    }
  }
  // First moments of an exchangeable distribution on the simplex sum to 1.
  std::vector<int> first(static_cast<std::size_t>(topic_count_), 0);
  first[0] = 1;
  if (std::abs(topic_count_ * oracle(first) - 1.0) > 1e-9)
    throw std::invalid_argument("first moments must sum to 1 across topics");
}

double MixingDistribution::mixed_moment(const std::vector<int>& exponents) const {
  if (static_cast<int>(exponents.size()) != topic_count_)
    throw std::invalid_argument("exponent vector must have one entry per topic");
  int total = 0;
  for (int a : exponents) {
    if (a < 0) throw std::invalid_argument("exponents must be nonnegative");
    total += a;
  }
  if (total > max_order_)
    throw GuardError("mixed-moment order exceeds the cache limit");
  return moment_of_counts(exponents);
}

double MixingDistribution::moment_of_counts(std::span<const int> counts) const {
  int sorted[kMaxTopicsForPacking];
  int parts = 0;
  for (int c : counts)
    if (c > 0) sorted[parts++] = c;
  std::sort(sorted, sorted + parts, std::greater<int>());
  auto it = moments_.find(pack_sorted_pattern(std::span<const int>(sorted, parts)));
  if (it == moments_.end())
    throw GuardError("mixed-moment order exceeds the cache limit");
  return it->second;
}

bool MixingDistribution::can_sample() const {
  return static_cast<bool>(sampler_);
}

Eigen::VectorXd MixingDistribution::sample_h(std::mt19937_64& rng) const {
  if (!sampler_)
    throw std::invalid_argument("this mixing distribution cannot sample");
  return sampler_(rng);
}

RegularityReport check_regularity(const MixingDistribution& nu) {
  int k = nu.topic_count();
  if (k < 2) throw std::invalid_argument("regularity margins need at least two topics");
  auto pattern = [k](std::initializer_list<int> parts) {
    std::vector<int> exponents(static_cast<std::size_t>(k), 0);
    int i = 0;
    for (int p : parts) exponents[i++] = p;
    return exponents;
  };
  RegularityReport report;
  report.second_margin =
      nu.mixed_moment(pattern({2})) - nu.mixed_moment(pattern({1, 1}));
  report.passes = report.second_margin > 0.0;
  if (k >= 3) {
    double third = nu.mixed_moment(pattern({3})) +
                   2.0 * nu.mixed_moment(pattern({1, 1, 1})) -
                   3.0 * nu.mixed_moment(pattern({2, 1}));
    report.third_margin = third;
    report.passes = report.passes && third > 0.0;
  }
  return report;
}

double second_moment_gap(const MixingDistribution& nu) {
  int k = nu.topic_count();
  if (k < 2) throw std::invalid_argument("regularity margins need at least two topics");
  std::vector<int> two(static_cast<std::size_t>(k), 0), pair(static_cast<std::size_t>(k), 0);
  two[0] = 2;
  pair[0] = pair[1] = 1;
  double gap = nu.mixed_moment(two) - nu.mixed_moment(pair);
  if (!(gap > 0.0))
    throw RegularityError("second-moment margin is not strictly positive");
  return gap;
}

}  // namespace topicident
