#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "topicident/errors.hpp"

namespace topicident {

/// Exact mixed moments are cached up to this total order by default.
inline constexpr int kDefaultMomentOrder = 6;

enum class MixingKind { SymmetricDirichlet, UniformVertex, CustomMoments };

/// Exchangeable prior on the topic-weight simplex, exposed through exact
/// mixed moments E[prod_j h_j^{a_j}] and, where available, sampling.
///
/// Moments depend only on the multiset of exponents (exchangeability), so the
/// cache is keyed by the sorted-descending exponent pattern.
class MixingDistribution {
 public:
  /// Oracle receives the exponent vector indexed by topic (length K).
  using MomentOracle = std::function<double(const std::vector<int>&)>;
  using Sampler = std::function<Eigen::VectorXd(std::mt19937_64&)>;

  static MixingDistribution symmetric_dirichlet(int topic_count, double alpha,
                                                int max_order = kDefaultMomentOrder);
  static MixingDistribution uniform_vertex(int topic_count,
                                           int max_order = kDefaultMomentOrder);
  /// The oracle must be exchangeability-consistent; the constructor verifies
  /// it on random exponent permutations and rejects violations.
  static MixingDistribution custom_moments(int topic_count, MomentOracle oracle,
                                           int max_order = kDefaultMomentOrder,
                                           Sampler sampler = nullptr);

  MixingKind kind() const { return kind_; }
  int topic_count() const { return topic_count_; }
  int max_order() const { return max_order_; }
  double alpha() const { return alpha_; }
  bool can_sample() const;

  /// E[prod_j h_j^{exponents[j]}]; exponents has one entry per topic.
  /// Throws GuardError when the total order exceeds the cache limit.
  double mixed_moment(const std::vector<int>& exponents) const;

  /// Unvalidated fast path for hot loops: counts indexed by topic, total
  /// order must already be within the cache limit.
  double moment_of_counts(std::span<const int> counts) const;

  /// One draw of the topic-weight vector h.
  Eigen::VectorXd sample_h(std::mt19937_64& rng) const;

 private:
  MixingDistribution() = default;
  void fill_cache(const MomentOracle& oracle);
  void verify_exchangeable(const MomentOracle& oracle) const;

  MixingKind kind_ = MixingKind::SymmetricDirichlet;
  int topic_count_ = 0;
  int max_order_ = 0;
  double alpha_ = 0.0;
  Sampler sampler_;
  std::unordered_map<std::uint64_t, double> moments_;  // key: packed sorted pattern
};

struct RegularityReport {
  double second_margin = 0.0;                // E[h1^2] - E[h1 h2]
  std::optional<double> third_margin;        // E[h1^3] + 2E[h1h2h3] - 3E[h1^2 h2], K >= 3
  bool passes = false;                       // all applicable margins strictly positive
};

/// Strict moment margins required for order classification to apply.
RegularityReport check_regularity(const MixingDistribution& nu);

/// E[h1^2] - E[h1 h2]. Throws RegularityError when not strictly positive.
double second_moment_gap(const MixingDistribution& nu);

}  // namespace topicident
