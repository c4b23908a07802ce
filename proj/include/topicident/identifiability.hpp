#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "topicident/mixing.hpp"
#include "topicident/model.hpp"

namespace topicident {

/// Dense SVDs are restricted to this many columns.
inline constexpr int kMaxSvdColumns = 1000;
/// Equivalent-parameter enumeration for two topics scans 2^V swap patterns.
inline constexpr int kMaxEquivalentVocab = 16;

/// Sensitivity of the document distribution at position i to topic j:
/// E_h[ h_j * prod_{i' != i} p_{theta,h}(x_{i'}) ].
double xi_coefficient(const TopicMatrix& theta, const MixingDistribution& nu,
                      int position, int topic, const Document& doc);

/// Stacked first-order system: one row per document x in [V]^m (lexicographic)
/// with entry sum_{i: x_i = k} xi(i, j) at column j*V + k, followed by K row-sum
/// constraint rows (ones across each topic's V-column block). Full column rank
/// is equivalent to first-order identifiability.
struct IdentifiabilityMatrix {
  int vocab_size = 0;
  int topic_count = 0;
  int words_per_document = 0;
  Eigen::MatrixXd matrix;  // (V^m + K) x (V*K)
};

IdentifiabilityMatrix build_identifiability_matrix(const TopicMatrix& theta,
                                                   const MixingDistribution& nu,
                                                   int m, int workers = 1);

/// (sigma_min, sigma_max): extreme singular values, where sigma_min is the
/// (#cols)-th one (0 when rank-deficient or under-determined). Dense SVD,
/// with a QR reduction first for strongly rectangular inputs.
std::pair<double, double> singular_value_extremes(const Eigen::MatrixXd& a);

/// Hager's l1 condition estimate for a square matrix: a monotone, guaranteed
/// lower bound on kappa_1 computed from at most five solve pairs. Returns
/// +infinity when the factorization detects singularity.
double hager_condition_estimate(const Eigen::MatrixXd& b);

struct ClassifyOptions {
  /// rank tolerance = max(rows, cols) * machine epsilon * tolerance_factor
  double tolerance_factor = 1e3;
  int workers = 1;
};

struct IdentifiabilityReport {
  int vocab_size = 0;
  int topic_count = 0;
  int words_per_document = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double kappa2 = 0.0;            // exact sigma_max / sigma_min
  double kappa1_estimate = 0.0;   // sqrt of the Hager estimate on A^T A
  double rank_tolerance = 0.0;    // relative threshold used for the rank call
  bool full_column_rank = false;
  int p_order = 0;                // 1 when full rank, else 2
};

/// Order of degeneracy for the given parameters; always 1 or 2 under the
/// standing floor/regularity/length assumptions.
IdentifiabilityReport classify_order(const TopicMatrix& theta,
                                     const MixingDistribution& nu, int m,
                                     const ClassifyOptions& options = {});

/// sum_x |expansion term of the given order at x| for a fixed direction;
/// the infimum of this over unit directions defines the order of degeneracy.
double degeneracy_objective(const TopicMatrix& theta, const MixingDistribution& nu,
                            int m, int order, const PerturbationDirection& delta);

/// Unit direction that cancels the first-order term whenever theta_j equals
/// theta_k: delta_j = (e_1 - e_2)/4, delta_k = -delta_j, other rows zero.
PerturbationDirection duplicate_topic_direction(int topic_count, int vocab_size,
                                                int j, int k);

/// Unit direction from cyclic pairwise differences of the first three rows;
/// cancels the first-order term for any K >= 3 model read with m = 2.
/// Requires the three differences to be nonvanishing.
PerturbationDirection cyclic_difference_direction(const TopicMatrix& theta);

/// All parameters indistinguishable from theta at K = 2, m = 2: per-word
/// unordered value pairs are preserved, so candidates are the 2^V coordinate
/// swap patterns filtered by row-stochasticity and exact distribution match.
/// Always contains theta (and its row swap when distinct).
std::vector<TopicMatrix> enumerate_equivalents_k2(const TopicMatrix& theta,
                                                  const MixingDistribution& nu);

/// Mixing selector used by generated benchmark suites and the CLI.
struct MixingSpec {
  std::string kind = "dirichlet";  // "dirichlet" | "vertex"
  double alpha = 1.0;

  MixingDistribution instantiate(int topic_count, int max_order) const;
};

struct Table1Row {
  std::string label;
  int vocab_size = 0;
  int topic_count = 0;
  int words_per_document = 0;
  IdentifiabilityReport report;
};

struct BenchmarkParameter {
  TopicMatrix theta;
  int words_per_document = 0;
};

/// The stable labels of the benchmark families, in table order.
const std::vector<std::string>& table1_labels();

/// Parameters behind the named benchmark row, drawn from the seed at the
/// given vocabulary size. The label fixes K, the document length, and the
/// imposed row structure (duplicates, convex combinations).
BenchmarkParameter table1_parameter(const std::string& label, int vocab_size,
                                    std::uint64_t seed);

/// Benchmark classification table over seven structured parameter families
/// (independent rows at several (K, m), duplicated rows, convex-combination
/// third rows). Random entries are drawn from the seed; labels are stable.
std::vector<Table1Row> table1_suite(std::uint64_t seed, const MixingSpec& mixing = {},
                                    int workers = 1);

}  // namespace topicident
