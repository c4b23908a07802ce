#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "topicident/errors.hpp"
#include "topicident/mixing.hpp"

namespace topicident {

/// Per-document likelihood expansions enumerate K^m topic tuples.
inline constexpr double kMaxTopicTuples = 1e7;
/// Exhaustive document enumerations cover V^m cells.
inline constexpr double kMaxDocumentCells = 2e6;

/// Row-stochastic K x V matrix with every entry >= c0 (closed floor).
struct TopicMatrix {
  Eigen::MatrixXd rows;  // K x V
  double c0 = 0.0;

  int topic_count() const { return static_cast<int>(rows.rows()); }
  int vocab_size() const { return static_cast<int>(rows.cols()); }

  /// Validates row sums (within 1e-12) and the entry floor.
  static TopicMatrix create(Eigen::MatrixXd rows, double c0);

  TopicMatrix permuted(std::span<const int> perm) const;
};

/// 0-based word ids; the on-disk CSV format is 1-based.
using Document = std::vector<int>;

struct Corpus {
  int words_per_document = 0;
  std::vector<Document> documents;

  /// All documents must share one length m >= 2 with word ids in [0, V).
  static Corpus create(int vocab_size, std::vector<Document> documents);

  long long size() const { return static_cast<long long>(documents.size()); }
};

/// Topic-space perturbation with zero row sums; unit l1 mass on demand.
struct PerturbationDirection {
  Eigen::MatrixXd entries;  // K x V

  static PerturbationDirection create(Eigen::MatrixXd entries);
  /// As create(), additionally requiring total l1 mass 1 within 1e-12.
  static PerturbationDirection create_unit(Eigen::MatrixXd entries);

  double l1_norm() const { return entries.cwiseAbs().sum(); }
  PerturbationDirection normalized() const;
};

/// Sorts the buffer by value before summation. Summands that are equal as
/// multisets then reduce to bit-identical totals, which makes quantities
/// built from them exactly invariant under topic relabeling.
double symmetric_sum(std::vector<double>& terms);

/// p_theta(x) by exact moment expansion over topic tuples.
double likelihood(const TopicMatrix& theta, const MixingDistribution& nu,
                  const Document& doc);

/// Position sensitivities E_h[ h_j * prod_{i != position} p_{theta,h}(x_i) ]
/// for every topic j at once; gradient rows and the first-order system are
/// assembled from these. Unvalidated fast path.
Eigen::VectorXd xi_row(const TopicMatrix& theta, const MixingDistribution& nu,
                       const Document& doc, int position);

/// All V^m document probabilities in lexicographic order; sums to 1.
Eigen::VectorXd enumerate_distribution(const TopicMatrix& theta,
                                       const MixingDistribution& nu, int m);

Document sample_document(const TopicMatrix& theta, const MixingDistribution& nu,
                         int m, std::mt19937_64& rng);

Corpus sample_corpus(const TopicMatrix& theta, const MixingDistribution& nu,
                     int m, long long n, std::mt19937_64& rng);

double log_likelihood(const TopicMatrix& theta, const MixingDistribution& nu,
                      const Corpus& corpus);

/// d/d theta_j(v) of log_likelihood, as a K x V matrix.
Eigen::MatrixXd log_likelihood_gradient(const TopicMatrix& theta,
                                        const MixingDistribution& nu,
                                        const Corpus& corpus);

/// Order-`order` term of the likelihood difference expansion at document x:
/// sum over position subsets S of size `order` of
///   E_h[ prod_{i not in S} p_{theta,h}(x_i) * prod_{i in S} delta_h(x_i) ].
/// Evaluated exactly via mixed moments; a pure polynomial identity, so theta
/// + delta need not be feasible. Orders 1..m sum to the likelihood difference.
double expansion_term(const TopicMatrix& theta, const MixingDistribution& nu,
                      const PerturbationDirection& delta, int order,
                      const Document& doc);

/// 0.5 * sum_x |p - q| over [V]^m by exhaustive enumeration.
double tv_distance(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                   const MixingDistribution& nu, int m);

/// sum_x p log(p/q); finite because entries are floored away from zero.
double kl_divergence(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                     const MixingDistribution& nu, int m);

/// min over topic matchings pi of sum_k ||theta_k - theta'_pi(k)||_1.
/// Exact: brute force for K <= 8, assignment solver above.
double wasserstein_distance(const TopicMatrix& theta, const TopicMatrix& theta_prime);

/// Rows with entries i.i.d. U(0, 1), l1-normalized. A row is redrawn while
/// its smallest entry falls below max(c0, min_entry).
TopicMatrix random_topic_matrix(int vocab_size, int topic_count, double c0,
                                std::mt19937_64& rng, double min_entry = 0.0);

/// Distinct documents with multiplicities; shared by the likelihood-driven
/// routines so per-iteration cost is independent of corpus size.
struct DocumentHistogram {
  int words_per_document = 0;
  std::vector<std::pair<Document, long long>> types;

  static DocumentHistogram from(const Corpus& corpus);
};

}  // namespace topicident
