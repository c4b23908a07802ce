#include "topicident/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace topicident {
namespace {

// Buffered (sorted) summation is used up to this many expansion terms; the
// relabeling-invariance guarantee of symmetric_sum only matters at small
// sizes, and unbuffered accumulation avoids large allocations near the guard.
constexpr int kSymmetricBufferLimit = 1 << 16;

void check_document(const Document& doc, int vocab_size) {
  if (doc.empty()) throw std::invalid_argument("document must contain at least one word");
  for (int w : doc)
    if (w < 0 || w >= vocab_size)
      throw std::invalid_argument("word id out of vocabulary range");
}

void check_tuple_guard(int topic_count, int m) {
  if (std::pow(static_cast<double>(topic_count), m) > kMaxTopicTuples)
    throw GuardError("topic-tuple enumeration K^m exceeds the guard");
}

void check_cell_guard(int vocab_size, int m) {
  if (std::pow(static_cast<double>(vocab_size), m) > kMaxDocumentCells)
    throw GuardError("document enumeration V^m exceeds the guard");
}

void check_same_mixing(const TopicMatrix& theta, const MixingDistribution& nu) {
  if (theta.topic_count() != nu.topic_count())
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");
}

// sum over topic tuples of moment(counts) * prod_i theta_{t_i}(x_i)
double tuple_expansion_sum(const TopicMatrix& theta, const MixingDistribution& nu,
                           const Document& doc) {
  const int k = theta.topic_count();
  const int m = static_cast<int>(doc.size());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  const double tuples = std::pow(static_cast<double>(k), m);
  const bool buffered = tuples <= kSymmetricBufferLimit;
  std::vector<double> buffer;
  if (buffered) buffer.reserve(static_cast<std::size_t>(tuples));
  double direct = 0.0;
  auto rec = [&](auto&& self, int i, double prod) -> void {
    if (i == m) {
      double term = prod * nu.moment_of_counts(counts);
      if (buffered) buffer.push_back(term);
      else direct += term;
      return;
    }
    for (int j = 0; j < k; ++j) {
      ++counts[j];
      self(self, i + 1, prod * theta.rows(j, doc[static_cast<std::size_t>(i)]));
      --counts[j];
    }
  };
  rec(rec, 0, 1.0);
  return buffered ? symmetric_sum(buffer) : direct;
}

}  // namespace

Eigen::VectorXd xi_row(const TopicMatrix& theta, const MixingDistribution& nu,
                       const Document& doc, int position) {
  const int k = theta.topic_count();
  const int m = static_cast<int>(doc.size());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  const double tuples = std::pow(static_cast<double>(k), m - 1);
  const bool buffered = tuples * k <= kSymmetricBufferLimit;
  std::vector<std::vector<double>> buffers;
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(k);
  if (buffered) buffers.assign(static_cast<std::size_t>(k), {});
  auto rec = [&](auto&& self, int i, double prod) -> void {
    if (i == position) {
      self(self, i + 1, prod);
      return;
    }
    if (i >= m) {
      for (int j = 0; j < k; ++j) {
        ++counts[j];
        double term = prod * nu.moment_of_counts(counts);
        --counts[j];
        if (buffered) buffers[static_cast<std::size_t>(j)].push_back(term);
        else direct[j] += term;
      }
      return;
    }
    for (int j = 0; j < k; ++j) {
      ++counts[j];
      self(self, i + 1, prod * theta.rows(j, doc[static_cast<std::size_t>(i)]));
      --counts[j];
    }
  };
  rec(rec, 0, 1.0);
  if (!buffered) return direct;
  Eigen::VectorXd xi(k);
  for (int j = 0; j < k; ++j) xi[j] = symmetric_sum(buffers[static_cast<std::size_t>(j)]);
  return xi;
}

namespace {

void decode_document(long long cell, int vocab_size, Document& doc) {
  for (int i = static_cast<int>(doc.size()) - 1; i >= 0; --i) {
    doc[static_cast<std::size_t>(i)] = static_cast<int>(cell % vocab_size);
    cell /= vocab_size;
  }
}

double assignment_min_cost(const Eigen::MatrixXd& cost) {
  // Shortest-augmenting-path assignment with potentials, O(n^3).
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) terms.push_back(cost(p[static_cast<std::size_t>(j)] - 1, j - 1));
  return symmetric_sum(terms);
}

}  // namespace

TopicMatrix TopicMatrix::create(Eigen::MatrixXd rows, double c0) {
  if (rows.rows() < 1 || rows.cols() < 1)
    throw std::invalid_argument("topic matrix must be nonempty");
  if (!std::isfinite(c0) || c0 < 0.0 || c0 * static_cast<double>(rows.cols()) >= 1.0)
    throw std::invalid_argument("floor must satisfy 0 <= c0 and c0 * V < 1");
  if (!rows.allFinite())
    throw std::invalid_argument("topic matrix entries must be finite");
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    if (std::abs(rows.row(k).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("topic rows must sum to 1 within 1e-12");
    if (rows.row(k).minCoeff() < c0 - 1e-12)
      throw std::invalid_argument("topic entries must stay at or above the floor");
  }
  TopicMatrix theta;
  theta.rows = std::move(rows);
  theta.c0 = c0;
  return theta;
}

TopicMatrix TopicMatrix::permuted(std::span<const int> perm) const {
  const int k = topic_count();
  if (static_cast<int>(perm.size()) != k)
    throw std::invalid_argument("permutation length must equal K");
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  Eigen::MatrixXd out(k, vocab_size());
  for (int i = 0; i < k; ++i) {
    int target = perm[static_cast<std::size_t>(i)];
    if (target < 0 || target >= k || seen[static_cast<std::size_t>(target)])
      throw std::invalid_argument("not a permutation of topic labels");
    seen[static_cast<std::size_t>(target)] = 1;
    out.row(i) = rows.row(target);
  }
  TopicMatrix theta;
  theta.rows = std::move(out);
  theta.c0 = c0;
  return theta;
}

Corpus Corpus::create(int vocab_size, std::vector<Document> documents) {
  if (vocab_size < 1) throw std::invalid_argument("vocabulary must be nonempty");
  if (documents.empty()) throw std::invalid_argument("corpus must contain documents");
  const int m = static_cast<int>(documents.front().size());
  if (m < 2) throw std::invalid_argument("documents need at least two words");
  for (const Document& doc : documents) {
    if (static_cast<int>(doc.size()) != m)
      throw std::invalid_argument("all documents must share one length");
    check_document(doc, vocab_size);
  }
  Corpus corpus;
  corpus.words_per_document = m;
  corpus.documents = std::move(documents);
  return corpus;
}

PerturbationDirection PerturbationDirection::create(Eigen::MatrixXd entries) {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw std::invalid_argument("direction must be nonempty");
  if (!entries.allFinite())
    throw std::invalid_argument("direction entries must be finite");
  for (Eigen::Index k = 0; k < entries.rows(); ++k)
    if (std::abs(entries.row(k).sum()) > 1e-12)
      throw std::invalid_argument("direction rows must sum to 0 within 1e-12");
  PerturbationDirection delta;
  delta.entries = std::move(entries);
  return delta;
}

PerturbationDirection PerturbationDirection::create_unit(Eigen::MatrixXd entries) {
  PerturbationDirection delta = create(std::move(entries));
  if (std::abs(delta.l1_norm() - 1.0) > 1e-12)
    throw std::invalid_argument("direction must carry unit l1 mass");
  return delta;
}

PerturbationDirection PerturbationDirection::normalized() const {
  double mass = l1_norm();
  if (mass <= 0.0) throw std::invalid_argument("cannot normalize a zero direction");
  return create(entries / mass);
}

double symmetric_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

double likelihood(const TopicMatrix& theta, const MixingDistribution& nu,
                  const Document& doc) {
  check_same_mixing(theta, nu);
  check_document(doc, theta.vocab_size());
  check_tuple_guard(theta.topic_count(), static_cast<int>(doc.size()));
  if (static_cast<int>(doc.size()) > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
  return tuple_expansion_sum(theta, nu, doc);
}

Eigen::VectorXd enumerate_distribution(const TopicMatrix& theta,
                                       const MixingDistribution& nu, int m) {
  check_same_mixing(theta, nu);
  if (m < 1) throw std::invalid_argument("document length must be positive");
  check_cell_guard(theta.vocab_size(), m);
  check_tuple_guard(theta.topic_count(), m);
  if (m > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
  const long long cells = static_cast<long long>(std::llround(std::pow(theta.vocab_size(), m)));
  Eigen::VectorXd dist(cells);
  Document doc(static_cast<std::size_t>(m), 0);
  for (long long cell = 0; cell < cells; ++cell) {
    decode_document(cell, theta.vocab_size(), doc);
    dist[cell] = tuple_expansion_sum(theta, nu, doc);
  }
  return dist;
}

Document sample_document(const TopicMatrix& theta, const MixingDistribution& nu,
                         int m, std::mt19937_64& rng) {
  check_same_mixing(theta, nu);
  if (m < 1) throw std::invalid_argument("document length must be positive");
  Eigen::VectorXd h = nu.sample_h(rng);
  Eigen::VectorXd word_probs = theta.rows.transpose() * h;
  const double mass = word_probs.sum();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Document doc(static_cast<std::size_t>(m));
  const int v = theta.vocab_size();
  for (int i = 0; i < m; ++i) {
    double u = unif(rng) * mass;
    int word = v - 1;
    double acc = 0.0;
    for (int w = 0; w < v; ++w) {
      acc += word_probs[w];
      if (u <= acc) {
        word = w;
        break;
      }
    }
    doc[static_cast<std::size_t>(i)] = word;
  }
  return doc;
}

Corpus sample_corpus(const TopicMatrix& theta, const MixingDistribution& nu,
                     int m, long long n, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("corpus size must be positive");
  std::vector<Document> documents;
  documents.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i)
    documents.push_back(sample_document(theta, nu, m, rng));
  return Corpus::create(theta.vocab_size(), std::move(documents));
}

TopicMatrix random_topic_matrix(int vocab_size, int topic_count, double c0,
                                std::mt19937_64& rng, double min_entry) {
  if (vocab_size < 1 || topic_count < 1)
    throw std::invalid_argument("matrix dimensions must be positive");
  const double floor = std::max(c0, min_entry);
  if (floor * vocab_size >= 1.0)
    throw std::invalid_argument("entry floor leaves no feasible row");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd rows(topic_count, vocab_size);
  for (int k = 0; k < topic_count; ++k) {
    for (;;) {
      double total = 0.0;
      for (int v = 0; v < vocab_size; ++v) {
        rows(k, v) = unif(rng);
        total += rows(k, v);
      }
      if (total <= 0.0) continue;
      rows.row(k) /= total;
      if (rows.row(k).minCoeff() >= floor) break;
    }
  }
  return TopicMatrix::create(std::move(rows), c0);
}

DocumentHistogram DocumentHistogram::from(const Corpus& corpus) {
  std::map<Document, long long> counts;
  for (const Document& doc : corpus.documents) ++counts[doc];
  DocumentHistogram hist;
  hist.words_per_document = corpus.words_per_document;
  hist.types.assign(counts.begin(), counts.end());
  return hist;
}

double log_likelihood(const TopicMatrix& theta, const MixingDistribution& nu,
                      const Corpus& corpus) {
  check_same_mixing(theta, nu);
  check_tuple_guard(theta.topic_count(), corpus.words_per_document);
  if (corpus.words_per_document > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
  DocumentHistogram hist = DocumentHistogram::from(corpus);
  double total = 0.0;
  for (const auto& [doc, count] : hist.types) {
    check_document(doc, theta.vocab_size());
    total += static_cast<double>(count) * std::log(tuple_expansion_sum(theta, nu, doc));
  }
  return total;
}

Eigen::MatrixXd log_likelihood_gradient(const TopicMatrix& theta,
                                        const MixingDistribution& nu,
                                        const Corpus& corpus) {
  check_same_mixing(theta, nu);
  check_tuple_guard(theta.topic_count(), corpus.words_per_document);
  if (corpus.words_per_document > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
  const int k = theta.topic_count();
  const int m = corpus.words_per_document;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, theta.vocab_size());
  DocumentHistogram hist = DocumentHistogram::from(corpus);
  std::vector<double> p_terms(static_cast<std::size_t>(k));
  for (const auto& [doc, count] : hist.types) {
    check_document(doc, theta.vocab_size());
    std::vector<Eigen::VectorXd> xi(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) xi[static_cast<std::size_t>(i)] = xi_row(theta, nu, doc, i);
    // p(x) = sum_j theta_j(x_i) xi(i, j) for any position i; use i = 0.
    for (int j = 0; j < k; ++j)
      p_terms[static_cast<std::size_t>(j)] = theta.rows(j, doc[0]) * xi[0][j];
    double p = symmetric_sum(p_terms);
    double weight = static_cast<double>(count) / p;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j)
        grad(j, doc[static_cast<std::size_t>(i)]) += weight * xi[static_cast<std::size_t>(i)][j];
  }
  return grad;
}

double expansion_term(const TopicMatrix& theta, const MixingDistribution& nu,
                      const PerturbationDirection& delta, int order,
                      const Document& doc) {
  check_same_mixing(theta, nu);
  check_document(doc, theta.vocab_size());
  const int m = static_cast<int>(doc.size());
  const int k = theta.topic_count();
  if (order < 1 || order > m)
    throw std::invalid_argument("expansion order must lie in [1, m]");
  if (delta.entries.rows() != k || delta.entries.cols() != theta.vocab_size())
    throw std::invalid_argument("direction shape must match the topic matrix");
  check_tuple_guard(k, m);
  if (m > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");

  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  std::vector<char> in_subset(static_cast<std::size_t>(m), 0);
  std::vector<double> buffer;
  double direct = 0.0;
  const double tuples = std::pow(static_cast<double>(k), m);
  bool buffered = true;  // decided once subset count is known

  auto tuple_rec = [&](auto&& self, int i, double prod) -> void {
    if (i == m) {
      double term = prod * nu.moment_of_counts(counts);
      if (buffered) buffer.push_back(term);
      else direct += term;
      return;
    }
    const int word = doc[static_cast<std::size_t>(i)];
    const bool perturbed = in_subset[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      ++counts[j];
      self(self, i + 1, prod * (perturbed ? delta.entries(j, word) : theta.rows(j, word)));
      --counts[j];
    }
  };

  // Enumerate position subsets of the given size with a revolving-door index
  // vector, accumulating every tuple term across subsets into one buffer so
  // the final reduction is relabeling-invariant.
  std::vector<int> subset(static_cast<std::size_t>(order));
  std::iota(subset.begin(), subset.end(), 0);
  double subset_count = 1.0;
  for (int i = 0; i < order; ++i)
    subset_count = subset_count * (m - i) / (i + 1);
  buffered = subset_count * tuples <= kSymmetricBufferLimit;
  if (buffered) buffer.reserve(static_cast<std::size_t>(subset_count * tuples));
  for (;;) {
    std::fill(in_subset.begin(), in_subset.end(), 0);
    for (int pos : subset) in_subset[static_cast<std::size_t>(pos)] = 1;
    tuple_rec(tuple_rec, 0, 1.0);
    // next combination
    int i = order - 1;
    while (i >= 0 && subset[static_cast<std::size_t>(i)] == m - order + i) --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (int r = i + 1; r < order; ++r)
      subset[static_cast<std::size_t>(r)] = subset[static_cast<std::size_t>(r - 1)] + 1;
  }
  return buffered ? symmetric_sum(buffer) : direct;
}

double tv_distance(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                   const MixingDistribution& nu, int m) {
  check_same_mixing(theta, nu);
  check_same_mixing(theta_prime, nu);
  if (theta.vocab_size() != theta_prime.vocab_size())
    throw std::invalid_argument("distributions must share one vocabulary");
  Eigen::VectorXd p = enumerate_distribution(theta, nu, m);
  Eigen::VectorXd q = enumerate_distribution(theta_prime, nu, m);
  return 0.5 * (p - q).cwiseAbs().sum();
}

double kl_divergence(const TopicMatrix& theta, const TopicMatrix& theta_prime,
                     const MixingDistribution& nu, int m) {
  check_same_mixing(theta, nu);
  check_same_mixing(theta_prime, nu);
  if (theta.vocab_size() != theta_prime.vocab_size())
    throw std::invalid_argument("distributions must share one vocabulary");
  Eigen::VectorXd p = enumerate_distribution(theta, nu, m);
  Eigen::VectorXd q = enumerate_distribution(theta_prime, nu, m);
  double kl = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (p[c] == 0.0) continue;
    kl += p[c] * std::log(p[c] / q[c]);
  }
  return kl;
}

double wasserstein_distance(const TopicMatrix& theta, const TopicMatrix& theta_prime) {
  const int k = theta.topic_count();
  if (theta_prime.topic_count() != k || theta_prime.vocab_size() != theta.vocab_size())
    throw std::invalid_argument("topic matrices must share one shape");
  Eigen::MatrixXd cost(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      cost(a, b) = (theta.rows.row(a) - theta_prime.rows.row(b)).cwiseAbs().sum();
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> terms(static_cast<std::size_t>(k));
    do {
      for (int a = 0; a < k; ++a) terms[static_cast<std::size_t>(a)] = cost(a, perm[static_cast<std::size_t>(a)]);
      std::vector<double> copy = terms;
      best = std::min(best, symmetric_sum(copy));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  return assignment_min_cost(cost);
}

}  // namespace topicident
