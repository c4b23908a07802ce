#include "topicident/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "topicident/parallel.hpp"
#include "topicident/rng.hpp"

namespace topicident {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void decode_document(long long cell, int vocab_size, Document& doc) {
  for (int i = static_cast<int>(doc.size()) - 1; i >= 0; --i) {
    doc[static_cast<std::size_t>(i)] = static_cast<int>(cell % vocab_size);
    cell /= vocab_size;
  }
}

void check_matrix_preconditions(const TopicMatrix& theta, const MixingDistribution& nu,
                                int m) {
  if (theta.topic_count() != nu.topic_count())
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");
  if (m < 2)
    throw std::invalid_argument("order classification needs documents of at least two words");
  if (!check_regularity(nu).passes)
    throw RegularityError("mixing distribution fails the regularity margins");
  if (std::pow(static_cast<double>(theta.vocab_size()), m) > kMaxDocumentCells)
    throw GuardError("document enumeration V^m exceeds the guard");
  if (m > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
}

}  // namespace

double xi_coefficient(const TopicMatrix& theta, const MixingDistribution& nu,
                      int position, int topic, const Document& doc) {
  if (theta.topic_count() != nu.topic_count())
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");
  const int m = static_cast<int>(doc.size());
  if (m < 1) throw std::invalid_argument("document must contain at least one word");
  if (position < 0 || position >= m) throw std::invalid_argument("position out of range");
  if (topic < 0 || topic >= theta.topic_count())
    throw std::invalid_argument("topic index out of range");
  for (int w : doc)
    if (w < 0 || w >= theta.vocab_size())
      throw std::invalid_argument("word id out of vocabulary range");
  if (std::pow(static_cast<double>(theta.topic_count()), m) > kMaxTopicTuples)
    throw GuardError("topic-tuple enumeration K^m exceeds the guard");
  if (m > nu.max_order())
    throw GuardError("document length exceeds the moment cache order");
  return xi_row(theta, nu, doc, position)[topic];
}

IdentifiabilityMatrix build_identifiability_matrix(const TopicMatrix& theta,
                                                   const MixingDistribution& nu,
                                                   int m, int workers) {
  check_matrix_preconditions(theta, nu, m);
  if (std::pow(static_cast<double>(theta.topic_count()), m) > kMaxTopicTuples)
    throw GuardError("topic-tuple enumeration K^m exceeds the guard");
  const int v = theta.vocab_size();
  const int k = theta.topic_count();
  const long long cells = static_cast<long long>(std::llround(std::pow(v, m)));

  IdentifiabilityMatrix result;
  result.vocab_size = v;
  result.topic_count = k;
  result.words_per_document = m;
  result.matrix = Eigen::MatrixXd::Zero(cells + k, static_cast<long long>(v) * k);
  Eigen::MatrixXd& a = result.matrix;

  // One row per document: entry at column j*V + w is sum_{i: x_i = w} xi(i, j).
  parallel_for(static_cast<int>(cells), workers, [&](int cell) {
    Document doc(static_cast<std::size_t>(m), 0);
    decode_document(cell, v, doc);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd xi = xi_row(theta, nu, doc, i);
      const int w = doc[static_cast<std::size_t>(i)];
      for (int j = 0; j < k; ++j) a(cell, static_cast<long long>(j) * v + w) += xi[j];
    }
  });
  // Row-sum constraints: perturbations must conserve each topic's mass.
  for (int j = 0; j < k; ++j)
    for (int w = 0; w < v; ++w) a(cells + j, static_cast<long long>(j) * v + w) = 1.0;
  return result;
}

std::pair<double, double> singular_value_extremes(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.cols() < 1)
    throw std::invalid_argument("matrix must be nonempty");
  if (!a.allFinite()) throw std::invalid_argument("matrix entries must be finite");
  if (a.cols() > kMaxSvdColumns)
    throw GuardError("dense SVD guard: too many columns");
  if (a.rows() < a.cols()) {
    // Fewer rows than columns: the cols-th singular value is structurally 0.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    return {0.0, svd.singularValues()(0)};
  }
  Eigen::MatrixXd work;
  if (a.rows() > 4 * a.cols()) {
    // QR reduction preserves singular values and keeps the SVD input square.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    work = qr.matrixQR()
               .topRows(a.cols())
               .template triangularView<Eigen::Upper>();
  } else {
    work = a;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(work);
  const auto& sv = svd.singularValues();
  return {sv(sv.size() - 1), sv(0)};
}

double hager_condition_estimate(const Eigen::MatrixXd& b) {
  const int n = static_cast<int>(b.rows());
  if (n < 1 || b.cols() != n)
    throw std::invalid_argument("condition estimation needs a square matrix");
  if (!b.allFinite()) throw std::invalid_argument("matrix entries must be finite");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
  for (int i = 0; i < n; ++i)
    if (lu.matrixLU()(i, i) == 0.0) return kInf;
  const double norm1 = b.cwiseAbs().colwise().sum().maxCoeff();
  if (n == 1) return 1.0;

  // Hager's iteration: every visited ||B^{-1} x||_1 with ||x||_1 = 1 is a
  // lower bound on ||B^{-1}||_1, so the running maximum never overshoots.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite()) return kInf;
    estimate = std::max(estimate, y.cwiseAbs().sum());
    Eigen::VectorXd sign(n);
    for (int i = 0; i < n; ++i) sign[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    Eigen::VectorXd z = lu.adjoint().solve(sign);
    if (!z.allFinite()) return kInf;
    Eigen::Index j = 0;
    const double z_max = z.cwiseAbs().maxCoeff(&j);
    if (z_max <= z.dot(x) * (1.0 + 1e-14)) break;  // local maximum reached
    x.setZero();
    x[j] = 1.0;
  }
  return norm1 * estimate;
}

IdentifiabilityReport classify_order(const TopicMatrix& theta,
                                     const MixingDistribution& nu, int m,
                                     const ClassifyOptions& options) {
  if (static_cast<long long>(theta.vocab_size()) * theta.topic_count() > kMaxSvdColumns)
    throw GuardError("dense SVD guard: V*K too large");
  IdentifiabilityMatrix system = build_identifiability_matrix(theta, nu, m, options.workers);
  const Eigen::MatrixXd& a = system.matrix;

  IdentifiabilityReport report;
  report.vocab_size = system.vocab_size;
  report.topic_count = system.topic_count;
  report.words_per_document = m;
  auto [sigma_min, sigma_max] = singular_value_extremes(a);
  report.sigma_min = sigma_min;
  report.sigma_max = sigma_max;
  report.kappa2 = sigma_min > 0.0 ? sigma_max / sigma_min : kInf;
  report.rank_tolerance = static_cast<double>(std::max(a.rows(), a.cols())) *
                          std::numeric_limits<double>::epsilon() *
                          options.tolerance_factor;
  report.full_column_rank = sigma_min > report.rank_tolerance * sigma_max;
  report.kappa1_estimate = std::sqrt(hager_condition_estimate(a.transpose() * a));
  // Degeneracy order is at most 2 whenever the floor, regularity, and length
  // assumptions hold, so the rank call decides between 1 and 2.
  report.p_order = report.full_column_rank ? 1 : 2;
  return report;
}

double degeneracy_objective(const TopicMatrix& theta, const MixingDistribution& nu,
                            int m, int order, const PerturbationDirection& delta) {
  check_matrix_preconditions(theta, nu, m);
  const int v = theta.vocab_size();
  const long long cells = static_cast<long long>(std::llround(std::pow(v, m)));
  Document doc(static_cast<std::size_t>(m), 0);
  double total = 0.0;
  for (long long cell = 0; cell < cells; ++cell) {
    decode_document(cell, v, doc);
    total += std::abs(expansion_term(theta, nu, delta, order, doc));
  }
  return total;
}

PerturbationDirection duplicate_topic_direction(int topic_count, int vocab_size,
                                                int j, int k) {
  if (topic_count < 2 || vocab_size < 2)
    throw std::invalid_argument("duplicate-topic direction needs K >= 2 and V >= 2");
  if (j < 0 || k < 0 || j >= topic_count || k >= topic_count || j == k)
    throw std::invalid_argument("need two distinct topic indices");
  Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(topic_count, vocab_size);
  entries(j, 0) = 0.25;
  entries(j, 1) = -0.25;
  entries(k, 0) = -0.25;
  entries(k, 1) = 0.25;
  return PerturbationDirection::create_unit(std::move(entries));
}

PerturbationDirection cyclic_difference_direction(const TopicMatrix& theta) {
  if (theta.topic_count() < 3)
    throw std::invalid_argument("cyclic direction needs at least three topics");
  Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(theta.topic_count(), theta.vocab_size());
  entries.row(0) = (theta.rows.row(1) - theta.rows.row(2)) / 6.0;
  entries.row(1) = (theta.rows.row(2) - theta.rows.row(0)) / 6.0;
  entries.row(2) = (theta.rows.row(0) - theta.rows.row(1)) / 6.0;
  for (int r = 0; r < 3; ++r)
    if (entries.row(r).cwiseAbs().sum() <= 1e-12)
      throw std::invalid_argument("cyclic direction vanishes: coincident topic rows");
  double mass = entries.cwiseAbs().sum();
  return PerturbationDirection::create_unit(entries / mass);
}

std::vector<TopicMatrix> enumerate_equivalents_k2(const TopicMatrix& theta,
                                                  const MixingDistribution& nu) {
  if (theta.topic_count() != 2)
    throw std::invalid_argument("equivalent-set enumeration applies to K = 2");
  if (nu.topic_count() != 2)
    throw std::invalid_argument("mixing distribution and topic matrix disagree on K");
  const int v = theta.vocab_size();
  if (v > kMaxEquivalentVocab)
    throw GuardError("equivalent-set enumeration scans 2^V patterns: V too large");

  std::vector<TopicMatrix> found;
  auto already_found = [&](const Eigen::MatrixXd& candidate) {
    for (const TopicMatrix& t : found)
      if ((t.rows.array() == candidate.array()).all()) return true;
    return false;
  };
  // Word-level swap patterns preserve the per-word unordered value pairs,
  // which any equivalent parameter must; the exact distribution check below
  // is the real filter.
  for (std::uint32_t pattern = 0; pattern < (1u << v); ++pattern) {
    Eigen::MatrixXd candidate = theta.rows;
    for (int w = 0; w < v; ++w)
      if (pattern & (1u << w)) std::swap(candidate(0, w), candidate(1, w));
    if (std::abs(candidate.row(0).sum() - 1.0) > 1e-9) continue;
    if (already_found(candidate)) continue;
    TopicMatrix matrix = TopicMatrix::create(candidate, theta.c0);
    if (tv_distance(theta, matrix, nu, 2) <= 1e-10) found.push_back(std::move(matrix));
  }
  return found;
}

MixingDistribution MixingSpec::instantiate(int topic_count, int max_order) const {
  if (kind == "dirichlet")
    return MixingDistribution::symmetric_dirichlet(topic_count, alpha, max_order);
  if (kind == "vertex") return MixingDistribution::uniform_vertex(topic_count, max_order);
  throw std::invalid_argument("unknown mixing kind: " + kind);
}

namespace {

struct RowSpec {
  const char* label;
  int k, m;
  enum Family { kIndependent, kDuplicate, kMidpoint, kConvex82 } family;
};

constexpr RowSpec kBenchmarkRows[] = {
    {"independent-K3-m3", 3, 3, RowSpec::kIndependent},
    {"independent-K3-m2", 3, 2, RowSpec::kIndependent},
    {"independent-K2-m2", 2, 2, RowSpec::kIndependent},
    {"duplicate-K2-m3", 2, 3, RowSpec::kDuplicate},
    {"duplicate-plus-distinct-K3-m4", 3, 4, RowSpec::kDuplicate},
    {"midpoint-third-K3-m3", 3, 3, RowSpec::kMidpoint},
    {"convex-82-third-K3-m3", 3, 3, RowSpec::kConvex82},
};

}  // namespace

const std::vector<std::string>& table1_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const RowSpec& spec : kBenchmarkRows) out.emplace_back(spec.label);
    return out;
  }();
  return labels;
}

BenchmarkParameter table1_parameter(const std::string& label, int vocab_size,
                                    std::uint64_t seed) {
  if (vocab_size < 2) throw std::invalid_argument("benchmark rows need V >= 2");
  int index = -1;
  for (int i = 0; i < static_cast<int>(std::size(kBenchmarkRows)); ++i)
    if (label == kBenchmarkRows[i].label) index = i;
  if (index < 0) throw std::invalid_argument("unknown benchmark row label: " + label);
  const RowSpec& spec = kBenchmarkRows[index];
  std::mt19937_64 rng =
      make_engine(derive_seed(seed, {0x7ab1eULL, static_cast<std::uint64_t>(index)}));
  TopicMatrix theta = random_topic_matrix(vocab_size, spec.k, 0.0, rng);
  switch (spec.family) {
    case RowSpec::kIndependent:
      break;
    case RowSpec::kDuplicate:
      theta.rows.row(1) = theta.rows.row(0);
      break;
    case RowSpec::kMidpoint:
      theta.rows.row(2) = 0.5 * theta.rows.row(0) + 0.5 * theta.rows.row(1);
      break;
    case RowSpec::kConvex82:
      theta.rows.row(2) = 0.8 * theta.rows.row(0) + 0.2 * theta.rows.row(1);
      break;
  }
  return BenchmarkParameter{std::move(theta), spec.m};
}

std::vector<Table1Row> table1_suite(std::uint64_t seed, const MixingSpec& mixing,
                                    int workers) {
  std::vector<Table1Row> rows;
  for (const RowSpec& spec : kBenchmarkRows) {
    const BenchmarkParameter param = table1_parameter(spec.label, 10, seed);
    MixingDistribution nu =
        mixing.instantiate(spec.k, std::max(kDefaultMomentOrder, spec.m));
    Table1Row row;
    row.label = spec.label;
    row.vocab_size = param.theta.vocab_size();
    row.topic_count = spec.k;
    row.words_per_document = spec.m;
    ClassifyOptions options;
    options.workers = workers;
    row.report = classify_order(param.theta, nu, spec.m, options);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace topicident
