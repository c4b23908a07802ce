#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topicident/experiments.hpp"
#include "topicident/identifiability.hpp"
#include "topicident/mixing.hpp"
#include "topicident/mle.hpp"
#include "topicident/model.hpp"
#include "topicident/rng.hpp"

namespace py = pybind11;
using namespace topicident;

namespace {

MixingDistribution make_mixing(int topic_count, const std::string& kind, double alpha,
                               int max_order) {
  if (kind == "dirichlet")
    return MixingDistribution::symmetric_dirichlet(topic_count, alpha, max_order);
  if (kind == "vertex") return MixingDistribution::uniform_vertex(topic_count, max_order);
  throw std::invalid_argument("mixing must be 'dirichlet' or 'vertex'");
}

int order_for(int m) { return std::max(kDefaultMomentOrder, m); }

py::dict report_dict(const IdentifiabilityReport& report) {
  py::dict out;
  out["V"] = report.vocab_size;
  out["K"] = report.topic_count;
  out["m"] = report.words_per_document;
  out["sigma_min"] = report.sigma_min;
  out["sigma_max"] = report.sigma_max;
  out["kappa2"] = report.kappa2;
  out["kappa1_estimate"] = report.kappa1_estimate;
  out["rank_tolerance"] = report.rank_tolerance;
  out["full_column_rank"] = report.full_column_rank;
  out["p_order"] = report.p_order;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, module) {
  module.doc() =
      "Topic-model identifiability classification, exact small-model distances, "
      "and the floored-simplex MLE";

  module.def(
      "classify_order",
      [](const Eigen::MatrixXd& theta, double c0, int m, const std::string& mixing,
         double alpha) {
        const TopicMatrix parameter = TopicMatrix::create(theta, c0);
        const MixingDistribution nu =
            make_mixing(parameter.topic_count(), mixing, alpha, order_for(m));
        return report_dict(classify_order(parameter, nu, m));
      },
      py::arg("theta"), py::arg("c0"), py::arg("m"), py::arg("mixing") = "dirichlet",
      py::arg("alpha") = 1.0,
      "Order of degeneracy of the parameter set via the identifiability-matrix "
      "rank test; returns the full report as a dict.");

  module.def(
      "likelihood",
      [](const Eigen::MatrixXd& theta, double c0, const std::vector<int>& doc,
         const std::string& mixing, double alpha) {
        const TopicMatrix parameter = TopicMatrix::create(theta, c0);
        const MixingDistribution nu = make_mixing(
            parameter.topic_count(), mixing, alpha, order_for(static_cast<int>(doc.size())));
        return likelihood(parameter, nu, doc);
      },
      py::arg("theta"), py::arg("c0"), py::arg("doc"), py::arg("mixing") = "dirichlet",
      py::arg("alpha") = 1.0,
      "Exact document probability; words are 0-based indices.");

  module.def(
      "tv_distance",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double c0, int m,
         const std::string& mixing, double alpha) {
        const TopicMatrix ta = TopicMatrix::create(a, c0);
        const TopicMatrix tb = TopicMatrix::create(b, c0);
        const MixingDistribution nu =
            make_mixing(ta.topic_count(), mixing, alpha, order_for(m));
        return tv_distance(ta, tb, nu, m);
      },
      py::arg("theta"), py::arg("theta_prime"), py::arg("c0"), py::arg("m"),
      py::arg("mixing") = "dirichlet", py::arg("alpha") = 1.0,
      "Total variation between the two induced document distributions, exact by "
      "enumeration.");

  module.def(
      "kl_divergence",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double c0, int m,
         const std::string& mixing, double alpha) {
        const TopicMatrix ta = TopicMatrix::create(a, c0);
        const TopicMatrix tb = TopicMatrix::create(b, c0);
        const MixingDistribution nu =
            make_mixing(ta.topic_count(), mixing, alpha, order_for(m));
        return kl_divergence(ta, tb, nu, m);
      },
      py::arg("theta"), py::arg("theta_prime"), py::arg("c0"), py::arg("m"),
      py::arg("mixing") = "dirichlet", py::arg("alpha") = 1.0);

  module.def(
      "wasserstein_distance",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return wasserstein_distance(TopicMatrix::create(a, 0.0),
                                    TopicMatrix::create(b, 0.0));
      },
      py::arg("theta"), py::arg("theta_prime"),
      "Minimum over topic matchings of summed l1 row distances.");

  module.def(
      "project_row",
      [](const Eigen::VectorXd& raw, double c0) { return project_row(raw, c0); },
      py::arg("raw"), py::arg("c0"),
      "Euclidean projection onto the simplex with entries floored at c0.");

  module.def(
      "sample_corpus",
      [](const Eigen::MatrixXd& theta, double c0, int m, long long n,
         std::uint64_t seed, const std::string& mixing, double alpha) {
        const TopicMatrix parameter = TopicMatrix::create(theta, c0);
        const MixingDistribution nu =
            make_mixing(parameter.topic_count(), mixing, alpha, order_for(m));
        std::mt19937_64 rng = make_engine(derive_seed(seed, {7ULL}));
        return sample_corpus(parameter, nu, m, n, rng).documents;
      },
      py::arg("theta"), py::arg("c0"), py::arg("m"), py::arg("n"), py::arg("seed"),
      py::arg("mixing") = "dirichlet", py::arg("alpha") = 1.0,
      "Draw n documents of m words; returns 0-based word lists.");

  module.def(
      "fit_mle",
      [](const std::vector<std::vector<int>>& documents, int vocab_size,
         int topic_count, double c0, const std::string& mixing, double alpha,
         int starts, int max_iterations, std::uint64_t seed, int workers) {
        const Corpus corpus = Corpus::create(vocab_size, documents);
        const MixingDistribution nu = make_mixing(
            topic_count, mixing, alpha, order_for(corpus.words_per_document));
        FitOptions options;
        options.starts = starts;
        options.max_iterations = max_iterations;
        options.seed = seed;
        options.workers = workers;
        const FitResult fit = fit_mle(corpus, topic_count, c0, nu, options);
        py::dict out;
        out["theta_hat"] = fit.theta_hat.rows;
        out["c0"] = fit.theta_hat.c0;
        out["log_likelihood"] = fit.log_likelihood;
        out["iterations"] = fit.iterations;
        out["winner_start"] = fit.winner_start;
        out["converged"] = fit.converged;
        return out;
      },
      py::arg("documents"), py::arg("V"), py::arg("K"), py::arg("c0"),
      py::arg("mixing") = "dirichlet", py::arg("alpha") = 1.0, py::arg("starts") = 8,
      py::arg("max_iterations") = 2000, py::arg("seed") = 0, py::arg("workers") = 0,
      "Multi-start projected-gradient MLE over the floored simplex.");

  module.def(
      "table1",
      [](std::uint64_t seed, const std::string& mixing, double alpha) {
        MixingSpec spec;
        spec.kind = mixing;
        spec.alpha = alpha;
        py::list out;
        for (const Table1Row& row : table1_suite(seed, spec)) {
          py::dict entry = report_dict(row.report);
          entry["label"] = row.label;
          out.append(std::move(entry));
        }
        return out;
      },
      py::arg("seed"), py::arg("mixing") = "dirichlet", py::arg("alpha") = 1.0,
      "Classification of the seven structured benchmark families.");
}
