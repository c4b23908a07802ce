#include "topicident/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicident/errors.hpp"
#include "topicident/experiments.hpp"
#include "topicident/identifiability.hpp"
#include "topicident/mixing.hpp"
#include "topicident/mle.hpp"
#include "topicident/model.hpp"
#include "topicident/report_io.hpp"
#include "topicident/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace topicident {
namespace {

// ---- resolved-config accessors -------------------------------------------

bool cfg_has(const json& cfg, const std::string& key) {
  return cfg.contains(key) && !cfg.at(key).is_null();
}

const json& cfg_at(const json& cfg, const std::string& key) {
  if (!cfg_has(cfg, key))
    throw std::invalid_argument("missing required setting '" + key + "'");
  return cfg.at(key);
}

std::string require_string(const json& cfg, const std::string& key) {
  const json& v = cfg_at(cfg, key);
  if (!v.is_string()) throw std::invalid_argument("setting '" + key + "' must be a string");
  return v.get<std::string>();
}

long long require_integer(const json& cfg, const std::string& key) {
  const json& v = cfg_at(cfg, key);
  if (!v.is_number_integer())
    throw std::invalid_argument("setting '" + key + "' must be an integer");
  return v.get<long long>();
}

int require_int(const json& cfg, const std::string& key) {
  return static_cast<int>(require_integer(cfg, key));
}

int opt_int(const json& cfg, const std::string& key, int fallback) {
  return cfg_has(cfg, key) ? require_int(cfg, key) : fallback;
}

double require_double(const json& cfg, const std::string& key) {
  const json& v = cfg_at(cfg, key);
  if (!v.is_number()) throw std::invalid_argument("setting '" + key + "' must be a number");
  return v.get<double>();
}

double opt_double(const json& cfg, const std::string& key, double fallback) {
  return cfg_has(cfg, key) ? require_double(cfg, key) : fallback;
}

std::string opt_string(const json& cfg, const std::string& key, const std::string& fallback) {
  return cfg_has(cfg, key) ? require_string(cfg, key) : fallback;
}

bool opt_bool(const json& cfg, const std::string& key, bool fallback) {
  if (!cfg_has(cfg, key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_boolean()) throw std::invalid_argument("setting '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::uint64_t require_seed(const json& cfg) {
  if (!cfg_has(cfg, "seed"))
    throw std::invalid_argument(
        "a seed is required; stochastic commands never auto-generate one");
  const json& v = cfg.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) return static_cast<std::uint64_t>(v.get<long long>());
  throw std::invalid_argument("setting 'seed' must be an integer");
}

std::vector<long long> require_grid(const json& cfg, const std::string& key) {
  const json& v = cfg_at(cfg, key);
  if (!v.is_array() || v.empty())
    throw std::invalid_argument("setting '" + key + "' must be a nonempty integer array");
  std::vector<long long> grid;
  for (const json& item : v) {
    if (!item.is_number_integer())
      throw std::invalid_argument("setting '" + key + "' must contain only integers");
    grid.push_back(item.get<long long>());
  }
  return grid;
}

int require_m(const json& cfg, int label_default) {
  const int m = cfg_has(cfg, "m") ? require_int(cfg, "m") : label_default;
  if (m <= 0) throw std::invalid_argument("missing or nonpositive document length m");
  if (m == 1)
    throw std::invalid_argument(
        "m = 1 is not finitely identifiable: single-word documents expose only "
        "the mixture mean, so every K >= 2 parameter set is confounded; use m >= 2");
  return m;
}

// ---- mixing ----------------------------------------------------------------

std::string canonical_pattern(const std::vector<int>& exponents) {
  std::vector<int> parts;
  for (int e : exponents)
    if (e != 0) parts.push_back(e);
  std::sort(parts.begin(), parts.end(), std::greater<int>());
  std::string key;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) key += ",";
    key += std::to_string(parts[i]);
  }
  return key;
}

MixingDistribution build_mixing(const json& cfg, int topic_count, int max_order) {
  const std::string kind = opt_string(cfg, "mixing", "dirichlet");
  if (kind == "dirichlet") {
    const double alpha = opt_double(cfg, "alpha", 1.0);
    return MixingDistribution::symmetric_dirichlet(topic_count, alpha, max_order);
  }
  if (kind == "vertex") return MixingDistribution::uniform_vertex(topic_count, max_order);
  if (kind == "custom") {
    const json& table = cfg_at(cfg, "moments");
    if (!table.is_object())
      throw std::invalid_argument(
          "setting 'moments' must map patterns like \"2,1\" to moment values");
    std::map<std::string, double> moments;
    for (const auto& [key, value] : table.items()) {
      if (!value.is_number())
        throw std::invalid_argument("moment '" + key + "' must be a number");
      moments[key] = value.get<double>();
    }
    auto oracle = [moments](const std::vector<int>& exponents) {
      const std::string key = canonical_pattern(exponents);
      if (key.empty()) return 1.0;
      auto found = moments.find(key);
      if (found == moments.end())
        throw std::invalid_argument("custom mixing is missing the moment for pattern '" +
                                    key + "'");
      return found->second;
    };
    return MixingDistribution::custom_moments(topic_count, oracle, max_order);
  }
  throw std::invalid_argument("unknown mixing '" + kind +
                              "' (expected dirichlet, vertex, or custom)");
}

// Config-representable moment assumptions are rejected up front: the custom
// factory has already probed exchangeability, this adds the margin checks.
void validate_mixing(const MixingDistribution& nu) {
  if (nu.topic_count() < 2) return;
  if (!check_regularity(nu).passes)
    throw std::invalid_argument(
        "mixing moments fail the regularity margins (second or third moment gap)");
}

void echo_mixing(JsonValue& echo, const json& cfg) {
  const std::string kind = opt_string(cfg, "mixing", "dirichlet");
  echo.set("mixing", kind);
  if (kind == "dirichlet") echo.set("alpha", opt_double(cfg, "alpha", 1.0));
  if (kind == "custom") {
    JsonValue table = JsonValue::object();
    for (const auto& [key, value] : cfg_at(cfg, "moments").items())
      table.set(key, value.get<double>());
    echo.set("moments", std::move(table));
  }
}

// ---- theta sources ---------------------------------------------------------

struct ThetaSource {
  TopicMatrix theta;
  std::string name;
  bool from_label = false;
  int label_m = 0;  // document length the label was designed for
};

ThetaSource resolve_theta(const json& cfg) {
  const std::string source = require_string(cfg, "theta");
  if (fs::exists(source)) {
    ThetaSource out{topic_matrix_from_csv(read_text_file(source)), source, false, 0};
    return out;
  }
  const std::vector<std::string>& labels = table1_labels();
  if (std::find(labels.begin(), labels.end(), source) != labels.end()) {
    const int v = opt_int(cfg, "V", 10);
    BenchmarkParameter param = table1_parameter(source, v, require_seed(cfg));
    return ThetaSource{std::move(param.theta), source, true, param.words_per_document};
  }
  throw std::invalid_argument("theta '" + source +
                              "' is neither a readable file nor a benchmark label");
}

void apply_floor(TopicMatrix& theta, const json& cfg, bool require_positive) {
  if (cfg_has(cfg, "c0")) {
    const double c0 = require_double(cfg, "c0");
    if (!(c0 > 0.0))
      throw std::invalid_argument("the floor c0 must be positive when given");
    theta = TopicMatrix::create(theta.rows, c0);
  }
  if (require_positive && !(theta.c0 > 0.0))
    throw std::invalid_argument(
        "this command needs a positive floor; pass --c0 or store one in the theta file");
}

void echo_theta(JsonValue& echo, const json& cfg, const ThetaSource& src) {
  echo.set("theta", src.name);
  if (src.from_label) echo.set("V", src.theta.vocab_size());
}

// ---- output ----------------------------------------------------------------

fs::path prepare_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw std::invalid_argument("--out is required");
  fs::path path(out_dir);
  fs::create_directories(path);
  return path;
}

void write_config(const fs::path& out, const JsonValue& echo) {
  write_text_file(out / "config.json", echo.dump());
}

JsonValue grid_json(const std::vector<long long>& grid) {
  JsonValue array = JsonValue::array();
  for (long long n : grid) array.push(n);
  return array;
}

// ---- executors -------------------------------------------------------------

int run_identify(const json& cfg, const std::string& out_dir, int workers) {
  ThetaSource src = resolve_theta(cfg);
  apply_floor(src.theta, cfg, false);
  const int m = require_m(cfg, src.label_m);
  MixingDistribution nu = build_mixing(cfg, src.theta.topic_count(),
                                       std::max(kDefaultMomentOrder, m));
  validate_mixing(nu);
  ClassifyOptions options;
  options.tolerance_factor = opt_double(cfg, "tolerance_factor", options.tolerance_factor);
  options.workers = workers;
  const IdentifiabilityReport report = classify_order(src.theta, nu, m, options);

  JsonValue echo = JsonValue::object();
  echo.set("command", "identify");
  echo_theta(echo, cfg, src);
  if (src.from_label) echo.set("seed", require_seed(cfg));
  if (cfg_has(cfg, "c0")) echo.set("c0", src.theta.c0);
  echo.set("m", m);
  echo_mixing(echo, cfg);
  echo.set("tolerance_factor", options.tolerance_factor);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "identify.json", identifiability_report_to_json(report).dump());
  write_config(out, echo);
  return 0;
}

int run_table1(const json& cfg, const std::string& out_dir, int workers) {
  const std::uint64_t seed = require_seed(cfg);
  MixingSpec mixing;
  mixing.kind = opt_string(cfg, "mixing", "dirichlet");
  mixing.alpha = opt_double(cfg, "alpha", 1.0);
  if (mixing.kind != "dirichlet" && mixing.kind != "vertex")
    throw std::invalid_argument("table1 supports dirichlet or vertex mixing");
  const std::vector<Table1Row> rows = table1_suite(seed, mixing, workers);

  JsonValue echo = JsonValue::object();
  echo.set("command", "table1");
  echo.set("seed", seed);
  echo.set("mixing", mixing.kind);
  if (mixing.kind == "dirichlet") echo.set("alpha", mixing.alpha);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "table1.csv", table1_to_csv(rows));
  write_text_file(out / "table1.json", table1_to_json(rows, seed).dump());
  write_config(out, echo);
  return 0;
}

int run_rates(const json& cfg, const std::string& out_dir, int workers) {
  const std::uint64_t seed = require_seed(cfg);
  ThetaSource src = resolve_theta(cfg);
  apply_floor(src.theta, cfg, true);
  const int m = require_m(cfg, src.label_m);
  const std::vector<long long> n_grid = require_grid(cfg, "n_grid");
  const int replicates = require_int(cfg, "replicates");
  MixingDistribution nu = build_mixing(cfg, src.theta.topic_count(),
                                       std::max(kDefaultMomentOrder, m));
  validate_mixing(nu);

  FitOptions fit;
  fit.starts = opt_int(cfg, "starts", fit.starts);
  fit.max_iterations = opt_int(cfg, "max_iterations", fit.max_iterations);
  fit.validate();
  const RateCurve curve =
      rate_experiment(src.theta, nu, m, n_grid, replicates, fit, seed, src.name, workers);

  JsonValue echo = JsonValue::object();
  echo.set("command", "rates");
  echo.set("seed", seed);
  echo_theta(echo, cfg, src);
  echo.set("c0", src.theta.c0);
  echo.set("m", m);
  echo_mixing(echo, cfg);
  echo.set("n_grid", grid_json(n_grid));
  echo.set("replicates", replicates);
  echo.set("starts", fit.starts);
  echo.set("max_iterations", fit.max_iterations);
  const bool plot_data = opt_bool(cfg, "plot_data", false);
  echo.set("plot_data", plot_data);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "rates.csv", rate_curve_to_csv(curve));
  JsonValue summary = rate_curve_to_json(curve);
  summary.set("config", echo);
  write_text_file(out / "rates.json", summary.dump());
  if (plot_data) write_text_file(out / "rates_medians.csv", rate_curve_medians_csv(curve));
  write_config(out, echo);
  return 0;
}

int run_two_point(const json& cfg, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  ThetaSource src = resolve_theta(cfg);
  apply_floor(src.theta, cfg, false);
  const int m = require_m(cfg, src.label_m);
  const std::vector<long long> n_grid = require_grid(cfg, "n_grid");
  const int replicates = opt_int(cfg, "replicates", 1000);
  MixingDistribution nu = build_mixing(cfg, src.theta.topic_count(),
                                       std::max(kDefaultMomentOrder, m));
  validate_mixing(nu);

  const bool fixed = cfg_has(cfg, "distance");
  const bool scaled = cfg_has(cfg, "radius");
  if (fixed == scaled)
    throw std::invalid_argument(
        "pass exactly one of --distance (fixed separation) or --radius (rate-matched)");
  double distance = 0.0;
  int p_order = 0;
  double radius = 0.0;
  if (fixed) {
    distance = require_double(cfg, "distance");
  } else {
    radius = require_double(cfg, "radius");
    p_order = require_int(cfg, "p_order");
    if (p_order < 1 || p_order > 2)
      throw std::invalid_argument("p_order must be 1 or 2");
  }

  std::vector<TwoPointResult> results;
  for (long long n : n_grid)
    results.push_back(fixed ? two_point_test_at_distance(src.theta, nu, m, distance, n,
                                                         replicates, seed)
                            : two_point_test(src.theta, nu, m, p_order, radius, n,
                                             replicates, seed));

  JsonValue echo = JsonValue::object();
  echo.set("command", "two-point");
  echo.set("seed", seed);
  echo_theta(echo, cfg, src);
  if (cfg_has(cfg, "c0")) echo.set("c0", src.theta.c0);
  echo.set("m", m);
  echo_mixing(echo, cfg);
  echo.set("n_grid", grid_json(n_grid));
  echo.set("replicates", replicates);
  if (fixed) {
    echo.set("distance", distance);
  } else {
    echo.set("radius", radius);
    echo.set("p_order", p_order);
  }

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "twopoint.json", two_point_results_to_json(results).dump());
  write_text_file(out / "twopoint.csv", two_point_results_to_csv(results));
  write_config(out, echo);
  return 0;
}

int run_bounds(const json& cfg, const std::string& out_dir, int workers) {
  BoundSuiteOptions options;
  options.seed = require_seed(cfg);
  ThetaSource src = resolve_theta(cfg);
  apply_floor(src.theta, cfg, true);  // the KL sandwich constant needs c0 > 0
  const int m = require_m(cfg, src.label_m);
  options.trials = opt_int(cfg, "trials", options.trials);
  options.scale_min = opt_double(cfg, "scale_min", options.scale_min);
  options.scale_max = opt_double(cfg, "scale_max", options.scale_max);
  options.workers = workers;
  MixingDistribution nu = build_mixing(cfg, src.theta.topic_count(),
                                       std::max(kDefaultMomentOrder, m));
  validate_mixing(nu);
  const BoundReport report = bound_suite(src.theta, nu, m, options);

  JsonValue echo = JsonValue::object();
  echo.set("command", "bounds");
  echo.set("seed", options.seed);
  echo_theta(echo, cfg, src);
  echo.set("c0", src.theta.c0);
  echo.set("m", m);
  echo_mixing(echo, cfg);
  echo.set("trials", options.trials);
  echo.set("scale_min", options.scale_min);
  echo.set("scale_max", options.scale_max);
  const bool plot_data = opt_bool(cfg, "plot_data", false);
  echo.set("plot_data", plot_data);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "bounds.json", bound_report_to_json(report).dump());
  if (plot_data) write_text_file(out / "bounds_trials.csv", bound_trials_to_csv(report));
  write_config(out, echo);
  return 0;
}

int run_mle(const json& cfg, const std::string& out_dir, int workers) {
  const std::uint64_t seed = require_seed(cfg);
  const std::string corpus_path = require_string(cfg, "corpus");
  if (!fs::exists(corpus_path))
    throw std::invalid_argument("corpus file not found: " + corpus_path);
  const int v = require_int(cfg, "V");
  const int k = require_int(cfg, "K");
  const double c0 = require_double(cfg, "c0");
  const Corpus corpus = corpus_from_csv(read_text_file(corpus_path), v);
  MixingDistribution nu = build_mixing(
      cfg, k, std::max(kDefaultMomentOrder, corpus.words_per_document));
  validate_mixing(nu);

  FitOptions options;
  options.starts = opt_int(cfg, "starts", options.starts);
  options.max_iterations = opt_int(cfg, "max_iterations", options.max_iterations);
  options.seed = seed;
  options.workers = workers;
  const FitResult fit = fit_mle(corpus, k, c0, nu, options);

  JsonValue echo = JsonValue::object();
  echo.set("command", "mle");
  echo.set("seed", seed);
  echo.set("corpus", corpus_path);
  echo.set("V", v);
  echo.set("K", k);
  echo.set("c0", c0);
  echo_mixing(echo, cfg);
  echo.set("starts", options.starts);
  echo.set("max_iterations", options.max_iterations);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "mle.json", fit_result_to_json(fit).dump());
  write_text_file(out / "theta_hat.csv", topic_matrix_to_csv(fit.theta_hat));
  write_config(out, echo);
  return 0;
}

int run_simulate(const json& cfg, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  ThetaSource src = resolve_theta(cfg);
  apply_floor(src.theta, cfg, false);
  const int m = require_m(cfg, src.label_m);
  const long long n = require_integer(cfg, "n");
  if (n < 1) throw std::invalid_argument("need at least one document to simulate");
  MixingDistribution nu = build_mixing(cfg, src.theta.topic_count(),
                                       std::max(kDefaultMomentOrder, m));
  validate_mixing(nu);
  std::mt19937_64 rng = make_engine(derive_seed(seed, {7ULL}));
  const Corpus corpus = sample_corpus(src.theta, nu, m, n, rng);

  JsonValue echo = JsonValue::object();
  echo.set("command", "simulate");
  echo.set("seed", seed);
  echo_theta(echo, cfg, src);
  echo.set("m", m);
  echo_mixing(echo, cfg);
  echo.set("n", n);

  const fs::path out = prepare_out_dir(out_dir);
  write_text_file(out / "corpus.csv", corpus_to_csv(corpus));
  write_config(out, echo);
  return 0;
}

// ---- flag plumbing ---------------------------------------------------------

struct FlagValues {
  std::string config_path, out_dir, theta, mixing, corpus, n_grid;
  double alpha = 1.0, c0 = 0.0, distance = 0.0, radius = 0.0;
  double scale_min = 1e-4, scale_max = 1e-1, tolerance_factor = 1e3;
  std::uint64_t seed = 0;
  int workers = 0, v = 0, k = 0, m = 0, replicates = 0, starts = 0;
  int p_order = 0, trials = 0, max_iterations = 0;
  long long n = 0;
  bool plot_data = false;
};

struct SubCommand {
  CLI::App* app = nullptr;
  std::map<std::string, CLI::Option*> options;  // config key -> option
};

SubCommand add_subcommand(CLI::App& app, FlagValues& val, const char* name,
                          const char* description,
                          const std::set<std::string>& keys) {
  SubCommand sub;
  sub.app = app.add_subcommand(name, description);
  sub.app->add_option("--config", val.config_path,
                      "JSON config file; command-line flags override its values");
  sub.app->add_option("--out", val.out_dir, "output directory")->required();
  sub.app->add_option("--workers", val.workers,
                      "worker-thread cap for parallel stages (0 = all cores)");
  auto want = [&](const char* key) { return keys.count(key) > 0; };
  if (want("seed"))
    sub.options["seed"] = sub.app->add_option("--seed", val.seed, "master RNG seed");
  if (want("theta"))
    sub.options["theta"] =
        sub.app->add_option("--theta", val.theta,
                            "topic matrix CSV path, or a benchmark row label");
  if (want("corpus"))
    sub.options["corpus"] =
        sub.app->add_option("--corpus", val.corpus, "corpus CSV path (1-based words)");
  if (want("V")) sub.options["V"] = sub.app->add_option("--V", val.v, "vocabulary size");
  if (want("K")) sub.options["K"] = sub.app->add_option("--K", val.k, "topic count");
  if (want("m"))
    sub.options["m"] = sub.app->add_option("--m", val.m, "words per document");
  if (want("c0"))
    sub.options["c0"] = sub.app->add_option("--c0", val.c0, "entry floor of the simplex");
  if (want("mixing"))
    sub.options["mixing"] = sub.app->add_option(
        "--mixing", val.mixing, "mixing distribution: dirichlet or vertex");
  if (want("alpha"))
    sub.options["alpha"] =
        sub.app->add_option("--alpha", val.alpha, "symmetric Dirichlet concentration");
  if (want("n_grid"))
    sub.options["n_grid"] = sub.app->add_option(
        "--n-grid", val.n_grid, "comma-separated sample sizes, e.g. 500,2000,8000");
  if (want("replicates"))
    sub.options["replicates"] =
        sub.app->add_option("--replicates", val.replicates, "replicates per grid point");
  if (want("starts"))
    sub.options["starts"] =
        sub.app->add_option("--starts", val.starts, "random restarts for the fit");
  if (want("max_iterations"))
    sub.options["max_iterations"] = sub.app->add_option(
        "--max-iterations", val.max_iterations, "iteration cap per fit start");
  if (want("distance"))
    sub.options["distance"] = sub.app->add_option(
        "--distance", val.distance, "fixed separation between the two hypotheses");
  if (want("radius"))
    sub.options["radius"] = sub.app->add_option(
        "--radius", val.radius, "rate-matched separation constant r in r*n^(-1/(2p))");
  if (want("p_order"))
    sub.options["p_order"] =
        sub.app->add_option("--p-order", val.p_order, "degeneracy order for --radius");
  if (want("trials"))
    sub.options["trials"] =
        sub.app->add_option("--trials", val.trials, "random perturbation pairs to check");
  if (want("scale_min"))
    sub.options["scale_min"] = sub.app->add_option(
        "--scale-min", val.scale_min, "smallest perturbation scale");
  if (want("scale_max"))
    sub.options["scale_max"] = sub.app->add_option(
        "--scale-max", val.scale_max, "largest perturbation scale");
  if (want("tolerance_factor"))
    sub.options["tolerance_factor"] = sub.app->add_option(
        "--tolerance-factor", val.tolerance_factor, "rank-tolerance multiplier");
  if (want("n"))
    sub.options["n"] = sub.app->add_option("--n", val.n, "documents to simulate");
  if (want("plot_data"))
    sub.options["plot_data"] =
        sub.app->add_flag("--plot-data", val.plot_data, "emit per-figure CSVs");
  return sub;
}

std::vector<long long> parse_grid_flag(const std::string& text) {
  std::vector<long long> grid;
  std::string current;
  auto flush = [&] {
    if (current.empty())
      throw std::invalid_argument("--n-grid must be comma-separated integers");
    grid.push_back(std::stoll(current));
    current.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return grid;
}

json resolve_config(const SubCommand& sub, const FlagValues& val,
                    const std::string& command) {
  json cfg = json::object();
  if (!val.config_path.empty()) {
    if (!fs::exists(val.config_path))
      throw std::invalid_argument("config file not found: " + val.config_path);
    cfg = json::parse(read_text_file(val.config_path));
    if (!cfg.is_object())
      throw std::invalid_argument("config file must hold a JSON object");
  }
  if (cfg.contains("command") && cfg.at("command").is_string() &&
      cfg.at("command").get<std::string>() != command)
    throw std::invalid_argument("config file was echoed by '" +
                                cfg.at("command").get<std::string>() +
                                "', not by '" + command + "'");
  for (const auto& [key, option] : sub.options) {
    if (option->count() == 0) continue;
    if (key == "seed") cfg["seed"] = val.seed;
    else if (key == "theta") cfg["theta"] = val.theta;
    else if (key == "corpus") cfg["corpus"] = val.corpus;
    else if (key == "V") cfg["V"] = val.v;
    else if (key == "K") cfg["K"] = val.k;
    else if (key == "m") cfg["m"] = val.m;
    else if (key == "c0") cfg["c0"] = val.c0;
    else if (key == "mixing") cfg["mixing"] = val.mixing;
    else if (key == "alpha") cfg["alpha"] = val.alpha;
    else if (key == "n_grid") cfg["n_grid"] = parse_grid_flag(val.n_grid);
    else if (key == "replicates") cfg["replicates"] = val.replicates;
    else if (key == "starts") cfg["starts"] = val.starts;
    else if (key == "max_iterations") cfg["max_iterations"] = val.max_iterations;
    else if (key == "distance") cfg["distance"] = val.distance;
    else if (key == "radius") cfg["radius"] = val.radius;
    else if (key == "p_order") cfg["p_order"] = val.p_order;
    else if (key == "trials") cfg["trials"] = val.trials;
    else if (key == "scale_min") cfg["scale_min"] = val.scale_min;
    else if (key == "scale_max") cfg["scale_max"] = val.scale_max;
    else if (key == "tolerance_factor") cfg["tolerance_factor"] = val.tolerance_factor;
    else if (key == "n") cfg["n"] = val.n;
    else if (key == "plot_data") cfg["plot_data"] = val.plot_data;
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Topic-model identifiability classification, distance bounds, and "
               "convergence-rate experiments"};
  app.require_subcommand(1);
  FlagValues val;

  SubCommand identify = add_subcommand(
      app, val, "identify", "classify the order of degeneracy of a parameter set",
      {"seed", "theta", "V", "m", "c0", "mixing", "alpha", "tolerance_factor"});
  SubCommand table1 = add_subcommand(
      app, val, "table1", "benchmark classification table over structured families",
      {"seed", "mixing", "alpha"});
  SubCommand rates = add_subcommand(
      app, val, "rates", "Monte Carlo convergence-rate curve for the constrained MLE",
      {"seed", "theta", "V", "m", "c0", "mixing", "alpha", "n_grid", "replicates",
       "starts", "max_iterations", "plot_data"});
  SubCommand two_point = add_subcommand(
      app, val, "two-point", "likelihood-ratio distinguishability experiment",
      {"seed", "theta", "V", "m", "c0", "mixing", "alpha", "n_grid", "replicates",
       "distance", "radius", "p_order"});
  SubCommand bounds = add_subcommand(
      app, val, "bounds", "distance-bound suite over random perturbation pairs",
      {"seed", "theta", "V", "m", "c0", "mixing", "alpha", "trials", "scale_min",
       "scale_max", "plot_data"});
  SubCommand mle = add_subcommand(
      app, val, "mle", "fit the floored-simplex MLE to a corpus",
      {"seed", "corpus", "V", "K", "c0", "mixing", "alpha", "starts", "max_iterations"});
  SubCommand simulate = add_subcommand(
      app, val, "simulate", "draw a corpus from a parameter set",
      {"seed", "theta", "V", "m", "mixing", "alpha", "n"});

  std::vector<const char*> argv;
  argv.push_back("topicident");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (identify.app->parsed())
      return run_identify(resolve_config(identify, val, "identify"), val.out_dir,
                          val.workers);
    if (table1.app->parsed())
      return run_table1(resolve_config(table1, val, "table1"), val.out_dir, val.workers);
    if (rates.app->parsed())
      return run_rates(resolve_config(rates, val, "rates"), val.out_dir, val.workers);
    if (two_point.app->parsed())
      return run_two_point(resolve_config(two_point, val, "two-point"), val.out_dir);
    if (bounds.app->parsed())
      return run_bounds(resolve_config(bounds, val, "bounds"), val.out_dir, val.workers);
    if (mle.app->parsed())
      return run_mle(resolve_config(mle, val, "mle"), val.out_dir, val.workers);
    if (simulate.app->parsed())
      return run_simulate(resolve_config(simulate, val, "simulate"), val.out_dir);
    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const GuardError& e) {
    std::cerr << "guard failure: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace topicident
