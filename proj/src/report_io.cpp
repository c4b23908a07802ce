#include "topicident/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace topicident {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

void escape_json(const std::string& s, std::string& out) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue value) {
  if (std::holds_alternative<std::nullptr_t>(data_)) data_ = Object{};
  if (!std::holds_alternative<Object>(data_))
    throw std::logic_error("set() on a non-object JSON value");
  Object& obj = std::get<Object>(data_);
  for (auto& [k, v] : obj) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  obj.emplace_back(key, std::move(value));
  return *this;
}

JsonValue& JsonValue::push(JsonValue value) {
  if (std::holds_alternative<std::nullptr_t>(data_)) data_ = Array{};
  if (!std::holds_alternative<Array>(data_))
    throw std::logic_error("push() on a non-array JSON value");
  std::get<Array>(data_).push_back(std::move(value));
  return *this;
}

const JsonValue* JsonValue::find(const std::string& key) const {
  if (!std::holds_alternative<Object>(data_)) return nullptr;
  for (const auto& [k, v] : std::get<Object>(data_))
    if (k == key) return &v;
  return nullptr;
}

void JsonValue::dump_to(std::string& out, int indent, int depth) const {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  if (std::holds_alternative<std::nullptr_t>(data_)) {
    out += "null";
  } else if (std::holds_alternative<bool>(data_)) {
    out += std::get<bool>(data_) ? "true" : "false";
  } else if (std::holds_alternative<long long>(data_)) {
    out += std::to_string(std::get<long long>(data_));
  } else if (std::holds_alternative<double>(data_)) {
    const double v = std::get<double>(data_);
    if (std::isfinite(v)) {
      out += format_double(v);
    } else {
      // JSON has no literal for these; emit the %.17g spelling as a string.
      escape_json(format_double(v), out);
    }
  } else if (std::holds_alternative<std::string>(data_)) {
    escape_json(std::get<std::string>(data_), out);
  } else if (std::holds_alternative<Object>(data_)) {
    const Object& obj = std::get<Object>(data_);
    if (obj.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    for (std::size_t i = 0; i < obj.size(); ++i) {
      out += pad;
      escape_json(obj[i].first, out);
      out += ": ";
      obj[i].second.dump_to(out, indent, depth + 1);
      if (i + 1 < obj.size()) out += ",";
      out += "\n";
    }
    out += close_pad + "}";
  } else {
    const Array& arr = std::get<Array>(data_);
    if (arr.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out += pad;
      arr[i].dump_to(out, indent, depth + 1);
      if (i + 1 < arr.size()) out += ",";
      out += "\n";
    }
    out += close_pad + "]";
  }
}

std::string JsonValue::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  out += "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw std::runtime_error("cannot open for writing: " + path.string());
  stream << text;
  if (!stream) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

std::string topic_matrix_to_csv(const TopicMatrix& theta) {
  std::string out = "# K=" + std::to_string(theta.topic_count()) +
                    " V=" + std::to_string(theta.vocab_size()) +
                    " c0=" + format_double(theta.c0) + "\n";
  for (int j = 0; j < theta.topic_count(); ++j) {
    for (int w = 0; w < theta.vocab_size(); ++w) {
      if (w > 0) out += ",";
      out += format_double(theta.rows(j, w));
    }
    out += "\n";
  }
  return out;
}

TopicMatrix topic_matrix_from_csv(const std::string& text) {
  const std::vector<std::string> lines = lines_of(text);
  std::size_t at = 0;
  while (at < lines.size() && trim(lines[at]).empty()) ++at;
  if (at >= lines.size() || trim(lines[at])[0] != '#')
    throw std::invalid_argument("topic matrix CSV must start with a '# K=.. V=.. c0=..' header");
  int k = -1, v = -1;
  double c0 = -1.0;
  std::istringstream header(trim(lines[at]).substr(1));
  std::string token;
  while (header >> token) {
    if (token.rfind("K=", 0) == 0) k = std::stoi(token.substr(2));
    else if (token.rfind("V=", 0) == 0) v = std::stoi(token.substr(2));
    else if (token.rfind("c0=", 0) == 0) c0 = std::stod(token.substr(3));
  }
  if (k < 1 || v < 1 || c0 < 0.0)
    throw std::invalid_argument("topic matrix CSV header is missing K, V, or c0");
  Eigen::MatrixXd rows(k, v);
  int filled = 0;
  for (++at; at < lines.size(); ++at) {
    const std::string line = trim(lines[at]);
    if (line.empty() || line[0] == '#') continue;
    if (filled >= k) throw std::invalid_argument("topic matrix CSV has more rows than K");
    const std::vector<std::string> cells = split(line, ',');
    if (static_cast<int>(cells.size()) != v)
      throw std::invalid_argument("topic matrix CSV row has wrong number of columns");
    for (int w = 0; w < v; ++w) rows(filled, w) = std::stod(trim(cells[static_cast<std::size_t>(w)]));
    ++filled;
  }
  if (filled != k) throw std::invalid_argument("topic matrix CSV has fewer rows than K");
  return TopicMatrix::create(std::move(rows), c0);
}

std::string corpus_to_csv(const Corpus& corpus) {
  std::string out;
  for (const Document& doc : corpus.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i > 0) out += ",";
      out += std::to_string(doc[i] + 1);  // words are 1-based on disk
    }
    out += "\n";
  }
  return out;
}

Corpus corpus_from_csv(const std::string& text, int vocab_size) {
  std::vector<Document> documents;
  for (const std::string& raw : lines_of(text)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    Document doc;
    for (const std::string& cell : split(line, ','))
      doc.push_back(std::stoi(trim(cell)) - 1);
    documents.push_back(std::move(doc));
  }
  return Corpus::create(vocab_size, std::move(documents));
}

std::string rate_curve_to_csv(const RateCurve& curve) {
  std::string out = "n,replicate,error\n";
  for (std::size_t i = 0; i < curve.n_grid.size(); ++i)
    for (std::size_t rep = 0; rep < curve.errors[i].size(); ++rep)
      out += std::to_string(curve.n_grid[i]) + "," + std::to_string(rep) + "," +
             format_double(curve.errors[i][rep]) + "\n";
  return out;
}

std::string rate_curve_medians_csv(const RateCurve& curve) {
  std::string out = "n,median_error,mean_error\n";
  for (std::size_t i = 0; i < curve.n_grid.size(); ++i)
    out += std::to_string(curve.n_grid[i]) + "," + format_double(curve.median_error[i]) +
           "," + format_double(curve.mean_error[i]) + "\n";
  return out;
}

JsonValue rate_curve_to_json(const RateCurve& curve) {
  JsonValue json = JsonValue::object();
  json.set("theta_label", curve.theta_label);
  JsonValue grid = JsonValue::array();
  for (long long n : curve.n_grid) grid.push(n);
  json.set("n_grid", std::move(grid));
  JsonValue medians = JsonValue::array();
  for (double v : curve.median_error) medians.push(v);
  json.set("median_error", std::move(medians));
  JsonValue means = JsonValue::array();
  for (double v : curve.mean_error) means.push(v);
  json.set("mean_error", std::move(means));
  json.set("slope", curve.slope);
  json.set("intercept", curve.intercept);
  json.set("slope_stderr", curve.slope_stderr);
  return json;
}

std::string table1_to_csv(const std::vector<Table1Row>& rows) {
  std::string out = "label,V,K,m,kappa1_est,kappa2,sigma_min,sigma_max,p_order\n";
  for (const Table1Row& row : rows) {
    out += row.label + "," + std::to_string(row.vocab_size) + "," +
           std::to_string(row.topic_count) + "," +
           std::to_string(row.words_per_document) + "," +
           format_double(row.report.kappa1_estimate) + "," +
           format_double(row.report.kappa2) + "," +
           format_double(row.report.sigma_min) + "," +
           format_double(row.report.sigma_max) + "," +
           std::to_string(row.report.p_order) + "\n";
  }
  return out;
}

JsonValue table1_to_json(const std::vector<Table1Row>& rows, std::uint64_t seed) {
  JsonValue json = JsonValue::object();
  json.set("seed", seed);
  JsonValue array = JsonValue::array();
  for (const Table1Row& row : rows) {
    JsonValue entry = identifiability_report_to_json(row.report);
    entry.set("label", row.label);
    array.push(std::move(entry));
  }
  json.set("rows", std::move(array));
  return json;
}

JsonValue identifiability_report_to_json(const IdentifiabilityReport& report) {
  JsonValue json = JsonValue::object();
  json.set("V", report.vocab_size);
  json.set("K", report.topic_count);
  json.set("m", report.words_per_document);
  json.set("sigma_min", report.sigma_min);
  json.set("sigma_max", report.sigma_max);
  json.set("kappa2", report.kappa2);
  json.set("kappa1_estimate", report.kappa1_estimate);
  json.set("rank_tolerance", report.rank_tolerance);
  json.set("full_column_rank", report.full_column_rank);
  json.set("p_order", report.p_order);
  return json;
}

IdentifiabilityReport identifiability_report_from_json(const std::string& text) {
  const nlohmann::json json = nlohmann::json::parse(text);
  IdentifiabilityReport report;
  report.vocab_size = json.at("V").get<int>();
  report.topic_count = json.at("K").get<int>();
  report.words_per_document = json.at("m").get<int>();
  report.sigma_min = json.at("sigma_min").get<double>();
  report.sigma_max = json.at("sigma_max").get<double>();
  report.kappa2 = json.at("kappa2").get<double>();
  report.kappa1_estimate = json.at("kappa1_estimate").get<double>();
  report.rank_tolerance = json.at("rank_tolerance").get<double>();
  report.full_column_rank = json.at("full_column_rank").get<bool>();
  report.p_order = json.at("p_order").get<int>();
  return report;
}

JsonValue fit_result_to_json(const FitResult& result) {
  JsonValue json = JsonValue::object();
  json.set("log_likelihood", result.log_likelihood);
  json.set("iterations", result.iterations);
  json.set("winner_start", result.winner_start);
  json.set("converged", result.converged);
  json.set("c0", result.theta_hat.c0);
  JsonValue rows = JsonValue::array();
  for (int j = 0; j < result.theta_hat.topic_count(); ++j) {
    JsonValue row = JsonValue::array();
    for (int w = 0; w < result.theta_hat.vocab_size(); ++w)
      row.push(result.theta_hat.rows(j, w));
    rows.push(std::move(row));
  }
  json.set("theta_hat", std::move(rows));
  JsonValue trace = JsonValue::array();
  for (double v : result.trace) trace.push(v);
  json.set("trace", std::move(trace));
  return json;
}

JsonValue two_point_results_to_json(const std::vector<TwoPointResult>& results) {
  JsonValue json = JsonValue::object();
  JsonValue array = JsonValue::array();
  for (const TwoPointResult& r : results) {
    JsonValue entry = JsonValue::object();
    entry.set("n", r.n);
    entry.set("distance", r.distance);
    entry.set("replicates", r.replicates);
    entry.set("type1_rate", r.type1_rate);
    entry.set("type2_rate", r.type2_rate);
    entry.set("error_rate", r.error_rate);
    array.push(std::move(entry));
  }
  json.set("results", std::move(array));
  return json;
}

std::string two_point_results_to_csv(const std::vector<TwoPointResult>& results) {
  std::string out = "n,distance,replicates,type1_rate,type2_rate,error_rate\n";
  for (const TwoPointResult& r : results)
    out += std::to_string(r.n) + "," + format_double(r.distance) + "," +
           std::to_string(r.replicates) + "," + format_double(r.type1_rate) + "," +
           format_double(r.type2_rate) + "," + format_double(r.error_rate) + "\n";
  return out;
}

JsonValue bound_report_to_json(const BoundReport& report) {
  JsonValue json = JsonValue::object();
  json.set("p_order", report.p_order);
  json.set("trials", report.trials);
  json.set("all_pass", report.all_pass);
  JsonValue checks = JsonValue::array();
  for (const BoundCheck& check : report.checks) {
    JsonValue entry = JsonValue::object();
    entry.set("name", check.name);
    entry.set("violations", check.violations);
    entry.set("worst_slack", check.worst_slack);
    checks.push(std::move(entry));
  }
  json.set("checks", std::move(checks));
  return json;
}

std::string bound_trials_to_csv(const BoundReport& report) {
  std::string out = "epsilon,l2,tv,kl\n";
  for (const BoundTrial& trial : report.trial_data)
    out += format_double(trial.epsilon) + "," + format_double(trial.l2) + "," +
           format_double(trial.tv) + "," + format_double(trial.kl) + "\n";
  return out;
}

}  // namespace topicident
