#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "topicident/experiments.hpp"
#include "topicident/identifiability.hpp"
#include "topicident/mle.hpp"
#include "topicident/model.hpp"

namespace topicident {

/// Order-preserving JSON value with deterministic serialization: fixed field
/// order and %.17g floats, so identical inputs emit identical bytes.
class JsonValue {
 public:
  using Object = std::vector<std::pair<std::string, JsonValue>>;
  using Array = std::vector<JsonValue>;

  JsonValue() : data_(nullptr) {}
  JsonValue(bool v) : data_(v) {}
  JsonValue(int v) : data_(static_cast<long long>(v)) {}
  JsonValue(long long v) : data_(v) {}
  JsonValue(std::uint64_t v) : data_(static_cast<long long>(v)) {}
  JsonValue(double v) : data_(v) {}
  JsonValue(const char* v) : data_(std::string(v)) {}
  JsonValue(std::string v) : data_(std::move(v)) {}

  static JsonValue object() { JsonValue v; v.data_ = Object{}; return v; }
  static JsonValue array() { JsonValue v; v.data_ = Array{}; return v; }

  JsonValue& set(const std::string& key, JsonValue value);
  JsonValue& push(JsonValue value);

  bool is_object() const { return std::holds_alternative<Object>(data_); }
  const JsonValue* find(const std::string& key) const;

  std::string dump(int indent = 2) const;

 private:
  void dump_to(std::string& out, int indent, int depth) const;
  std::variant<std::nullptr_t, bool, long long, double, std::string, Object, Array> data_;
};

/// 17 significant digits: enough to round-trip any double exactly.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Topic matrices travel as CSV with a `# K=<k> V=<v> c0=<c0>` header line.
std::string topic_matrix_to_csv(const TopicMatrix& theta);
TopicMatrix topic_matrix_from_csv(const std::string& text);

// Corpora travel as CSV, one document per row, 1-based word indices.
std::string corpus_to_csv(const Corpus& corpus);
Corpus corpus_from_csv(const std::string& text, int vocab_size);

std::string rate_curve_to_csv(const RateCurve& curve);    // header: n,replicate,error
std::string rate_curve_medians_csv(const RateCurve& curve);
JsonValue rate_curve_to_json(const RateCurve& curve);

std::string table1_to_csv(const std::vector<Table1Row>& rows);
JsonValue table1_to_json(const std::vector<Table1Row>& rows, std::uint64_t seed);

JsonValue identifiability_report_to_json(const IdentifiabilityReport& report);
IdentifiabilityReport identifiability_report_from_json(const std::string& text);

JsonValue fit_result_to_json(const FitResult& result);
JsonValue two_point_results_to_json(const std::vector<TwoPointResult>& results);
std::string two_point_results_to_csv(const std::vector<TwoPointResult>& results);
JsonValue bound_report_to_json(const BoundReport& report);
std::string bound_trials_to_csv(const BoundReport& report);

}  // namespace topicident
