#ifndef FRACFLOW_REPORT_HPP
#define FRACFLOW_REPORT_HPP

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fracflow {

/// Minimal JSON value for report metadata.
class JsonValue {
 public:
  using Array = std::vector<JsonValue>;
  using Object = std::vector<std::pair<std::string, JsonValue>>;

  JsonValue() : v_(nullptr) {}
  JsonValue(std::nullptr_t) : v_(nullptr) {}
  JsonValue(bool b) : v_(b) {}
  JsonValue(int i) : v_(static_cast<long long>(i)) {}
  JsonValue(long i) : v_(static_cast<long long>(i)) {}
  JsonValue(long long i) : v_(i) {}
  JsonValue(unsigned long long i) : v_(static_cast<long long>(i)) {}
  JsonValue(unsigned long i) : v_(static_cast<long long>(i)) {}
  JsonValue(double d) : v_(d) {}
  JsonValue(const char* s) : v_(std::string(s)) {}
  JsonValue(std::string s) : v_(std::move(s)) {}
  JsonValue(Array a) : v_(std::move(a)) {}
  JsonValue(Object o) : v_(std::move(o)) {}

  static JsonValue number_array(const std::vector<double>& xs);

  void write(std::ostream& os, int indent = 0) const;

 private:
  std::variant<std::nullptr_t, bool, long long, double, std::string, Array, Object> v_;
};

/// Formats with 17 significant digits; non-finite values become null.
std::string format_number(double x);

/// Escapes a string for a JSON document (quotes included).
std::string json_quote(const std::string& s);

struct ReportEntry {
  std::string name;
  std::string paper_ref;
  double lhs = 0;
  double rhs = 0;
  std::optional<double> constant_used;
  double margin = 0;
  bool pass = true;
  bool skipped = false;
  /// Tolerance the pass flag was decided with: pass == (lhs <= rhs + tol)
  /// unless strict is set, in which case pass == (lhs < rhs) or both vanish.
  double tol = 0;
  bool strict = false;
  std::string constant_expr;
  std::string note;
};

struct VerificationReport {
  JsonValue::Object meta;
  std::vector<ReportEntry> entries;

  void add(ReportEntry e) { entries.push_back(std::move(e)); }
  void add(const std::vector<ReportEntry>& es) { entries.insert(entries.end(), es.begin(), es.end()); }
  bool all_pass() const;
  /// Orders entries by name (stable for equal names).
  void sort_entries();
  void write_json(std::ostream& os) const;
  std::string to_json() const;
};

}  // namespace fracflow

#endif  // FRACFLOW_REPORT_HPP
