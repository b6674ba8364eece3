#include "fracflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fracflow {

std::string format_number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

JsonValue JsonValue::number_array(const std::vector<double>& xs) {
  Array a;
  a.reserve(xs.size());
  for (double x : xs) a.emplace_back(x);
  return JsonValue(std::move(a));
}

namespace {

void pad(std::ostream& os, int n) {
  for (int i = 0; i < n; ++i) os << ' ';
}

}  // namespace

void JsonValue::write(std::ostream& os, int indent) const {
  struct Visitor {
    std::ostream& os;
    int indent;
    void operator()(std::nullptr_t) const { os << "null"; }
    void operator()(bool b) const { os << (b ? "true" : "false"); }
    void operator()(long long i) const { os << i; }
    void operator()(double d) const { os << format_number(d); }
    void operator()(const std::string& s) const { os << json_quote(s); }
    void operator()(const Array& a) const {
      if (a.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (k) os << ", ";
        a[k].write(os, indent);
      }
      os << ']';
    }
    void operator()(const Object& o) const {
      if (o.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      for (std::size_t k = 0; k < o.size(); ++k) {
        pad(os, indent + 2);
        os << json_quote(o[k].first) << ": ";
        o[k].second.write(os, indent + 2);
        if (k + 1 < o.size()) os << ',';
        os << '\n';
      }
      pad(os, indent);
      os << '}';
    }
  };
  std::visit(Visitor{os, indent}, v_);
}

bool VerificationReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const ReportEntry& e) { return e.pass; });
}

void VerificationReport::sort_entries() {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ReportEntry& a, const ReportEntry& b) { return a.name < b.name; });
}

void VerificationReport::write_json(std::ostream& os) const {
  os << "{\n  \"meta\": ";
  JsonValue(meta).write(os, 2);
  os << ",\n  \"entries\": [";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    os << (k ? ",\n" : "\n") << "    {";
    os << "\"name\": " << json_quote(e.name);
    os << ", \"paper_ref\": " << json_quote(e.paper_ref);
    os << ", \"lhs\": " << format_number(e.lhs);
    os << ", \"rhs\": " << format_number(e.rhs);
    os << ", \"constant_used\": " << (e.constant_used ? format_number(*e.constant_used) : "null");
    os << ", \"margin\": " << format_number(e.margin);
    os << ", \"pass\": " << (e.pass ? "true" : "false");
    os << ", \"tol\": " << format_number(e.tol);
    if (e.strict) os << ", \"strict\": true";
    if (e.skipped) os << ", \"skipped\": true";
    if (!e.constant_expr.empty()) os << ", \"constant_expr\": " << json_quote(e.constant_expr);
    if (!e.note.empty()) os << ", \"note\": " << json_quote(e.note);
    os << '}';
  }
  os << (entries.empty() ? "]\n" : "\n  ]\n") << "}\n";
}

std::string VerificationReport::to_json() const {
  std::ostringstream os;
  write_json(os);
  return os.str();
}

}  // namespace fracflow
