#include "sfcmig/text.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cmath>

#include "sfcmig/error.hpp"

namespace sfcmig {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where, const std::string& module) {
  const std::string t = trim(s);
  if (t.empty()) throw Error(module, where + ": empty number");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw Error(module, where + ": bad number '" + t + "'");
  }
  return v;
}

int parse_int(const std::string& s, const std::string& where, const std::string& module) {
  long long v = parse_long(s, where, module);
  if (v < -2147483648LL || v > 2147483647LL) {
    throw Error(module, where + ": integer out of range '" + trim(s) + "'");
  }
  return static_cast<int>(v);
}

long long parse_long(const std::string& s, const std::string& where, const std::string& module) {
  const std::string t = trim(s);
  if (t.empty()) throw Error(module, where + ": empty integer");
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) {
    throw Error(module, where + ": bad integer '" + t + "'");
  }
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  // Integral values print plainly; everything else gets the shortest form
  // that parses back to the same double.
  if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace sfcmig
