#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sfcmig {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Strict numeric parsing; `where` goes into the error message (module tag
// tells the CLI which loader failed).
double parse_double(const std::string& s, const std::string& where, const std::string& module);
int parse_int(const std::string& s, const std::string& where, const std::string& module);
long long parse_long(const std::string& s, const std::string& where, const std::string& module);

// Shortest round-trippable decimal form, identical across runs.
std::string fmt_double(double v);

}  // namespace sfcmig
