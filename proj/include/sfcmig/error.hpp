#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sfcmig {

// Runtime failure tagged with the module that raised it, so the CLI can name
// the failing module in its exit message.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

}  // namespace sfcmig
