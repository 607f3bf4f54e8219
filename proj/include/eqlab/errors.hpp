#pragma once

#include <stdexcept>
#include <string>

namespace eqlab {

// Precondition / input validation failure. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Index or checkpoint outside what a schedule or stream can provide.
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

}  // namespace eqlab
