#pragma once

#include <stdexcept>
#include <string>

namespace qbl {

enum class ErrorCode {
  pole,
  root_finding,
  singular_on_contour,
  ambiguous_winding,
  no_return,
  step_underflow,
  not_a_saddle,
  degenerate_chart,
  unclassifiable,
  inconsistent_stability,
  no_merge,
};

class NumericError : public std::runtime_error {
 public:
  NumericError(ErrorCode c, const std::string& what)
      : std::runtime_error(what), code(c) {}
  ErrorCode code;
};

}  // namespace qbl
