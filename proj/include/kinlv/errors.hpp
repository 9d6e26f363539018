#pragma once

#include <stdexcept>
#include <string>

namespace kinlv {

// Failure classes map 1:1 onto CLI exit codes (see cli.hpp).
enum class ErrorCode { Validation = 2, Numerical = 3, Io = 4 };

class KinlvError : public std::runtime_error {
 public:
  KinlvError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kinlv
