#ifndef IVTEST_ERROR_HPP
#define IVTEST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ivtest {

enum class ErrorCode {
  EmptyDataset,
  OutOfRangeLevel,
  EmptyStratum,
  CeilingExceeded,
  NotBinary,
  LayoutMismatch,
  ConstraintUnsatisfiable,
  EstimatorDiverged,
  DegenerateMargins,
  InvalidProbability,
  FileNotFound,
  MissingColumn,
  ParseError,
  DegenerateColumn,
  RankDeficient,
  IoError,
  BadConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace ivtest

#endif
