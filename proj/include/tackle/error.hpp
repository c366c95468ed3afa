#pragma once

#include <stdexcept>
#include <string>

namespace tackle {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kDivergence = 4,
  kInternal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

// Malformed clip container, checkpoint or other binary payload.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class AnnotationError : public Error {
 public:
  explicit AnnotationError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class ManifestError : public Error {
 public:
  explicit ManifestError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class StratificationError : public Error {
 public:
  explicit StratificationError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class BalancingError : public Error {
 public:
  explicit BalancingError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kDivergence, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error(ExitCode::kDivergence, what), epoch_(epoch), batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ExitCode::kInternal, what) {}
};

}  // namespace tackle
