#ifndef BRANCHEXP_ERROR_HPP
#define BRANCHEXP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace branchexp {

/// Process exit codes used by the command line tool, one per error class.
enum class ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kParse = 2,
  kValidation = 3,
  kAssumption = 4,
  kConvergence = 5,
  kBudget = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, std::string field = {})
      : Error(ExitCode::kParse, decorate(what, line, field)),
        line_(line),
        field_(std::move(field)) {}
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string decorate(const std::string& what, int line,
                              const std::string& field) {
    std::string out = "parse error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + what;
  }
  int line_;
  std::string field_;
};

/// Carries every violated invariant, not just the first one found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(ExitCode::kValidation, join(problems)),
        problems_(std::move(problems)) {}
  explicit ValidationError(const std::string& problem)
      : ValidationError(std::vector<std::string>{problem}) {}
  const std::vector<std::string>& problems() const noexcept {
    return problems_;
  }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "validation failed";
    for (const auto& p : problems) out += "; " + p;
    return out;
  }
  std::vector<std::string> problems_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ExitCode::kValidation, "domain error: " + what) {}
};

class UnsupportedLaw : public Error {
 public:
  explicit UnsupportedLaw(const std::string& what)
      : Error(ExitCode::kValidation, "unsupported law: " + what) {}
};

class NotLattice : public Error {
 public:
  explicit NotLattice(const std::string& what)
      : Error(ExitCode::kValidation, "not a lattice model: " + what) {}
};

class NonPositiveMatrix : public Error {
 public:
  explicit NonPositiveMatrix(const std::string& what)
      : Error(ExitCode::kValidation, "non-positive matrix: " + what) {}
};

class AssumptionViolation : public Error {
 public:
  explicit AssumptionViolation(const std::string& what)
      : Error(ExitCode::kAssumption, "assumption violated: " + what) {}
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what)
      : Error(ExitCode::kConvergence, "no convergence: " + what) {}
};

class BracketingFailure : public Error {
 public:
  explicit BracketingFailure(const std::string& what)
      : Error(ExitCode::kConvergence, "bracketing failure: " + what) {}
};

class InsufficientHits : public Error {
 public:
  explicit InsufficientHits(const std::string& what)
      : Error(ExitCode::kConvergence, "insufficient hits: " + what) {}
};

class MemoryBudgetExceeded : public Error {
 public:
  explicit MemoryBudgetExceeded(const std::string& what)
      : Error(ExitCode::kBudget, "budget exceeded: " + what) {}
};

}  // namespace branchexp

#endif  // BRANCHEXP_ERROR_HPP
