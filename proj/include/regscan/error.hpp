#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace regscan {

// Base for every error the library raises. `kind()` is the stable tag that
// the CLI puts into its structured error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Invalid parameters or preconditions (bad exponent, ball outside box, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain error", what) {}
};

// Malformed field file. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error("format error", what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Iterative solver gave up or a simulation produced non-finite data.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> history = {})
      : Error("numerical error", what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace regscan
