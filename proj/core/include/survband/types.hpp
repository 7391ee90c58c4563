#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace survband {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Position of a subject in enrollment order. Stable for the lifetime of a
// Timeline; distinct from the user-facing SubjectRecord::id.
using SubjectIndex = std::size_t;

class TimelineError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CoxError : public std::runtime_error {
 public:
  enum class Kind { InsufficientData, Singular, CorruptCache, InvalidArgument };

  CoxError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Malformed input file; carries the 1-based line number (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid experiment configuration; `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace survband
