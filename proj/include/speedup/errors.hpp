#pragma once

#include <stdexcept>
#include <string>

namespace speedup {

/// Base class for every error raised by the inference engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Infeasible : public Error {
 public:
  Infeasible() : Error("no complete assignment satisfies all constraint rows") {}
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(long expansions)
      : Error("node-expansion budget exhausted after " + std::to_string(expansions) +
              " expansions"),
        expansions_(expansions) {}
  long expansions() const noexcept { return expansions_; }

 private:
  long expansions_;
};

class IncompleteAssignment : public Error {
 public:
  IncompleteAssignment() : Error("operation requires a complete assignment") {}
};

class DepthMismatch : public Error {
 public:
  DepthMismatch() : Error("beam nodes disagree on search depth") {}
};

class NoPairsRecorded : public Error {
 public:
  NoPairsRecorded() : Error("no (y-good, y-bad) node pairs were recorded") {}
};

class CalibrationFailed : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class SchemaMismatch : public Error {
 public:
  SchemaMismatch(const std::string& expected, const std::string& found)
      : Error("model schema mismatch: expected '" + expected + "', found '" + found + "'") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch() : Error("prediction and reference lengths differ") {}
};

}  // namespace speedup
