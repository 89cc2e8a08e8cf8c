#pragma once

#include <stdexcept>
#include <string>

namespace ordsim {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A cumulative tail probability hit 0 or 1, so its logit is undefined.
class DegenerateTail : public Error {
 public:
  explicit DegenerateTail(const std::string& msg) : Error(msg) {}
};

// Vector rejection sampling exhausted its attempt cap.
class RejectionExhausted : public Error {
 public:
  explicit RejectionExhausted(const std::string& msg) : Error(msg) {}
};

// A deterministic scenario generator produced an invalid simplex.
class InvalidScenario : public Error {
 public:
  explicit InvalidScenario(const std::string& msg) : Error(msg) {}
};

// sd = 0 truncated normal with the point mass outside the bounds.
class BoundsViolation : public Error {
 public:
  explicit BoundsViolation(const std::string& msg) : Error(msg) {}
};

// Data dimensions do not match the model layout.
class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

// No finite-density starting point found within the retry cap.
class InitFailure : public Error {
 public:
  explicit InitFailure(const std::string& msg) : Error(msg) {}
};

// Gradient NaN/Inf at a point with finite log density; signals a model bug.
class NonFiniteGradient : public Error {
 public:
  explicit NonFiniteGradient(const std::string& msg) : Error(msg) {}
};

// Fewer successful replicates than an aggregation step requires.
class InsufficientReplicates : public Error {
 public:
  explicit InsufficientReplicates(const std::string& msg) : Error(msg) {}
};

// A grid plan with an empty axis.
class EmptyPlan : public Error {
 public:
  explicit EmptyPlan(const std::string& msg) : Error(msg) {}
};

// Malformed input file (carries row/column context in the message).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Structurally valid input with out-of-domain values.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

class DuplicateSubject : public Error {
 public:
  explicit DuplicateSubject(const std::string& msg) : Error(msg) {}
};

class EmptyAfterFilter : public Error {
 public:
  explicit EmptyAfterFilter(const std::string& msg) : Error(msg) {}
};

class UnknownKind : public Error {
 public:
  explicit UnknownKind(const std::string& msg) : Error(msg) {}
};

class MissingColumns : public Error {
 public:
  explicit MissingColumns(const std::string& msg) : Error(msg) {}
};

// Invalid run configuration (unknown key, bad type, bad value).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// An internal cross-check (closed form vs resampled estimate, stored record
// vs re-derived truth) disagreed; signals corrupted state or a bug, never
// bad user input.
class SelfCheckFailure : public Error {
 public:
  explicit SelfCheckFailure(const std::string& msg) : Error(msg) {}
};

}  // namespace ordsim
