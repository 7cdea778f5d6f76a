#pragma once

#include <stdexcept>
#include <string>

namespace consensus_fdi {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid topology or configuration input. The CLI maps these to exit 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DisconnectedGraph : public ValidationError {
 public:
  explicit DisconnectedGraph(const std::string& what)
      : ValidationError("graph.edges", what) {}
};

class SelfLoop : public ValidationError {
 public:
  explicit SelfLoop(const std::string& what)
      : ValidationError("graph.edges", what) {}
};

class DuplicateEdge : public ValidationError {
 public:
  explicit DuplicateEdge(const std::string& what)
      : ValidationError("graph.edges", what) {}
};

class IndexOutOfRange : public ValidationError {
 public:
  explicit IndexOutOfRange(const std::string& what)
      : ValidationError("", what) {}
};

class ParseError : public ValidationError {
 public:
  explicit ParseError(const std::string& what) : ValidationError("", what) {}
};

class SvdFailure : public Error {
 public:
  using Error::Error;
};

class NonSquare : public Error {
 public:
  using Error::Error;
};

/// The fault at the target never reaches the observer's measurements.
class NotDetectable : public Error {
 public:
  using Error::Error;
};

class SynthesisRankFailure : public Error {
 public:
  using Error::Error;
};

/// The centroid cannot be steered from the chosen leader.
class SingularGramian : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace consensus_fdi
