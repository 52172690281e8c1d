#pragma once

#include <stdexcept>
#include <string>

namespace vroc {

// Base for all errors raised by the library. `code()` is a stable,
// machine-readable tag; the CLI prints it on stderr as part of its
// error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& m) : Error("ShapeMismatch", m) {}
};

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& m) : Error("NonFinite", m) {}
};

class NonDeterministicError : public Error {
 public:
  explicit NonDeterministicError(const std::string& m) : Error("NonDeterministic", m) {}
};

class IndexOutOfRangeError : public Error {
 public:
  explicit IndexOutOfRangeError(const std::string& m) : Error("IndexOutOfRange", m) {}
};

class UnknownVocabError : public Error {
 public:
  explicit UnknownVocabError(const std::string& m) : Error("UnknownVocab", m) {}
};

class TemplateLargerThanRegionError : public Error {
 public:
  explicit TemplateLargerThanRegionError(const std::string& m)
      : Error("TemplateLargerThanRegion", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("IoError", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("Config", m) {}
};

class EmptySplitError : public Error {
 public:
  explicit EmptySplitError(const std::string& m) : Error("EmptySplit", m) {}
};

class DivergedLossError : public Error {
 public:
  explicit DivergedLossError(const std::string& m) : Error("DivergedLoss", m) {}
};

class EmptySetError : public Error {
 public:
  explicit EmptySetError(const std::string& m) : Error("EmptySet", m) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& m) : Error("Checkpoint", m) {}
};

}  // namespace vroc
