#pragma once

#include <stdexcept>
#include <string>

namespace curtail {

// Base of every error raised by the library. Subclasses let callers (the
// CLI in particular) map failures onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateDesignError : public Error {
 public:
  using Error::Error;
};

class SearchBoundError : public Error {
 public:
  using Error::Error;
};

class NoSolutionError : public Error {
 public:
  using Error::Error;
};

class TerminalStateError : public Error {
 public:
  using Error::Error;
};

class SequenceGapError : public Error {
 public:
  using Error::Error;
};

class DuplicateObservationError : public Error {
 public:
  using Error::Error;
};

class NonTerminalError : public Error {
 public:
  using Error::Error;
};

class SnapshotCorruptError : public Error {
 public:
  using Error::Error;
};

class SnapshotVersionError : public Error {
 public:
  using Error::Error;
};

class LogFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace curtail
