#ifndef GERBERA_ERROR_HPP
#define GERBERA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gerbera {

// Base class for everything this library throws on purpose.
// The CLI maps these onto exit codes (see tools/gerbera.cpp).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data is malformed (bad file, bad tags, bad encoding).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// A documented invariant or precondition was violated by the caller.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& msg) : Error(msg) {}
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, size_t line_no)
      : DataError(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
  size_t line;
};

class InvalidTagsError : public DataError {
 public:
  explicit InvalidTagsError(const std::string& msg) : DataError(msg) {}
};

class EncodingError : public DataError {
 public:
  explicit EncodingError(const std::string& msg) : DataError(msg) {}
};

class EmptyCorporaError : public InvariantError {
 public:
  explicit EmptyCorporaError(const std::string& msg) : InvariantError(msg) {}
};

class DuplicateTaskError : public InvariantError {
 public:
  explicit DuplicateTaskError(const std::string& msg) : InvariantError(msg) {}
};

class NoTasksError : public InvariantError {
 public:
  explicit NoTasksError(const std::string& msg) : InvariantError(msg) {}
};

class UnknownTaskError : public InvariantError {
 public:
  explicit UnknownTaskError(const std::string& msg) : InvariantError(msg) {}
};

class StaleCacheError : public InvariantError {
 public:
  explicit StaleCacheError(const std::string& msg) : InvariantError(msg) {}
};

class EmptyTaskError : public InvariantError {
 public:
  explicit EmptyTaskError(const std::string& msg) : InvariantError(msg) {}
};

class SentenceCountMismatchError : public InvariantError {
 public:
  explicit SentenceCountMismatchError(const std::string& msg)
      : InvariantError(msg) {}
};

class CorruptCheckpointError : public DataError {
 public:
  explicit CorruptCheckpointError(const std::string& msg) : DataError(msg) {}
};

class VersionMismatchError : public DataError {
 public:
  explicit VersionMismatchError(const std::string& msg) : DataError(msg) {}
};

}  // namespace gerbera

#endif  // GERBERA_ERROR_HPP
