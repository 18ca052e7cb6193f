#pragma once

#include <stdexcept>
#include <string>

namespace cinetrack {

// Every error thrown by the library derives from Error so callers (the CLI in
// particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A point or argument lies outside the region where an operation is defined.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration: bad sizes, counts, step parameters, geometry mismatch.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// Invalid user input to an evaluation (mismatched counts or geometry).
class InputError : public Error {
public:
  using Error::Error;
};

/// Similarity metric cannot be evaluated (too few valid samples, zero variance).
class DegenerateMetricError : public Error {
public:
  using Error::Error;
};

/// A distance metric is undefined, e.g. one of the masks is empty.
class UndefinedMetricError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class UnsupportedFormatError : public IoError {
public:
  using IoError::IoError;
};

class CorruptFileError : public IoError {
public:
  using IoError::IoError;
};

/// MetaImage header problems: unknown keys, missing mandatory keys, bad values.
class HeaderError : public IoError {
public:
  using IoError::IoError;
};

} // namespace cinetrack
