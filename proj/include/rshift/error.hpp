#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace rshift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric argument (non-positive radius, n < 2, probability outside (0,1), ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Window algebra produced an empty or unsupported region.
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what, std::optional<std::size_t> shift_index = {})
      : Error(what), shift_index_(shift_index) {}
  std::optional<std::size_t> shift_index() const { return shift_index_; }

 private:
  std::optional<std::size_t> shift_index_;
};

/// A test statistic cannot be evaluated on the given data (e.g. empty pattern).
class StatisticUndefined : public Error {
 public:
  using Error::Error;
};

/// Circulant embedding lost too much spectral mass to truncation.
class SimulationQualityError : public Error {
 public:
  using Error::Error;
};

/// Error tied to a particular entry of a shift series.
class IndexedError : public Error {
 public:
  IndexedError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class LookupError : public IndexedError {
 public:
  using IndexedError::IndexedError;
};

class BandwidthError : public IndexedError {
 public:
  using IndexedError::IndexedError;
};

class VarianceError : public IndexedError {
 public:
  using IndexedError::IndexedError;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or document.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace rshift
