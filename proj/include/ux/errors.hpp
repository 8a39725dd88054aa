#pragma once

#include <stdexcept>
#include <string>

namespace ux {

// Exit-code classes used by the CLI: DataError -> 3, NumericError -> 4.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : DataError {
  using DataError::DataError;
};
struct StructureError : DataError {
  using DataError::DataError;
};
struct BoundsError : DataError {
  using DataError::DataError;
};
struct DomainError : DataError {
  using DataError::DataError;
};
struct ConfigError : DataError {
  using DataError::DataError;
};
struct CalendarError : DataError {
  using DataError::DataError;
};
struct EmptyCorpus : DataError {
  using DataError::DataError;
};
struct EmptySample : DataError {
  using DataError::DataError;
};
struct FormatError : DataError {
  using DataError::DataError;
};
struct MissingClimatology : DataError {
  using DataError::DataError;
};

struct DegenerateSpectrum : NumericError {
  using NumericError::NumericError;
};
struct DegenerateSample : NumericError {
  using NumericError::NumericError;
};
struct DegenerateVariable : NumericError {
  using NumericError::NumericError;
};
struct NoValidMemory : NumericError {
  using NumericError::NumericError;
};
struct TrainingDiverged : NumericError {
  using NumericError::NumericError;
};

}  // namespace ux
