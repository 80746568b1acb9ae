#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcqkit {

enum class ErrorCode {
  MalformedHeader,
  CountMismatch,
  UnsupportedFormat,
  IoFailure,
  EmptyCloud,
  InvalidCloud,
  MissingAttribute,
  MissingNormalsUnrecoverable,
  DegenerateNeighborhood,
  TableMissing,
  SettingsMismatch,
  UnknownFeatureName,
  EmptyNeighborhood,
  AllKeypointsEmpty,
  MissingColumn,
  BadMosValue,
  ConstantFeature,
  SingularSystem,
  NonConvergence,
  MissingFeatureColumn,
  UnknownModel,
  TooFewGroups,
  DegenerateInput,
  ZeroVariance,
  JoinMismatch,
  SchemaVersion,
  ConfigHashMismatch,
  InvalidArgument,
  BadConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can sort usage errors from data errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace pcqkit
