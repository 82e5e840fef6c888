#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gms {

enum class Errc {
  ParseError,
  UnsupportedFormat,
  EmptyModel,
  DegenerateModel,
  MissingField,
  NonFiniteMos,
  Io,
  InvalidConfig,
  ResolutionTooSmall,
  ConfigMismatch,
  CellTooSmall,
  AllViewsBlank,
  LengthMismatch,
  EmptyBatch,
  ShapeMismatch,
  EmptyManifest,
  DivergedLoss,
  DegenerateLabels,
  TooFewSamples,
  TooFewGroups,
  Bridge,
};

std::string_view errc_name(Errc code);

/// Input/config errors (exit code 2) versus runtime/numeric ones (exit code 3).
bool is_input_error(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gms
