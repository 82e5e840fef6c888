#include "gms3dqa/error.hpp"

namespace gms {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::EmptyModel: return "EmptyModel";
    case Errc::DegenerateModel: return "DegenerateModel";
    case Errc::MissingField: return "MissingField";
    case Errc::NonFiniteMos: return "NonFiniteMos";
    case Errc::Io: return "IoError";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ResolutionTooSmall: return "ResolutionTooSmall";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::CellTooSmall: return "CellTooSmall";
    case Errc::AllViewsBlank: return "AllViewsBlank";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewGroups: return "TooFewGroups";
    case Errc::Bridge: return "BridgeError";
  }
  return "Error";
}

bool is_input_error(Errc code) {
  switch (code) {
    case Errc::ParseError:
    case Errc::UnsupportedFormat:
    case Errc::EmptyModel:
    case Errc::MissingField:
    case Errc::NonFiniteMos:
    case Errc::Io:
    case Errc::InvalidConfig:
    case Errc::EmptyManifest:
      return true;
    default:
      return false;
  }
}

}  // namespace gms
