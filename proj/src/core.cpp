#include "mdwkb/core.hpp"

namespace mdwkb {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CausticExceeded: return "CausticExceeded";
    case ErrorKind::NonFinitePhase: return "NonFinitePhase";
    case ErrorKind::CoverageGap: return "CoverageGap";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::HistoryTooShort: return "HistoryTooShort";
    case ErrorKind::CharacteristicPhase: return "CharacteristicPhase";
    case ErrorKind::ConservationBreach: return "ConservationBreach";
    case ErrorKind::ResolutionInsufficient: return "ResolutionInsufficient";
    case ErrorKind::MissingOscillatoryPotential: return "MissingOscillatoryPotential";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::NonPositiveConstant: return "NonPositiveConstant";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mdwkb
