#include "etsfs/core/error.hpp"

namespace etsfs {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonPositiveData: return "NonPositiveData";
    case ErrorCode::NoFeasibleModel: return "NoFeasibleModel";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptArtifact: return "CorruptArtifact";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::DegenerateDifferential: return "DegenerateDifferential";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace etsfs
