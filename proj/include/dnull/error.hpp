#pragma once
#include <stdexcept>
#include <string>

namespace dnull {

enum class ErrorCode {
    SingularMetric,
    SingularSystem,
    DegenerateGradient,
    DomainMargin,
    NotSpacelike,
    HorizonContact,
    MassZeroTortoise,
    InadmissibleDirections,
    NonPositive,
    NonPositiveSeed,
    QuadratureUnderResolved,
    SourceMismatch,
    NotDivergenceFree,
    ParallelOppositeNormals,
    OutOfRange,
    HorizonInterior,
    FlowDegenerate,
    NoHorizon,
    NaNSource,
    NoConvergence,
    BoundsViolation,
    ParseError,
    ValidationError,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::SingularMetric: return "SingularMetric";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::DegenerateGradient: return "DegenerateGradient";
        case ErrorCode::DomainMargin: return "DomainMargin";
        case ErrorCode::NotSpacelike: return "NotSpacelike";
        case ErrorCode::HorizonContact: return "HorizonContact";
        case ErrorCode::MassZeroTortoise: return "MassZeroTortoise";
        case ErrorCode::InadmissibleDirections: return "InadmissibleDirections";
        case ErrorCode::NonPositive: return "NonPositive";
        case ErrorCode::NonPositiveSeed: return "NonPositiveSeed";
        case ErrorCode::QuadratureUnderResolved: return "QuadratureUnderResolved";
        case ErrorCode::SourceMismatch: return "SourceMismatch";
        case ErrorCode::NotDivergenceFree: return "NotDivergenceFree";
        case ErrorCode::ParallelOppositeNormals: return "ParallelOppositeNormals";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::HorizonInterior: return "HorizonInterior";
        case ErrorCode::FlowDegenerate: return "FlowDegenerate";
        case ErrorCode::NoHorizon: return "NoHorizon";
        case ErrorCode::NaNSource: return "NaNSource";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::BoundsViolation: return "BoundsViolation";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dnull
