#pragma once

#include <stdexcept>
#include <string>

namespace pam {

enum class ErrorCode {
    SumNotOne,
    NegativeMass,
    NotAPath,
    CyclicUnsupported,
    CyclicNeedsHorizon,
    ConditionNullEvent,
    ExplosionGuard,
    BadN,
    BadInput,
    Syntax,
    UnknownName,
    BadFraction,
};

inline const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::SumNotOne: return "SumNotOne";
        case ErrorCode::NegativeMass: return "NegativeMass";
        case ErrorCode::NotAPath: return "NotAPath";
        case ErrorCode::CyclicUnsupported: return "CyclicUnsupported";
        case ErrorCode::CyclicNeedsHorizon: return "CyclicNeedsHorizon";
        case ErrorCode::ConditionNullEvent: return "ConditionNullEvent";
        case ErrorCode::ExplosionGuard: return "ExplosionGuard";
        case ErrorCode::BadN: return "BadN";
        case ErrorCode::BadInput: return "BadInput";
        case ErrorCode::Syntax: return "SyntaxError";
        case ErrorCode::UnknownName: return "UnknownName";
        case ErrorCode::BadFraction: return "BadFraction";
    }
    return "Error";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace pam
