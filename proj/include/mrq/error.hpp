#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrq {

enum class ErrorCode {
    FileNotFound,
    MissingColumn,
    MalformedRow,
    EmptyFile,
    NoOverlap,
    AllInstrumentsDropped,
    EmptyInput,
    NonPositiveWeight,
    DegenerateFit,
    TooFewInstruments,
    TooManyFailedReplicates,
    RequiresBge2,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Failures caused by the numbers themselves rather than by bad input.
constexpr bool is_numerical(ErrorCode code) noexcept {
    return code == ErrorCode::DegenerateFit || code == ErrorCode::TooManyFailedReplicates;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::AllInstrumentsDropped: return "AllInstrumentsDropped";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::TooFewInstruments: return "TooFewInstruments";
        case ErrorCode::TooManyFailedReplicates: return "TooManyFailedReplicates";
        case ErrorCode::RequiresBge2: return "RequiresBge2";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace mrq
