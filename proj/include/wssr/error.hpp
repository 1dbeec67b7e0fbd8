#ifndef WSSR_ERROR_HPP
#define WSSR_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace wssr {

enum class ErrorCode {
    NonFinite,
    ZeroMatrix,
    NotPositiveDefinite,
    SingularMatrix,
    RankTooLarge,
    DegenerateInput,
    CoalescencePoint,
    NodeProximity,
    ExactNode,
    DegenerateBatch,
    RankCollapse,
    InvalidArgument,
    ConfigError,
    VersionMismatch,
    CorruptChecksum,
    NumericalAbort,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::CoalescencePoint: return "CoalescencePoint";
    case ErrorCode::NodeProximity: return "NodeProximity";
    case ErrorCode::ExactNode: return "ExactNode";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::RankCollapse: return "RankCollapse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptChecksum: return "CorruptChecksum";
    case ErrorCode::NumericalAbort: return "NumericalAbort";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

//
// single exception type for the library; callers switch on code()
//
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace wssr

#endif
