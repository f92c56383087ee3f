#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclicsem {

enum class ErrorKind {
    InvalidModel,
    ResponseNotDescendant,
    ControlSetMismatch,
    NonFiniteEntry,
    SingularSystem,
    UnstableModel,
    SingularBlock,
    UnstablePlan,
    ZeroTotalEffect,
    TooFewRows,
    WeakInstrument,
    SingularInstrumentBlock,
    UnknownVariable,
    ParseError,
    MissingFixture,
    InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::ResponseNotDescendant: return "ResponseNotDescendant";
        case ErrorKind::ControlSetMismatch: return "ControlSetMismatch";
        case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::UnstableModel: return "UnstableModel";
        case ErrorKind::SingularBlock: return "SingularBlock";
        case ErrorKind::UnstablePlan: return "UnstablePlan";
        case ErrorKind::ZeroTotalEffect: return "ZeroTotalEffect";
        case ErrorKind::TooFewRows: return "TooFewRows";
        case ErrorKind::WeakInstrument: return "WeakInstrument";
        case ErrorKind::SingularInstrumentBlock: return "SingularInstrumentBlock";
        case ErrorKind::UnknownVariable: return "UnknownVariable";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::MissingFixture: return "MissingFixture";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the CLI
/// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace cyclicsem
