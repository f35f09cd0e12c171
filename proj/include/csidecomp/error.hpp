#ifndef CSIDECOMP_ERROR_HPP
#define CSIDECOMP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace csid {

enum class ErrorKind {
    InvalidArgument,
    ShapeMismatch,
    NonFinite,
    InsufficientNodes,
    InsufficientSamples,
    BadMagic,
    TruncatedHeader,
    TruncatedPayload,
    DimensionOverflow,
    UnsupportedVersion,
    DegenerateBandwidth,
    GridMismatch,
    NonConvergence,
    Io,
    Parse,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::ShapeMismatch: return "shape mismatch";
        case ErrorKind::NonFinite: return "non-finite value";
        case ErrorKind::InsufficientNodes: return "insufficient nodes";
        case ErrorKind::InsufficientSamples: return "insufficient samples";
        case ErrorKind::BadMagic: return "bad magic";
        case ErrorKind::TruncatedHeader: return "truncated header";
        case ErrorKind::TruncatedPayload: return "truncated payload";
        case ErrorKind::DimensionOverflow: return "dimension overflow";
        case ErrorKind::UnsupportedVersion: return "unsupported version";
        case ErrorKind::DegenerateBandwidth: return "degenerate bandwidth";
        case ErrorKind::GridMismatch: return "grid mismatch";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::Io: return "i/o error";
        case ErrorKind::Parse: return "parse error";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers can branch on
/// it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

inline void require(bool condition, ErrorKind kind, const std::string& detail) {
    if (!condition) {
        throw Error(kind, detail);
    }
}

} // namespace csid

#endif
