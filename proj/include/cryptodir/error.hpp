#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cryptodir {

enum class Errc {
    MalformedRow,
    DuplicateTimestamp,
    HttpError,
    DecodeError,
    EmptyRange,
    BadPeriod,
    SeriesTooShort,
    DirtySeries,
    EmptyStats,
    WindowTooLarge,
    TooFewSamples,
    KTooLarge,
    EmptyTrain,
    DimensionMismatch,
    SingleClass,
    LengthMismatch,
    Empty,
    AlignmentError,
    NoTrades,
    BadConfig,
    ModelFormat,
    Io,
};

constexpr std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::DuplicateTimestamp: return "DuplicateTimestamp";
    case Errc::HttpError: return "HttpError";
    case Errc::DecodeError: return "DecodeError";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::BadPeriod: return "BadPeriod";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::DirtySeries: return "DirtySeries";
    case Errc::EmptyStats: return "EmptyStats";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::EmptyTrain: return "EmptyTrain";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingleClass: return "SingleClass";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::AlignmentError: return "AlignmentError";
    case Errc::NoTrades: return "NoTrades";
    case Errc::BadConfig: return "BadConfig";
    case Errc::ModelFormat: return "ModelFormat";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace cryptodir
