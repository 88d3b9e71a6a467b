#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrc {

enum class Errc {
    NotUnitDiagonal,
    NotPositiveSemidefinite,
    NonpositiveDiagonal,
    DegreeLimitExceeded,
    ZeroSpeedPair,
    NonIntegrableAlpha,
    WrongDimension,
    LeftDomain,
    StepTooLarge,
    NonpositiveIndex,
    PriceOutOfBounds,
    ParseError,
    WeightSumError,
    InvalidArgument,
    IoError,
};

std::string_view errc_name(Errc code);

// Every failure raised by the library. `index` and `value` carry the offending
// coordinate or eigenvalue where that makes sense (-1 / NaN otherwise).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, int index = -1, double value = 0.0);

    Errc code() const noexcept { return code_; }
    int index() const noexcept { return index_; }
    double value() const noexcept { return value_; }

private:
    Errc code_;
    int index_;
    double value_;
};

// Diagnostics that must not abort a run (violated existence conditions, etc.).
// The default sink writes to stderr; tests and the CLI install their own.
using WarningSink = void (*)(std::string_view message);
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace mrc
