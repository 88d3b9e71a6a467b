#include "mrc/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mrc {

std::string_view errc_name(Errc code) {
    switch (code) {
    case Errc::NotUnitDiagonal: return "NotUnitDiagonal";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::NonpositiveDiagonal: return "NonpositiveDiagonal";
    case Errc::DegreeLimitExceeded: return "DegreeLimitExceeded";
    case Errc::ZeroSpeedPair: return "ZeroSpeedPair";
    case Errc::NonIntegrableAlpha: return "NonIntegrableAlpha";
    case Errc::WrongDimension: return "WrongDimension";
    case Errc::LeftDomain: return "LeftDomain";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::NonpositiveIndex: return "NonpositiveIndex";
    case Errc::PriceOutOfBounds: return "PriceOutOfBounds";
    case Errc::ParseError: return "ParseError";
    case Errc::WeightSumError: return "WeightSumError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what, int index, double value)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what),
      code_(code), index_(index), value_(value) {}

namespace {

void stderr_sink(std::string_view message) {
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << "warning: " << message << '\n';
}

std::atomic<WarningSink> g_sink{&stderr_sink};

}  // namespace

void set_warning_sink(WarningSink sink) { g_sink.store(sink ? sink : &stderr_sink); }

void warn(std::string_view message) { g_sink.load()(message); }

}  // namespace mrc
