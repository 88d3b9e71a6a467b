#include "mrc/rng.hpp"

#include <numbers>
#include <stdexcept>

namespace mrc {

RngStream::RngStream(std::uint64_t seed, std::uint64_t lane, std::uint64_t index) {
    std::uint64_t h = seed;
    std::uint64_t k = splitmix64(h);
    h = k ^ (lane * 0xd1342543de82ef95ULL);
    k = splitmix64(h);
    h = k ^ (index * 0xaf251af3b0f025b5ULL);
    for (auto& w : s_) w = splitmix64(h);
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int EnumeratedDraws::pick(int arity, double p0, double p1, double p2) {
    if (pos_ == script_.size()) script_.push_back({0, arity});
    Node& n = script_[pos_++];
    if (n.arity != arity) throw std::logic_error("enumeration replay diverged");
    const double probs[3] = {p0, p1, p2};
    weight_ *= probs[n.choice];
    return n.choice;
}

bool EnumeratedDraws::advance() {
    script_.resize(pos_);
    while (!script_.empty() && script_.back().choice + 1 >= script_.back().arity) script_.pop_back();
    pos_ = 0;
    weight_ = 1.0;
    if (script_.empty()) return false;
    ++script_.back().choice;
    return true;
}

}  // namespace mrc
