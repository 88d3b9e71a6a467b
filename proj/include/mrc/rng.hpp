#pragma once

// Counter-derived random streams. A stream is a pure function of
// (seed, lane, index), so a path's draws never depend on which worker runs it.

#include <cmath>
#include <cstdint>
#include <vector>

namespace mrc {

inline constexpr double kSqrt3 = 1.7320508075688772;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream lanes keep independent consumers (correlation vs stock noise) apart.
enum class Lane : std::uint64_t { Correlation = 0, Stock = 1, Auxiliary = 2 };

// xoshiro256++ seeded through SplitMix64 from the (seed, lane, index) triple.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t lane = 0, std::uint64_t index = 0);
    RngStream(std::uint64_t seed, Lane lane, std::uint64_t index)
        : RngStream(seed, static_cast<std::uint64_t>(lane), index) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Box-Muller; the second variate of each pair is cached.
    double normal();

    bool coin() { return (next_u64() >> 63) != 0; }

    // -sqrt(3), 0, sqrt(3) with probabilities 1/6, 2/3, 1/6.
    double three_point() {
        const double u = uniform();
        if (u < 1.0 / 6.0) return -kSqrt3;
        if (u < 1.0 / 3.0) return kSqrt3;
        return 0.0;
    }

    // True with probability p.
    bool two_point(double p) { return uniform() < p; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double sample_Y(RngStream& rng) { return rng.three_point(); }

// Drop-in replacement for RngStream's discrete draws that walks every branch
// of the decision tree, so expectations over the discrete laws used by the
// second-order scheme can be computed exactly.
//
//   EnumeratedDraws e;
//   do { acc += e.weight() * f(step(..., e)); } while (e.advance());
class EnumeratedDraws {
public:
    bool coin() { return pick(2, 0.5, 0.5) == 0; }
    double three_point() {
        switch (pick(3, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0)) {
        case 0: return -kSqrt3;
        case 1: return 0.0;
        default: return kSqrt3;
        }
    }
    bool two_point(double p) { return pick(2, p, 1.0 - p) == 0; }

    double weight() const { return weight_; }
    std::size_t depth() const { return pos_; }

    // Moves to the next leaf; false once the tree is exhausted.
    bool advance();

    template <class F>
    static double expectation(F&& run) {
        EnumeratedDraws e;
        double acc = 0.0;
        do {
            const double w_value = run(e);
            acc += e.weight() * w_value;
        } while (e.advance());
        return acc;
    }

private:
    int pick(int arity, double p0, double p1, double p2 = 0.0);

    struct Node {
        int choice;
        int arity;
    };
    std::vector<Node> script_;
    std::size_t pos_ = 0;
    double weight_ = 1.0;
};

}  // namespace mrc
