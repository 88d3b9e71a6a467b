#include "mrc/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mrc {

namespace {

constexpr double kZOne = 1e-14;
constexpr double kZDomain = 1e-12;

void check_ball(const UnitBallState& x) {
    if (!in_unit_ball(x))
        throw Error(Errc::LeftDomain, "state outside the unit ball", -1, x.norm());
}

void check_duration(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(Errc::InvalidArgument, "step must be nonnegative", -1, t);
}

}  // namespace

std::string_view scheme_name(SchemeKind kind) {
    switch (kind) {
    case SchemeKind::EulerCorrected: return "euler";
    case SchemeKind::SecondOrderDirect: return "second_order";
    }
    return "?";
}

SchemeKind parse_scheme(std::string_view name) {
    if (name == "euler" || name == "EulerCorrected") return SchemeKind::EulerCorrected;
    if (name == "second_order" || name == "direct" || name == "SecondOrderDirect")
        return SchemeKind::SecondOrderDirect;
    throw Error(Errc::ParseError, "unknown scheme '" + std::string(name) + "'");
}

bool in_unit_ball(const UnitBallState& v, double tol) { return v.squaredNorm() <= 1.0 + tol; }

UnitBallState nv_flow_X0(double t, const UnitBallState& x, int lead) {
    const double x1 = x(lead);
    const double den = std::sqrt(std::exp(2.0 * t) * x1 * x1 + (1.0 - x1 * x1));
    UnitBallState out = x / den;
    out(lead) = x1 * std::exp(t) / den;
    return out;
}

UnitBallState nv_flow_X1(double y, const UnitBallState& x, int lead) {
    const double x1 = x(lead);
    const double e2 = std::exp(2.0 * y);
    const double den = e2 * (1.0 + x1) + (1.0 - x1);
    UnitBallState out = (2.0 * std::exp(y) / den) * x;
    out(lead) = (e2 * (1.0 + x1) - (1.0 - x1)) / den;
    return out;
}

double flow_Z0(double t, double z) {
    const double e = std::exp(-t);
    const double bound = 1.0 / std::sqrt(2.0 - e);
    if (z < 0.0 || z > bound * (1.0 + kZDomain))
        throw Error(Errc::LeftDomain, "Z0 argument outside its domain", -1, z);
    const double den = 1.0 - 2.0 * z * z * (-std::expm1(-t));
    return std::min(1.0, z * std::exp(-0.5 * t) / std::sqrt(std::max(den, 0.0)));
}

double flow_Z1(double y, double z) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    if (z >= 1.0 || y >= std::atanh(s)) return 1.0;
    const double v = 2.0 * z * std::exp(-y) / (1.0 - s + std::exp(-2.0 * y) * (1.0 + s));
    return std::min(1.0, v);
}

double threshold_K(double t) {
    const double eh = std::exp(-0.5 * t);
    const double k1 = std::sqrt(1.0 / (2.0 - eh));
    const double s = std::sqrt((1.0 - eh) / (2.0 - eh));
    const double e = std::exp(-2.0 * std::sqrt(t) * kSqrt3);
    const double dd = (1.0 - e + s * (1.0 + e)) / (e + 1.0 + s * (1.0 - e));
    const double w2 = 1.0 - dd * dd;
    const double k2 = std::sqrt(w2) / std::sqrt(eh + 2.0 * w2 * (1.0 - eh));
    return std::min(k1, k2);
}

TwoPointLaw two_point_law(double t, double z) {
    if (z >= 1.0 - kZOne) return {1.0, 1.0, 1.0};
    const double g = 1.0 + 0.5 * t * (1.0 - 6.0 * z * z);
    const double q = t * (1.0 + z) * g / (1.0 - z);
    return {z + z * (1.0 - z), z - t * z * (1.0 + z) * g, 1.0 - 1.0 / (1.0 + q)};
}

double nv_z_composition(double t, double z, double y) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        const double a = flow_Z0(0.5 * t, z);
        const double b = flow_Z1(std::sqrt(t) * y, a);
        return flow_Z0(0.5 * t, b);
    } catch (const Error&) {
        return nan;
    }
}

ZStepper::ZStepper(double t)
    : t_(t), k_(t > 0.0 ? threshold_K(t) : 1.0), e_quarter_(std::exp(-0.25 * t)),
      one_minus_eh_(-std::expm1(-0.5 * t)), sqrt_t_(std::sqrt(t)) {}

double ZStepper::z0_half(double z) const {
    const double den = 1.0 - 2.0 * z * z * one_minus_eh_;
    return std::min(1.0, z * e_quarter_ / std::sqrt(std::max(den, 0.0)));
}

template <class Rng>
double ZStepper::step(double z, Rng& rng) const {
    if (t_ > kMaxZStep) throw Error(Errc::StepTooLarge, "radial step longer than 2/5", -1, t_);
    if (t_ == 0.0) return z;
    if (z >= 1.0 - kZOne) return 1.0;
    if (z <= k_) {
        const double y = rng.three_point();
        double v = z0_half(z);
        if (y != 0.0) v = flow_Z1(sqrt_t_ * y, v);
        return z0_half(v);
    }
    const TwoPointLaw law = two_point_law(t_, z);
    return rng.two_point(law.p_plus) ? law.z_plus : law.z_minus;
}

BallStepper::BallStepper(double t)
    : t_(t), e_t_(std::exp(t)), e_2t_(std::exp(2.0 * t)), e_y_(std::exp(std::sqrt(3.0 * t))),
      e_2y_(std::exp(2.0 * std::sqrt(3.0 * t))), z_(t) {}

void BallStepper::x0(int lead, UnitBallState& x, double e2) const {
    const double v = x(lead);
    const double inv = 1.0 / std::sqrt(e2 * v * v + (1.0 - v * v));
    x *= inv;
    x(lead) = v * std::sqrt(e2) * inv;
}

void BallStepper::x1(int lead, UnitBallState& x, double e1, double e2) const {
    const double v = x(lead);
    const double inv = 1.0 / (e2 * (1.0 + v) + (1.0 - v));
    x *= 2.0 * e1 * inv;
    x(lead) = (e2 * (1.0 + v) - (1.0 - v)) * inv;
}

template <class Rng>
void BallStepper::radial(UnitBallState& x, Rng& rng) const {
    const double z = x.norm();
    const double next = z_.step(std::min(z, 1.0), rng);
    if (z > 0.0) x *= next / z;
}

template <class Rng>
void BallStepper::coordinate(int lead, UnitBallState& x, Rng& rng) const {
    const double y = rng.three_point();
    if (t_ == 0.0) return;
    if (y == 0.0) {
        x0(lead, x, e_2t_);
        return;
    }
    x0(lead, x, e_t_);
    if (y > 0.0)
        x1(lead, x, e_y_, e_2y_);
    else
        x1(lead, x, 1.0 / e_y_, 1.0 / e_2y_);
    x0(lead, x, e_t_);
}

template <class Rng>
void BallStepper::step(UnitBallState& x, Rng& rng) const {
    const int n = static_cast<int>(x.size());
    if (rng.coin()) {
        radial(x, rng);
        for (int m = 0; m < n; ++m) coordinate(m, x, rng);
    } else {
        for (int m = n - 1; m >= 0; --m) coordinate(m, x, rng);
        radial(x, rng);
    }
}

template <class Rng>
double step_Z(double t, double z, Rng& rng) {
    check_duration(t);
    if (t > kMaxZStep) throw Error(Errc::StepTooLarge, "radial step longer than 2/5", -1, t);
    if (!(z >= 0.0 && z <= 1.0 + kTolBall)) throw Error(Errc::LeftDomain, "z outside [0, 1]", -1, z);
    return ZStepper(t).step(std::min(z, 1.0), rng);
}

template <class Rng>
UnitBallState step_L_coordinate(int m, double t, const UnitBallState& x, Rng& rng) {
    check_duration(t);
    check_ball(x);
    if (m < 0 || m >= x.size()) throw Error(Errc::InvalidArgument, "coordinate out of range", m);
    UnitBallState out = x;
    BallStepper(t).coordinate(m, out, rng);
    return out;
}

template <class Rng>
UnitBallState step_radial_Lhat1(double t, const UnitBallState& x, Rng& rng) {
    check_duration(t);
    check_ball(x);
    UnitBallState out = x;
    BallStepper(t).radial(out, rng);
    return out;
}

template <class Rng>
UnitBallState step_unit_ball(double t, const UnitBallState& x, Rng& rng) {
    check_duration(t);
    check_ball(x);
    UnitBallState out = x;
    BallStepper(t).step(out, rng);
    return out;
}

ElementaryStepper::ElementaryStepper(int d, int i, double t, bool strict)
    : i_(i), strict_(strict), ball_(t), reducer_(d) {}

template <class Rng>
void ElementaryStepper::step(Matrix& x, Rng& rng) {
    reducer_.factor(x, i_, kTolRank, strict_);
    Vector& w = reducer_.ball_coords();
    ball_.step(w, rng);
    reducer_.rebuild(x, w);
}

template <class Rng>
CorrelationMatrix step_elementary_Li(int i, double t, const CorrelationMatrix& x, Rng& rng) {
    check_duration(t);
    const int d = x.dim();
    if (i < 0 || i >= d) throw Error(Errc::InvalidArgument, "index out of range", i);
    if (t > kMaxZStep) throw Error(Errc::StepTooLarge, "elementary step longer than 2/5", i, t);
    Matrix m = x.dense();
    ElementaryStepper(d, i, t).step(m, rng);
    return CorrelationMatrix::assume_valid(std::move(m));
}

SecondOrderStepper::SecondOrderStepper(const MrcParams& params, double t, bool strict)
    : half_(xi_flow(params), 0.5 * t) {
    check_duration(t);
    const int d = params.dim();
    for (int i = 0; i < d; ++i) {
        const double ti = params.a(i) * params.a(i) * t;
        if (ti > kMaxZStep) throw Error(Errc::StepTooLarge, "a_i^2 t exceeds 2/5", i, ti);
        if (ti > 0.0) elementary_.emplace_back(d, i, ti, strict);
    }
}

template <class Rng>
void SecondOrderStepper::step(Matrix& x, Rng& rng) {
    half_.apply(x);
    x.diagonal().setOnes();
    for (ElementaryStepper& e : elementary_) e.step(x, rng);
    half_.apply(x);
    x.diagonal().setOnes();
}

template <class Rng>
CorrelationMatrix step_mrc_second_order(const MrcParams& params, double t, const CorrelationMatrix& x, Rng& rng) {
    if (x.dim() != params.dim()) throw Error(Errc::WrongDimension, "state and parameters disagree");
    Matrix m = x.dense();
    SecondOrderStepper(params, t).step(m, rng);
    return CorrelationMatrix::assume_valid(std::move(m));
}

EulerStepper::EulerStepper(const MrcParams& params, double h)
    : d_(params.dim()), h_(h), sqrt_h_(std::sqrt(h)), kappa_(params.kappa), a_(params.a), c_(params.c.dense()),
      dw_(d_, d_), next_(d_, d_), pos_(d_, d_), col_(std::max(d_ - 1, 0)), inc_(std::max(d_ - 1, 0)),
      scale_(d_), block_spectral_(std::max(d_ - 1, 1)), spectral_(d_) {
    check_duration(h);
}

void EulerStepper::step(Matrix& x, RngStream& rng) {
    const int d = d_;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) dw_(r, c) = sqrt_h_ * rng.normal();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) next_(i, j) = x(i, j) + h_ * (kappa_(i) + kappa_(j)) * (c_(i, j) - x(i, j));
    for (int n = 0; n < d; ++n) {
        if (a_(n) == 0.0) continue;
        diffusion_factor_into(x, n, block_spectral_, block_, root_);
        for (int a = 0, k = 0; a < d; ++a)
            if (a != n) col_(k++) = dw_(a, n);
        inc_.noalias() = a_(n) * root_ * col_;
        for (int a = 0, k = 0; a < d; ++a) {
            if (a == n) continue;
            next_(a, n) += inc_(k);
            next_(n, a) += inc_(k);
            ++k;
        }
    }
    if (d == 3) {
        // Fixed-size solver: same algorithm without dynamic-size overhead.
        solver3_.compute(Eigen::Matrix3d(next_), Eigen::ComputeEigenvectors);
        const Eigen::Matrix3d& v = solver3_.eigenvectors();
        pos_.noalias() = v * solver3_.eigenvalues().cwiseMax(0.0).asDiagonal() * v.transpose();
    } else {
        spectral_.positive_part(next_, pos_);
    }
    for (int i = 0; i < d; ++i) scale_(i) = 1.0 / std::sqrt(pos_(i, i));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = i == j ? 1.0 : pos_(i, j) * scale_(i) * scale_(j);
}

CorrelationMatrix euler_corrected_step(const MrcParams& params, const CorrelationMatrix& x, double h,
                                       RngStream& rng) {
    if (x.dim() != params.dim()) throw Error(Errc::WrongDimension, "state and parameters disagree");
    Matrix m = x.dense();
    EulerStepper(params, h).step(m, rng);
    return CorrelationMatrix::assume_valid(std::move(m));
}

#define MRC_INSTANTIATE(Rng)                                                                              \
    template double ZStepper::step<Rng>(double, Rng&) const;                                              \
    template void BallStepper::radial<Rng>(UnitBallState&, Rng&) const;                                   \
    template void BallStepper::coordinate<Rng>(int, UnitBallState&, Rng&) const;                          \
    template void BallStepper::step<Rng>(UnitBallState&, Rng&) const;                                     \
    template double step_Z<Rng>(double, double, Rng&);                                                    \
    template UnitBallState step_L_coordinate<Rng>(int, double, const UnitBallState&, Rng&);               \
    template UnitBallState step_radial_Lhat1<Rng>(double, const UnitBallState&, Rng&);                    \
    template UnitBallState step_unit_ball<Rng>(double, const UnitBallState&, Rng&);                       \
    template void ElementaryStepper::step<Rng>(Matrix&, Rng&);                                            \
    template CorrelationMatrix step_elementary_Li<Rng>(int, double, const CorrelationMatrix&, Rng&);      \
    template void SecondOrderStepper::step<Rng>(Matrix&, Rng&);                                           \
    template CorrelationMatrix step_mrc_second_order<Rng>(const MrcParams&, double, const CorrelationMatrix&, \
                                                          Rng&);

MRC_INSTANTIATE(RngStream)
MRC_INSTANTIATE(EnumeratedDraws)

#undef MRC_INSTANTIATE

}  // namespace mrc
