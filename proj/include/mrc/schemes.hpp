#pragma once

// Discretization steps for MRC processes: the corrected Euler scheme and the
// direct second-order scheme built from the elementary first-row process on
// the unit ball.
//
// Step functions taking a random source are templates instantiated for
// RngStream (simulation) and EnumeratedDraws (exact expectations over the
// discrete laws; Euler needs Gaussians and is RngStream-only).

#include <string_view>
#include <vector>

#include "mrc/corematrix.hpp"
#include "mrc/flows.hpp"
#include "mrc/rng.hpp"

namespace mrc {

enum class SchemeKind { EulerCorrected, SecondOrderDirect };

std::string_view scheme_name(SchemeKind kind);
SchemeKind parse_scheme(std::string_view name);

// Largest duration accepted by the moment-matching branch of the Z step.
inline constexpr double kMaxZStep = 0.4;
inline constexpr double kTolBall = 1e-12;

using UnitBallState = Vector;
bool in_unit_ball(const UnitBallState& v, double tol = kTolBall);

// Coordinate flows of the elementary ball process, with coordinate `lead`
// playing the role of the first one.
UnitBallState nv_flow_X0(double t, const UnitBallState& x, int lead = 0);
UnitBallState nv_flow_X1(double y, const UnitBallState& x, int lead = 0);

// Radial flows. flow_Z0 throws LeftDomain above 1/sqrt(2 - e^{-t}).
double flow_Z0(double t, double z);
double flow_Z1(double y, double z);
double threshold_K(double t);

struct TwoPointLaw {
    double z_plus;
    double z_minus;
    double p_plus;
};
// Moment-matching law used above K(t): mean z and the second moment of the
// exact radial process up to O(t^3).
TwoPointLaw two_point_law(double t, double z);

// Z0(t/2, Z1(sqrt(t) y, Z0(t/2, z))), or NaN once an intermediate value leaves
// the domain of the next flow.
double nv_z_composition(double t, double z, double y);

// Precomputed constants of the radial step for one duration.
class ZStepper {
public:
    explicit ZStepper(double t);
    double duration() const { return t_; }
    double threshold() const { return k_; }
    template <class Rng>
    double step(double z, Rng& rng) const;

private:
    double z0_half(double z) const;
    double t_;
    double k_;
    double e_quarter_;     // e^{-t/4}
    double one_minus_eh_;  // 1 - e^{-t/2}
    double sqrt_t_;
};

// One step of the elementary ball process for a fixed duration.
class BallStepper {
public:
    explicit BallStepper(double t);
    double duration() const { return t_; }

    template <class Rng>
    void radial(UnitBallState& x, Rng& rng) const;
    template <class Rng>
    void coordinate(int lead, UnitBallState& x, Rng& rng) const;
    template <class Rng>
    void step(UnitBallState& x, Rng& rng) const;

private:
    void x0(int lead, UnitBallState& x, double e2) const;
    void x1(int lead, UnitBallState& x, double e1, double e2) const;
    double t_;
    double e_t_;       // e^{t}: X0 over t/2
    double e_2t_;      // e^{2t}: X0 over t (the two halves when Y = 0)
    double e_y_;       // e^{sqrt(3t)}
    double e_2y_;
    ZStepper z_;
};

template <class Rng>
double step_Z(double t, double z, Rng& rng);
template <class Rng>
UnitBallState step_L_coordinate(int m, double t, const UnitBallState& x, Rng& rng);
template <class Rng>
UnitBallState step_radial_Lhat1(double t, const UnitBallState& x, Rng& rng);
template <class Rng>
UnitBallState step_unit_ball(double t, const UnitBallState& x, Rng& rng);

// Second-order step of the elementary MRC process with kappa = ((d-2)/2) e_i,
// c = I and a = e_i. Only row and column i change.
class ElementaryStepper {
public:
    ElementaryStepper(int d, int i, double t, bool strict = true);
    template <class Rng>
    void step(Matrix& x, Rng& rng);

private:
    int i_;
    bool strict_;
    BallStepper ball_;
    RowReducer reducer_;
};

template <class Rng>
CorrelationMatrix step_elementary_Li(int i, double t, const CorrelationMatrix& x, Rng& rng);

// xi(t/2), then the elementary steps i = 0..d-1 with durations a_i^2 t, then
// xi(t/2). Throws StepTooLarge when some a_i^2 t exceeds kMaxZStep. With
// strict = false the step stays total for states outside the domain (used to
// time parameter sets that violate the existence condition).
class SecondOrderStepper {
public:
    SecondOrderStepper(const MrcParams& params, double t, bool strict = true);
    template <class Rng>
    void step(Matrix& x, Rng& rng);

private:
    FlowStep half_;
    std::vector<ElementaryStepper> elementary_;
};

template <class Rng>
CorrelationMatrix step_mrc_second_order(const MrcParams& params, double t, const CorrelationMatrix& x, Rng& rng);

// x + drift h + sum_n a_n (S_n dW e_n + e_n dW^T S_n) with S_n the diffusion
// factor, followed by p((.)^+). dW holds d^2 normals drawn in row-major order.
class EulerStepper {
public:
    EulerStepper(const MrcParams& params, double h);
    void step(Matrix& x, RngStream& rng);

private:
    int d_;
    double h_;
    double sqrt_h_;
    Vector kappa_;
    Vector a_;
    Matrix c_;
    Matrix dw_;
    Matrix next_;
    Matrix block_;
    Matrix root_;
    Matrix pos_;
    Vector col_;
    Vector inc_;
    Vector scale_;
    Spectral block_spectral_;
    Spectral spectral_;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver3_;
};

CorrelationMatrix euler_corrected_step(const MrcParams& params, const CorrelationMatrix& x, double h,
                                       RngStream& rng);

}  // namespace mrc
