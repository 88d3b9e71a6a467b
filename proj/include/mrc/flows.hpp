#pragma once

// Closed-form solutions of x' = b - (kt x + x kt) with diagonal kt, and the
// existence-condition checks on MRC parameters.

#include "mrc/corematrix.hpp"

namespace mrc {

struct LinearCorrFlow {
    Vector kappa_tilde;
    SymMatrix b;
};

SymMatrix linear_flow(const LinearCorrFlow& flow, const SymMatrix& x, double t);

// kt = kappa - ((d-2)/2) a^2, b = kappa c + c kappa - (d-2) a^2.
LinearCorrFlow xi_flow(const MrcParams& params);
// Same with (d-1) in place of (d-2).
LinearCorrFlow zeta_flow(const MrcParams& params);

// Flow over a fixed duration, precomputed as x -> decay .* x + offset.
class FlowStep {
public:
    FlowStep() = default;
    FlowStep(const LinearCorrFlow& flow, double t);
    void apply(Matrix& x) const;

private:
    Matrix decay_;
    Matrix offset_;
};

// Warn (do not throw) when the matching existence condition fails; throw
// LeftDomain when the result is not a correlation matrix.
CorrelationMatrix flow_xi(const MrcParams& params, const CorrelationMatrix& x, double t);
CorrelationMatrix flow_zeta(const MrcParams& params, const CorrelationMatrix& x, double t);

struct AssumptionReport {
    bool weak = false;
    bool strong = false;
    bool fast = false;
    // Smallest eigenvalues of kappa c + c kappa - k a^2 for k = d-2, d, d-1.
    double weak_witness = 0.0;
    double strong_witness = 0.0;
    double fast_witness = 0.0;
};

AssumptionReport classify_assumptions(const MrcParams& params, double tol = kTolPsd);

}  // namespace mrc
