#include "mrc/flows.hpp"

#include <cmath>
#include <string>

namespace mrc {

namespace {

// (1 - e^{-s t}) / s, continuous at s = 0.
double relax(double s, double t) { return s == 0.0 ? t : -std::expm1(-s * t) / s; }

LinearCorrFlow shifted_flow(const MrcParams& p, double k) {
    const Vector a2 = p.a.cwiseProduct(p.a);
    LinearCorrFlow f;
    f.kappa_tilde = p.kappa - 0.5 * k * a2;
    Matrix b = p.kappa.asDiagonal() * p.c.dense() + p.c.dense() * p.kappa.asDiagonal();
    b.diagonal() -= k * a2;
    f.b = SymMatrix::from_dense(b);
    return f;
}

Matrix condition_matrix(const MrcParams& p, double k) {
    Matrix m = p.kappa.asDiagonal() * p.c.dense() + p.c.dense() * p.kappa.asDiagonal();
    m.diagonal() -= k * p.a.cwiseProduct(p.a);
    return 0.5 * (m + m.transpose());
}

CorrelationMatrix checked_flow(const LinearCorrFlow& f, const CorrelationMatrix& x, double t) {
    Matrix y = linear_flow(f, x.sym(), t).dense();
    y.diagonal().setOnes();
    try {
        return validate_correlation(SymMatrix::from_dense(y));
    } catch (const Error& e) {
        throw Error(Errc::LeftDomain, std::string("flow left the correlation matrices: ") + e.what(), e.index(),
                    e.value());
    }
}

}  // namespace

SymMatrix linear_flow(const LinearCorrFlow& flow, const SymMatrix& x, double t) {
    FlowStep step(flow, t);
    Matrix y = x.dense();
    step.apply(y);
    return SymMatrix::from_dense(y);
}

LinearCorrFlow xi_flow(const MrcParams& params) { return shifted_flow(params, params.dim() - 2.0); }

LinearCorrFlow zeta_flow(const MrcParams& params) { return shifted_flow(params, params.dim() - 1.0); }

FlowStep::FlowStep(const LinearCorrFlow& flow, double t) {
    const int d = static_cast<int>(flow.kappa_tilde.size());
    decay_.resize(d, d);
    offset_.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double s = flow.kappa_tilde(i) + flow.kappa_tilde(j);
            decay_(i, j) = std::exp(-s * t);
            offset_(i, j) = flow.b(i, j) * relax(s, t);
        }
}

void FlowStep::apply(Matrix& x) const { x = x.cwiseProduct(decay_) + offset_; }

CorrelationMatrix flow_xi(const MrcParams& params, const CorrelationMatrix& x, double t) {
    if (!classify_assumptions(params).weak)
        warn("weak existence condition violated; xi flow evaluated anyway");
    return checked_flow(xi_flow(params), x, t);
}

CorrelationMatrix flow_zeta(const MrcParams& params, const CorrelationMatrix& x, double t) {
    if (!classify_assumptions(params).fast)
        warn("fast-scheme condition violated; zeta flow evaluated anyway");
    return checked_flow(zeta_flow(params), x, t);
}

AssumptionReport classify_assumptions(const MrcParams& params, double tol) {
    const int d = params.dim();
    auto witness = [&](double k) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(condition_matrix(params, k), Eigen::EigenvaluesOnly);
        return std::pair{es.eigenvalues()(0), psd_floor(es.eigenvalues(), tol)};
    };
    AssumptionReport r;
    auto [ww, wf] = witness(d - 2.0);
    auto [sw, sf] = witness(d);
    auto [fw, ff] = witness(d - 1.0);
    r.weak_witness = ww;
    r.strong_witness = sw;
    r.fast_witness = fw;
    r.weak = d == 2 || ww >= wf;
    r.strong = sw >= sf;
    bool equal_a = true;
    for (int i = 1; i < d; ++i) equal_a = equal_a && params.a(i) == params.a(0);
    r.fast = equal_a && fw >= ff;
    return r;
}

}  // namespace mrc
