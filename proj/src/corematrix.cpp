#include "mrc/corematrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mrc {

namespace {

void require_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw Error(Errc::WrongDimension, "matrix must be square and non-empty");
}

// Outer-product Cholesky with diagonal pivoting on a working copy `a` (which
// is destroyed). Returns the rank; l holds the factor in pivoted order with
// zero columns beyond the rank.
int pivoted_cholesky(Matrix& a, Matrix& l, std::vector<int>& perm, double tol_rank, bool strict) {
    const int n = static_cast<int>(a.rows());
    l.setZero(n, n);
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    double scale = 1.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, a(i, i));
    const double lim = tol_rank * scale;

    for (int k = 0; k < n; ++k) {
        int j = k;
        for (int i = k + 1; i < n; ++i)
            if (a(i, i) > a(j, j)) j = i;
        const double piv = a(j, j);
        if (!(piv > lim)) {
            if (strict) {
                if (!std::isfinite(piv))
                    throw Error(Errc::NotPositiveSemidefinite, "non-finite pivot", perm[j], piv);
                for (int i = k; i < n; ++i)
                    if (a(i, i) < -lim)
                        throw Error(Errc::NotPositiveSemidefinite,
                                    "negative pivot " + std::to_string(a(i, i)), perm[i], a(i, i));
            }
            return k;
        }
        if (j != k) {
            a.row(k).swap(a.row(j));
            a.col(k).swap(a.col(j));
            l.row(k).swap(l.row(j));
            std::swap(perm[k], perm[j]);
        }
        const double lkk = std::sqrt(piv);
        l(k, k) = lkk;
        const int m = n - k - 1;
        if (m == 0) return n;
        l.col(k).tail(m) = a.col(k).tail(m) / lkk;
        a.bottomRightCorner(m, m).noalias() -= l.col(k).tail(m) * l.col(k).tail(m).transpose();
    }
    return n;
}

}  // namespace

SymMatrix::SymMatrix(int dim) : m_(Matrix::Zero(dim, dim)) {}

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix s(dim);
    s.m_.setIdentity();
    return s;
}

SymMatrix SymMatrix::from_dense(const Matrix& m, double tol) {
    require_square(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= tol * scale))
        throw Error(Errc::InvalidArgument, "matrix is not symmetric", -1, asym);
    SymMatrix s;
    s.m_ = 0.5 * (m + m.transpose());
    return s;
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int n = static_cast<int>(rows.size());
    Matrix m(n, n);
    int i = 0;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != n)
            throw Error(Errc::WrongDimension, "ragged matrix literal");
        int j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return from_dense(m);
}

CorrelationMatrix CorrelationMatrix::identity(int dim) {
    return CorrelationMatrix(SymMatrix::identity(dim));
}

CorrelationMatrix CorrelationMatrix::equicorrelation(int dim, double rho) {
    Matrix m = Matrix::Constant(dim, dim, rho);
    m.diagonal().setOnes();
    return validate_correlation(SymMatrix::from_dense(m));
}

CorrelationMatrix CorrelationMatrix::assume_valid(Matrix m) {
    SymMatrix s = SymMatrix::from_dense(m, 1e-9);
    return CorrelationMatrix(std::move(s));
}

double psd_floor(const Vector& eigenvalues, double tol) {
    const double top = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    return -tol * std::max(1.0, top);
}

void Spectral::decompose(const Matrix& y) { solver_.compute(y, Eigen::ComputeEigenvectors); }

void Spectral::psd_sqrt(const Matrix& y, Matrix& out, double tol) {
    decompose(y);
    const Vector& lam = values();
    if (!lam.allFinite())
        throw Error(Errc::NotPositiveSemidefinite, "non-finite spectrum", -1, NAN);
    if (lam(0) < psd_floor(lam, tol))
        throw Error(Errc::NotPositiveSemidefinite,
                    "smallest eigenvalue " + std::to_string(lam(0)), -1, lam(0));
    scratch_ = lam.cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = vectors();
    out.noalias() = v * scratch_.asDiagonal() * v.transpose();
}

void Spectral::positive_part(const Matrix& y, Matrix& out) {
    decompose(y);
    scratch_ = values().cwiseMax(0.0);
    const Matrix& v = vectors();
    out.noalias() = v * scratch_.asDiagonal() * v.transpose();
}

double Spectral::min_eigenvalue(const Matrix& y) {
    solver_.compute(y, Eigen::EigenvaluesOnly);
    return solver_.eigenvalues()(0);
}

CorrelationMatrix validate_correlation(const SymMatrix& x, double tol) {
    const Matrix& m = x.dense();
    require_square(m);
    const int d = x.dim();
    for (int i = 0; i < d; ++i)
        if (!(std::abs(m(i, i) - 1.0) <= tol))
            throw Error(Errc::NotUnitDiagonal,
                        "diagonal entry " + std::to_string(i) + " is " + std::to_string(m(i, i)), i,
                        m(i, i));
    if (!m.allFinite())
        throw Error(Errc::NotPositiveSemidefinite, "non-finite entries", -1, NAN);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const Vector& lam = es.eigenvalues();
    if (lam(0) < psd_floor(lam, tol))
        throw Error(Errc::NotPositiveSemidefinite,
                    "smallest eigenvalue " + std::to_string(lam(0)), -1, lam(0));
    Matrix snapped = m.cwiseMax(-1.0).cwiseMin(1.0);
    snapped.diagonal().setOnes();
    return CorrelationMatrix(SymMatrix::from_dense(snapped));
}

CorrelationMatrix project_correlation(const SymMatrix& y) {
    const Matrix& m = y.dense();
    require_square(m);
    const int d = y.dim();
    Vector inv = Vector(d);
    for (int i = 0; i < d; ++i) {
        if (!(m(i, i) > 0.0))
            throw Error(Errc::NonpositiveDiagonal,
                        "diagonal entry " + std::to_string(i) + " is not positive", i, m(i, i));
        inv(i) = 1.0 / std::sqrt(m(i, i));
    }
    Matrix p = inv.asDiagonal() * m * inv.asDiagonal();
    p = p.cwiseMax(-1.0).cwiseMin(1.0);
    p.diagonal().setOnes();
    return validate_correlation(SymMatrix::from_dense(p));
}

SymMatrix psd_sqrt(const SymMatrix& y, double tol) {
    Spectral sp(y.dim());
    Matrix out;
    sp.psd_sqrt(y.dense(), out, tol);
    return SymMatrix::from_dense(out, 1e-9);
}

SymMatrix positive_part(const SymMatrix& x) {
    Spectral sp(x.dim());
    Matrix out;
    sp.positive_part(x.dense(), out);
    return SymMatrix::from_dense(out, 1e-9);
}

double min_eigenvalue(const SymMatrix& x) {
    Spectral sp(x.dim());
    return sp.min_eigenvalue(x.dense());
}

namespace {

// Closed-form square root of a symmetric 2x2 block, same floor as psd_sqrt.
void sqrt_2x2(const Matrix& a, Matrix& out, int n) {
    const double p = a(0, 0), q = 0.5 * (a(0, 1) + a(1, 0)), r = a(1, 1);
    const double m = 0.5 * (p + r);
    const double delta = std::hypot(0.5 * (p - r), q);
    const double hi = m + delta, lo = m - delta;
    if (lo < -kTolPsd * std::max({1.0, std::abs(hi), std::abs(lo)}))
        throw Error(Errc::NotPositiveSemidefinite, "negative 2x2 block", n, lo);
    out.resize(2, 2);
    const double s1 = std::sqrt(std::max(hi, 0.0));
    if (s1 == 0.0) {
        out.setZero();
    } else if (lo >= 0.0) {
        // sqrt(A) = (A + sqrt(det) I) / (s1 + s2)
        const double s2 = std::sqrt(lo);
        const double inv = 1.0 / (s1 + s2);
        out << (p + s1 * s2) * inv, q * inv, q * inv, (r + s1 * s2) * inv;
    } else {
        // Drop the negative eigenvalue: s1 times the projector on the top one.
        const double scale = s1 / (hi - lo);
        out << (p - lo) * scale, q * scale, q * scale, (r - lo) * scale;
    }
}

}  // namespace

void diffusion_factor_into(const Matrix& x, int n, Spectral& spectral, Matrix& block, Matrix& root) {
    const int d = static_cast<int>(x.rows());
    const int k = d - 1;
    block.resize(k, k);
    for (int a = 0, ia = 0; a < d; ++a) {
        if (a == n) continue;
        for (int b = 0, ib = 0; b < d; ++b) {
            if (b == n) continue;
            block(ia, ib) = x(a, b) - x(a, n) * x(b, n);
            ++ib;
        }
        ++ia;
    }
    if (k == 0) {
        root.resize(0, 0);
    } else if (k == 1) {
        const double v = block(0, 0);
        if (v < -kTolPsd)
            throw Error(Errc::NotPositiveSemidefinite, "negative 1x1 block", n, v);
        root.resize(1, 1);
        root(0, 0) = std::sqrt(std::max(v, 0.0));
    } else if (k == 2) {
        sqrt_2x2(block, root, n);
    } else {
        spectral.psd_sqrt(block, root);
    }
}

SymMatrix diffusion_factor(const CorrelationMatrix& x, int n) {
    const int d = x.dim();
    if (n < 0 || n >= d) throw Error(Errc::InvalidArgument, "index out of range", n);
    Spectral sp(d);
    Matrix block, root;
    diffusion_factor_into(x.dense(), n, sp, block, root);
    Matrix out = Matrix::Zero(d, d);
    for (int a = 0, ia = 0; a < d; ++a) {
        if (a == n) continue;
        for (int b = 0, ib = 0; b < d; ++b) {
            if (b == n) continue;
            out(a, b) = root(ia, ib);
            ++ib;
        }
        ++ia;
    }
    return SymMatrix::from_dense(out, 1e-9);
}

Matrix ExtCholFactors::assembled() const {
    const int n = size();
    Matrix m = Matrix::Zero(n, n);
    m.topLeftCorner(rank, rank) = m_r;
    m.bottomLeftCorner(n - rank, rank) = k_r;
    return m;
}

Matrix ExtCholFactors::permutation() const {
    const int n = size();
    Matrix p = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a) p(a, perm[a]) = 1.0;
    return p;
}

ExtCholFactors extended_cholesky(const SymMatrix& q, double tol_rank) {
    Matrix a = q.dense();
    Matrix l;
    ExtCholFactors f;
    f.rank = pivoted_cholesky(a, l, f.perm, tol_rank, true);
    const int n = q.dim();
    f.m_r = l.topLeftCorner(f.rank, f.rank);
    f.k_r = l.bottomLeftCorner(n - f.rank, f.rank);
    return f;
}

Vector ReducedForm::first_row() const {
    const int d = c_check.dim();
    return c_check.dense().row(0).tail(d - 1).transpose();
}

ReducedForm reduce_first_coordinate(const CorrelationMatrix& x, double tol_rank) {
    const int d = x.dim();
    ReducedForm r;
    r.perm_p = Matrix::Identity(d, d);
    r.m = Matrix::Identity(d, d);
    if (d == 1) {
        r.c_check = x;
        return r;
    }
    const int n = d - 1;
    r.factors = extended_cholesky(SymMatrix::from_dense(x.dense().bottomRightCorner(n, n)), tol_rank);
    const ExtCholFactors& f = r.factors;
    r.perm_p.bottomRightCorner(n, n) = f.permutation().transpose();
    r.m.bottomRightCorner(n, n) = f.assembled();

    Vector w = Vector::Zero(n);
    if (f.rank > 0) {
        Vector c(f.rank);
        for (int a = 0; a < f.rank; ++a) c(a) = x(0, 1 + f.perm[a]);
        w.head(f.rank) = f.m_r.triangularView<Eigen::Lower>().solve(c);
    }
    const double norm = w.norm();
    if (norm > 1.0) w /= norm;  // rounding only; x in C_d implies |w| <= 1
    Matrix cc = Matrix::Identity(d, d);
    cc.row(0).tail(n) = w.transpose();
    cc.col(0).tail(n) = w;
    r.c_check = CorrelationMatrix::assume_valid(cc);
    return r;
}

CorrelationMatrix rebuild(const ReducedForm& reduced, const Vector& w) {
    const int d = reduced.c_check.dim();
    if (w.size() != d - 1) throw Error(Errc::WrongDimension, "first row has wrong length");
    if (w.squaredNorm() > 1.0 + 1e-12)
        throw Error(Errc::LeftDomain, "first row outside the unit ball", -1, w.norm());
    Matrix cc = Matrix::Identity(d, d);
    cc.row(0).tail(d - 1) = w.transpose();
    cc.col(0).tail(d - 1) = w;
    const Matrix pm = reduced.perm_p * reduced.m;
    Matrix x = pm * cc * pm.transpose();
    x = 0.5 * (x + x.transpose());
    x.diagonal().setOnes();
    return CorrelationMatrix::assume_valid(x);
}

RowReducer::RowReducer(int d)
    : d_(d), n_(d - 1), others_(std::max(d - 1, 0)), perm_(std::max(d - 1, 0)),
      a_(std::max(d - 1, 0), std::max(d - 1, 0)), l_(std::max(d - 1, 0), std::max(d - 1, 0)),
      w_(std::max(d - 1, 0)), u_(std::max(d - 1, 0)) {}

void RowReducer::factor(const Matrix& x, int lead, double tol_rank, bool strict) {
    lead_ = lead;
    for (int a = 0, k = 0; a < d_; ++a)
        if (a != lead) others_[k++] = a;
    for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) a_(a, b) = x(others_[a], others_[b]);
    rank_ = pivoted_cholesky(a_, l_, perm_, tol_rank, strict);

    w_.setZero();
    // Forward substitution m_r w = c, with c read in pivoted order.
    for (int a = 0; a < rank_; ++a) {
        double s = x(lead, others_[perm_[a]]);
        for (int b = 0; b < a; ++b) s -= l_(a, b) * w_(b);
        w_(a) = s / l_(a, a);
    }
    const double norm2 = w_.squaredNorm();
    if (norm2 > 1.0) w_ /= std::sqrt(norm2);
}

void RowReducer::rebuild(Matrix& x, const Vector& w) const {
    u_.noalias() = l_.leftCols(rank_) * w.head(rank_);
    for (int a = 0; a < n_; ++a) {
        const int o = others_[perm_[a]];
        x(lead_, o) = u_(a);
        x(o, lead_) = u_(a);
    }
}

MrcParams make_params(CorrelationMatrix x, Vector kappa, CorrelationMatrix c, Vector a) {
    const int d = x.dim();
    if (d == 0 || c.dim() != d || kappa.size() != d || a.size() != d)
        throw Error(Errc::WrongDimension, "parameter dimensions disagree");
    for (int i = 0; i < d; ++i) {
        if (!(kappa(i) >= 0.0) || !std::isfinite(kappa(i)))
            throw Error(Errc::InvalidArgument, "kappa must be nonnegative", i, kappa(i));
        if (!(a(i) >= 0.0) || !std::isfinite(a(i)))
            throw Error(Errc::InvalidArgument, "a must be nonnegative", i, a(i));
    }
    return MrcParams{std::move(x), std::move(kappa), std::move(c), std::move(a)};
}

MrcParams uniform_params(int d, double x_offdiag, double kappa, double c_offdiag, double a) {
    return make_params(CorrelationMatrix::equicorrelation(d, x_offdiag), Vector::Constant(d, kappa),
                       CorrelationMatrix::equicorrelation(d, c_offdiag), Vector::Constant(d, a));
}

}  // namespace mrc
