#pragma once

// Correlation-matrix types and the symmetric linear algebra shared by every
// other module. Indices are 0-based throughout the C++ API.

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>

#include "mrc/error.hpp"

namespace mrc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kTolPsd = 1e-10;
inline constexpr double kTolRecon = 1e-10;
inline constexpr double kTolRank = 1e-11;

class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int dim);

    static SymMatrix identity(int dim);
    // Rejects non-square input or asymmetry above `tol` (relative to the
    // largest entry); the stored value is the exact symmetric part.
    static SymMatrix from_dense(const Matrix& m, double tol = 1e-12);
    static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int dim() const { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }
    void set(int i, int j, double v) {
        m_(i, j) = v;
        m_(j, i) = v;
    }
    const Matrix& dense() const { return m_; }

private:
    Matrix m_;
};

class CorrelationMatrix {
public:
    CorrelationMatrix() = default;

    static CorrelationMatrix identity(int dim);
    // (1-rho) I + rho J, validated.
    static CorrelationMatrix equicorrelation(int dim, double rho);
    // For code paths that preserve the invariants by construction (scheme
    // outputs, flow outputs already checked). No validation is performed.
    static CorrelationMatrix assume_valid(Matrix m);

    int dim() const { return s_.dim(); }
    double operator()(int i, int j) const { return s_(i, j); }
    const SymMatrix& sym() const { return s_; }
    const Matrix& dense() const { return s_.dense(); }

private:
    friend CorrelationMatrix validate_correlation(const SymMatrix& x, double tol);
    friend CorrelationMatrix project_correlation(const SymMatrix& y);
    explicit CorrelationMatrix(SymMatrix s) : s_(std::move(s)) {}
    SymMatrix s_;
};

// Spectrum floor below which a symmetric matrix is declared indefinite.
double psd_floor(const Vector& eigenvalues, double tol = kTolPsd);

// The one spectral primitive: eigen-decomposition with reusable storage so hot
// loops do not allocate. All PSD tests, square roots and clamps go through it.
class Spectral {
public:
    Spectral() = default;
    explicit Spectral(int n) : solver_(n) {}

    void decompose(const Matrix& y);
    const Vector& values() const { return solver_.eigenvalues(); }
    const Matrix& vectors() const { return solver_.eigenvectors(); }

    // Throws NotPositiveSemidefinite when the smallest eigenvalue is below the
    // floor; eigenvalues between the floor and 0 are treated as 0.
    void psd_sqrt(const Matrix& y, Matrix& out, double tol = kTolPsd);
    void positive_part(const Matrix& y, Matrix& out);
    double min_eigenvalue(const Matrix& y);

private:
    Eigen::SelfAdjointEigenSolver<Matrix> solver_;
    Vector scratch_;
};

CorrelationMatrix validate_correlation(const SymMatrix& x, double tol = kTolPsd);
CorrelationMatrix project_correlation(const SymMatrix& y);
SymMatrix psd_sqrt(const SymMatrix& y, double tol = kTolPsd);
SymMatrix positive_part(const SymMatrix& x);
double min_eigenvalue(const SymMatrix& x);

// sqrt(x - x e_n x): row and column n are zero, the rest is the square root of
// Subm(x, n) - x^n (x^n)^T.
SymMatrix diffusion_factor(const CorrelationMatrix& x, int n);
void diffusion_factor_into(const Matrix& x, int n, Spectral& spectral, Matrix& block, Matrix& out);

struct ExtCholFactors {
    // Row a of p q p^T is row perm[a] of q.
    std::vector<int> perm;
    Matrix m_r;  // r x r lower triangular, positive diagonal
    Matrix k_r;  // (n - r) x r
    int rank = 0;

    int size() const { return static_cast<int>(perm.size()); }
    // n x n block matrix [m_r 0; k_r 0].
    Matrix assembled() const;
    Matrix permutation() const;
};

// Diagonally pivoted outer-product Cholesky (largest remaining diagonal, ties
// to the lowest index). Pivots at or below tol_rank * max(1, max diag) end the
// factorization; a remaining diagonal below minus that level is an error.
ExtCholFactors extended_cholesky(const SymMatrix& q, double tol_rank = kTolRank);

struct ReducedForm {
    Matrix perm_p;              // d x d permutation
    Matrix m;                   // d x d, block diag(1, assembled factor)
    CorrelationMatrix c_check;  // first row (1, w), lower block identity
    ExtCholFactors factors;

    Vector first_row() const;   // w, length d - 1
};

// x = p m c_check m^T p^T with c_check's lower-right block the identity.
ReducedForm reduce_first_coordinate(const CorrelationMatrix& x, double tol_rank = kTolRank);
// Inverse map: replaces the first row of c_check by (1, w) and multiplies back.
// Only the first row and column of the result differ from the input matrix.
CorrelationMatrix rebuild(const ReducedForm& reduced, const Vector& w);

// Allocation-free version of the reduction used inside the schemes. Row `lead`
// plays the role of the first coordinate, the other rows form the block that is
// factored.
class RowReducer {
public:
    explicit RowReducer(int d);

    // When `strict` is false, indefinite blocks are truncated at the first
    // nonpositive pivot instead of throwing, and w is pulled back into the
    // closed unit ball. Used to keep steps total outside the domain.
    void factor(const Matrix& x, int lead, double tol_rank = kTolRank, bool strict = true);
    int rank() const { return rank_; }
    const Vector& ball_coords() const { return w_; }
    Vector& ball_coords() { return w_; }
    // Overwrites row/column `lead` of x with the image of w.
    void rebuild(Matrix& x, const Vector& w) const;

private:
    int d_;
    int n_;
    int lead_ = 0;
    int rank_ = 0;
    std::vector<int> others_;
    std::vector<int> perm_;
    Matrix a_;
    Matrix l_;
    Vector w_;
    mutable Vector u_;
};

// Coefficients of dX = (kappa(c - X) + (c - X)kappa) dt + sum_n a_n (...) with
// diagonal kappa and a stored as vectors.
struct MrcParams {
    CorrelationMatrix x;
    Vector kappa;
    CorrelationMatrix c;
    Vector a;

    int dim() const { return x.dim(); }
};

// Checks dimensions and nonnegativity.
MrcParams make_params(CorrelationMatrix x, Vector kappa, CorrelationMatrix c, Vector a);
// Constant off-diagonal x and c, scalar kappa and a on every coordinate.
MrcParams uniform_params(int d, double x_offdiag, double kappa, double c_offdiag, double a);

}  // namespace mrc
