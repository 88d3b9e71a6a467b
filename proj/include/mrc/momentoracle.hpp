#pragma once

// Exact moment trajectories E[X_t^m] of constant-coefficient MRC processes.
// A monomial x^m = prod_{i<j} x_ij^{m_ij}; the generator maps it to
// -K_m x^m + f_m(x) with f_m of lower degree, so moments are finite sums of
// c t^p e^{-lambda t} obtained by induction on the degree.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mrc/corematrix.hpp"

namespace mrc {

class MonomialIndex {
public:
    MonomialIndex() = default;
    explicit MonomialIndex(int d);
    static MonomialIndex pair(int d, int i, int j, int power = 1);

    int dim() const { return d_; }
    int degree() const { return degree_; }
    int get(int i, int j) const;
    // Adds delta to the exponent of {i, j}; i == j is ignored (x_ii = 1).
    MonomialIndex& add(int i, int j, int delta);
    MonomialIndex plus(int i, int j, int delta = 1) const { return MonomialIndex(*this).add(i, j, delta); }

    double evaluate(const Matrix& x) const;

    // Text form "x1_2^2*x1_3" with 1-based indices; the empty monomial is "1".
    std::string to_string() const;
    static MonomialIndex parse(int d, std::string_view text);

    const std::vector<int>& exponents() const { return e_; }
    auto operator<=>(const MonomialIndex& o) const { return e_ <=> o.e_; }
    bool operator==(const MonomialIndex& o) const { return d_ == o.d_ && e_ == o.e_; }

private:
    int slot(int i, int j) const;
    int d_ = 0;
    int degree_ = 0;
    std::vector<int> e_;
};

struct ExpTerm {
    double coeff;
    int power;
    double rate;
};

// sum_k coeff_k t^{power_k} e^{-rate_k t}, kept sorted by (rate, power) with
// equal keys merged. Rates within 1e-12 (relative) are identified.
class ExpPolySeries {
public:
    static ExpPolySeries constant(double c);

    void add(double coeff, int power, double rate);
    void add_scaled(const ExpPolySeries& other, double scale);

    double operator()(double t) const;
    // Value as t -> infinity; NaN when the series grows.
    double limit() const;
    // t -> e^{-K t} * integral_0^t e^{K s} f(s) ds, term by term.
    ExpPolySeries convolve_decay(double k) const;

    const std::vector<ExpTerm>& terms() const { return terms_; }

private:
    std::vector<ExpTerm> terms_;
};

bool same_rate(double a, double b);

// K_m = sum_i kappa_i sum_j m_ij + 1/2 sum_i a_i^2 [(sum_j m_ij)^2 - sum_j m_ij]
double decay_rate_Km(const MrcParams& params, const MonomialIndex& m);

struct GeneratorTerm {
    double coeff;
    MonomialIndex monomial;
};
// f_m as a list of lower-degree monomials with coefficients (duplicates merged).
std::vector<GeneratorTerm> generator_remainder(const MrcParams& params, const MonomialIndex& m);

// Memoized oracle for one parameter set. Not thread-safe while being filled;
// a filled table may be shared read-only.
class MomentTable {
public:
    explicit MomentTable(MrcParams params, int degree_cap = 8);

    const ExpPolySeries& series(const MonomialIndex& m);
    // Exact x^m at t == 0, the series otherwise.
    double value(const MonomialIndex& m, double t);
    double ergodic(const MonomialIndex& m);

    const MrcParams& params() const { return params_; }

private:
    void check(const MonomialIndex& m) const;
    MrcParams params_;
    int cap_;
    std::map<MonomialIndex, ExpPolySeries> memo_;
    std::map<MonomialIndex, double> ergodic_memo_;
};

ExpPolySeries moment(const MrcParams& params, const MonomialIndex& m, int degree_cap = 8);
double ergodic_moment(const MrcParams& params, const MonomialIndex& m, int degree_cap = 8);

// E[X_ij X_kl] from the explicit second-order display. Requires i != j, k != l
// and positive speed sums kappa_i + kappa_j, kappa_k + kappa_l.
double moment_order2(const MrcParams& params, int i, int j, int k, int l, double t);

// Density of the first row under the ergodic law of the elementary process with
// drift coefficient alpha / 2; z has d - 1 entries.
double ergodic_density_first_row(double alpha, const Vector& z);

// The two d = 3 functionals of the convergence study.
struct Fig1Values {
    double order3;  // sum_{i!=j, k!=l} X_ij X_kl^2 + X_12 X_23 X_13
    double order1;  // sum_{i!=j} X_ij
};
Fig1Values functional_fig1(const MrcParams& params, double t);
Fig1Values fig1_sample(const Matrix& x);

}  // namespace mrc
