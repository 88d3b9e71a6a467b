#include "mrc/momentoracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace mrc {

MonomialIndex::MonomialIndex(int d) : d_(d), e_(static_cast<std::size_t>(d * (d - 1) / 2), 0) {
    if (d < 1) throw Error(Errc::WrongDimension, "monomial dimension must be positive");
}

MonomialIndex MonomialIndex::pair(int d, int i, int j, int power) {
    MonomialIndex m(d);
    m.add(i, j, power);
    return m;
}

int MonomialIndex::slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= d_) throw Error(Errc::InvalidArgument, "monomial index out of range", j);
    return i * (2 * d_ - i - 1) / 2 + (j - i - 1);
}

int MonomialIndex::get(int i, int j) const { return i == j ? 0 : e_[slot(i, j)]; }

MonomialIndex& MonomialIndex::add(int i, int j, int delta) {
    if (i == j) return *this;
    int& e = e_[slot(i, j)];
    if (e + delta < 0) throw Error(Errc::InvalidArgument, "negative monomial exponent");
    e += delta;
    degree_ += delta;
    return *this;
}

double MonomialIndex::evaluate(const Matrix& x) const {
    double v = 1.0;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            for (int p = get(i, j); p > 0; --p) v *= x(i, j);
    return v;
}

std::string MonomialIndex::to_string() const {
    if (degree_ == 0) return "1";
    std::string s;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j) {
            const int p = get(i, j);
            if (p == 0) continue;
            if (!s.empty()) s += '*';
            s += 'x' + std::to_string(i + 1) + '_' + std::to_string(j + 1);
            if (p > 1) s += '^' + std::to_string(p);
        }
    return s;
}

namespace {

int parse_int(std::string_view& s, std::string_view whole) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr == s.data())
        throw Error(Errc::ParseError, "bad monomial '" + std::string(whole) + "'");
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

MonomialIndex MonomialIndex::parse(int d, std::string_view text) {
    MonomialIndex m(d);
    const std::string_view whole = text;
    text = trim(text);
    if (text == "1") return m;
    if (text.empty()) throw Error(Errc::ParseError, "empty monomial");
    while (true) {
        const auto star = text.find('*');
        std::string_view f = trim(text.substr(0, star));
        if (f.empty() || f.front() != 'x') throw Error(Errc::ParseError, "bad monomial '" + std::string(whole) + "'");
        f.remove_prefix(1);
        const int i = parse_int(f, whole);
        if (f.empty() || f.front() != '_') throw Error(Errc::ParseError, "bad monomial '" + std::string(whole) + "'");
        f.remove_prefix(1);
        const int j = parse_int(f, whole);
        int p = 1;
        if (!f.empty() && f.front() == '^') {
            f.remove_prefix(1);
            p = parse_int(f, whole);
        }
        if (!f.empty() || i < 1 || j < 1 || i > d || j > d || i == j || p < 0)
            throw Error(Errc::ParseError, "bad monomial '" + std::string(whole) + "'");
        m.add(i - 1, j - 1, p);
        if (star == std::string_view::npos) break;
        text.remove_prefix(star + 1);
    }
    return m;
}

bool same_rate(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

ExpPolySeries ExpPolySeries::constant(double c) {
    ExpPolySeries s;
    s.add(c, 0, 0.0);
    return s;
}

void ExpPolySeries::add(double coeff, int power, double rate) {
    if (coeff == 0.0) return;
    for (const auto& t : terms_)
        if (same_rate(t.rate, rate)) {
            rate = t.rate;  // canonical representative of the rate class
            break;
        }
    auto before = [&](const ExpTerm& t) { return t.rate < rate || (t.rate == rate && t.power < power); };
    auto it = std::find_if_not(terms_.begin(), terms_.end(), before);
    if (it != terms_.end() && it->rate == rate && it->power == power) {
        it->coeff += coeff;
        if (it->coeff == 0.0) terms_.erase(it);
        return;
    }
    terms_.insert(it, ExpTerm{coeff, power, rate});
}

void ExpPolySeries::add_scaled(const ExpPolySeries& other, double scale) {
    for (const auto& t : other.terms_) add(scale * t.coeff, t.power, t.rate);
}

double ExpPolySeries::operator()(double t) const {
    double v = 0.0;
    for (const auto& term : terms_) {
        double tp = 1.0;
        for (int p = 0; p < term.power; ++p) tp *= t;
        v += term.coeff * tp * std::exp(-term.rate * t);
    }
    return v;
}

double ExpPolySeries::limit() const {
    double v = 0.0;
    for (const auto& term : terms_) {
        if (term.rate > 0.0 && !same_rate(term.rate, 0.0)) continue;
        if (term.power > 0 || term.rate < 0.0) return std::numeric_limits<double>::quiet_NaN();
        v += term.coeff;
    }
    return v;
}

ExpPolySeries ExpPolySeries::convolve_decay(double k) const {
    ExpPolySeries out;
    for (const auto& term : terms_) {
        const double c = term.coeff;
        const int p = term.power;
        if (same_rate(k, term.rate)) {
            out.add(c / (p + 1), p + 1, term.rate);
            continue;
        }
        // integral_0^t s^p e^{mu s} ds
        //   = e^{mu t} sum_q (-1)^q p!/(p-q)! t^{p-q} / mu^{q+1} - (-1)^p p! / mu^{p+1}
        const double mu = k - term.rate;
        double falling = 1.0;  // p!/(p-q)!
        double inv_mu = 1.0 / mu;
        double mu_pow = inv_mu;  // 1/mu^{q+1}
        for (int q = 0; q <= p; ++q) {
            const double sign = (q % 2 == 0) ? 1.0 : -1.0;
            out.add(c * sign * falling * mu_pow, p - q, term.rate);
            if (q < p) {
                falling *= (p - q);
                mu_pow *= inv_mu;
            }
        }
        const double sign = (p % 2 == 0) ? 1.0 : -1.0;
        out.add(-c * sign * falling * mu_pow, 0, k);
    }
    return out;
}

double decay_rate_Km(const MrcParams& params, const MonomialIndex& m) {
    const int d = m.dim();
    if (d != params.dim()) throw Error(Errc::WrongDimension, "monomial and parameter dimensions differ");
    double k = 0.0;
    for (int i = 0; i < d; ++i) {
        double row = 0.0;
        for (int j = 0; j < d; ++j) row += m.get(i, j);
        k += params.kappa(i) * row + 0.5 * params.a(i) * params.a(i) * (row * row - row);
    }
    return k;
}

std::vector<GeneratorTerm> generator_remainder(const MrcParams& params, const MonomialIndex& m) {
    const int d = m.dim();
    std::map<MonomialIndex, double> acc;
    const Matrix& c = params.c.dense();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const int mij = m.get(i, j);
            if (mij == 0) continue;
            const double w = (params.kappa(i) + params.kappa(j)) * c(i, j) * mij;
            if (w != 0.0) acc[m.plus(i, j, -1)] += w;
        }
    for (int i = 0; i < d; ++i) {
        const double a2 = params.a(i) * params.a(i);
        if (a2 == 0.0) continue;
        for (int j = 0; j < d; ++j) {
            const int mij = m.get(i, j);
            if (mij == 0) continue;
            if (mij >= 2) acc[m.plus(i, j, -2)] += 0.5 * a2 * mij * (mij - 1);
            for (int k = j + 1; k < d; ++k) {
                const int mik = m.get(i, k);
                if (mik == 0) continue;
                // ordered pairs (j,k) and (k,j) give the same monomial
                MonomialIndex next = m.plus(i, j, -1);
                next.add(i, k, -1).add(j, k, 1);
                acc[next] += a2 * mij * mik;
            }
        }
    }
    std::vector<GeneratorTerm> out;
    out.reserve(acc.size());
    for (auto& [mono, w] : acc)
        if (w != 0.0) out.push_back({w, mono});
    return out;
}

MomentTable::MomentTable(MrcParams params, int degree_cap) : params_(std::move(params)), cap_(degree_cap) {}

void MomentTable::check(const MonomialIndex& m) const {
    if (m.dim() != params_.dim()) throw Error(Errc::WrongDimension, "monomial and parameter dimensions differ");
    if (m.degree() > cap_)
        throw Error(Errc::DegreeLimitExceeded,
                    "degree " + std::to_string(m.degree()) + " exceeds cap " + std::to_string(cap_), -1,
                    m.degree());
}

const ExpPolySeries& MomentTable::series(const MonomialIndex& m) {
    check(m);
    if (auto it = memo_.find(m); it != memo_.end()) return it->second;
    ExpPolySeries s;
    if (m.degree() == 0) {
        s = ExpPolySeries::constant(1.0);
    } else {
        const double k = decay_rate_Km(params_, m);
        ExpPolySeries forcing;
        for (const auto& g : generator_remainder(params_, m)) forcing.add_scaled(series(g.monomial), g.coeff);
        s = forcing.convolve_decay(k);
        s.add(m.evaluate(params_.x.dense()), 0, k);
    }
    return memo_.emplace(m, std::move(s)).first->second;
}

double MomentTable::value(const MonomialIndex& m, double t) {
    check(m);
    if (t == 0.0) return m.evaluate(params_.x.dense());
    return series(m)(t);
}

double MomentTable::ergodic(const MonomialIndex& m) {
    check(m);
    if (auto it = ergodic_memo_.find(m); it != ergodic_memo_.end()) return it->second;
    double v;
    const double k = decay_rate_Km(params_, m);
    if (m.degree() == 0) {
        v = 1.0;
    } else if (k > 0.0) {
        double f = 0.0;
        for (const auto& g : generator_remainder(params_, m)) f += g.coeff * ergodic(g.monomial);
        v = f / k;
    } else {
        v = m.evaluate(params_.x.dense());
    }
    ergodic_memo_.emplace(m, v);
    return v;
}

ExpPolySeries moment(const MrcParams& params, const MonomialIndex& m, int degree_cap) {
    MomentTable table(params, degree_cap);
    return table.series(m);
}

double ergodic_moment(const MrcParams& params, const MonomialIndex& m, int degree_cap) {
    MomentTable table(params, degree_cap);
    return table.ergodic(m);
}

double moment_order2(const MrcParams& params, int i, int j, int k, int l, double t) {
    const int d = params.dim();
    for (int v : {i, j, k, l})
        if (v < 0 || v >= d) throw Error(Errc::InvalidArgument, "index out of range", v);
    if (i == j || k == l) throw Error(Errc::InvalidArgument, "diagonal pair");
    const Vector& kap = params.kappa;
    const Vector& a = params.a;
    const double sij = kap(i) + kap(j), skl = kap(k) + kap(l);
    if (!(sij > 0.0)) throw Error(Errc::ZeroSpeedPair, "kappa_i + kappa_j = 0", i);
    if (!(skl > 0.0)) throw Error(Errc::ZeroSpeedPair, "kappa_k + kappa_l = 0", k);
    const Matrix& x = params.x.dense();
    const Matrix& c = params.c.dense();
    const double ai2 = a(i) * a(i), aj2 = a(j) * a(j);
    const double K = sij + skl + ai2 * ((i == k) + (i == l)) + aj2 * ((j == k) + (j == l));
    const double eK = std::exp(-K * t);

    auto gamma = [&](int m, int n) {
        double g = c(m, n) * (1.0 - eK) / K;
        const double dx = x(m, n) - c(m, n);
        if (m != n && dx != 0.0) {
            const double s = kap(m) + kap(n);
            if (same_rate(K, s))
                g += dx * t * eK;
            else
                g += dx * (std::exp(-s * t) - eK) / (K - s);
        }
        return g;
    };

    double v = x(i, j) * x(k, l) * eK + sij * c(i, j) * gamma(k, l) + skl * c(k, l) * gamma(i, j);
    if (i == k) v += ai2 * gamma(j, l);
    if (i == l) v += ai2 * gamma(j, k);
    if (j == k) v += aj2 * gamma(i, l);
    if (j == l) v += aj2 * gamma(i, k);
    return v;
}

double ergodic_density_first_row(double alpha, const Vector& z) {
    const int d = static_cast<int>(z.size()) + 1;
    if (!(alpha > d - 2))
        throw Error(Errc::NonIntegrableAlpha, "alpha must exceed d - 2", -1, alpha);
    const double r2 = z.squaredNorm();
    if (r2 > 1.0 + 1e-12) throw Error(Errc::LeftDomain, "point outside the unit ball", -1, r2);
    const double expo = 0.5 * (alpha - d);
    const double norm = std::exp(std::lgamma(0.5 * (alpha + 1)) - std::lgamma(0.5 * (alpha + 2 - d))) /
                        std::pow(std::numbers::pi, 0.5 * (d - 1));
    const double base = std::max(0.0, 1.0 - r2);
    if (base == 0.0) {
        if (expo > 0.0) return 0.0;
        if (expo == 0.0) return norm;
        return std::numeric_limits<double>::infinity();
    }
    return norm * std::pow(base, expo);
}

namespace {

template <class Eval>
Fig1Values fig1_sum(Eval&& e, int d) {
    Fig1Values v{0.0, 0.0};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            v.order1 += e(MonomialIndex::pair(d, i, j));
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    if (k == l) continue;
                    v.order3 += e(MonomialIndex::pair(d, i, j).add(k, l, 2));
                }
        }
    v.order3 += e(MonomialIndex::pair(d, 0, 1).add(1, 2, 1).add(0, 2, 1));
    return v;
}

}  // namespace

Fig1Values functional_fig1(const MrcParams& params, double t) {
    if (params.dim() != 3) throw Error(Errc::WrongDimension, "the convergence functionals need d = 3", params.dim());
    MomentTable table(params);
    return fig1_sum([&](const MonomialIndex& m) { return table.value(m, t); }, 3);
}

Fig1Values fig1_sample(const Matrix& x) {
    const double x12 = x(0, 1), x13 = x(0, 2), x23 = x(1, 2);
    const double s1 = 2.0 * (x12 + x13 + x23);
    const double s2 = 2.0 * (x12 * x12 + x13 * x13 + x23 * x23);
    return {s1 * s2 + x12 * x23 * x13, s1};
}

}  // namespace mrc
