#include "mrc/finance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "mrc/flows.hpp"
#include "mrc/schemes.hpp"

namespace mrc {

namespace {

constexpr double kWeightTol = 1e-12;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

double local_rho(double, double index, double index0, double eta, double gamma, double rho_min) {
    if (!(index > 0.0)) throw Error(Errc::NonpositiveIndex, "index level must be positive", -1, index);
    if (!(index0 > 0.0)) throw Error(Errc::NonpositiveIndex, "reference index level must be positive", -1, index0);
    const double rho = 1.0 / (1.0 + eta * std::pow(index / index0, gamma));
    return std::clamp(std::max(rho, rho_min), -1.0, 1.0);
}

double slc_vol_a(double kappa, double eps, double rho, int d) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw Error(Errc::InvalidArgument, "epsilon must lie in [0, 1]", -1, eps);
    if (!(kappa > 0.0)) throw Error(Errc::InvalidArgument, "kappa must be positive", -1, kappa);
    if (d < 2) return 0.0;
    return std::sqrt(std::max(0.0, 2.0 * kappa * eps * (1.0 - rho) / (d - 1)));
}

double LocalVol::operator()(double s) const { return beta == 1.0 ? sigma : sigma * std::pow(s / ref, beta - 1.0); }

void validate_model(const BasketModel& m) {
    const int d = m.dim();
    if (d < 1) throw Error(Errc::WrongDimension, "empty basket");
    if (m.weights.size() != d || static_cast<int>(m.vols.size()) != d)
        throw Error(Errc::WrongDimension, "spots, weights and vols must have the same length");
    for (int i = 0; i < d; ++i) {
        if (!(m.spots(i) > 0.0)) throw Error(Errc::InvalidArgument, "spots must be positive", i, m.spots(i));
        if (!(m.weights(i) >= 0.0)) throw Error(Errc::InvalidArgument, "weights must be nonnegative", i, m.weights(i));
        if (!(m.vols[i].sigma >= 0.0)) throw Error(Errc::InvalidArgument, "vol must be nonnegative", i, m.vols[i].sigma);
    }
    if (std::abs(m.weights.sum() - 1.0) > kWeightTol)
        throw Error(Errc::WeightSumError, "weights must sum to 1", -1, m.weights.sum());
    const CorrModel& c = m.corr;
    switch (c.kind) {
    case CorrModelKind::Constant:
        if (d > 1 && (c.rho < -1.0 / (d - 1) || c.rho > 1.0))
            throw Error(Errc::InvalidArgument, "constant rho outside [-1/(d-1), 1]", -1, c.rho);
        break;
    case CorrModelKind::Slc:
        if (!(c.kappa > 0.0)) throw Error(Errc::InvalidArgument, "SLC kappa must be positive", -1, c.kappa);
        if (!(c.eps >= 0.0 && c.eps <= 1.0)) throw Error(Errc::InvalidArgument, "SLC epsilon outside [0, 1]", -1, c.eps);
        [[fallthrough]];
    case CorrModelKind::Local:
        if (!(c.eta >= 0.0)) throw Error(Errc::InvalidArgument, "eta must be nonnegative", -1, c.eta);
        if (d > 1 && (c.rho_min < 0.0 || c.rho_min > 1.0))
            throw Error(Errc::InvalidArgument, "rho_min outside [0, 1]", -1, c.rho_min);
        break;
    case CorrModelKind::Mrc:
        if (c.mrc.dim() != d) throw Error(Errc::WrongDimension, "MRC parameters do not match the basket size");
        break;
    }
}

void equicorrelation_sqrt(int d, double rho, Matrix& out) {
    const double a = std::sqrt(std::max(0.0, 1.0 - rho));
    const double b = (std::sqrt(std::max(0.0, 1.0 - rho + d * rho)) - a) / d;
    out.setConstant(d, d, b);
    out.diagonal().array() += a;
}

BasketPathSimulator::BasketPathSimulator(const BasketModel& model, const TimeGrid& grid)
    : model_(model), grid_(make_grid(grid.horizon, grid.steps)), s_(model.dim()), g_(model.dim()), z_(model.dim()),
      c_(model.dim(), model.dim()), root_(model.dim(), model.dim()), spectral_(model.dim()), reducer_(model.dim()) {
    validate_model(model_);
    if (model_.corr.kind == CorrModelKind::Mrc && model_.dim() > 1) {
        strict_ = classify_assumptions(model_.corr.mrc).weak;
        if (!strict_) warn("MRC correlation parameters violate the weak existence condition");
        mrc_stepper_.emplace_back(model_.corr.mrc, grid_.step(), strict_);
    }
}

void BasketPathSimulator::set_local_target(double t, double index) {
    const CorrModel& c = model_.corr;
    const double rho = local_rho(t, index, model_.index0(), c.eta, c.gamma, c.rho_min);
    c_.setConstant(rho);
    c_.diagonal().setOnes();
}

// Frozen-coefficient MRC step with kappa I, target C(t, I) and a uniform vol
// a = slc_vol_a, split into substeps so that each a^2 dt stays below 2/5.
void BasketPathSimulator::step_slc(double t, double index, RngStream& rng) {
    const int d = model_.dim();
    const CorrModel& c = model_.corr;
    const double rho = local_rho(t, index, model_.index0(), c.eta, c.gamma, c.rho_min);
    const double a = slc_vol_a(c.kappa, c.eps, rho, d);
    const double h = grid_.step();
    const int sub = std::max(1, static_cast<int>(std::ceil(a * a * h / kMaxZStep - 1e-12)));
    const double dt = h / sub;
    const double s = 2.0 * c.kappa - (d - 2) * a * a;  // speed of the xi flow
    const double decay = std::exp(-0.5 * s * dt);
    const double relax = s == 0.0 ? 0.5 * dt : -std::expm1(-0.5 * s * dt) / s;
    const double b_off = 2.0 * c.kappa * rho;
    auto half = [&] {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) c_(i, j) = i == j ? 1.0 : decay * c_(i, j) + b_off * relax;
    };
    const bool diffuse = a > 0.0;
    const BallStepper ball(diffuse ? a * a * dt : 0.0);
    for (int k = 0; k < sub; ++k) {
        half();
        if (diffuse)
            for (int i = 0; i < d; ++i) {
                reducer_.factor(c_, i, kTolRank, strict_);
                Vector& w = reducer_.ball_coords();
                ball.step(w, rng);
                reducer_.rebuild(c_, w);
            }
        half();
    }
}

double BasketPathSimulator::run(std::int64_t path, std::uint64_t seed) {
    const int d = model_.dim();
    const double h = grid_.step(), sqrt_h = std::sqrt(h), r = model_.rate;
    const double i0 = model_.index0();
    RngStream corr_rng(seed, Lane::Correlation, static_cast<std::uint64_t>(path));
    RngStream stock_rng(seed, Lane::Stock, static_cast<std::uint64_t>(path));
    const CorrModelKind kind = d > 1 ? model_.corr.kind : CorrModelKind::Constant;

    s_ = model_.spots;
    double index = i0;
    switch (kind) {
    case CorrModelKind::Constant:
        if (d > 1)
            equicorrelation_sqrt(d, model_.corr.rho, root_);
        else
            root_.setOnes(1, 1);
        break;
    case CorrModelKind::Slc: set_local_target(0.0, i0); break;
    case CorrModelKind::Mrc: c_ = model_.corr.mrc.x.dense(); break;
    case CorrModelKind::Local: break;
    }

    for (int k = 0; k < grid_.steps; ++k) {
        const double t = grid_.node(k);
        switch (kind) {
        case CorrModelKind::Constant: break;
        case CorrModelKind::Local:
            equicorrelation_sqrt(d, local_rho(t, index, i0, model_.corr.eta, model_.corr.gamma, model_.corr.rho_min),
                                 root_);
            break;
        case CorrModelKind::Slc:
            step_slc(t, index, corr_rng);
            spectral_.psd_sqrt(c_, root_, 1e-8);
            break;
        case CorrModelKind::Mrc:
            mrc_stepper_[0].step(c_, corr_rng);
            spectral_.psd_sqrt(c_, root_, strict_ ? 1e-8 : 1e300);
            break;
        }
        for (int i = 0; i < d; ++i) g_(i) = stock_rng.normal();
        z_.noalias() = root_ * g_;
        for (int i = 0; i < d; ++i) {
            const double sig = model_.vols[i](s_(i));
            s_(i) *= std::exp((r - 0.5 * sig * sig) * h + sig * sqrt_h * z_(i));
        }
        index = model_.weights.dot(s_);
        if (!(index > 0.0)) throw Error(Errc::NonpositiveIndex, "index level underflowed", k, index);
    }
    return index;
}

std::vector<McEstimate> index_call_prices(const BasketModel& model, const std::vector<double>& strikes,
                                          const TimeGrid& grid, std::int64_t n_paths, std::uint64_t seed,
                                          const RunOptions& options) {
    validate_model(model);
    const double disc = std::exp(-model.rate * grid.horizon);
    const int n = static_cast<int>(strikes.size());
    KernelFactory factory = [&]() -> PathKernel {
        auto sim = std::make_shared<BasketPathSimulator>(model, grid);
        return [&, sim](std::int64_t path, double* out) {
            const double index = sim->run(path, seed);
            for (int k = 0; k < n; ++k) out[k] = disc * std::max(index - strikes[k], 0.0);
        };
    };
    return run_paths(n_paths, n, factory, options);
}

McEstimate index_call_price(const BasketModel& model, double strike, const TimeGrid& grid, std::int64_t n_paths,
                            std::uint64_t seed, const RunOptions& options) {
    return index_call_prices(model, {strike}, grid, n_paths, seed, options)[0];
}

double black_scholes_call(double spot, double strike, double rate, double t, double sigma) {
    const double df = std::exp(-rate * t);
    if (sigma <= 0.0 || t <= 0.0) return std::max(spot - strike * df, 0.0);
    if (strike <= 0.0) return spot - strike * df;
    const double sd = sigma * std::sqrt(t);
    const double d1 = (std::log(spot / strike) + rate * t) / sd + 0.5 * sd;
    return spot * norm_cdf(d1) - strike * df * norm_cdf(d1 - sd);
}

double implied_vol(double price, double spot, double strike, double rate, double t) {
    if (!(spot > 0.0 && strike > 0.0 && t > 0.0))
        throw Error(Errc::InvalidArgument, "implied vol needs positive spot, strike and maturity");
    const double lower = std::max(spot - strike * std::exp(-rate * t), 0.0);
    if (!(price > lower && price < spot))
        throw Error(Errc::PriceOutOfBounds, "price outside the no-arbitrage interval (intrinsic, spot)", -1, price);
    const double tol = 1e-10 * spot;
    const double lo_vol = 1e-6, hi_vol = 5.0;
    auto f = [&](double s) { return black_scholes_call(spot, strike, rate, t, s) - price; };

    double sigma = std::clamp(std::sqrt(2.0 * M_PI / t) * price / spot, 0.05, 2.0);
    for (int it = 0; it < 50; ++it) {
        const double sd = sigma * std::sqrt(t);
        const double d1 = (std::log(spot / strike) + rate * t) / sd + 0.5 * sd;
        const double vega = spot * norm_pdf(d1) * std::sqrt(t);
        const double diff = f(sigma);
        if (std::abs(diff) <= 1e-3 * tol) return sigma;
        if (!(vega > 1e-300)) break;
        const double next = sigma - diff / vega;
        if (!(next > lo_vol && next < hi_vol)) break;
        if (std::abs(next - sigma) < 1e-15 * sigma) return next;
        sigma = next;
    }
    if (std::abs(f(sigma)) <= tol && sigma > lo_vol && sigma < hi_vol) return sigma;

    double lo = lo_vol, hi = hi_vol;
    if (f(lo) > 0.0 || f(hi) < 0.0)
        throw Error(Errc::PriceOutOfBounds, "implied vol outside [1e-6, 5]", -1, price);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

double corr_swap_price_closed(const MrcParams& params, int i, int j, double t) {
    const double s = params.kappa(i) + params.kappa(j);
    if (!(s > 0.0)) throw Error(Errc::ZeroSpeedPair, "kappa_i + kappa_j must be positive", i, s);
    const double x = params.x(i, j), c = params.c(i, j);
    const double one_minus = -std::expm1(-s * t);
    return (x * one_minus - c * (one_minus - s * t)) / (s * t);
}

McEstimate corr_swap_price_mc(const MrcParams& params, int i, int j, const TimeGrid& grid, std::int64_t n_paths,
                              std::uint64_t seed, const RunOptions& options) {
    const TimeGrid g = make_grid(grid.horizon, grid.steps);
    const bool strict = classify_assumptions(params).weak;
    if (!strict) warn("weak existence condition violated; correlation swap simulated mechanically");
    const Matrix x0 = params.x.dense();
    KernelFactory factory = [&]() -> PathKernel {
        auto stepper = std::make_shared<SecondOrderStepper>(params, g.step(), strict);
        auto x = std::make_shared<Matrix>(x0);
        return [&, stepper, x](std::int64_t path, double* out) {
            RngStream rng(seed, Lane::Correlation, static_cast<std::uint64_t>(path));
            *x = x0;
            double sum = 0.5 * (*x)(i, j);
            for (int k = 0; k < g.steps; ++k) {
                stepper->step(*x, rng);
                sum += (k + 1 == g.steps ? 0.5 : 1.0) * (*x)(i, j);
            }
            out[0] = sum / g.steps;
        };
    };
    return run_paths(n_paths, 1, factory, options)[0];
}

double MarketWeights::total() const {
    double s = 0.0;
    for (double p : percent) s += p;
    return s;
}

Vector MarketWeights::fractions() const {
    Vector f(percent.size());
    const double t = total();
    for (std::size_t k = 0; k < percent.size(); ++k) f(k) = percent[k] / t;
    return f;
}

MarketWeights load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot read weights file '" + path + "'");
    MarketWeights w;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw Error(Errc::ParseError, path + ":" + std::to_string(lineno) + ": expected name,weight_percent");
        const std::string name = trim(line.substr(0, comma));
        const std::string value = trim(line.substr(comma + 1));
        double v = 0.0;
        std::size_t used = 0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty()) {
            if (w.names.empty() && lineno == 1) continue;  // header
            throw Error(Errc::ParseError, path + ":" + std::to_string(lineno) + ": bad weight '" + value + "'");
        }
        if (name.empty() || !(v >= 0.0))
            throw Error(Errc::ParseError, path + ":" + std::to_string(lineno) + ": bad row");
        w.names.push_back(name);
        w.percent.push_back(v);
    }
    if (w.names.empty()) throw Error(Errc::ParseError, "no weights in '" + path + "'");
    if (std::abs(w.total() - 100.0) > 0.5)
        throw Error(Errc::WeightSumError, "weights sum to " + std::to_string(w.total()) + ", expected 100", -1,
                    w.total());
    return w;
}

}  // namespace mrc
