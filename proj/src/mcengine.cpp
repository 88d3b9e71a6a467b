#include "mrc/mcengine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "mrc/flows.hpp"

namespace mrc {

namespace {

constexpr double kTolSpot = 1e-9;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (salt * 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

// Either stepper behind one call.
class PathStepper {
public:
    PathStepper(const MrcParams& params, SchemeKind scheme, double h, bool strict) {
        if (scheme == SchemeKind::EulerCorrected)
            euler_.emplace(params, h);
        else
            second_.emplace(params, h, strict);
    }
    void step(Matrix& x, RngStream& rng) {
        if (euler_)
            euler_->step(x, rng);
        else
            second_->step(x, rng);
    }

private:
    std::optional<EulerStepper> euler_;
    std::optional<SecondOrderStepper> second_;
};

bool passes_domain_check(const Matrix& x) {
    try {
        validate_correlation(SymMatrix::from_dense(x, kTolSpot), kTolSpot);
        for (int i = 0; i < x.rows(); ++i)
            if (std::abs(x(i, i) - 1.0) > kTolSpot) return false;
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

TimeGrid make_grid(double horizon, int steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw Error(Errc::InvalidArgument, "horizon must be positive", -1, horizon);
    if (steps < 1) throw Error(Errc::InvalidArgument, "step count must be positive", steps);
    return TimeGrid{horizon, steps};
}

void MomentAccumulator::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
}

double MomentAccumulator::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

McEstimate MomentAccumulator::estimate() const {
    McEstimate e;
    e.mean = mean_;
    e.n_paths = n_;
    e.std_error = n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    e.ci_half_width_95 = 1.96 * e.std_error;
    return e;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<McEstimate> run_paths(std::int64_t n_paths, int n_obs, const KernelFactory& factory,
                                  const RunOptions& options) {
    if (n_paths < 1) throw Error(Errc::InvalidArgument, "path count must be positive", -1, double(n_paths));
    const std::int64_t block = std::max<std::int64_t>(1, options.block);
    const std::int64_t n_blocks = (n_paths + block - 1) / block;
    const int workers = static_cast<int>(std::min<std::int64_t>(resolve_workers(options.workers), n_blocks));

    std::vector<std::vector<MomentAccumulator>> partial(n_blocks, std::vector<MomentAccumulator>(n_obs));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&](PathKernel kernel) {
        std::vector<double> out(n_obs);
        try {
            while (!stop.load(std::memory_order_relaxed)) {
                const std::int64_t b = next.fetch_add(1);
                if (b >= n_blocks) break;
                const std::int64_t end = std::min(n_paths, (b + 1) * block);
                for (std::int64_t p = b * block; p < end; ++p) {
                    kernel(p, out.data());
                    for (int k = 0; k < n_obs; ++k) partial[b][k].add(out[k]);
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop = true;
        }
    };

    std::vector<PathKernel> kernels;
    for (int w = 0; w < workers; ++w) kernels.push_back(factory());
    if (workers == 1) {
        work(kernels[0]);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) threads.emplace_back(work, kernels[w]);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Fixed pairwise tree over block results.
    while (partial.size() > 1) {
        std::vector<std::vector<MomentAccumulator>> merged((partial.size() + 1) / 2);
        for (std::size_t i = 0; i < merged.size(); ++i) {
            merged[i] = std::move(partial[2 * i]);
            if (2 * i + 1 < partial.size())
                for (int k = 0; k < n_obs; ++k) merged[i][k].merge(partial[2 * i + 1][k]);
        }
        partial = std::move(merged);
    }
    std::vector<McEstimate> result(n_obs);
    for (int k = 0; k < n_obs; ++k) result[k] = partial[0][k].estimate();
    return result;
}

Observable entry_observable(int i, int j) {
    return {"x" + std::to_string(i + 1) + "_" + std::to_string(j + 1), [i, j](const Matrix& x) { return x(i, j); }};
}

Observable monomial_observable(const MonomialIndex& m) {
    return {m.to_string(), [m](const Matrix& x) { return m.evaluate(x); }};
}

SimulationResult simulate_paths(const MrcParams& params, SchemeKind scheme, const TimeGrid& grid,
                                std::int64_t n_paths, std::uint64_t seed, const std::vector<Observable>& observables,
                                const RunOptions& options) {
    const TimeGrid g = make_grid(grid.horizon, grid.steps);
    const double h = g.step();
    SimulationResult result;

    bool strict = true;
    if (scheme == SchemeKind::SecondOrderDirect) {
        for (int i = 0; i < params.dim(); ++i)
            if (params.a(i) * params.a(i) * h > kMaxZStep)
                throw Error(Errc::StepTooLarge,
                            "a_i^2 T/N = " + std::to_string(params.a(i) * params.a(i) * h) +
                                " exceeds 2/5; increase N",
                            i, params.a(i) * params.a(i) * h);
        if (!classify_assumptions(params).weak) {
            strict = false;
            result.warnings.push_back(
                "weak existence condition violated (kappa c + c kappa - (d-2) a^2 not PSD); second-order scheme run "
                "mechanically with domain safeguards");
        }
    } else if (!classify_assumptions(params).weak) {
        result.warnings.push_back("weak existence condition violated (kappa c + c kappa - (d-2) a^2 not PSD)");
    }
    for (const auto& w : result.warnings) warn(w);

    std::atomic<std::int64_t> checked{0}, failed{0};
    const int n_obs = static_cast<int>(observables.size());
    const Matrix x0 = params.x.dense();
    KernelFactory factory = [&]() -> PathKernel {
        auto stepper = std::make_shared<PathStepper>(params, scheme, h, strict);
        auto x = std::make_shared<Matrix>(x0);
        return [&, stepper, x](std::int64_t path, double* out) {
            RngStream rng(seed, Lane::Correlation, static_cast<std::uint64_t>(path));
            *x = x0;
            const bool spot = path % 100 == 0;
            for (int s = 0; s < g.steps; ++s) {
                stepper->step(*x, rng);
                if (spot) {
                    checked.fetch_add(1, std::memory_order_relaxed);
                    if (!passes_domain_check(*x)) failed.fetch_add(1, std::memory_order_relaxed);
                }
            }
            for (int k = 0; k < n_obs; ++k) out[k] = observables[k].f(*x);
        };
    };
    result.estimates = run_paths(n_paths, n_obs, factory, options);
    result.spot_checked_states = checked.load();
    result.spot_check_failures = failed.load();
    if (result.spot_check_failures > 0) {
        const std::string msg = std::to_string(result.spot_check_failures) + " of " +
                                std::to_string(result.spot_checked_states) +
                                " spot-checked states failed the correlation-matrix check";
        if (strict && classify_assumptions(params).weak) throw Error(Errc::LeftDomain, msg);
        result.warnings.push_back(msg);
        warn(msg);
    }
    return result;
}

McEstimate simulate_paths(const MrcParams& params, SchemeKind scheme, const TimeGrid& grid, std::int64_t n_paths,
                          std::uint64_t seed, const Observable& observable, const RunOptions& options) {
    return simulate_paths(params, scheme, grid, n_paths, seed, std::vector<Observable>{observable}, options)
        .estimates[0];
}

double fit_slope(const std::vector<ConvergencePoint>& points, double horizon, int* used) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : points) {
        if (!(p.abs_error > 3.0 * p.estimate.ci_half_width_95)) continue;
        const double lx = std::log(horizon / p.steps), ly = std::log(p.abs_error);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++n;
    }
    if (used) *used = n;
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<ConvergenceReport> convergence_study(const MrcParams& params, SchemeKind scheme, double horizon,
                                                 const std::vector<int>& steps, std::int64_t n_paths,
                                                 std::uint64_t seed, const RunOptions& options) {
    const Fig1Values exact = functional_fig1(params, horizon);
    std::vector<ConvergenceReport> reports(2);
    reports[0].functional = "order3";
    reports[1].functional = "order1";
    const std::vector<Observable> obs{{"order3", [](const Matrix& x) { return fig1_sample(x).order3; }},
                                      {"order1", [](const Matrix& x) { return fig1_sample(x).order1; }}};
    for (int n : steps) {
        auto sim = simulate_paths(params, scheme, make_grid(horizon, n), n_paths,
                                  derive_seed(seed, static_cast<std::uint64_t>(n)), obs, options);
        const double ex[2] = {exact.order3, exact.order1};
        for (int k = 0; k < 2; ++k) {
            ConvergencePoint p;
            p.steps = n;
            p.estimate = sim.estimates[k];
            p.exact = ex[k];
            p.abs_error = std::abs(p.estimate.mean - ex[k]);
            reports[k].points.push_back(p);
        }
    }
    for (auto& r : reports) {
        r.scheme = scheme;
        r.slope = fit_slope(r.points, horizon, &r.fitted_points);
    }
    return reports;
}

TimingReport timing_bench(const MrcParams& params, const std::vector<SchemeKind>& schemes, const TimeGrid& grid,
                          std::int64_t n_paths, std::uint64_t seed, const RunOptions& options) {
    if (schemes.empty()) throw Error(Errc::InvalidArgument, "no scheme to time");
    TimingReport report;
    for (SchemeKind s : schemes) {
        const auto t0 = std::chrono::steady_clock::now();
        auto sim = simulate_paths(params, s, grid, n_paths, seed,
                                  std::vector<Observable>{entry_observable(0, params.dim() > 1 ? 1 : 0)}, options);
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back({s, params.dim(), grid.steps, n_paths, sec});
        for (auto& w : sim.warnings)
            if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end())
                report.warnings.push_back(w);
    }
    return report;
}

double bracket_rate(const MrcParams& p, const Matrix& x, int i, int j, int k, int l) {
    auto v = [&](int a, int b) { return a == b ? 1.0 : x(a, b); };
    const double ai2 = p.a(i) * p.a(i), aj2 = p.a(j) * p.a(j);
    double r = 0.0;
    if (i == k) r += ai2 * (v(j, l) - v(i, j) * v(i, l));
    if (i == l) r += ai2 * (v(j, k) - v(i, j) * v(i, k));
    if (j == k) r += aj2 * (v(i, l) - v(j, i) * v(j, l));
    if (j == l) r += aj2 * (v(i, k) - v(j, i) * v(j, k));
    return r;
}

std::vector<QvRow> qv_test(const MrcParams& params, double h, std::int64_t n_draws, std::uint64_t seed,
                           const RunOptions& options) {
    const int d = params.dim();
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    std::vector<std::pair<int, int>> quads;
    for (int a = 0; a < static_cast<int>(pairs.size()); ++a)
        for (int b = a; b < static_cast<int>(pairs.size()); ++b) quads.emplace_back(a, b);
    const int np = static_cast<int>(pairs.size()), nq = static_cast<int>(quads.size());
    const Matrix x0 = params.x.dense();

    KernelFactory factory = [&]() -> PathKernel {
        auto stepper = std::make_shared<EulerStepper>(params, h);
        auto x = std::make_shared<Matrix>(x0);
        auto delta = std::make_shared<std::vector<double>>(np);
        return [&, stepper, x, delta](std::int64_t path, double* out) {
            RngStream rng(seed, Lane::Correlation, static_cast<std::uint64_t>(path));
            *x = x0;
            stepper->step(*x, rng);
            for (int a = 0; a < np; ++a) {
                (*delta)[a] = (*x)(pairs[a].first, pairs[a].second) - x0(pairs[a].first, pairs[a].second);
                out[a] = (*delta)[a];
            }
            for (int q = 0; q < nq; ++q) out[np + q] = (*delta)[quads[q].first] * (*delta)[quads[q].second];
        };
    };
    const auto est = run_paths(n_draws, np + nq, factory, options);
    std::vector<QvRow> rows;
    for (int q = 0; q < nq; ++q) {
        const auto [a, b] = quads[q];
        const auto [i, j] = pairs[a];
        const auto [k, l] = pairs[b];
        QvRow r{i, j, k, l, 0, 0, 0, false};
        r.empirical = (est[np + q].mean - est[a].mean * est[b].mean) / h;
        r.std_error = est[np + q].std_error / h;
        r.theoretical = bracket_rate(params, x0, i, j, k, l);
        r.flagged = std::abs(r.empirical - r.theoretical) > 4.0 * r.std_error;
        rows.push_back(r);
    }
    return rows;
}

MrcParams restrict_params(const MrcParams& params, const std::vector<int>& subset) {
    const int k = static_cast<int>(subset.size());
    for (int s : subset)
        if (s < 0 || s >= params.dim()) throw Error(Errc::InvalidArgument, "subset index out of range", s);
    Matrix x(k, k), c(k, k);
    Vector kap(k), a(k);
    for (int p = 0; p < k; ++p) {
        kap(p) = params.kappa(subset[p]);
        a(p) = params.a(subset[p]);
        for (int q = 0; q < k; ++q) {
            x(p, q) = params.x(subset[p], subset[q]);
            c(p, q) = params.c(subset[p], subset[q]);
        }
    }
    return make_params(CorrelationMatrix::assume_valid(x), kap, CorrelationMatrix::assume_valid(c), a);
}

std::vector<SubmatrixRow> submatrix_consistency_test(const MrcParams& params, const std::vector<int>& subset,
                                                     SchemeKind scheme, const TimeGrid& grid, std::int64_t n_paths,
                                                     std::uint64_t seed, const RunOptions& options) {
    const int k = static_cast<int>(subset.size());
    if (k < 2) throw Error(Errc::InvalidArgument, "subset needs at least two indices", k);
    const MrcParams sub = restrict_params(params, subset);
    std::vector<std::pair<int, int>> pairs;
    for (int p = 0; p < k; ++p)
        for (int q = p + 1; q < k; ++q) pairs.emplace_back(p, q);
    std::vector<MonomialIndex> ms;
    for (auto [p, q] : pairs) ms.push_back(MonomialIndex::pair(k, p, q));
    for (std::size_t a = 0; a < pairs.size(); ++a)
        for (std::size_t b = a; b < pairs.size(); ++b)
            ms.push_back(MonomialIndex::pair(k, pairs[a].first, pairs[a].second)
                             .add(pairs[b].first, pairs[b].second, 1));
    std::vector<Observable> obs;
    for (const auto& m : ms)
        obs.push_back({m.to_string(), [m, subset, k](const Matrix& x) {
                           Matrix y(k, k);
                           for (int p = 0; p < k; ++p)
                               for (int q = 0; q < k; ++q) y(p, q) = x(subset[p], subset[q]);
                           return m.evaluate(y);
                       }});
    const auto sim = simulate_paths(params, scheme, grid, n_paths, seed, obs, options);
    MomentTable table(sub);
    std::vector<SubmatrixRow> rows;
    for (std::size_t q = 0; q < ms.size(); ++q) {
        SubmatrixRow r{ms[q].to_string(), sim.estimates[q], table.value(ms[q], grid.horizon), false};
        r.pass = std::abs(r.estimate.mean - r.exact) <= 3.0 * r.estimate.ci_half_width_95;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace mrc
