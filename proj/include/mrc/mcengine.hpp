#pragma once

// Monte Carlo driver: deterministic path-parallel simulation, estimates with
// confidence intervals, the weak-convergence study, timing runs and the
// statistical property tests.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrc/corematrix.hpp"
#include "mrc/momentoracle.hpp"
#include "mrc/schemes.hpp"

namespace mrc {

struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    double step() const { return horizon / steps; }
    double node(int i) const { return i == steps ? horizon : horizon * i / steps; }
};

TimeGrid make_grid(double horizon, int steps);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci_half_width_95 = 0.0;
    std::int64_t n_paths = 0;
};

// Welford mean/variance; merge() is Chan's pairwise update.
class MomentAccumulator {
public:
    void add(double x);
    void merge(const MomentAccumulator& other);
    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;
    McEstimate estimate() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct RunOptions {
    int workers = 0;            // 0: hardware concurrency
    std::int64_t block = 8192;  // paths per work unit; fixes the reduction tree
};

int resolve_workers(int requested);

// Fills out[0..n_obs) for one path.
using PathKernel = std::function<void(std::int64_t path, double* out)>;
// Builds one kernel per worker so each owns its scratch space.
using KernelFactory = std::function<PathKernel()>;

// Blocks of paths are reduced sequentially, then merged along a fixed binary
// tree, so results do not depend on the number of workers.
std::vector<McEstimate> run_paths(std::int64_t n_paths, int n_obs, const KernelFactory& factory,
                                  const RunOptions& options = {});

struct Observable {
    std::string name;
    std::function<double(const Matrix&)> f;
};

Observable entry_observable(int i, int j);
Observable monomial_observable(const MonomialIndex& m);

struct SimulationResult {
    std::vector<McEstimate> estimates;  // one per observable
    std::vector<std::string> warnings;
    std::int64_t spot_checked_states = 0;
    std::int64_t spot_check_failures = 0;
};

// Steps every path from params.x over the grid and evaluates the observables
// at the horizon. One path in 100 has every state validated. When the weak
// existence condition fails the scheme runs in its non-strict mode and a
// warning is recorded. Second-order runs throw StepTooLarge when
// max a_i^2 T / N exceeds 2/5.
SimulationResult simulate_paths(const MrcParams& params, SchemeKind scheme, const TimeGrid& grid,
                                std::int64_t n_paths, std::uint64_t seed, const std::vector<Observable>& observables,
                                const RunOptions& options = {});
McEstimate simulate_paths(const MrcParams& params, SchemeKind scheme, const TimeGrid& grid, std::int64_t n_paths,
                          std::uint64_t seed, const Observable& observable, const RunOptions& options = {});

struct ConvergencePoint {
    int steps = 0;
    McEstimate estimate;
    double exact = 0.0;
    double abs_error = 0.0;
};

struct ConvergenceReport {
    SchemeKind scheme = SchemeKind::SecondOrderDirect;
    std::string functional;
    std::vector<ConvergencePoint> points;
    // Least-squares slope of log|error| against log(T/N) over the points with
    // |error| > 3 ci; NaN with fewer than two such points.
    double slope = 0.0;
    int fitted_points = 0;
};

double fit_slope(const std::vector<ConvergencePoint>& points, double horizon, int* used = nullptr);

// Both d = 3 functionals (order3 then order1) against their exact values.
// Each N uses its own derived seed.
std::vector<ConvergenceReport> convergence_study(const MrcParams& params, SchemeKind scheme, double horizon,
                                                 const std::vector<int>& steps, std::int64_t n_paths,
                                                 std::uint64_t seed, const RunOptions& options = {});

struct TimingRow {
    SchemeKind scheme;
    int dim;
    int steps;
    std::int64_t paths;
    double seconds;
};

struct TimingReport {
    std::vector<TimingRow> rows;
    std::vector<std::string> warnings;
};

TimingReport timing_bench(const MrcParams& params, const std::vector<SchemeKind>& schemes, const TimeGrid& grid,
                          std::int64_t n_paths, std::uint64_t seed = 1, const RunOptions& options = {});

// d<X_ij, X_kl>/dt at x.
double bracket_rate(const MrcParams& params, const Matrix& x, int i, int j, int k, int l);

struct QvRow {
    int i, j, k, l;
    double empirical;
    double theoretical;
    double std_error;
    bool flagged;  // deviation above 4 standard errors
};

// cov(D_ij, D_kl) / h over one-step Euler increments from params.x, for all
// pairs i<j, k<l with (i,j) <= (k,l).
std::vector<QvRow> qv_test(const MrcParams& params, double h, std::int64_t n_draws, std::uint64_t seed,
                           const RunOptions& options = {});

struct SubmatrixRow {
    std::string monomial;  // in the sub-block's own indexing
    McEstimate estimate;
    double exact;
    bool pass;             // within 3 ci
};

// Simulates the full process and compares every sub-block monomial of degree
// 1 and 2 with the oracle on the restricted parameters.
std::vector<SubmatrixRow> submatrix_consistency_test(const MrcParams& params, const std::vector<int>& subset,
                                                     SchemeKind scheme, const TimeGrid& grid, std::int64_t n_paths,
                                                     std::uint64_t seed, const RunOptions& options = {});

MrcParams restrict_params(const MrcParams& params, const std::vector<int>& subset);

}  // namespace mrc
