#pragma once

// Basket of local-volatility stocks whose correlation is constant, a function
// of the index level, or a stochastic MRC process; index options, implied
// volatility and correlation swaps.

#include <cstdint>
#include <string>
#include <vector>

#include "mrc/corematrix.hpp"
#include "mrc/mcengine.hpp"

namespace mrc {

// max(1 / (1 + eta (I/I0)^gamma), rho_min)
double local_rho(double t, double index, double index0, double eta, double gamma, double rho_min);

// sqrt(2 kappa eps (1 - rho) / (d - 1)): keeps 2 kappa (1 - rho) >= (d - 1) a^2.
double slc_vol_a(double kappa, double eps, double rho, int d);

// sigma(t, s) = sigma (s / ref)^(beta - 1); beta = 1 is flat.
struct LocalVol {
    double sigma = 0.2;
    double beta = 1.0;
    double ref = 1.0;

    double operator()(double s) const;
};

enum class CorrModelKind { Constant, Local, Slc, Mrc };

struct CorrModel {
    CorrModelKind kind = CorrModelKind::Constant;
    double rho = 0.0;        // Constant
    double eta = 0.0;        // Local, Slc
    double gamma = 0.0;
    double rho_min = 0.0;
    double kappa = 1.0;      // Slc
    double eps = 0.0;
    MrcParams mrc;           // Mrc: fixed coefficients, mrc.x is the start
};

struct BasketModel {
    Vector spots;
    double rate = 0.0;
    Vector weights;  // nonnegative, sum 1
    std::vector<LocalVol> vols;
    CorrModel corr;

    int dim() const { return static_cast<int>(spots.size()); }
    double index0() const { return weights.dot(spots); }
};

// Checks sizes, weights and the correlation parameters.
void validate_model(const BasketModel& model);

// sqrt((1 - rho) I + rho J) = sqrt(1 - rho) I + (sqrt(1 - rho + d rho) - sqrt(1 - rho)) / d J.
void equicorrelation_sqrt(int d, double rho, Matrix& out);

// One basket path per call; owns its workspaces. Within each interval the
// correlation steps first (coefficients frozen at the left node), then the
// stocks take a log-Euler step driven by the updated correlation. The
// correlation noise is independent of the stock noise, so this stays a
// consistent scheme and it tracks the local model without a one-step lag.
class BasketPathSimulator {
public:
    BasketPathSimulator(const BasketModel& model, const TimeGrid& grid);
    // I_T for the given path of the (seed, lane) streams.
    double run(std::int64_t path, std::uint64_t seed);
    const Matrix& correlation() const { return c_; }
    const Vector& spots() const { return s_; }

private:
    void set_local_target(double t, double index);
    void step_slc(double t, double index, RngStream& rng);

    BasketModel model_;
    TimeGrid grid_;
    bool strict_ = true;
    Vector s_;
    Vector g_;
    Vector z_;
    Matrix c_;
    Matrix root_;
    Spectral spectral_;
    RowReducer reducer_;
    std::vector<SecondOrderStepper> mrc_stepper_;  // Mrc mode only
};

// Discounted e^{-rT} E[(I_T - K)^+] for each strike, one simulation.
std::vector<McEstimate> index_call_prices(const BasketModel& model, const std::vector<double>& strikes,
                                          const TimeGrid& grid, std::int64_t n_paths, std::uint64_t seed,
                                          const RunOptions& options = {});
McEstimate index_call_price(const BasketModel& model, double strike, const TimeGrid& grid, std::int64_t n_paths,
                            std::uint64_t seed, const RunOptions& options = {});

double black_scholes_call(double spot, double strike, double rate, double t, double sigma);
// Newton from the Brenner-Subrahmanyam guess, bisection on [1e-6, 5] as a
// fallback. Throws PriceOutOfBounds outside (intrinsic, spot).
double implied_vol(double price, double spot, double strike, double rate, double t);

double corr_swap_price_closed(const MrcParams& params, int i, int j, double t);
// Trapezoidal time average of the simulated (C_t)_ij on the grid nodes.
McEstimate corr_swap_price_mc(const MrcParams& params, int i, int j, const TimeGrid& grid, std::int64_t n_paths,
                              std::uint64_t seed, const RunOptions& options = {});

struct MarketWeights {
    std::vector<std::string> names;
    std::vector<double> percent;

    double total() const;
    Vector fractions() const;
};

// CSV "name,weight_percent" with an optional header line.
MarketWeights load_weights(const std::string& path);

}  // namespace mrc
