#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mrc/finance.hpp"

using namespace mrc;

namespace {

BasketModel constant_basket(std::vector<double> spots, std::vector<double> weights, double rho, double sigma) {
    BasketModel m;
    const int d = static_cast<int>(spots.size());
    m.spots = Eigen::Map<Vector>(spots.data(), d);
    m.weights = Eigen::Map<Vector>(weights.data(), d);
    m.vols.assign(d, LocalVol{sigma, 1.0, 1.0});
    m.corr.kind = CorrModelKind::Constant;
    m.corr.rho = rho;
    return m;
}

BasketModel local_basket(int d, CorrModelKind kind) {
    std::vector<double> spots(d), weights(d, 1.0 / d);
    for (int i = 0; i < d; ++i) spots[i] = 80.0 + 10.0 * i;
    auto m = constant_basket(spots, weights, 0.0, 0.25);
    m.corr.kind = kind;
    m.corr.eta = 0.500714;
    m.corr.gamma = 8.672568;
    m.corr.rho_min = 0.1;
    m.corr.kappa = 100.0;
    m.corr.eps = 0.0;
    return m;
}

MrcParams table1_params(int d) {
    return make_params(CorrelationMatrix::equicorrelation(d, 0.7), Vector::Constant(d, 1.25),
                       CorrelationMatrix::identity(d), Vector::Ones(d));
}

std::string temp_file(const std::string& name, const std::string& body) {
    const std::string path = "/tmp/mrc_test_" + name;
    std::ofstream(path) << body;
    return path;
}

}  // namespace

TEST_CASE("local correlation") {
    CHECK(local_rho(0, 1.0, 1.0, 0.500714, 8.672568, 0.1) == doctest::Approx(0.666349).epsilon(1e-6));
    CHECK(local_rho(0, 1e6, 1.0, 0.500714, 8.672568, 0.1) == 0.1);
    CHECK(local_rho(0, 3.0, 2.0, 0.0, 8.0, 0.1) == 1.0);
    CHECK(local_rho(0, 0.5, 1.0, 1.0, 2.0, 0.0) == doctest::Approx(1.0 / 1.25).epsilon(1e-15));
    CHECK_THROWS_AS(local_rho(0, 0.0, 1.0, 1.0, 1.0, 0.1), Error);
    try {
        local_rho(0, -1.0, 1.0, 1.0, 1.0, 0.1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonpositiveIndex);
    }
}

TEST_CASE("SLC volatility") {
    CHECK(slc_vol_a(100, 0.5, 0.68, 30) == doctest::Approx(std::sqrt(32.0 / 29.0)).epsilon(1e-14));
    CHECK(slc_vol_a(100, 0.5, 0.68, 30) == doctest::Approx(1.05045).epsilon(1e-5));
    CHECK(slc_vol_a(100, 0.0, 0.3, 5) == 0.0);
    CHECK(slc_vol_a(1, 1.0, 1.0, 5) == 0.0);
    for (double rho : {0.1, 0.5, 0.9}) {
        const double a = slc_vol_a(3.0, 1.0, rho, 10);
        CHECK(9 * a * a <= 2 * 3.0 * (1 - rho) * (1 + 1e-14));
    }
    CHECK_THROWS_AS(slc_vol_a(1, 1.5, 0.5, 3), Error);
    CHECK_THROWS_AS(slc_vol_a(0, 0.5, 0.5, 3), Error);
}

TEST_CASE("equicorrelation square root") {
    for (int d : {1, 2, 5, 30})
        for (double rho : {-0.2, 0.0, 0.4, 1.0}) {
            if (d > 1 && rho < -1.0 / (d - 1)) continue;
            Matrix r;
            equicorrelation_sqrt(d, rho, r);
            Matrix c = Matrix::Constant(d, d, rho);
            c.diagonal().setOnes();
            CHECK((r * r - c).cwiseAbs().maxCoeff() < 1e-14);
            CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("model validation") {
    auto m = constant_basket({100, 100}, {0.5, 0.5}, 0.3, 0.2);
    CHECK_NOTHROW(validate_model(m));
    auto bad = m;
    bad.weights(0) = 0.6;
    CHECK_THROWS_AS(validate_model(bad), Error);
    bad = constant_basket({100, 100, 100}, {0.2, 0.3, 0.5}, -0.6, 0.2);
    CHECK_THROWS_AS(validate_model(bad), Error);
    bad = local_basket(3, CorrModelKind::Slc);
    bad.corr.eps = 1.2;
    CHECK_THROWS_AS(validate_model(bad), Error);
    bad.corr.eps = 0.5;
    bad.corr.kappa = 0.0;
    CHECK_THROWS_AS(validate_model(bad), Error);
    bad = m;
    bad.corr.kind = CorrModelKind::Mrc;
    bad.corr.mrc = table1_params(3);
    CHECK_THROWS_AS(validate_model(bad), Error);
}

TEST_CASE("one asset is plain Black-Scholes") {
    auto m = constant_basket({100}, {1.0}, 0.0, 0.2);
    auto e = index_call_price(m, 100.0, make_grid(1.0, 10), 200000, 11);
    INFO(e.mean << " +- " << e.ci_half_width_95);
    CHECK(std::abs(e.mean - black_scholes_call(100, 100, 0, 1, 0.2)) < 3 * e.ci_half_width_95);
    m.rate = 0.03;
    m.corr.kind = CorrModelKind::Local;  // inert for d = 1
    m.corr.eta = 0.3;
    auto f = index_call_price(m, 90.0, make_grid(1.0, 10), 200000, 12);
    CHECK(std::abs(f.mean - black_scholes_call(100, 90, 0.03, 1, 0.2)) < 3 * f.ci_half_width_95);
}

TEST_CASE("small-maturity index variance") {
    const double sigma = 0.2, rho = 0.3, t = 0.01;
    auto m = constant_basket({100, 50}, {0.4, 0.6}, rho, sigma);
    const double i0 = m.index0();
    const double a0 = 0.4 * 100 / i0, a1 = 0.6 * 50 / i0;
    const double expansion = i0 * i0 * sigma * sigma * t * (a0 * a0 + a1 * a1 + 2 * rho * a0 * a1);
    // Lognormal second moments are exact for the log-Euler stocks.
    const double s0 = 40, s1 = 30;
    const double exact = s0 * s0 * std::expm1(sigma * sigma * t) + s1 * s1 * std::expm1(sigma * sigma * t) +
                         2 * s0 * s1 * std::expm1(rho * sigma * sigma * t);
    CHECK(std::abs(exact / expansion - 1) < 2 * sigma * sigma * t);

    BasketPathSimulator sim(m, make_grid(t, 1));
    MomentAccumulator acc;
    for (int p = 0; p < 200000; ++p) {
        const double dev = sim.run(p, 5) - i0;
        acc.add(dev * dev);
    }
    auto e = acc.estimate();
    INFO(e.mean << " vs " << exact << " ci " << e.ci_half_width_95);
    CHECK(std::abs(e.mean - exact) < 3 * e.ci_half_width_95);
}

TEST_CASE("forward identity and strike monotonicity") {
    for (auto kind : {CorrModelKind::Constant, CorrModelKind::Local, CorrModelKind::Slc, CorrModelKind::Mrc}) {
        auto m = local_basket(3, kind);
        m.rate = 0.02;
        m.corr.rho = 0.4;
        m.corr.eps = 0.5;
        m.corr.mrc = table1_params(3);
        const std::vector<double> strikes{0, 70, 80, 90, 100, 110, 120};
        auto est = index_call_prices(m, strikes, make_grid(1.0, 40), 20000, 21);
        INFO("kind " << static_cast<int>(kind) << " forward " << est[0].mean << " +- " << est[0].ci_half_width_95);
        CHECK(std::abs(est[0].mean - m.index0()) < 3 * est[0].ci_half_width_95);
        for (std::size_t k = 1; k < strikes.size(); ++k) CHECK(est[k].mean <= est[k - 1].mean);
    }
}

TEST_CASE("perfectly correlated identical assets collapse to one") {
    auto two = constant_basket({100, 100}, {0.5, 0.5}, 1.0, 0.2);
    auto one = constant_basket({100}, {1.0}, 0.0, 0.2);
    auto g = make_grid(1.0, 10);
    BasketPathSimulator sim(two, g);
    sim.run(0, 1);
    CHECK(sim.spots()(0) == doctest::Approx(sim.spots()(1)).epsilon(1e-14));
    auto a = index_call_price(two, 100, g, 100000, 31);
    auto b = index_call_price(one, 100, g, 100000, 32);
    INFO(a.mean << " " << b.mean);
    CHECK(std::abs(a.mean - b.mean) < 3 * std::hypot(a.std_error, b.std_error) * 1.96);
}

TEST_CASE("SLC with zero epsilon reproduces local correlation") {
    auto loc = local_basket(5, CorrModelKind::Local);
    auto slc = local_basket(5, CorrModelKind::Slc);
    const std::vector<double> strikes{80, 90, 100, 110};
    auto g = make_grid(1.0, 40);
    auto pl = index_call_prices(loc, strikes, g, 20000, 41);
    auto ps = index_call_prices(slc, strikes, g, 20000, 41);
    for (std::size_t k = 0; k < strikes.size(); ++k) {
        INFO("K " << strikes[k] << " local " << pl[k].mean << " slc " << ps[k].mean << " ci "
                  << pl[k].ci_half_width_95);
        CHECK(std::abs(pl[k].mean - ps[k].mean) < pl[k].ci_half_width_95);
    }
}

TEST_CASE("SLC substeps keep the correlation valid") {
    auto m = local_basket(6, CorrModelKind::Slc);
    m.corr.eps = 1.0;
    m.corr.kappa = 20.0;
    BasketPathSimulator sim(m, make_grid(1.0, 10));
    for (int p = 0; p < 200; ++p) {
        sim.run(p, 3);
        CHECK_NOTHROW(validate_correlation(SymMatrix::from_dense(sim.correlation()), 1e-9));
    }
    CHECK(sim.run(7, 3) == sim.run(7, 3));
}

TEST_CASE("Black-Scholes and implied volatility") {
    CHECK(black_scholes_call(100, 100, 0, 1, 0.2) == doctest::Approx(7.96557).epsilon(1e-6));
    CHECK(implied_vol(black_scholes_call(100, 100, 0, 1, 0.2), 100, 100, 0, 1) == doctest::Approx(0.2).epsilon(1e-8));
    double worst = 0;
    for (double k : {60.0, 100.0, 150.0})
        for (int s = 1; s <= 20; ++s) {
            const double sigma = 0.05 * s;
            const double price = black_scholes_call(100, k, 0.01, 2.0, sigma);
            if (price - std::max(100 - k * std::exp(-0.02), 0.0) < 1e-9) continue;  // no vega left
            worst = std::max(worst, std::abs(implied_vol(price, 100, k, 0.01, 2.0) - sigma));
        }
    CHECK(worst < 1e-8);
    CHECK_THROWS_AS(implied_vol(0.0, 100, 100, 0, 1), Error);
    CHECK_THROWS_AS(implied_vol(100.0, 100, 100, 0, 1), Error);
    try {
        implied_vol(20.0, 100, 80, 0, 1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PriceOutOfBounds);
    }
}

TEST_CASE("correlation swap") {
    auto p = table1_params(3);
    auto q = make_params(CorrelationMatrix::identity(3), p.kappa, CorrelationMatrix::identity(3), p.a);
    CHECK(corr_swap_price_closed(q, 0, 1, 1.0) == 0.0);
    auto s = make_params(p.x, p.kappa, CorrelationMatrix::identity(3), p.a);
    CHECK(corr_swap_price_closed(s, 0, 1, 1.0) == doctest::Approx(0.7 * -std::expm1(-2.5) / 2.5).epsilon(1e-15));
    CHECK(corr_swap_price_closed(s, 0, 1, 1.0) == doctest::Approx(0.257016).epsilon(1e-6));
    CHECK(corr_swap_price_closed(s, 0, 1, 1e-9) == doctest::Approx(0.7).epsilon(1e-8));
    auto same = make_params(p.x, p.kappa, p.x, p.a);
    for (double t : {0.1, 1.0, 10.0}) CHECK(corr_swap_price_closed(same, 1, 2, t) == doctest::Approx(0.7).epsilon(1e-14));
    auto zero = make_params(p.x, Vector::Zero(3), p.c, Vector::Zero(3));
    CHECK_THROWS_AS(corr_swap_price_closed(zero, 0, 1, 1.0), Error);

    auto mc = corr_swap_price_mc(s, 0, 1, make_grid(1.0, 20), 40000, 8);
    const double closed = corr_swap_price_closed(s, 0, 1, 1.0);
    INFO(mc.mean << " vs " << closed << " ci " << mc.ci_half_width_95);
    CHECK(std::abs(mc.mean - closed) < 3 * mc.ci_half_width_95 + 1e-3);
}

TEST_CASE("market weights") {
    auto w = load_weights(MRC_SOURCE_DIR "/data/dax_weights.csv");
    CHECK(w.names.size() == 30);
    CHECK(w.names[0] == "SIEMENS");
    CHECK(w.percent[29] == 0.74);
    CHECK(std::abs(w.total() - 100.0) <= 0.5);
    CHECK(w.fractions().sum() == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(load_weights("/nonexistent/weights.csv"), Error);
    auto empty = temp_file("empty.csv", "name,weight_percent\n");
    CHECK_THROWS_AS(load_weights(empty), Error);
    auto off = temp_file("off.csv", "A,50\nB,40\n");
    try {
        load_weights(off);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::WeightSumError);
    }
    auto garbled = temp_file("garbled.csv", "name,weight_percent\nA,50\nB,fifty\n");
    try {
        load_weights(garbled);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
    }
    for (const auto& f : {empty, off, garbled}) std::remove(f.c_str());
}
