#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mrc/app.hpp"
#include "mrc/flows.hpp"
#include "mrc/momentoracle.hpp"

namespace mrc {

namespace {

// Collects warnings emitted through the library sink during one command.
std::vector<std::string>* g_warnings = nullptr;
void collect_warning(std::string_view msg) {
    if (g_warnings) g_warnings->emplace_back(msg);
}

struct WarningScope {
    explicit WarningScope(std::vector<std::string>& out) {
        g_warnings = &out;
        set_warning_sink(collect_warning);
    }
    ~WarningScope() {
        set_warning_sink(nullptr);
        g_warnings = nullptr;
    }
};

std::string fmt(double v) { return format_double(v); }

std::string join(std::initializer_list<std::string> fields) {
    std::string s;
    for (const auto& f : fields) {
        if (!s.empty()) s += ',';
        s += f;
    }
    return s + "\n";
}

std::vector<MonomialIndex> parse_monomials(const RunConfig& c) {
    std::vector<MonomialIndex> out;
    for (const auto& text : c.monomials) {
        try {
            out.push_back(MonomialIndex::parse(c.mrc.dim(), text));
        } catch (const Error& e) {
            throw Error(Errc::InvalidArgument, std::string("bad monomial: ") + e.what());
        }
    }
    if (out.empty()) throw Error(Errc::InvalidArgument, "no monomials given");
    return out;
}

void require_model(const RunConfig& c, ModelKind kind, const char* command) {
    if (c.model != kind)
        throw Error(Errc::InvalidArgument,
                    std::string(command) + " needs model \"" + (kind == ModelKind::Mrc ? "mrc" : "basket") + "\"");
}

CommandResult cmd_moments(const RunConfig& c) {
    require_model(c, ModelKind::Mrc, "moments");
    const auto ms = parse_monomials(c);
    MomentTable table(c.mrc);
    CommandResult r;
    r.csv = "monomial,t,value\n";
    for (const auto& m : ms)
        for (double t : c.times) r.csv += join({m.to_string(), fmt(t), fmt(table.value(m, t))});
    return r;
}

CommandResult cmd_simulate(const RunConfig& c, const RunOptions& opt) {
    require_model(c, ModelKind::Mrc, "simulate");
    const auto ms = parse_monomials(c);
    std::vector<Observable> obs;
    for (const auto& m : ms) obs.push_back(monomial_observable(m));
    const auto res = simulate_paths(c.mrc, c.scheme, make_grid(c.horizon, c.steps), c.n_paths, c.seed, obs, opt);
    MomentTable table(c.mrc);
    CommandResult r;
    r.warnings = res.warnings;
    r.csv = "observable,scheme,steps,mean,std_error,ci95,n_paths,exact\n";
    for (std::size_t k = 0; k < ms.size(); ++k) {
        const auto& e = res.estimates[k];
        r.csv += join({ms[k].to_string(), std::string(scheme_name(c.scheme)), std::to_string(c.steps), fmt(e.mean),
                       fmt(e.std_error), fmt(e.ci_half_width_95), std::to_string(e.n_paths),
                       fmt(table.value(ms[k], c.horizon))});
    }
    return r;
}

CommandResult cmd_converge(const RunConfig& c, const RunOptions& opt) {
    require_model(c, ModelKind::Mrc, "converge");
    CommandResult r;
    r.csv = "kind,scheme,functional,steps,h,estimate,exact,abs_error,ci95\n";
    for (auto scheme : c.schemes) {
        const auto reps = convergence_study(c.mrc, scheme, c.horizon, c.steps_list, c.n_paths, c.seed, opt);
        const std::string name(scheme_name(scheme));
        for (const auto& rep : reps) {
            for (const auto& p : rep.points)
                r.csv += join({"point", name, rep.functional, std::to_string(p.steps), fmt(c.horizon / p.steps),
                               fmt(p.estimate.mean), fmt(p.exact), fmt(p.abs_error),
                               fmt(p.estimate.ci_half_width_95)});
            if (rep.points.size() >= 2)
                r.csv += join({"slope", name, rep.functional, std::to_string(rep.fitted_points), "", fmt(rep.slope),
                               "", "", ""});
        }
    }
    return r;
}

CommandResult cmd_bench(const RunConfig& c, const RunOptions& opt) {
    require_model(c, ModelKind::Mrc, "bench");
    if (c.schemes.empty()) throw Error(Errc::InvalidArgument, "bench needs at least one scheme");
    const auto rep = timing_bench(c.mrc, c.schemes, make_grid(c.horizon, c.steps), c.n_paths, c.seed, opt);
    CommandResult r;
    r.warnings = rep.warnings;
    r.csv = "scheme,dim,steps,paths,seconds\n";
    for (const auto& row : rep.rows)
        r.csv += join({std::string(scheme_name(row.scheme)), std::to_string(row.dim), std::to_string(row.steps),
                       std::to_string(row.paths), fmt(row.seconds)});
    return r;
}

CommandResult cmd_price(const RunConfig& c, const RunOptions& opt) {
    require_model(c, ModelKind::Basket, "price-index");
    const BasketModel m = resolve_basket(c);
    std::vector<double> strikes{0.0};
    for (double k : c.strikes)
        if (k != 0.0) strikes.push_back(k);
    const auto est = index_call_prices(m, strikes, make_grid(c.horizon, c.steps), c.n_paths, c.seed, opt);
    const double i0 = m.index0();
    CommandResult r;
    r.csv = "kind,strike,price,std_error,ci95,implied_vol,index0\n";
    for (std::size_t k = 0; k < strikes.size(); ++k) {
        std::string iv;
        if (k > 0) {
            try {
                iv = fmt(implied_vol(est[k].mean, i0, strikes[k], m.rate, c.horizon));
            } catch (const Error& e) {
                if (e.code() != Errc::PriceOutOfBounds) throw;
                iv = "nan";
            }
        }
        r.csv += join({k == 0 ? "forward" : "call", fmt(strikes[k]), fmt(est[k].mean), fmt(est[k].std_error),
                       fmt(est[k].ci_half_width_95), iv, fmt(i0)});
    }
    return r;
}

CommandResult cmd_corr_swap(const RunConfig& c, const RunOptions& opt) {
    require_model(c, ModelKind::Mrc, "corr-swap");
    const int d = c.mrc.dim();
    const int i = c.pair_i - 1, j = c.pair_j - 1;
    if (i < 0 || j < 0 || i >= d || j >= d || i == j)
        throw Error(Errc::InvalidArgument, "pair must name two distinct assets in 1..d");
    CommandResult r;
    if (!classify_assumptions(c.mrc).weak) r.warnings.emplace_back("weak existence condition violated");
    const double closed = corr_swap_price_closed(c.mrc, i, j, c.horizon);
    const auto mc = corr_swap_price_mc(c.mrc, i, j, make_grid(c.horizon, c.steps), c.n_paths, c.seed, opt);
    const std::string si = std::to_string(c.pair_i), sj = std::to_string(c.pair_j), t = fmt(c.horizon);
    r.csv = "method,i,j,T,price,std_error,ci95\n";
    r.csv += join({"closed", si, sj, t, fmt(closed), "0", "0"});
    r.csv += join({"mc", si, sj, t, fmt(mc.mean), fmt(mc.std_error), fmt(mc.ci_half_width_95)});
    return r;
}

// Quick end-to-end checks of the installed build.
CommandResult cmd_selftest(const RunOptions& opt) {
    CommandResult r;
    r.csv = "check,value,expected,tolerance,status\n";
    auto row = [&](const std::string& name, double value, double expected, double tol) {
        const bool pass = std::abs(value - expected) <= tol;
        r.ok = r.ok && pass;
        r.csv += join({name, fmt(value), fmt(expected), fmt(tol), pass ? "PASS" : "FAIL"});
    };
    const MrcParams p = uniform_params(3, 0.7, 1.25, 0.0, 1.0);
    const MonomialIndex x12 = MonomialIndex::pair(3, 0, 1);
    row("oracle_mean_x12", MomentTable(p).value(x12, 1.0), 0.7 * std::exp(-2.5), 1e-12);
    row("implied_vol_round_trip", implied_vol(black_scholes_call(100, 100, 0, 1, 0.2), 100, 100, 0, 1), 0.2, 1e-8);
    row("corr_swap_closed", corr_swap_price_closed(p, 0, 1, 1.0), 0.7 * -std::expm1(-2.5) / 2.5, 1e-14);
    const auto e = simulate_paths(p, SchemeKind::SecondOrderDirect, make_grid(1.0, 16), 20000, 1,
                                  std::vector<Observable>{monomial_observable(x12)}, opt);
    row("second_order_mean_x12", e.estimates[0].mean, 0.7 * std::exp(-2.5), 4 * e.estimates[0].ci_half_width_95);
    row("spot_check_failures", static_cast<double>(e.spot_check_failures), 0.0, 0.0);
    return r;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CommandResult run_command(const std::string& command, const RunConfig& config, int workers) {
    const RunOptions opt{workers};
    std::vector<std::string> emitted;
    CommandResult r;
    {
        WarningScope scope(emitted);
        if (command == "moments")
            r = cmd_moments(config);
        else if (command == "simulate")
            r = cmd_simulate(config, opt);
        else if (command == "converge")
            r = cmd_converge(config, opt);
        else if (command == "bench")
            r = cmd_bench(config, opt);
        else if (command == "price-index")
            r = cmd_price(config, opt);
        else if (command == "corr-swap")
            r = cmd_corr_swap(config, opt);
        else if (command == "selftest")
            r = cmd_selftest(opt);
        else
            throw Error(Errc::InvalidArgument, "unknown command '" + command + "'");
    }
    for (auto& w : emitted)
        if (std::find(r.warnings.begin(), r.warnings.end(), w) == r.warnings.end()) r.warnings.push_back(w);
    return r;
}

int exit_code(const Error& e) {
    switch (e.code()) {
    case Errc::ParseError:
    case Errc::InvalidArgument:
    case Errc::WrongDimension:
    case Errc::DegreeLimitExceeded: return 2;
    case Errc::IoError: return 4;
    default: return 3;
    }
}

int run_cli(const CliRequest& req, std::ostream& err) {
    try {
        RunConfig config = req.config_path.empty() ? RunConfig{} : load_config(req.config_path);
        if (req.seed) config.seed = *req.seed;
        const CommandResult r = run_command(req.command, config, req.workers);
        for (const auto& w : r.warnings) err << "warning: " << w << "\n";

        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(req.out_dir, ec);
        const fs::path base = fs::path(req.out_dir) / req.command;
        auto write = [&](const fs::path& path, const std::string& text) {
            std::ofstream out(path, std::ios::binary);
            out << text;
            if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
        };
        write(base.string() + ".csv", r.csv);
        write(base.string() + ".manifest.json", manifest_json(req.command, config, r.warnings));
        if (!r.ok) {
            err << req.command << ": checks failed\n";
            return 3;
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace mrc
