#pragma once

// Batch front end: JSON run configurations, subcommands producing CSV, and run
// manifests that reproduce a run byte for byte.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mrc/finance.hpp"
#include "mrc/mcengine.hpp"

namespace mrc {

enum class ModelKind { Mrc, Basket };

// Basket as written in a config: weights may come from a "name,weight_percent"
// file, and a single spot or vol entry is broadcast to every asset.
struct BasketSpec {
    std::vector<double> spots{100.0};
    double rate = 0.0;
    std::vector<double> weights;
    std::string weights_file;
    std::vector<LocalVol> vols{LocalVol{}};
    CorrModel corr;  // corr.mrc is ignored; Mrc mode uses RunConfig::mrc
};

struct RunConfig {
    ModelKind model = ModelKind::Mrc;
    MrcParams mrc = uniform_params(3, 0.7, 1.25, 0.0, 1.0);
    BasketSpec basket;
    SchemeKind scheme = SchemeKind::SecondOrderDirect;
    std::vector<SchemeKind> schemes{SchemeKind::SecondOrderDirect, SchemeKind::EulerCorrected};
    double horizon = 1.0;
    int steps = 10;
    std::vector<int> steps_list{4, 8, 16, 32};
    std::int64_t n_paths = 100000;
    std::uint64_t seed = 1;
    std::vector<std::string> monomials{"x1_2"};  // 1-based, as MonomialIndex text
    std::vector<double> times{0.0, 1.0};
    std::vector<double> strikes{0.0, 90.0, 100.0, 110.0};
    int pair_i = 1;  // 1-based correlation-swap pair
    int pair_j = 2;
};

std::string config_to_json(const RunConfig& config);
// Accepts a bare config or a manifest (whose "config" member is used).
// Malformed input raises ParseError.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

BasketModel resolve_basket(const RunConfig& config);

struct CommandResult {
    std::string csv;
    std::vector<std::string> warnings;
    bool ok = true;  // selftest verdict
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"moments",     "simulate",  "converge", "bench",
                                                "price-index", "corr-swap", "selftest"};
    return names;
}

// Runs one subcommand in memory. `workers` caps parallelism only.
CommandResult run_command(const std::string& command, const RunConfig& config, int workers = 0);

std::string manifest_json(const std::string& command, const RunConfig& config,
                          const std::vector<std::string>& warnings);

// 0 success, 2 usage, 3 numerical domain, 4 I/O.
int exit_code(const Error& e);

struct CliRequest {
    std::string command;
    std::string config_path;  // empty: built-in defaults
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int workers = 0;
};

// Loads the config, runs the command, writes <out>/<command>.csv and
// <out>/<command>.manifest.json. Errors are reported on `err`; returns the exit code.
int run_cli(const CliRequest& request, std::ostream& err);

std::string format_double(double v);

}  // namespace mrc
