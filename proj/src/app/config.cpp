#include <fstream>
#include <iterator>

#include <json.hpp>

#include "mrc/app.hpp"

namespace mrc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::ParseError, "config: " + what); }

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix matrix_from(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) bad(std::string(name) + " must be a nonempty array of rows");
    const int n = static_cast<int>(j.size());
    Matrix m(n, n);
    for (int r = 0; r < n; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != n) bad(std::string(name) + " must be square");
        for (int c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Vector vector_from(const json& j, const char* name) {
    if (!j.is_array()) bad(std::string(name) + " must be an array");
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const char* corr_kind_name(CorrModelKind k) {
    switch (k) {
    case CorrModelKind::Constant: return "constant";
    case CorrModelKind::Local: return "local";
    case CorrModelKind::Slc: return "slc";
    case CorrModelKind::Mrc: return "mrc";
    }
    return "constant";
}

CorrModelKind corr_kind_from(const std::string& s) {
    if (s == "constant") return CorrModelKind::Constant;
    if (s == "local") return CorrModelKind::Local;
    if (s == "slc") return CorrModelKind::Slc;
    if (s == "mrc") return CorrModelKind::Mrc;
    bad("unknown correlation kind '" + s + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json(const RunConfig& c) {
    json j;
    j["model"] = c.model == ModelKind::Mrc ? "mrc" : "basket";
    j["mrc"] = {{"x", matrix_json(c.mrc.x.dense())},
                {"kappa", vector_json(c.mrc.kappa)},
                {"c", matrix_json(c.mrc.c.dense())},
                {"a", vector_json(c.mrc.a)}};
    const BasketSpec& b = c.basket;
    json vols = json::array();
    for (const auto& v : b.vols) vols.push_back({{"sigma", v.sigma}, {"beta", v.beta}, {"ref", v.ref}});
    j["basket"] = {{"spots", b.spots},
                   {"rate", b.rate},
                   {"weights", b.weights},
                   {"weights_file", b.weights_file},
                   {"vols", vols},
                   {"corr",
                    {{"kind", corr_kind_name(b.corr.kind)},
                     {"rho", b.corr.rho},
                     {"eta", b.corr.eta},
                     {"gamma", b.corr.gamma},
                     {"rho_min", b.corr.rho_min},
                     {"kappa", b.corr.kappa},
                     {"eps", b.corr.eps}}}};
    j["scheme"] = scheme_name(c.scheme);
    json schemes = json::array();
    for (auto s : c.schemes) schemes.push_back(scheme_name(s));
    j["schemes"] = schemes;
    j["horizon"] = c.horizon;
    j["steps"] = c.steps;
    j["steps_list"] = c.steps_list;
    j["n_paths"] = c.n_paths;
    j["seed"] = c.seed;
    j["monomials"] = c.monomials;
    j["times"] = c.times;
    j["strikes"] = c.strikes;
    j["pair"] = {c.pair_i, c.pair_j};
    return j;
}

RunConfig from_json(const json& j) {
    if (!j.is_object()) bad("top level must be an object");
    RunConfig c;
    if (j.contains("model")) {
        const auto m = j.at("model").get<std::string>();
        if (m == "mrc")
            c.model = ModelKind::Mrc;
        else if (m == "basket")
            c.model = ModelKind::Basket;
        else
            bad("unknown model '" + m + "'");
    }
    if (j.contains("mrc")) {
        const json& m = j.at("mrc");
        const Matrix x = matrix_from(m.at("x"), "mrc.x");
        const int d = static_cast<int>(x.rows());
        const Matrix cc = m.contains("c") ? matrix_from(m.at("c"), "mrc.c") : Matrix::Identity(d, d);
        c.mrc = make_params(validate_correlation(SymMatrix::from_dense(x)), vector_from(m.at("kappa"), "mrc.kappa"),
                            validate_correlation(SymMatrix::from_dense(cc)), vector_from(m.at("a"), "mrc.a"));
    }
    if (j.contains("basket")) {
        const json& b = j.at("basket");
        BasketSpec& s = c.basket;
        read(b, "spots", s.spots);
        read(b, "rate", s.rate);
        read(b, "weights", s.weights);
        read(b, "weights_file", s.weights_file);
        if (b.contains("vols")) {
            s.vols.clear();
            for (const auto& v : b.at("vols")) {
                LocalVol lv;
                read(v, "sigma", lv.sigma);
                read(v, "beta", lv.beta);
                read(v, "ref", lv.ref);
                s.vols.push_back(lv);
            }
        }
        if (b.contains("corr")) {
            const json& k = b.at("corr");
            if (k.contains("kind")) s.corr.kind = corr_kind_from(k.at("kind").get<std::string>());
            read(k, "rho", s.corr.rho);
            read(k, "eta", s.corr.eta);
            read(k, "gamma", s.corr.gamma);
            read(k, "rho_min", s.corr.rho_min);
            read(k, "kappa", s.corr.kappa);
            read(k, "eps", s.corr.eps);
        }
    }
    if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    read(j, "horizon", c.horizon);
    read(j, "steps", c.steps);
    read(j, "steps_list", c.steps_list);
    read(j, "n_paths", c.n_paths);
    read(j, "seed", c.seed);
    read(j, "monomials", c.monomials);
    read(j, "times", c.times);
    read(j, "strikes", c.strikes);
    if (j.contains("pair")) {
        const auto p = j.at("pair").get<std::vector<int>>();
        if (p.size() != 2) bad("pair must have two entries");
        c.pair_i = p[0];
        c.pair_j = p[1];
    }
    if (c.n_paths < 1) bad("n_paths must be positive");
    return c;
}

}  // namespace

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2); }

RunConfig config_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.is_object() && j.contains("config")) return from_json(j.at("config"));
        return from_json(j);
    } catch (const json::exception& e) {
        bad(e.what());
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read config '" + path + "'");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return config_from_json(text);
}

std::string manifest_json(const std::string& command, const RunConfig& config,
                          const std::vector<std::string>& warnings) {
    json m;
    m["command"] = command;
    m["version"] = MRC_VERSION;
    m["seed"] = config.seed;
    m["config"] = to_json(config);
    m["warnings"] = warnings;
    return m.dump(2) + "\n";
}

BasketModel resolve_basket(const RunConfig& config) {
    const BasketSpec& s = config.basket;
    BasketModel m;
    Vector w;
    if (!s.weights_file.empty()) {
        w = load_weights(s.weights_file).fractions();
    } else if (!s.weights.empty()) {
        w = Eigen::Map<const Vector>(s.weights.data(), static_cast<Eigen::Index>(s.weights.size()));
    } else {
        w = Vector::Constant(static_cast<Eigen::Index>(s.spots.size()), 1.0 / static_cast<double>(s.spots.size()));
    }
    const int d = static_cast<int>(w.size());
    if (d == 0) throw Error(Errc::InvalidArgument, "basket needs at least one asset");
    auto broadcast = [d](std::size_t n, const char* what) {
        if (n != 1 && static_cast<int>(n) != d)
            throw Error(Errc::WrongDimension, std::string("basket ") + what + " must have 1 or d entries");
    };
    broadcast(s.spots.size(), "spots");
    broadcast(s.vols.size(), "vols");
    m.spots.resize(d);
    for (int i = 0; i < d; ++i) m.spots(i) = s.spots[s.spots.size() == 1 ? 0 : i];
    m.vols.resize(d);
    for (int i = 0; i < d; ++i) m.vols[i] = s.vols[s.vols.size() == 1 ? 0 : i];
    m.weights = w;
    m.rate = s.rate;
    m.corr = s.corr;
    m.corr.mrc = config.mrc;
    validate_model(m);
    return m;
}

}  // namespace mrc
