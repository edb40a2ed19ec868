#pragma once

// JSON configuration ingestion and emission. Complex numbers are [re, im]
// two-arrays (bare reals accepted on input); sampled coefficient functions
// are arrays on a uniform grid over [0, 1].

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "netsync/errors.hpp"
#include "netsync/netsim.hpp"

namespace netsync {

struct AnalysisConfig {
    double margin = 1e-6;
};

struct SimulationConfig {
    double horizon = 10.0;
    double dt = 1e-3;
    int sample_every = 1;
    std::uint64_t seed = 0;
};

struct Config {
    Subsystem system;
    int delay_grid = 100; ///< kernel grid for delay-system analysis
    CouplingMatrix coupling;
    AnalysisConfig analysis;
    SimulationConfig simulation;
};

namespace detail {

using nlohmann::json;

inline Complex parse_complex(const json& j, const std::string& what) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    throw config_error(what + ": expected a number or an [re, im] pair");
}

inline Matrix parse_complex_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw config_error(what + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw config_error(what + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = parse_complex(row[static_cast<size_t>(c)], what);
    }
    return m;
}

inline RealMatrix parse_real_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw config_error(what + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    RealMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw config_error(what + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<size_t>(c)];
            if (!v.is_number()) throw config_error(what + ": expected real entries");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

inline SampledFn parse_samples(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw config_error(what + ": expected a non-empty sample array");
    SampledFn f;
    f.samples = Vector(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i)
        f.samples(static_cast<Eigen::Index>(i)) = parse_complex(j[i], what);
    return f;
}

inline json dump_complex(Complex v) { return json::array({v.real(), v.imag()}); }

inline json dump_complex_matrix(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(dump_complex(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json dump_samples(const SampledFn& f) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < f.samples.size(); ++i) arr.push_back(dump_complex(f.samples(i)));
    return arr;
}

inline LtiSystem parse_lti(const json& j) {
    LtiSystem sys;
    if (!j.contains("a") || !j.contains("b") || !j.contains("c"))
        throw config_error("lti system: a, b, c are required");
    sys.a = parse_complex_matrix(j.at("a"), "system.a");
    sys.b = parse_complex_matrix(j.at("b"), "system.b");
    sys.c = parse_complex_matrix(j.at("c"), "system.c");
    sys.d = j.contains("d") ? parse_complex_matrix(j.at("d"), "system.d")
                            : Matrix(Matrix::Zero(sys.c.rows(), sys.b.cols()));
    sys.validate();
    return sys;
}

inline ParabolicSubsystem parse_parabolic(const json& j) {
    ParabolicSubsystem par;
    par.n_cells = j.value("n_cells", 100);
    par.spec.a = j.contains("a") ? parse_samples(j.at("a"), "system.a") : SampledFn::constant(1.0);
    par.spec.r0 =
        j.contains("r0") ? parse_samples(j.at("r0"), "system.r0") : SampledFn::constant(0.0);
    par.spec.r1 =
        j.contains("r1") ? parse_samples(j.at("r1"), "system.r1") : SampledFn::constant(0.0);
    par.spec.b = j.contains("b") ? parse_samples(j.at("b"), "system.b") : SampledFn::constant(1.0);

    if (!j.contains("boundary")) throw config_error("parabolic system: boundary is required");
    const auto& bc = j.at("boundary");
    const std::string kind = bc.value("type", "");
    if (kind == "dirichlet") {
        par.spec.boundary = DirichletBc{};
    } else if (kind == "neumann") {
        NeumannBc nb;
        if (bc.contains("kappa_left")) nb.kappa_left = parse_complex(bc.at("kappa_left"), "kappa_left");
        if (bc.contains("kappa_right"))
            nb.kappa_right = parse_complex(bc.at("kappa_right"), "kappa_right");
        par.spec.boundary = nb;
    } else if (kind == "neumann_input") {
        NeumannInputBc ni;
        if (bc.contains("kappa_left")) ni.kappa_left = parse_complex(bc.at("kappa_left"), "kappa_left");
        if (bc.contains("kappa_right"))
            ni.kappa_right = parse_complex(bc.at("kappa_right"), "kappa_right");
        if (bc.contains("m_left")) ni.m_left = parse_complex(bc.at("m_left"), "m_left");
        if (bc.contains("m_right")) ni.m_right = parse_complex(bc.at("m_right"), "m_right");
        par.spec.boundary = ni;
    } else {
        throw config_error("parabolic boundary type must be dirichlet, neumann or neumann_input");
    }
    par.spec.validate();
    return par;
}

inline DelaySpec parse_delay(const json& j) {
    DelaySpec spec;
    if (!j.contains("delays") || !j.contains("a_mats"))
        throw config_error("delay system: delays and a_mats are required");
    for (const auto& t : j.at("delays")) {
        if (!t.is_number()) throw config_error("system.delays: expected numbers");
        spec.delays.push_back(t.get<double>());
    }
    for (const auto& m : j.at("a_mats"))
        spec.a_mats.push_back(parse_complex_matrix(m, "system.a_mats"));
    if (j.contains("b_mats")) {
        for (const auto& m : j.at("b_mats"))
            spec.b_mats.push_back(parse_complex_matrix(m, "system.b_mats"));
    } else {
        const int d = spec.a_mats.empty() ? 0 : static_cast<int>(spec.a_mats[0].rows());
        spec.b_mats.assign(spec.a_mats.size(), Matrix::Zero(d, d));
    }
    spec.validate();
    return spec;
}

} // namespace detail

inline Config config_from_json(const nlohmann::json& j) {
    using detail::json;
    try {
        Config cfg;
        if (!j.contains("system") || !j.contains("coupling"))
            throw config_error("config: system and coupling are required");

        const auto& sys = j.at("system");
        const std::string type = sys.value("type", "");
        if (type == "lti") {
            cfg.system = detail::parse_lti(sys);
        } else if (type == "parabolic") {
            cfg.system = detail::parse_parabolic(sys);
        } else if (type == "delay") {
            cfg.system = detail::parse_delay(sys);
            cfg.delay_grid = sys.value("n", 100);
            if (cfg.delay_grid < 8) throw config_error("system.n: delay grid too coarse");
        } else {
            throw config_error("system.type must be lti, parabolic or delay");
        }

        const auto& coup = j.at("coupling");
        const bool has_weights = coup.contains("weights");
        const bool has_matrix = coup.contains("matrix");
        if (has_weights == has_matrix)
            throw config_error("coupling: exactly one of weights or matrix");
        if (has_weights)
            cfg.coupling =
                CouplingMatrix::diffusive(detail::parse_real_matrix(coup.at("weights"), "weights"));
        else
            cfg.coupling =
                CouplingMatrix::raw(detail::parse_complex_matrix(coup.at("matrix"), "matrix"));

        if (j.contains("analysis")) {
            cfg.analysis.margin = j.at("analysis").value("margin", 1e-6);
            if (!(cfg.analysis.margin > 0.0)) throw config_error("analysis.margin must be positive");
        }
        if (j.contains("simulation")) {
            const auto& sim = j.at("simulation");
            cfg.simulation.horizon = sim.value("horizon", 10.0);
            cfg.simulation.dt = sim.value("dt", 1e-3);
            cfg.simulation.sample_every = sim.value("sample_every", 1);
            cfg.simulation.seed = sim.value("seed", std::uint64_t{0});
            if (!(cfg.simulation.dt > 0.0) || !(cfg.simulation.horizon > 0.0) ||
                cfg.simulation.sample_every < 1)
                throw config_error("simulation: horizon and dt must be positive, sample_every >= 1");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    } catch (const dimension_error& e) {
        throw config_error(std::string("config: ") + e.what());
    } catch (const coefficient_error& e) {
        throw config_error(std::string("config: ") + e.what());
    } catch (const precondition_error& e) {
        throw config_error(std::string("config: ") + e.what());
    } catch (const numeric_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

inline nlohmann::json config_to_json(const Config& cfg) {
    using detail::json;
    json j;
    if (const auto* sys = std::get_if<LtiSystem>(&cfg.system)) {
        j["system"] = {{"type", "lti"},
                       {"a", detail::dump_complex_matrix(sys->a)},
                       {"b", detail::dump_complex_matrix(sys->b)},
                       {"c", detail::dump_complex_matrix(sys->c)},
                       {"d", detail::dump_complex_matrix(sys->d)}};
    } else if (const auto* par = std::get_if<ParabolicSubsystem>(&cfg.system)) {
        json bc;
        if (std::holds_alternative<DirichletBc>(par->spec.boundary)) {
            bc = {{"type", "dirichlet"}};
        } else if (const auto* nb = std::get_if<NeumannBc>(&par->spec.boundary)) {
            bc = {{"type", "neumann"},
                  {"kappa_left", detail::dump_complex(nb->kappa_left)},
                  {"kappa_right", detail::dump_complex(nb->kappa_right)}};
        } else {
            const auto& ni = std::get<NeumannInputBc>(par->spec.boundary);
            bc = {{"type", "neumann_input"},
                  {"kappa_left", detail::dump_complex(ni.kappa_left)},
                  {"kappa_right", detail::dump_complex(ni.kappa_right)},
                  {"m_left", detail::dump_complex(ni.m_left)},
                  {"m_right", detail::dump_complex(ni.m_right)}};
        }
        j["system"] = {{"type", "parabolic"}, {"n_cells", par->n_cells},
                       {"a", detail::dump_samples(par->spec.a)},
                       {"r0", detail::dump_samples(par->spec.r0)},
                       {"r1", detail::dump_samples(par->spec.r1)},
                       {"b", detail::dump_samples(par->spec.b)},
                       {"boundary", bc}};
    } else {
        const auto& spec = std::get<DelaySpec>(cfg.system);
        json a_mats = json::array(), b_mats = json::array();
        for (const auto& m : spec.a_mats) a_mats.push_back(detail::dump_complex_matrix(m));
        for (const auto& m : spec.b_mats) b_mats.push_back(detail::dump_complex_matrix(m));
        j["system"] = {{"type", "delay"}, {"delays", spec.delays},
                       {"a_mats", a_mats},  {"b_mats", b_mats},
                       {"n", cfg.delay_grid}};
    }

    if (cfg.coupling.source == CouplingMatrix::Source::diffusive) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < cfg.coupling.weights.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < cfg.coupling.weights.cols(); ++c)
                row.push_back(cfg.coupling.weights(r, c));
            rows.push_back(std::move(row));
        }
        j["coupling"] = {{"weights", rows}};
    } else {
        j["coupling"] = {{"matrix", detail::dump_complex_matrix(cfg.coupling.l)}};
    }

    j["analysis"] = {{"margin", cfg.analysis.margin}};
    j["simulation"] = {{"horizon", cfg.simulation.horizon},
                       {"dt", cfg.simulation.dt},
                       {"sample_every", cfg.simulation.sample_every},
                       {"seed", cfg.simulation.seed}};
    return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
}

inline Config load_config(const std::string& path) { return config_from_json(load_json_file(path)); }

/// Set the scalar addressed by a dot-separated path ("system.r0.0",
/// "coupling.weights.1.0", "coupling.matrix.0.0.0").
inline void set_config_scalar(nlohmann::json& j, const std::string& path, double value) {
    nlohmann::json* cur = &j;
    size_t begin = 0;
    while (begin <= path.size()) {
        const size_t end = path.find('.', begin);
        const std::string token =
            path.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
        if (token.empty()) throw config_error("sweep: empty path segment in '" + path + "'");
        if (cur->is_object()) {
            if (!cur->contains(token)) throw config_error("sweep: no such key '" + token + "'");
            cur = &cur->at(token);
        } else if (cur->is_array()) {
            size_t idx = 0;
            try {
                idx = std::stoul(token);
            } catch (...) {
                throw config_error("sweep: expected an array index, got '" + token + "'");
            }
            if (idx >= cur->size()) throw config_error("sweep: index out of range in '" + path + "'");
            cur = &(*cur)[idx];
        } else {
            throw config_error("sweep: path '" + path + "' descends into a scalar");
        }
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    if (!cur->is_number()) throw config_error("sweep: path '" + path + "' is not a scalar");
    *cur = value;
}

inline NetworkSpec make_network(const Config& cfg) {
    NetworkSpec net;
    net.subsystem = cfg.system;
    net.coupling = cfg.coupling;
    net.delay_grid = cfg.delay_grid;
    return net;
}

/// Seeded uniform [-1, 1] initial data per real/imaginary component; with
/// `diagonal` one subsystem state is drawn and replicated to every node.
inline Vector random_initial_state(const NetworkSpec& net, std::uint64_t seed, bool diagonal) {
    const int n = net.nodes();
    const int m = detail::subsystem_state_dim(net);

    // splitmix64 stream; fixed draw order (node-major, re then im).
    std::uint64_t state = seed;
    const auto next_unit = [&state]() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    };

    Vector init(static_cast<Eigen::Index>(n) * m);
    if (diagonal) {
        Vector node(m);
        for (int i = 0; i < m; ++i) {
            const double re = next_unit();
            const double im = next_unit();
            node(i) = Complex(re, im);
        }
        for (int j = 0; j < n; ++j) init.segment(static_cast<Eigen::Index>(j) * m, m) = node;
    } else {
        for (Eigen::Index i = 0; i < init.size(); ++i) {
            const double re = next_unit();
            const double im = next_unit();
            init(i) = Complex(re, im);
        }
    }
    return init;
}

} // namespace netsync
