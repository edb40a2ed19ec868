// Acceptance suite: end-to-end checks of the criterion implementations
// against independent oracles at desk scale. One line per criterion;
// exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "netsync/cli.hpp"
#include "netsync/config.hpp"
#include "netsync/io.hpp"

using namespace netsync;
using nlohmann::json;

#ifndef NETSYNC_CONFIG_DIR
#define NETSYNC_CONFIG_DIR "configs"
#endif

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

json load_fixture(const char* name) {
    return load_json_file(std::string(NETSYNC_CONFIG_DIR) + "/" + name);
}

std::vector<double> csv_column(const std::string& text, const std::string& column) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    int col = -1, idx = 0;
    size_t begin = 0;
    while (begin <= header.size()) {
        const size_t end = header.find(',', begin);
        if (header.substr(begin, (end == std::string::npos ? header.size() : end) - begin) ==
            column)
            col = idx;
        if (end == std::string::npos) break;
        begin = end + 1;
        ++idx;
    }
    require(col >= 0, "column " + column + " missing");
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            out.push_back(detail::parse_csv_row(line, "csv")[static_cast<size_t>(col)]);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

double max_real_eig(const Matrix& m) {
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& e : spectrum(m).eigenvalues) max_re = std::max(max_re, e.value.real());
    return max_re;
}

Matrix random_complex(std::mt19937_64& rng, int rows, int cols, double scale) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = scale * Complex(u(rng), u(rng));
    return m;
}

// --------------------------------------------------------------------------
// 1. Integrator consensus
// --------------------------------------------------------------------------
std::string criterion_integrator_consensus() {
    const json cfg_json = load_fixture("integrator_k4.json");

    std::ostringstream out, err;
    require(cli::cmd_analyze(cfg_json, out, err) == 0, "analyze exit code != 0");
    require(json::parse(out.str())["verdict"] == "synchronizes", "analyze verdict");

    const std::string trace_path = temp_path("netsync_acc1.csv");
    require(cli::cmd_simulate(cfg_json, trace_path, std::nullopt, false, err) == 0,
            "simulate failed");
    const double final_error = csv_column(slurp(trace_path), "sync_error").back();
    std::remove(trace_path.c_str());
    require(final_error < 1e-6, "final sync error " + format(final_error) + " >= 1e-6");

    const Config cfg = config_from_json(cfg_json);
    const NetworkSpec net = make_network(cfg);
    SimOptions opt{cfg.simulation.horizon, cfg.simulation.dt, cfg.simulation.sample_every};
    const Vector init = random_initial_state(net, cfg.simulation.seed, false);
    const RateFit fit = sync_error_series(simulate(net, init, opt));
    require(std::abs(fit.rate + 4.0) / 4.0 < 0.10,
            "fitted rate " + format(fit.rate) + " not within 10% of -4");
    return "sync_error(T)=" + format(final_error) + ", rate=" + format(fit.rate);
}

// --------------------------------------------------------------------------
// 2. Discretization fidelity
// --------------------------------------------------------------------------
std::string criterion_discretization_fidelity() {
    constexpr double pi_sq = std::numbers::pi * std::numbers::pi;
    ParabolicSpec heat;
    heat.a = SampledFn::constant(1.0);
    heat.r0 = SampledFn::constant(0.0);
    heat.r1 = SampledFn::constant(0.0);
    heat.b = SampledFn::constant(0.0);
    heat.boundary = DirichletBc{};

    const double leading = max_real_eig(discretize(heat, 200).sys.a);
    const double rel = std::abs(leading + pi_sq) / pi_sq;
    require(rel < 0.005, "leading eigenvalue off by " + format(rel));

    double err_prev = 0.0, order_min = 10.0;
    int idx = 0;
    for (int n : {50, 100, 200}) {
        const double err = std::abs(max_real_eig(discretize(heat, n).sys.a) + pi_sq);
        if (idx > 0) order_min = std::min(order_min, std::log2(err_prev / err));
        err_prev = err;
        ++idx;
    }
    require(order_min >= 1.9, "observed order " + format(order_min) + " < 1.9");
    return "leading rel err=" + format(rel) + ", order=" + format(order_min);
}

// --------------------------------------------------------------------------
// 3. Parabolic sync threshold
// --------------------------------------------------------------------------
std::string criterion_parabolic_threshold() {
    const json cfg = load_fixture("heat_pair.json"); // sigma = 0.15, flip at c0 = 0.3

    cli::SweepArgs args;
    args.param = "system.r0.0";
    args.from = 0.1;
    args.to = 0.5;
    args.steps = 5;
    args.bisect = true;
    args.with_simulation = true;

    std::ostringstream out, err;
    require(cli::cmd_sweep(cfg, args, out, err) == 0, "sweep failed: " + err.str());

    const auto params = csv_column(out.str(), "param");
    const auto boundary = csv_column(out.str(), "boundary");
    double c_criterion = 0.0, c_simulated = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        if (boundary[i] == 1.0) c_criterion = params[i];
        if (boundary[i] == 2.0) c_simulated = params[i];
    }
    require(c_criterion != 0.0, "criterion boundary row missing");
    require(c_simulated != 0.0, "simulated boundary row missing");
    require(std::abs(c_criterion - 0.3) < 0.003,
            "criterion flip " + format(c_criterion) + " not at 2*sigma");
    const double rel = std::abs(c_simulated - c_criterion) / std::abs(c_criterion);
    require(rel <= 0.05, "simulated flip off by " + format(100.0 * rel) + "%");
    return "criterion flip=" + format(c_criterion) + ", simulated flip=" + format(c_simulated);
}

// --------------------------------------------------------------------------
// 4. Delay Hayes boundary
// --------------------------------------------------------------------------
std::string criterion_hayes_boundary() {
    const auto stable_at = [](double a) {
        DelaySpec spec;
        spec.delays = {0.0, 1.0};
        spec.a_mats = {Matrix::Zero(1, 1), Matrix::Constant(1, 1, Complex(-a, 0.0))};
        spec.b_mats = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
        return is_delay_stable(spec, 200, 1e-6) == StabilityVerdict::stable;
    };
    double lo = 1.0, hi = 2.0;
    require(stable_at(lo), "a=1 should be stable");
    require(!stable_at(hi), "a=2 should be unstable");
    while (hi - lo > 5e-4) {
        const double mid = 0.5 * (lo + hi);
        (stable_at(mid) ? lo : hi) = mid;
    }
    require(lo >= 1.54 && hi <= 1.60,
            "boundary [" + format(lo) + ", " + format(hi) + "] outside [1.54, 1.60]");
    return "boundary in [" + format(lo) + ", " + format(hi) + "], true pi/2=" +
           format(std::numbers::pi / 2);
}

// --------------------------------------------------------------------------
// 5. Kernel/stepping equivalence
// --------------------------------------------------------------------------
std::string criterion_kernel_stepping_equivalence() {
    std::mt19937_64 rng(501);
    std::uniform_int_distribution<int> pick_d(1, 3), pick_m(1, 2), pick_t1(1, 3);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int d = pick_d(rng);
        const int m = pick_m(rng);
        DelaySpec spec;
        spec.delays = {0.0};
        if (m == 2) spec.delays.push_back(0.25 * pick_t1(rng));
        spec.delays.push_back(1.0);
        for (size_t j = 0; j < spec.delays.size(); ++j) {
            spec.a_mats.push_back(random_complex(rng, d, d, 0.8 / d));
            spec.b_mats.push_back(random_complex(rng, d, d, 0.8 / d));
        }
        const Matrix p_kernel = monodromy(spec, 100).p_mat;
        const Matrix p_step = monodromy_by_stepping(spec, 100);
        const double rel = (p_kernel - p_step).norm() / p_kernel.norm();
        worst = std::max(worst, rel);
        require(rel <= 1e-3, "spec " + std::to_string(rep) + " rel diff " + format(rel));
    }
    return "worst relative difference=" + format(worst) + " over 20 specs";
}

// --------------------------------------------------------------------------
// 6. Criterion/simulation agreement
// --------------------------------------------------------------------------
std::string criterion_agreement() {
    std::mt19937_64 rng(601);
    std::uniform_int_distribution<int> pick_dim(1, 4), pick_nodes(2, 6), pick_q(1, 2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    int tested = 0, skipped = 0;
    while (tested < 50) {
        const int d = pick_dim(rng);
        const int nodes = pick_nodes(rng);
        const int q = pick_q(rng);

        LtiSystem sys;
        sys.a = random_complex(rng, d, d, 1.0) - 2.0 * u01(rng) * Matrix::Identity(d, d);
        sys.b = random_complex(rng, d, q, 1.0);
        sys.c = random_complex(rng, q, d, 1.0);
        sys.d = Matrix::Zero(q, q);

        RealMatrix sigma(nodes, nodes);
        for (int i = 0; i < nodes; ++i)
            for (int j = 0; j < nodes; ++j) sigma(i, j) = (i == j) ? 0.0 : u01(rng);

        NetworkSpec net;
        net.subsystem = sys;
        net.coupling = CouplingMatrix::diffusive(sigma);

        const SyncReport report = analyze_network(net, 1e-6);
        double worst_re = -std::numeric_limits<double>::infinity();
        for (const auto& t : report.per_lambda)
            worst_re = std::max(worst_re, t.max_real_part_observable);
        if (std::abs(worst_re) < 0.05 || report.verdict == Verdict::marginal) {
            ++skipped;
            continue; // marginal band excluded by the protocol
        }

        // Slow modes need a longer tail, but the common (average) mode grows
        // like exp(max Re Spec(A) t) and its fp cancellation noise must stay
        // below the difference signal over the whole window.
        const double avg_growth = max_real_eig(sys.a);
        double horizon = std::abs(worst_re) < 0.15 ? 40.0 : 10.0;
        if (avg_growth > worst_re)
            horizon = std::clamp(30.0 / std::max(avg_growth - worst_re, 0.75), 10.0, horizon);
        SimOptions opt;
        opt.horizon = horizon;
        opt.dt = 1e-3;
        opt.sample_every = 10;
        const Vector init = random_initial_state(net, 600 + static_cast<std::uint64_t>(tested), false);
        const SimulationTrace trace = simulate(net, init, opt);
        const Agreement agreement = verify_prediction(net, report, trace);
        require(agreement == Agreement::agree,
                "case " + std::to_string(tested) + " disagrees (worst Re=" + format(worst_re) + ")");
        ++tested;
    }
    return "50/50 agree (" + std::to_string(skipped) + " marginal draws skipped)";
}

// --------------------------------------------------------------------------
// 7. Output vs state stability
// --------------------------------------------------------------------------
std::string criterion_output_vs_state() {
    LtiSystem sys;
    sys.a = Matrix::Zero(2, 2);
    sys.a(0, 0) = 1.0;
    sys.a(1, 1) = -1.0;
    sys.b = Matrix::Zero(2, 1);
    sys.b(1, 0) = 1.0;
    sys.c = Matrix::Zero(1, 2);
    sys.c(0, 1) = 1.0;
    sys.d = Matrix::Zero(1, 1);

    const CouplingMatrix uncoupled = CouplingMatrix::raw(Matrix::Zero(1, 1));
    const SyncReport output_report = check_network_stability(sys, uncoupled, 1e-6);
    require(output_report.verdict == Verdict::synchronizes, "output test should pass");
    const SyncReport state_report = check_network_stability(state_form(sys), uncoupled, 1e-6);
    require(state_report.verdict == Verdict::does_not_synchronize, "state test should fail");

    NetworkSpec net;
    net.subsystem = sys;
    net.coupling = uncoupled;
    SimOptions opt;
    opt.horizon = 5.0;
    opt.dt = 1e-3;
    opt.sample_every = 10;
    Vector init(2);
    init << Complex(1, 0), Complex(1, 0);
    const SimulationTrace trace = simulate(net, init, opt);
    const double y0 = trace.outputs.front().cwiseAbs().maxCoeff();
    const double yT = trace.outputs.back().cwiseAbs().maxCoeff();
    require(yT < 0.1 * y0, "output should decay");
    require(trace.state_norms.back() > 10.0 * trace.state_norms.front(), "state should grow");
    return "output " + format(y0) + "->" + format(yT) + ", state norm " +
           format(trace.state_norms.front()) + "->" + format(trace.state_norms.back());
}

// --------------------------------------------------------------------------
// 8. Invariance suite
// --------------------------------------------------------------------------
std::string criterion_invariances() {
    std::mt19937_64 rng(801);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // Node-permutation verdict invariance, 20 random cases.
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 3;
        const int nodes = 3 + rep % 3;
        LtiSystem sys;
        sys.a = random_complex(rng, d, d, 1.0) - u01(rng) * Matrix::Identity(d, d);
        sys.b = random_complex(rng, d, 1, 1.0);
        sys.c = random_complex(rng, 1, d, 1.0);
        sys.d = Matrix::Zero(1, 1);
        RealMatrix sigma(nodes, nodes);
        for (int i = 0; i < nodes; ++i)
            for (int j = 0; j < nodes; ++j) sigma(i, j) = (i == j) ? 0.0 : u01(rng);
        const CouplingMatrix coupling = CouplingMatrix::diffusive(sigma);

        std::vector<int> perm(static_cast<size_t>(nodes));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix pi = Matrix::Zero(nodes, nodes);
        for (int i = 0; i < nodes; ++i) pi(i, perm[static_cast<size_t>(i)]) = 1.0;

        const SyncReport r1 = check_synchronization(sys, coupling, 1e-6);
        const SyncReport r2 = check_synchronization(
            sys, CouplingMatrix::raw(pi * coupling.l * pi.transpose()), 1e-6);
        require(r1.verdict == r2.verdict, "permutation changed the verdict");
        require(r1.per_lambda.size() == r2.per_lambda.size(),
                "permutation changed the tested set size");
        for (const auto& t1 : r1.per_lambda) {
            bool matched = false;
            for (const auto& t2 : r2.per_lambda)
                matched = matched || std::abs(t1.lambda - t2.lambda) < 1e-7;
            require(matched, "permutation changed the tested multiset");
        }
    }

    // Diagonal-initial-condition invariance via the CLI path.
    const json cfg = load_fixture("integrator_k4.json");
    const std::string diag_path = temp_path("netsync_acc8_diag.csv");
    std::ostringstream err;
    require(cli::cmd_simulate(cfg, diag_path, std::nullopt, true, err) == 0, "simulate failed");
    for (double e : csv_column(slurp(diag_path), "sync_error"))
        require(e <= 1e-10, "diagonal init leaked sync error " + format(e));
    std::remove(diag_path.c_str());

    // Simulate linearity at relative 1e-8.
    {
        NetworkSpec net = make_network(config_from_json(cfg));
        const Vector init = random_initial_state(net, 99, false);
        SimOptions opt;
        opt.horizon = 2.0;
        opt.dt = 1e-3;
        opt.sample_every = 100;
        const SimulationTrace base = simulate(net, init, opt);
        const SimulationTrace scaled = simulate(net, Complex(2.5, 0.0) * init, opt);
        for (size_t i = 0; i < base.outputs.size(); ++i) {
            const double diff = (scaled.outputs[i] - 2.5 * base.outputs[i]).norm();
            require(diff <= 1e-8 * std::max(1e-12, 2.5 * base.outputs[i].norm()),
                    "linearity violated");
        }
    }

    // Config round trip on every shipped example.
    for (const char* name : {"integrator_k4.json", "heat_pair.json", "hayes_delay.json",
                             "boundary_coupled_pair.json"}) {
        const json raw = load_fixture(name);
        const json once = config_to_json(config_from_json(raw));
        const json twice = config_to_json(config_from_json(once));
        require(once == twice, std::string(name) + " round trip not idempotent");
    }

    // Byte-identical CSV for identical config + seed.
    const std::string path_a = temp_path("netsync_acc8_a.csv");
    const std::string path_b = temp_path("netsync_acc8_b.csv");
    require(cli::cmd_simulate(cfg, path_a, 42, false, err) == 0, "simulate failed");
    require(cli::cmd_simulate(cfg, path_b, 42, false, err) == 0, "simulate failed");
    const bool identical = slurp(path_a) == slurp(path_b);
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
    require(identical, "CSV output not byte-identical");

    return "20 permutation cases, diagonal/linearity/round-trip/determinism all hold";
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<std::string()> run;
    };

    const std::vector<Criterion> criteria = {
        {1, "integrator consensus", 1.0, criterion_integrator_consensus},
        {2, "discretization fidelity", 5.0, criterion_discretization_fidelity},
        {3, "parabolic sync threshold", 60.0, criterion_parabolic_threshold},
        {4, "delay Hayes boundary", 30.0, criterion_hayes_boundary},
        {5, "kernel/stepping equivalence", 60.0, criterion_kernel_stepping_equivalence},
        {6, "criterion/simulation agreement", 120.0, criterion_agreement},
        {7, "output vs state stability", 1.0, criterion_output_vs_state},
        {8, "invariance suite", 60.0, criterion_invariances},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = true;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            pass = false;
            detail = e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (pass && seconds >= c.budget_seconds) {
            pass = false;
            detail = "runtime " + format(seconds) + " s exceeds " + format(c.budget_seconds) + " s";
        }
        std::printf("[%s] criterion %d: %s (%.2f s) -- %s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    seconds, detail.c_str());
        if (!pass) ++failures;
    }
    if (failures == 0)
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
