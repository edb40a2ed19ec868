#pragma once

// Subcommand implementations behind the netsync binary. Machine output
// (JSON reports, CSV tables) goes to the given stream or file; human
// diagnostics go to the error stream. Exit codes: analyze returns the
// verdict (0 synchronizes, 1 does not, 2 marginal); 64 usage/config,
// 65 failed data precondition, 70 internal numeric failure, 74 I/O.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "netsync/config.hpp"
#include "netsync/io.hpp"

namespace netsync::cli {

inline constexpr int exit_usage = 64;
inline constexpr int exit_data = 65;
inline constexpr int exit_software = 70;
inline constexpr int exit_io = 74;

namespace detail {

inline double json_safe(double v) {
    // JSON has no infinities; clamp the unobservable-empty sentinel.
    if (std::isinf(v)) return v > 0 ? 1e308 : -1e308;
    return v;
}

inline nlohmann::json report_to_json(const SyncReport& report) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& t : report.per_lambda)
        per.push_back({{"lambda", {t.lambda.real(), t.lambda.imag()}},
                       {"max_real_part", json_safe(t.max_real_part_observable)},
                       {"stable", t.stable}});
    nlohmann::json j{{"verdict", to_string(report.verdict)},
                     {"per_lambda", per},
                     {"margin", report.margin}};
    if (report.lambda1)
        j["lambda1"] = {report.lambda1->real(), report.lambda1->imag()};
    return j;
}

inline int verdict_code(Verdict v) {
    switch (v) {
    case Verdict::synchronizes: return 0;
    case Verdict::does_not_synchronize: return 1;
    case Verdict::marginal: return 2;
    }
    return exit_software;
}

/// Scalar summary for sweep rows: worst max-real-part for LTI/parabolic,
/// worst monodromy spectral radius for delay subsystems.
inline double report_metric(const NetworkSpec& net, const SyncReport& report) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& t : report.per_lambda)
        worst = std::max(worst, t.max_real_part_observable);
    if (std::holds_alternative<DelaySpec>(net.subsystem)) {
        const double t_m = std::get<DelaySpec>(net.subsystem).max_delay();
        return std::exp(worst * t_m);
    }
    return worst;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const precondition_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const io_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_software;
    }
}

} // namespace detail

/// `analyze`: criterion verdict as JSON on stdout; exit code is the verdict.
inline int cmd_analyze(const nlohmann::json& config_json, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const Config cfg = config_from_json(config_json);
        const SyncReport report = analyze_network(make_network(cfg), cfg.analysis.margin);
        out << detail::report_to_json(report).dump() << '\n';
        return detail::verdict_code(report.verdict);
    });
}

/// `simulate`: CSV trace written to `out_path`; deterministic given the seed.
inline int cmd_simulate(const nlohmann::json& config_json, const std::string& out_path,
                        std::optional<std::uint64_t> seed_override, bool diagonal_init,
                        std::ostream& err) {
    return detail::guarded(err, [&] {
        const Config cfg = config_from_json(config_json);
        const NetworkSpec net = make_network(cfg);
        const std::uint64_t seed = seed_override.value_or(cfg.simulation.seed);
        const Vector init = random_initial_state(net, seed, diagonal_init);

        SimOptions opt;
        opt.horizon = cfg.simulation.horizon;
        opt.dt = cfg.simulation.dt;
        opt.sample_every = cfg.simulation.sample_every;
        const SimulationTrace trace = simulate(net, init, opt);

        std::ofstream file(out_path, std::ios::binary);
        if (!file) throw io_error("cannot open output file: " + out_path);
        write_trace_csv(file, trace);
        if (!file.flush()) throw io_error("write failure: " + out_path);
        return 0;
    });
}

struct SweepArgs {
    std::string param;
    double from = 0.0;
    double to = 1.0;
    int steps = 11;
    bool bisect = false;
    bool stability = false; ///< test all of Spec(L) instead of the sync set
    bool with_simulation = true;
    std::optional<std::uint64_t> seed_override;
};

/// `sweep`: one CSV row per point: param, verdict code (0/1/2), criterion
/// metric, fitted sync-error rate. --bisect appends boundary rows
/// (boundary=1 criterion flip, boundary=2 simulated flip) refined to
/// relative 1e-3.
inline int cmd_sweep(const nlohmann::json& config_json, const SweepArgs& args, std::ostream& out,
                     std::ostream& err) {
    return detail::guarded(err, [&] {
        if (args.steps < 2) throw config_error("sweep: need at least 2 steps");

        struct Point {
            double value;
            Verdict verdict;
            double metric;
            double rate;
        };

        const auto evaluate = [&](double value) {
            nlohmann::json doc = config_json;
            set_config_scalar(doc, args.param, value);
            const Config cfg = config_from_json(doc);
            const NetworkSpec net = make_network(cfg);
            const SyncReport report = args.stability
                                          ? analyze_network_stability(net, cfg.analysis.margin)
                                          : analyze_network(net, cfg.analysis.margin);
            Point p;
            p.value = value;
            p.verdict = report.verdict;
            p.metric = detail::report_metric(net, report);
            p.rate = std::numeric_limits<double>::quiet_NaN();
            if (args.with_simulation) {
                const std::uint64_t seed = args.seed_override.value_or(cfg.simulation.seed);
                SimOptions opt;
                opt.horizon = cfg.simulation.horizon;
                opt.dt = cfg.simulation.dt;
                opt.sample_every = cfg.simulation.sample_every;
                const Vector init = random_initial_state(net, seed, false);
                p.rate = sync_error_series(simulate(net, init, opt)).rate;
            }
            return p;
        };

        std::vector<Point> points;
        for (int i = 0; i < args.steps; ++i) {
            const double value =
                args.from + (args.to - args.from) * static_cast<double>(i) /
                                static_cast<double>(args.steps - 1);
            points.push_back(evaluate(value));
        }

        std::string line = "param,verdict,metric,fitted_rate,boundary";
        out << line << '\n';
        const auto emit = [&out, &line](const Point& p, int boundary) {
            line.clear();
            netsync::detail::append_number(line, p.value);
            line += ',';
            line += std::to_string(detail::verdict_code(p.verdict));
            line += ',';
            netsync::detail::append_number(line, p.metric);
            line += ',';
            if (std::isnan(p.rate))
                line += "nan";
            else
                netsync::detail::append_number(line, p.rate);
            line += ',';
            line += std::to_string(boundary);
            out << line << '\n';
        };
        for (const auto& p : points) emit(p, 0);

        if (args.bisect) {
            const auto refine = [&](double lo, double hi, auto&& classify) {
                Point p_lo = evaluate(lo);
                for (int iter = 0; iter < 60; ++iter) {
                    if (std::abs(hi - lo) <= 1e-3 * std::max({std::abs(lo), std::abs(hi), 1e-12}))
                        break;
                    const double mid = 0.5 * (lo + hi);
                    const Point p_mid = evaluate(mid);
                    if (classify(p_mid) == classify(p_lo)) {
                        lo = mid;
                        p_lo = p_mid;
                    } else {
                        hi = mid;
                    }
                }
                return evaluate(0.5 * (lo + hi));
            };

            const auto criterion_class = [](const Point& p) {
                return p.verdict == Verdict::synchronizes;
            };
            for (size_t i = 0; i + 1 < points.size(); ++i) {
                if (criterion_class(points[i]) == criterion_class(points[i + 1])) continue;
                emit(refine(points[i].value, points[i + 1].value, criterion_class), 1);
                break;
            }

            if (args.with_simulation) {
                const auto sim_class = [](const Point& p) { return p.rate < 0.0; };
                for (size_t i = 0; i + 1 < points.size(); ++i) {
                    if (std::isnan(points[i].rate) || std::isnan(points[i + 1].rate)) continue;
                    if (sim_class(points[i]) == sim_class(points[i + 1])) continue;
                    emit(refine(points[i].value, points[i + 1].value, sim_class), 2);
                    break;
                }
            }
        }
        if (!out) throw io_error("sweep: output stream failure");
        return 0;
    });
}

/// `kernels`: dump p, f, g to <prefix>.p.csv / .f.csv / .g.csv.
inline int cmd_kernels(const nlohmann::json& config_json, const std::string& out_prefix,
                       std::ostream& err) {
    return detail::guarded(err, [&] {
        const Config cfg = config_from_json(config_json);
        const auto* spec = std::get_if<DelaySpec>(&cfg.system);
        if (spec == nullptr) throw config_error("kernels: requires a delay system");
        const KernelSet ker = build_kernels(*spec, cfg.delay_grid);

        std::ofstream p_out(out_prefix + ".p.csv", std::ios::binary);
        std::ofstream f_out(out_prefix + ".f.csv", std::ios::binary);
        std::ofstream g_out(out_prefix + ".g.csv", std::ios::binary);
        if (!p_out || !f_out || !g_out)
            throw io_error("cannot open kernel output files with prefix: " + out_prefix);
        write_kernels_csv(ker, p_out, f_out, g_out);
        if (!p_out.flush() || !f_out.flush() || !g_out.flush())
            throw io_error("write failure with prefix: " + out_prefix);
        return 0;
    });
}

} // namespace netsync::cli
