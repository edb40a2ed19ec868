#pragma once

// Closed-loop network assembly Close(P^n, L) for LTI, discretized-parabolic
// and delay subsystems, time-domain simulation, synchronization-error series
// with exponential rate fits, and the criterion-vs-simulation agreement check.

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "netsync/delay.hpp"
#include "netsync/errors.hpp"
#include "netsync/lti.hpp"
#include "netsync/parabolic.hpp"
#include "netsync/types.hpp"

namespace netsync {

struct ParabolicSubsystem {
    ParabolicSpec spec;
    int n_cells = 100;
};

using Subsystem = std::variant<LtiSystem, ParabolicSubsystem, DelaySpec>;

struct NetworkSpec {
    Subsystem subsystem;
    CouplingMatrix coupling;
    int delay_grid = 100; ///< monodromy grid for delay-subsystem analysis

    int nodes() const { return coupling.nodes(); }
};

/// Time series of the network outputs. sync_error is the sup norm of
/// (sync_projection(n) (x) I_q) applied to the stacked outputs; the max
/// pairwise output difference is kept alongside as the human-readable metric.
struct SimulationTrace {
    std::vector<double> times;
    std::vector<Matrix> outputs; ///< per sample: n x q (row j = node j)
    std::vector<double> sync_error;
    std::vector<double> pairwise_error;
    std::vector<double> state_norms;
};

struct SimOptions {
    double horizon = 10.0;
    double dt = 1e-3;
    int sample_every = 1;
};

namespace detail {

/// The per-node state dimension of a network's subsystem.
inline int subsystem_state_dim(const NetworkSpec& net) {
    if (const auto* sys = std::get_if<LtiSystem>(&net.subsystem)) return sys->state_dim();
    if (const auto* par = std::get_if<ParabolicSubsystem>(&net.subsystem)) {
        const bool dirichlet = std::holds_alternative<DirichletBc>(par->spec.boundary);
        return dirichlet ? par->n_cells - 1 : par->n_cells + 1;
    }
    return std::get<DelaySpec>(net.subsystem).state_dim();
}

struct TraceRecorder {
    int n = 0;
    int q = 0;
    Matrix projector; // (n-1) x n, or empty for n = 1
    SimulationTrace trace;

    TraceRecorder(int nodes, int outputs_per_node) : n(nodes), q(outputs_per_node) {
        if (n >= 2) projector = sync_projection(n);
    }

    void record(double t, const Matrix& y, double state_norm) {
        trace.times.push_back(t);
        trace.outputs.push_back(y);
        trace.state_norms.push_back(state_norm);

        double sync = 0.0, pair = 0.0;
        if (n >= 2) {
            const Matrix projected = projector * y; // rows: y_{k+1} - y_1
            sync = projected.cwiseAbs().maxCoeff();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    pair = std::max(pair, (y.row(i) - y.row(j)).cwiseAbs().maxCoeff());
        }
        trace.sync_error.push_back(sync);
        trace.pairwise_error.push_back(pair);
    }
};

/// Outputs as an n x q matrix from a stacked state, y_j = c x_j.
inline Matrix stacked_outputs(const Vector& state, const Matrix& c, int n) {
    const auto m = c.cols();
    const auto q = c.rows();
    Matrix y(n, q);
    for (int j = 0; j < n; ++j)
        y.row(j) = (c * state.segment(static_cast<Eigen::Index>(j) * m, m)).transpose();
    return y;
}

inline void check_sim_options(const SimOptions& opt) {
    if (!(opt.dt > 0.0)) throw grid_error("simulate: dt must be positive");
    if (opt.horizon < 10.0 * opt.dt)
        throw precondition_error("simulate: horizon must be at least 10*dt");
    if (opt.sample_every < 1) throw precondition_error("simulate: sample_every must be >= 1");
}

inline SimulationTrace simulate_block_lti(const LtiSystem& sys, const CouplingMatrix& coupling,
                                          const Vector& init, const SimOptions& opt,
                                          bool implicit) {
    sys.validate();
    if (!sys.d.isZero(0.0))
        throw dimension_error("simulate: network assembly requires zero feedthrough");
    if (sys.input_dim() != sys.output_dim())
        throw dimension_error("simulate: coupling acts componentwise, need input_dim == output_dim");
    const int n = coupling.nodes();
    const auto m = sys.a.rows();
    if (init.size() != static_cast<Eigen::Index>(n) * m)
        throw dimension_error("simulate: initial state has wrong dimension");

    const Matrix a_net = Eigen::kroneckerProduct(Matrix::Identity(n, n), sys.a) +
                         Eigen::kroneckerProduct(coupling.l, Matrix(sys.b * sys.c));

    const auto steps = static_cast<long>(std::llround(opt.horizon / opt.dt));
    TraceRecorder rec(n, static_cast<int>(sys.c.rows()));
    Vector x = init;
    rec.record(0.0, stacked_outputs(x, sys.c, n), x.norm());

    if (implicit) {
        // Trapezoidal rule with one factorization reused across all steps.
        const Matrix eye = Matrix::Identity(a_net.rows(), a_net.cols());
        const Matrix lhs = eye - (opt.dt / 2.0) * a_net;
        const Matrix rhs = eye + (opt.dt / 2.0) * a_net;
        const Eigen::PartialPivLU<Matrix> lu(lhs);
        for (long s = 1; s <= steps; ++s) {
            x = lu.solve(rhs * x);
            if (s % opt.sample_every == 0 || s == steps)
                rec.record(opt.dt * static_cast<double>(s), stacked_outputs(x, sys.c, n), x.norm());
        }
    } else {
        for (long s = 1; s <= steps; ++s) {
            const Vector k1 = a_net * x;
            const Vector k2 = a_net * (x + (opt.dt / 2.0) * k1);
            const Vector k3 = a_net * (x + (opt.dt / 2.0) * k2);
            const Vector k4 = a_net * (x + opt.dt * k3);
            x += (opt.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (s % opt.sample_every == 0 || s == steps)
                rec.record(opt.dt * static_cast<double>(s), stacked_outputs(x, sys.c, n), x.norm());
        }
    }
    return std::move(rec.trace);
}

inline SimulationTrace simulate_delay_network(const DelaySpec& spec,
                                              const CouplingMatrix& coupling, const Vector& init,
                                              const SimOptions& opt) {
    spec.validate();
    if (spec.input_dim() != spec.state_dim())
        throw dimension_error("simulate: delay coupling requires input_dim == state_dim");
    const int n = coupling.nodes();
    const int d = spec.state_dim();
    if (init.size() != static_cast<Eigen::Index>(n) * d)
        throw dimension_error("simulate: initial state has wrong dimension");

    // Delayed coupling enters through the B_j terms: the closed network is
    // itself a delay system with A_j <- I (x) A_j + L (x) B_j.
    DelaySpec net;
    net.delays = spec.delays;
    const Matrix eye_n = Matrix::Identity(n, n);
    for (size_t j = 0; j < spec.a_mats.size(); ++j) {
        net.a_mats.push_back(Eigen::kroneckerProduct(eye_n, spec.a_mats[j]) +
                             Eigen::kroneckerProduct(coupling.l, spec.b_mats[j]));
        net.b_mats.push_back(Matrix::Zero(static_cast<Eigen::Index>(n) * d, 1));
    }

    const double t_m = spec.max_delay();
    const double span = std::lround(t_m / opt.dt) * opt.dt;
    if (std::abs(span - t_m) > 1e-9 * t_m)
        throw grid_error("simulate: largest delay is not a multiple of dt");

    DelayHistory hist;
    hist.dt = opt.dt;
    hist.t_start = 0.0;
    hist.samples.assign(static_cast<size_t>(std::lround(t_m / opt.dt)) + 1, init);

    const Matrix c = Matrix::Identity(d, d);
    const auto steps = static_cast<long>(std::llround(opt.horizon / opt.dt));
    const auto history_steps = static_cast<long>(hist.samples.size()) - 1;
    TraceRecorder rec(n, d);
    for (long s = 0; s <= std::min(history_steps, steps); ++s)
        if (s % opt.sample_every == 0 || s == steps)
            rec.record(opt.dt * static_cast<double>(s), stacked_outputs(init, c, n), init.norm());

    for (long s = history_steps + 1; s <= steps; ++s) {
        hist.samples.push_back(step_history(net, hist, nullptr, opt.dt));
        if (s % opt.sample_every == 0 || s == steps) {
            const Vector& x = hist.samples.back();
            rec.record(opt.dt * static_cast<double>(s), stacked_outputs(x, c, n), x.norm());
        }
    }
    return std::move(rec.trace);
}

} // namespace detail

/// Integrate the closed-loop network. Parabolic subsystems use the
/// trapezoidal rule with a single reused factorization; dense LTI networks
/// use RK4; delay networks use the method of steps on the assembled
/// network delay system.
inline SimulationTrace simulate(const NetworkSpec& net, const Vector& init,
                                const SimOptions& opt) {
    detail::check_sim_options(opt);
    net.coupling.validate();
    if (const auto* sys = std::get_if<LtiSystem>(&net.subsystem))
        return detail::simulate_block_lti(*sys, net.coupling, init, opt, /*implicit=*/false);
    if (const auto* par = std::get_if<ParabolicSubsystem>(&net.subsystem))
        return detail::simulate_block_lti(discretize(par->spec, par->n_cells).sys, net.coupling,
                                          init, opt, /*implicit=*/true);
    return detail::simulate_delay_network(std::get<DelaySpec>(net.subsystem), net.coupling, init,
                                          opt);
}

/// Exponential fit of the synchronization error over the tail of the trace.
struct RateFit {
    std::vector<double> times;
    std::vector<double> errors;
    double rate = 0.0;      ///< least-squares slope of log(error); -inf when degenerate
    double r_squared = 0.0;
    bool degenerate = false; ///< error never rose above the noise floor
};

/// Least-squares fit of log(sync_error) over the last `fit_window` fraction
/// of the horizon. Samples at or below the floor 1e-13 * peak are excluded;
/// traces that never leave the noise floor are flagged degenerate with a
/// -inf rate sentinel.
inline RateFit sync_error_series(const SimulationTrace& trace, double fit_window = 0.5) {
    if (trace.times.empty())
        throw precondition_error("sync_error_series: empty trace");

    RateFit fit;
    fit.times = trace.times;
    fit.errors = trace.sync_error;

    // Degenerate means the error never rose above the cancellation noise of
    // the outputs at the same instant (invariant diagonal starts).
    double peak_error = 0.0;
    bool above_noise = false;
    for (size_t i = 0; i < trace.sync_error.size(); ++i) {
        peak_error = std::max(peak_error, trace.sync_error[i]);
        const double local_scale =
            trace.outputs[i].size() > 0 ? trace.outputs[i].cwiseAbs().maxCoeff() : 0.0;
        if (trace.sync_error[i] > 1e-12 * std::max(1.0, local_scale)) above_noise = true;
    }
    if (!above_noise) {
        fit.degenerate = true;
        fit.rate = -std::numeric_limits<double>::infinity();
        fit.r_squared = 1.0;
        return fit;
    }

    const double t_end = trace.times.back();
    const double t_begin = trace.times.front();
    const double window_start = t_end - fit_window * (t_end - t_begin);
    const double fit_floor = 1e-13 * peak_error;

    std::vector<double> ts, logs;
    for (size_t i = 0; i < trace.times.size(); ++i) {
        if (trace.times[i] < window_start) continue;
        if (trace.sync_error[i] <= fit_floor) continue;
        ts.push_back(trace.times[i]);
        logs.push_back(std::log(trace.sync_error[i]));
    }
    if (ts.size() < 3) {
        // Error collapsed below the floor within the window: report full decay.
        fit.rate = -std::numeric_limits<double>::infinity();
        fit.r_squared = 1.0;
        return fit;
    }

    const auto n = static_cast<double>(ts.size());
    double st = 0, sl = 0, stt = 0, stl = 0, sll = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sl += logs[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * logs[i];
        sll += logs[i] * logs[i];
    }
    const double denom = n * stt - st * st;
    fit.rate = (n * stl - st * sl) / denom;
    const double ss_tot = sll - sl * sl / n;
    const double intercept = (sl - fit.rate * st) / n;
    double ss_res = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double r = logs[i] - (intercept + fit.rate * ts[i]);
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

enum class Agreement { agree, disagree, excluded };

inline const char* to_string(Agreement a) {
    switch (a) {
    case Agreement::agree: return "agree";
    case Agreement::disagree: return "disagree";
    case Agreement::excluded: return "excluded";
    }
    return "unknown";
}

/// Empirical check of the criterion verdict against a simulated trace.
/// Marginal reports and invariant-set (diagonal) starts are excluded. A
/// trace whose error has collapsed to the floor counts as synchronized
/// regardless of the tail fit.
inline Agreement verify_prediction(const NetworkSpec&, const SyncReport& report,
                                   const SimulationTrace& trace, double margin_rate = 0.0) {
    if (report.verdict == Verdict::marginal) return Agreement::excluded;
    const RateFit fit = sync_error_series(trace);
    if (fit.degenerate) return Agreement::excluded;

    double peak_output = 0.0;
    for (const auto& y : trace.outputs)
        if (y.size() > 0) peak_output = std::max(peak_output, y.cwiseAbs().maxCoeff());
    const bool collapsed = trace.sync_error.back() <= 1e-10 * std::max(1.0, peak_output);

    const bool says_sync = report.verdict == Verdict::synchronizes;
    const bool observed_sync = collapsed || fit.rate < -margin_rate;
    return says_sync == observed_sync ? Agreement::agree : Agreement::disagree;
}

/// Synchronization criterion for any subsystem class. LTI and parabolic
/// subsystems go through the finite-dimensional observable-part test; delay
/// subsystems test the monodromy spectral radius of the per-eigenvalue
/// closed loop, reporting ln(rho)/t_m as the comparable real part.
inline SyncReport analyze_network(const NetworkSpec& net, double margin) {
    if (margin <= 0.0) throw precondition_error("analyze_network: margin must be positive");
    net.coupling.validate();

    if (const auto* sys = std::get_if<LtiSystem>(&net.subsystem))
        return check_synchronization(*sys, net.coupling, margin);
    if (const auto* par = std::get_if<ParabolicSubsystem>(&net.subsystem))
        return check_synchronization(discretize(par->spec, par->n_cells).sys, net.coupling,
                                     margin);

    const auto& spec = std::get<DelaySpec>(net.subsystem);
    spec.validate();
    SyncReport report;
    report.margin = margin;
    report.lambda1 = detail::consensus_eigenvalue(net.coupling);
    const double t_m = spec.max_delay();
    bool any_marginal = false, all_stable = true;
    for (const auto& entry : detail::tested_sync_set(net.coupling, *report.lambda1)) {
        const DelaySpec closed = closed_loop_delay(spec, entry.value);
        const double radius = spectral_radius(monodromy(closed, net.delay_grid).p_mat);
        LambdaTest test;
        test.lambda = entry.value;
        test.max_real_part_observable = std::log(radius) / t_m;
        test.stable = radius < 1.0 - margin;
        report.per_lambda.push_back(test);
        all_stable = all_stable && test.stable;
        any_marginal = any_marginal || std::abs(radius - 1.0) <= margin;
    }
    report.verdict = all_stable          ? Verdict::synchronizes
                     : any_marginal      ? Verdict::marginal
                                         : Verdict::does_not_synchronize;
    return report;
}

/// Stability criterion over all of Spec(L) (no eigenvalue excluded).
inline SyncReport analyze_network_stability(const NetworkSpec& net, double margin) {
    if (margin <= 0.0) throw precondition_error("analyze_network_stability: margin must be positive");
    net.coupling.validate();

    if (const auto* sys = std::get_if<LtiSystem>(&net.subsystem))
        return check_network_stability(*sys, net.coupling, margin);
    if (const auto* par = std::get_if<ParabolicSubsystem>(&net.subsystem))
        return check_network_stability(discretize(par->spec, par->n_cells).sys, net.coupling,
                                       margin);

    const auto& spec = std::get<DelaySpec>(net.subsystem);
    spec.validate();
    SyncReport report;
    report.margin = margin;
    const double t_m = spec.max_delay();
    bool any_marginal = false, all_stable = true;
    for (const auto& entry : spectrum(net.coupling.l).eigenvalues) {
        const DelaySpec closed = closed_loop_delay(spec, entry.value);
        const double radius = spectral_radius(monodromy(closed, net.delay_grid).p_mat);
        LambdaTest test;
        test.lambda = entry.value;
        test.max_real_part_observable = std::log(radius) / t_m;
        test.stable = radius < 1.0 - margin;
        report.per_lambda.push_back(test);
        all_stable = all_stable && test.stable;
        any_marginal = any_marginal || std::abs(radius - 1.0) <= margin;
    }
    report.verdict = all_stable          ? Verdict::synchronizes
                     : any_marginal      ? Verdict::marginal
                                         : Verdict::does_not_synchronize;
    return report;
}

} // namespace netsync
