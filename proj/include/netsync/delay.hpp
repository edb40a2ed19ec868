#pragma once

// Delay ODE subsystems: method-of-steps integration, the one-period kernel
// representation x(t) = p(t) x(t_m) + int f(t,s) x(s) ds + int g(t,s) u(s) ds
// built by convolution recursion, the discrete monodromy operators P, Q, R,
// and the spectral-radius stability test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "netsync/errors.hpp"
#include "netsync/types.hpp"

namespace netsync {

/// x'(t) = sum_j A_j x(t - t_j) + B_j u(t - t_j) with 0 = t_0 < ... < t_m.
struct DelaySpec {
    std::vector<double> delays;
    std::vector<Matrix> a_mats;
    std::vector<Matrix> b_mats;

    int state_dim() const { return a_mats.empty() ? 0 : static_cast<int>(a_mats[0].rows()); }
    int input_dim() const { return b_mats.empty() ? 0 : static_cast<int>(b_mats[0].cols()); }
    double max_delay() const { return delays.back(); }

    void validate() const {
        if (delays.size() < 2)
            throw dimension_error("DelaySpec: need at least one positive delay");
        if (delays[0] != 0.0)
            throw precondition_error("DelaySpec: t_0 must be zero");
        for (size_t j = 1; j < delays.size(); ++j)
            if (!(delays[j] > delays[j - 1]))
                throw precondition_error("DelaySpec: delays must be strictly increasing");
        if (a_mats.size() != delays.size() || b_mats.size() != delays.size())
            throw dimension_error("DelaySpec: one A_j and one B_j per delay");
        const auto d = a_mats[0].rows();
        const auto p = b_mats[0].cols();
        for (const auto& a : a_mats) {
            if (a.rows() != d || a.cols() != d)
                throw dimension_error("DelaySpec: state matrices must be d x d");
            if (!all_finite(a)) throw numeric_error("DelaySpec: non-finite entry");
        }
        for (const auto& b : b_mats) {
            if (b.rows() != d || b.cols() != p)
                throw dimension_error("DelaySpec: input matrices must be d x p");
            if (!all_finite(b)) throw numeric_error("DelaySpec: non-finite entry");
        }
    }
};

/// State feedback u = lambda x folded into the delay coefficients.
inline DelaySpec closed_loop_delay(const DelaySpec& spec, Complex lambda) {
    spec.validate();
    if (spec.input_dim() != spec.state_dim())
        throw dimension_error("closed_loop_delay: state feedback requires input_dim == state_dim");
    DelaySpec out = spec;
    for (size_t j = 0; j < out.a_mats.size(); ++j)
        out.a_mats[j] += lambda * out.b_mats[j];
    return out;
}

// ---------------------------------------------------------------------------
// Method of steps
// ---------------------------------------------------------------------------

using InputFn = std::function<Vector(double)>;

enum class HistoryInterp { cubic, linear };

/// Uniformly sampled trajectory segment; delayed reads interpolate between
/// samples (cubic by default, linear when the data is piecewise linear).
struct DelayHistory {
    double dt = 0.0;
    double t_start = 0.0;
    std::vector<Vector> samples;
    HistoryInterp interp = HistoryInterp::cubic;

    double t_end() const { return t_start + dt * static_cast<double>(samples.size() - 1); }

    Vector at(double t) const {
        const double pos = (t - t_start) / dt;
        const auto last = static_cast<std::ptrdiff_t>(samples.size()) - 1;
        const double snapped = std::round(pos);
        if (std::abs(pos - snapped) < 1e-9) {
            const auto i = static_cast<std::ptrdiff_t>(snapped);
            if (i < 0 || i > last)
                throw coverage_error("DelayHistory: read outside the stored window");
            return samples[static_cast<size_t>(i)];
        }
        if (pos < 0.0 || pos > static_cast<double>(last))
            throw coverage_error("DelayHistory: read outside the stored window");
        const auto i0 = static_cast<std::ptrdiff_t>(std::floor(pos));
        if (interp == HistoryInterp::linear) {
            const double w = pos - static_cast<double>(i0);
            return (1.0 - w) * samples[static_cast<size_t>(i0)] +
                   w * samples[static_cast<size_t>(i0 + 1)];
        }
        // Four-point Lagrange cubic, clamped at the ends of the buffer.
        std::ptrdiff_t base = i0 - 1;
        base = std::max<std::ptrdiff_t>(0, std::min(base, last - 3));
        const double x = pos - static_cast<double>(base);
        Vector acc = Vector::Zero(samples.front().size());
        for (int k = 0; k < 4; ++k) {
            double w = 1.0;
            for (int l = 0; l < 4; ++l) {
                if (l == k) continue;
                w *= (x - static_cast<double>(l)) / static_cast<double>(k - l);
            }
            acc += w * samples[static_cast<size_t>(base + k)];
        }
        return acc;
    }
};

namespace detail {

inline void check_delay_grid(const DelaySpec& spec, double dt) {
    const double t_m = spec.max_delay();
    for (size_t j = 1; j < spec.delays.size(); ++j) {
        const double ratio = spec.delays[j] / dt;
        if (std::abs(ratio - std::round(ratio)) * dt > 1e-9 * t_m)
            throw grid_error("delay " + std::to_string(spec.delays[j]) +
                             " is not commensurate with step " + std::to_string(dt));
    }
}

} // namespace detail

/// One RK4 step of the method of steps: delayed values are read from the
/// stored history (which must cover [t_end - t_m, t_end]).
inline Vector step_history(const DelaySpec& spec, const DelayHistory& hist, const InputFn& u,
                           double dt) {
    spec.validate();
    if (!(dt > 0.0)) throw grid_error("step_history: dt must be positive");
    if (std::abs(dt - hist.dt) > 1e-12 * dt)
        throw grid_error("step_history: step must match the history grid");
    detail::check_delay_grid(spec, dt);
    const double t_m = spec.max_delay();
    if (hist.t_end() - hist.t_start < t_m - 1e-9 * t_m)
        throw coverage_error("step_history: history shorter than the largest delay");

    const double t = hist.t_end();
    const size_t m = spec.delays.size() - 1;

    const auto deriv = [&](double tau, const Vector& x_now) {
        Vector dx = spec.a_mats[0] * x_now;
        for (size_t j = 1; j <= m; ++j)
            dx += spec.a_mats[j] * hist.at(tau - spec.delays[j]);
        if (u) {
            for (size_t j = 0; j <= m; ++j)
                dx += spec.b_mats[j] * u(tau - spec.delays[j]);
        }
        return dx;
    };

    const Vector& x0 = hist.samples.back();
    const Vector k1 = deriv(t, x0);
    const Vector k2 = deriv(t + 0.5 * dt, x0 + (0.5 * dt) * k1);
    const Vector k3 = deriv(t + 0.5 * dt, x0 + (0.5 * dt) * k2);
    const Vector k4 = deriv(t + dt, x0 + dt * k3);
    return x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrate forward, appending samples until t_end() reaches t_target.
inline void advance_history(const DelaySpec& spec, DelayHistory& hist, const InputFn& u,
                            double t_target) {
    const double steps_exact = (t_target - hist.t_end()) / hist.dt;
    const auto steps = static_cast<long>(std::round(steps_exact));
    if (std::abs(steps_exact - static_cast<double>(steps)) > 1e-6)
        throw grid_error("advance_history: horizon is not a multiple of dt");
    for (long s = 0; s < steps; ++s)
        hist.samples.push_back(step_history(spec, hist, u, hist.dt));
}

// ---------------------------------------------------------------------------
// Kernel construction
// ---------------------------------------------------------------------------

/// One-period solution kernels on the uniform grid s_i = i * t_m / n.
/// p is sampled at grid points of t in [t_m, 2t_m]; f and g are sampled
/// panel-wise in s (one-sided limits at both panel ends), since they jump
/// exactly on the grid-aligned discontinuity lines s = t_m - t_j, s = t - t_j.
struct KernelSet {
    double t_m = 0.0;
    int n = 0;
    int dim = 0;
    int input_dim = 0;
    std::vector<Matrix> p;                       ///< [n+1], d x d
    std::vector<std::vector<Matrix>> f_lo, f_hi; ///< [n+1][n], d x d
    std::vector<std::vector<Matrix>> g_lo, g_hi; ///< [n+1][2n], d x p

    double grid_step() const { return t_m / n; }
};

namespace detail {

struct KernelWorkspace {
    int n = 0, d = 0, p = 0, m = 0;
    double delta = 0.0;
    std::vector<int> n_j;                 // snapped delay indices
    std::vector<Matrix> ea0;              // e^{A_0 k delta}, k = 0..n
    std::vector<std::vector<Matrix>> ea;  // ea[j][k] = e^{A_0 k delta} A_j, j >= 1
    std::vector<std::vector<Matrix>> eb;  // eb[j][k] = e^{A_0 k delta} B_j, j >= 0

    // One-sided base-kernel value at first-argument index alpha (+eps) and
    // second-argument index sigma (+eps); indices count grid points of
    // delta on the absolute axis [0, 2 t_m].
    Matrix base_value(int alpha, double alpha_eps, int sigma, double sigma_eps,
                      bool input_kernel) const {
        Matrix acc = Matrix::Zero(d, input_kernel ? p : d);
        const auto& table = input_kernel ? eb : ea;
        for (int j = input_kernel ? 0 : 1; j <= m; ++j) {
            const double s_eff = sigma + sigma_eps;
            if (s_eff < static_cast<double>(n - n_j[static_cast<size_t>(j)])) continue;
            if (s_eff > static_cast<double>(alpha - n_j[static_cast<size_t>(j)]) + alpha_eps)
                continue;
            const int k = alpha - n_j[static_cast<size_t>(j)] - sigma;
            acc += table[static_cast<size_t>(j)][static_cast<size_t>(k)];
        }
        return acc;
    }

    // Panel-interior classification (by midpoint) with values at both ends.
    struct PanelValue {
        Matrix lo, hi;
        bool any = false;
    };
    PanelValue base_panel(int alpha, int panel, bool input_kernel) const {
        PanelValue out;
        out.lo = Matrix::Zero(d, input_kernel ? p : d);
        out.hi = out.lo;
        const auto& table = input_kernel ? eb : ea;
        for (int j = input_kernel ? 0 : 1; j <= m; ++j) {
            const int nj = n_j[static_cast<size_t>(j)];
            if (panel < n - nj || panel + 1 > alpha - nj) continue;
            out.lo += table[static_cast<size_t>(j)][static_cast<size_t>(alpha - nj - panel)];
            out.hi += table[static_cast<size_t>(j)][static_cast<size_t>(alpha - nj - panel - 1)];
            out.any = true;
        }
        return out;
    }
};

inline KernelWorkspace make_kernel_workspace(const DelaySpec& spec, int n) {
    spec.validate();
    const int m = static_cast<int>(spec.delays.size()) - 1;
    if (n < 8 * m)
        throw grid_error("build_kernels: need n >= 8 * (number of delay sub-intervals)");

    KernelWorkspace w;
    w.n = n;
    w.d = spec.state_dim();
    w.p = spec.input_dim();
    w.m = m;
    const double t_m = spec.max_delay();
    w.delta = t_m / n;

    w.n_j.resize(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
        const double ratio = spec.delays[static_cast<size_t>(j)] / w.delta;
        const double snapped = std::round(ratio);
        if (std::abs(ratio - snapped) * w.delta > 1e-9 * t_m)
            throw grid_error("build_kernels: delay " +
                             std::to_string(spec.delays[static_cast<size_t>(j)]) +
                             " is not commensurate with the grid step");
        w.n_j[static_cast<size_t>(j)] = static_cast<int>(snapped);
    }

    w.ea0.resize(static_cast<size_t>(n) + 1);
    w.ea0[0] = Matrix::Identity(w.d, w.d);
    const Matrix e1 = (spec.a_mats[0] * w.delta).exp();
    for (int k = 1; k <= n; ++k) w.ea0[static_cast<size_t>(k)] = w.ea0[static_cast<size_t>(k - 1)] * e1;

    w.ea.resize(static_cast<size_t>(m) + 1);
    w.eb.resize(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
        w.eb[static_cast<size_t>(j)].resize(static_cast<size_t>(n) + 1);
        if (j >= 1) w.ea[static_cast<size_t>(j)].resize(static_cast<size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) {
            if (j >= 1)
                w.ea[static_cast<size_t>(j)][static_cast<size_t>(k)] =
                    w.ea0[static_cast<size_t>(k)] * spec.a_mats[static_cast<size_t>(j)];
            w.eb[static_cast<size_t>(j)][static_cast<size_t>(k)] =
                w.ea0[static_cast<size_t>(k)] * spec.b_mats[static_cast<size_t>(j)];
        }
    }
    return w;
}

} // namespace detail

/// Build p, f, g by the convolution recursion
///   p_k(t) = p_0(t) + int f_0(t,r) p_{k-1}(r) dr,
///   f_k(t,s) = f_0(t,s) 1{s <= t_m} + int f_0(t,r) f_{k-1}(r,s) dr,
///   g_k(t,s) = g_0(t,s) + int f_0(t,r) g_{k-1}(r,s) dr,
/// run to depth ceil(t_m/t_1); integrals over r in [t_m, t_m + k t_1] use
/// the composite trapezoid rule with the grid-aligned jump lines as panel
/// boundaries. The integral terms are continuous in t, so only the analytic
/// base kernels contribute one-sided limits in the first argument.
inline KernelSet build_kernels(const DelaySpec& spec, int n) {
    using detail::KernelWorkspace;
    const KernelWorkspace w = detail::make_kernel_workspace(spec, n);
    const int d = w.d, p = w.p;
    const double delta = w.delta;
    const int n1 = w.n_j[1];
    const int depth = (n + n1 - 1) / n1; // ceil(t_m / t_1)

    const int f_cols = n * 2 * d;
    const int g_cols = 2 * n * 2 * p;
    const auto rows = static_cast<Eigen::Index>(n + 1) * d;

    // Continuous (integral) parts, flattened for matrix products:
    // row-block i = first argument t_m + i*delta; column block (l, side).
    Matrix fc = Matrix::Zero(rows, f_cols);
    Matrix gc = Matrix::Zero(rows, g_cols);
    Matrix pm(rows, d);
    for (int i = 0; i <= n; ++i) pm.middleRows(static_cast<Eigen::Index>(i) * d, d) = w.ea0[static_cast<size_t>(i)];
    const Matrix pm0 = pm;

    for (int level = 1; level <= depth; ++level) {
        const int r_panels = std::min(level * n1, n);
        const auto mid_rows = static_cast<Eigen::Index>(2 * r_panels) * d;

        // Trapezoid-weighted one-sided f_0(t_i, r) factors.
        Matrix weights = Matrix::Zero(rows, mid_rows);
        for (int i = 0; i <= n; ++i) {
            for (int rho = 0; rho < r_panels; ++rho) {
                const auto pv = w.base_panel(n + i, n + rho, false);
                if (!pv.any) continue;
                weights.block(static_cast<Eigen::Index>(i) * d,
                              static_cast<Eigen::Index>(2 * rho) * d, d, d) = (delta / 2.0) * pv.lo;
                weights.block(static_cast<Eigen::Index>(i) * d,
                              static_cast<Eigen::Index>(2 * rho + 1) * d, d, d) =
                    (delta / 2.0) * pv.hi;
            }
        }

        // One-sided previous-level kernels at the r panel ends; the stored
        // integral part is continuous in r, the base part is analytic.
        Matrix k_prev(mid_rows, f_cols);
        Matrix g_prev(mid_rows, g_cols);
        Matrix p_prev(mid_rows, d);
        for (int rho = 0; rho < r_panels; ++rho) {
            const int alpha_lo = n + rho, alpha_hi = n + rho + 1;
            p_prev.middleRows(static_cast<Eigen::Index>(2 * rho) * d, d) =
                pm.middleRows(static_cast<Eigen::Index>(rho) * d, d);
            p_prev.middleRows(static_cast<Eigen::Index>(2 * rho + 1) * d, d) =
                pm.middleRows(static_cast<Eigen::Index>(rho + 1) * d, d);
            for (int side = 0; side < 2; ++side) {
                const int alpha = side == 0 ? alpha_lo : alpha_hi;
                const double alpha_eps = side == 0 ? 0.25 : -0.25;
                const auto out_row = static_cast<Eigen::Index>(2 * rho + side) * d;
                const auto src_row = static_cast<Eigen::Index>(alpha - n) * d;
                for (int l = 0; l < n; ++l) {
                    for (int s_side = 0; s_side < 2; ++s_side) {
                        const int sigma = s_side == 0 ? l : l + 1;
                        const double sigma_eps = s_side == 0 ? 0.25 : -0.25;
                        const auto col = static_cast<Eigen::Index>(2 * l + s_side) * d;
                        k_prev.block(out_row, col, d, d) =
                            fc.block(src_row, col, d, d) +
                            w.base_value(alpha, alpha_eps, sigma, sigma_eps, false);
                    }
                }
                for (int l = 0; l < 2 * n; ++l) {
                    for (int s_side = 0; s_side < 2; ++s_side) {
                        const int sigma = s_side == 0 ? l : l + 1;
                        const double sigma_eps = s_side == 0 ? 0.25 : -0.25;
                        const auto col = static_cast<Eigen::Index>(2 * l + s_side) * p;
                        g_prev.block(out_row, col, d, p) =
                            gc.block(src_row, col, d, p) +
                            w.base_value(alpha, alpha_eps, sigma, sigma_eps, true);
                    }
                }
            }
        }

        pm = pm0 + weights * p_prev;
        fc = weights * k_prev;
        gc = weights * g_prev;
    }

    KernelSet out;
    out.t_m = spec.max_delay();
    out.n = n;
    out.dim = d;
    out.input_dim = p;
    out.p.resize(static_cast<size_t>(n) + 1);
    out.f_lo.assign(static_cast<size_t>(n) + 1, std::vector<Matrix>(static_cast<size_t>(n)));
    out.f_hi = out.f_lo;
    out.g_lo.assign(static_cast<size_t>(n) + 1, std::vector<Matrix>(static_cast<size_t>(2 * n)));
    out.g_hi = out.g_lo;
    for (int i = 0; i <= n; ++i) {
        const auto row = static_cast<Eigen::Index>(i) * d;
        out.p[static_cast<size_t>(i)] = pm.middleRows(row, d);
        for (int l = 0; l < n; ++l) {
            const auto pv = w.base_panel(n + i, l, false);
            out.f_lo[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                fc.block(row, static_cast<Eigen::Index>(2 * l) * d, d, d) + pv.lo;
            out.f_hi[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                fc.block(row, static_cast<Eigen::Index>(2 * l + 1) * d, d, d) + pv.hi;
        }
        for (int l = 0; l < 2 * n; ++l) {
            const auto pv = w.base_panel(n + i, l, true);
            out.g_lo[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                gc.block(row, static_cast<Eigen::Index>(2 * l) * p, d, p) + pv.lo;
            out.g_hi[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                gc.block(row, static_cast<Eigen::Index>(2 * l + 1) * p, d, p) + pv.hi;
        }
    }

    if ((out.p[0] - Matrix::Identity(d, d)).norm() > 1e-12)
        throw numeric_error("build_kernels: p(t_m) deviates from the identity");
    return out;
}

// ---------------------------------------------------------------------------
// Discrete monodromy operators
// ---------------------------------------------------------------------------

/// Grid discretizations of the one-period operators
///   (Pv)(t) = p(t_m + t) v(t_m) + int_0^{t_m} f(t_m + t, s) v(s) ds,
///   (Qv)(t) = int_0^{t_m} g(t_m + t, s) v(s) ds,
///   (Rv)(t) = int_0^{t} g(t_m + t, s + t_m) v(s) ds.
/// Samples are stacked time-major: v = (v(s_0); ...; v(s_n)).
struct MonodromyOperator {
    Matrix p_mat;
    Matrix q_mat;
    Matrix r_mat;
    int n = 0;
    int dim = 0;
};

inline MonodromyOperator monodromy_from_kernels(const KernelSet& ker) {
    const int n = ker.n, d = ker.dim, p = ker.input_dim;
    const double half = ker.grid_step() / 2.0;
    MonodromyOperator op;
    op.n = n;
    op.dim = d;
    op.p_mat = Matrix::Zero(static_cast<Eigen::Index>(n + 1) * d, static_cast<Eigen::Index>(n + 1) * d);
    op.q_mat = Matrix::Zero(static_cast<Eigen::Index>(n + 1) * d, static_cast<Eigen::Index>(n + 1) * p);
    op.r_mat = op.q_mat;

    const auto blk = [d](int i, int j) { return std::pair{static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d}; };

    for (int i = 0; i <= n; ++i) {
        for (int l = 0; l < n; ++l) {
            auto [r0, c0] = blk(i, l);
            op.p_mat.block(r0, c0, d, d) += half * ker.f_lo[static_cast<size_t>(i)][static_cast<size_t>(l)];
            op.p_mat.block(r0, c0 + d, d, d) += half * ker.f_hi[static_cast<size_t>(i)][static_cast<size_t>(l)];
        }
        op.p_mat.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(n) * d, d, d) +=
            ker.p[static_cast<size_t>(i)];

        for (int l = 0; l < n; ++l) {
            const auto r0 = static_cast<Eigen::Index>(i) * d;
            const auto c0 = static_cast<Eigen::Index>(l) * p;
            op.q_mat.block(r0, c0, d, p) += half * ker.g_lo[static_cast<size_t>(i)][static_cast<size_t>(l)];
            op.q_mat.block(r0, c0 + p, d, p) += half * ker.g_hi[static_cast<size_t>(i)][static_cast<size_t>(l)];
        }
        for (int l = 0; l < i; ++l) {
            const auto r0 = static_cast<Eigen::Index>(i) * d;
            const auto c0 = static_cast<Eigen::Index>(l) * p;
            op.r_mat.block(r0, c0, d, p) +=
                half * ker.g_lo[static_cast<size_t>(i)][static_cast<size_t>(n + l)];
            op.r_mat.block(r0, c0 + p, d, p) +=
                half * ker.g_hi[static_cast<size_t>(i)][static_cast<size_t>(n + l)];
        }
    }
    return op;
}

inline MonodromyOperator monodromy(const DelaySpec& spec, int n) {
    return monodromy_from_kernels(build_kernels(spec, n));
}

/// Independent construction: integrate the input-free system over one period
/// from each hat-function basis history. Hat data is read exactly by linear
/// interpolation.
inline Matrix monodromy_by_stepping(const DelaySpec& spec, int n) {
    spec.validate();
    const int d = spec.state_dim();
    const double t_m = spec.max_delay();
    const double delta = t_m / n;
    detail::check_delay_grid(spec, delta);

    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n + 1) * d, static_cast<Eigen::Index>(n + 1) * d);
    for (int node = 0; node <= n; ++node) {
        for (int comp = 0; comp < d; ++comp) {
            DelayHistory hist;
            hist.dt = delta;
            hist.t_start = 0.0;
            hist.interp = HistoryInterp::linear;
            hist.samples.assign(static_cast<size_t>(n) + 1, Vector::Zero(d));
            hist.samples[static_cast<size_t>(node)](comp) = 1.0;
            advance_history(spec, hist, nullptr, 2.0 * t_m);
            const auto col = static_cast<Eigen::Index>(node) * d + comp;
            for (int i = 0; i <= n; ++i)
                m.block(static_cast<Eigen::Index>(i) * d, col, d, 1) =
                    hist.samples[static_cast<size_t>(n + i)];
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

/// Dense eigensolve up to dimension 2000, power iteration beyond.
inline double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols())
        throw dimension_error("spectral_radius: matrix must be square");
    if (m.rows() == 0) return 0.0;
    if (m.rows() <= 2000) {
        Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
        if (solver.info() != Eigen::Success)
            throw numeric_error("spectral_radius: eigensolver failed to converge");
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    Vector v = Vector::Ones(m.rows());
    v.normalize();
    double radius = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        Vector w = m * v;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        w /= next;
        if (std::abs(next - radius) <= 1e-10 * std::max(1.0, next)) return next;
        radius = next;
        v = std::move(w);
    }
    throw numeric_error("spectral_radius: power iteration did not converge");
}

enum class StabilityVerdict { stable, unstable, marginal };

inline const char* to_string(StabilityVerdict v) {
    switch (v) {
    case StabilityVerdict::stable: return "stable";
    case StabilityVerdict::unstable: return "unstable";
    case StabilityVerdict::marginal: return "marginal";
    }
    return "unknown";
}

/// Spectral radius of the discrete monodromy against the margin band.
inline StabilityVerdict is_delay_stable(const DelaySpec& spec, int n, double margin) {
    if (margin <= 0.0)
        throw precondition_error("is_delay_stable: margin must be positive");
    const double radius = spectral_radius(monodromy(spec, n).p_mat);
    if (radius < 1.0 - margin) return StabilityVerdict::stable;
    if (radius > 1.0 + margin) return StabilityVerdict::unstable;
    return StabilityVerdict::marginal;
}

} // namespace netsync
