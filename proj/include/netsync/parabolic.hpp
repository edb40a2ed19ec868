#pragma once

// 1-D second-order parabolic subsystems on [0,1]: divergence-form central
// differences, Dirichlet elimination, Robin/Neumann ghost-node closure,
// boundary-input absorption into a Robin coefficient, and the discrete
// stationary boundary lift.

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "netsync/errors.hpp"
#include "netsync/lti.hpp"
#include "netsync/types.hpp"

namespace netsync {

/// Uniform samples on [0,1] evaluated by piecewise-linear interpolation.
/// A single sample denotes a constant function.
struct SampledFn {
    Vector samples;

    static SampledFn constant(Complex v) {
        SampledFn f;
        f.samples = Vector::Constant(1, v);
        return f;
    }

    int size() const { return static_cast<int>(samples.size()); }

    Complex operator()(double xi) const {
        const auto n = samples.size();
        if (n == 1) return samples(0);
        const double pos = std::clamp(xi, 0.0, 1.0) * static_cast<double>(n - 1);
        const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
        const double w = pos - static_cast<double>(i);
        return (1.0 - w) * samples(i) + w * samples(i + 1);
    }
};

struct DirichletBc {};

struct NeumannBc {
    Complex kappa_left{0.0, 0.0};
    Complex kappa_right{0.0, 0.0};
};

struct NeumannInputBc {
    Complex kappa_left{0.0, 0.0};
    Complex kappa_right{0.0, 0.0};
    Complex m_left{0.0, 0.0};
    Complex m_right{0.0, 0.0};
};

using BoundaryCondition = std::variant<DirichletBc, NeumannBc, NeumannInputBc>;

/// Coefficients of d_t x = d_xi(a d_xi x) + r0 x + r1 d_xi x + b u on [0,1]
/// with the boundary coupling selected by `boundary`. The flux condition for
/// the Neumann variants reads n . a grad x = kappa x (+ m u) at each endpoint.
struct ParabolicSpec {
    SampledFn a;  ///< diffusion, real and uniformly positive
    SampledFn r0; ///< zero-order reaction coefficient
    SampledFn r1; ///< first-order reaction coefficient
    SampledFn b;  ///< in-domain input gain (multiplication operator)
    BoundaryCondition boundary = DirichletBc{};

    void validate() const {
        if (a.size() < 1 || r0.size() < 1 || r1.size() < 1 || b.size() < 1)
            throw coefficient_error("ParabolicSpec: sampled functions need at least one sample");
        int grid = 1;
        for (int s : {a.size(), r0.size(), r1.size(), b.size()}) {
            if (s == 1) continue;
            if (grid == 1) grid = s;
            if (s != grid)
                throw coefficient_error("ParabolicSpec: sampled functions must share one grid size");
        }
        for (Eigen::Index i = 0; i < a.samples.size(); ++i) {
            const Complex v = a.samples(i);
            if (std::abs(v.imag()) > 0.0)
                throw coefficient_error("ParabolicSpec: diffusion must be real");
            if (!(v.real() > 0.0))
                throw coefficient_error("ParabolicSpec: diffusion must be uniformly positive");
        }
        if (!all_finite(Matrix(a.samples)) || !all_finite(Matrix(r0.samples)) ||
            !all_finite(Matrix(r1.samples)) || !all_finite(Matrix(b.samples)))
            throw numeric_error("ParabolicSpec: non-finite sample");
    }
};

/// Finite-dimensional surrogate: full-state output (c = I), d = 0.
struct DiscretizedSystem {
    LtiSystem sys;
    RealVector grid; ///< node coordinates carried by the state vector
    double h;        ///< mesh width 1/n_cells
};

namespace detail {

struct Assembly {
    Matrix a;
    Matrix b;
    RealVector grid;
    double h;
};

/// Divergence-form second-order interior stencil with half-cell flux closure
/// at Robin/Neumann boundaries (equivalent to ghost-node elimination for
/// constant diffusion). First-order boundary derivatives are substituted
/// exactly from the flux condition.
inline Assembly assemble(const ParabolicSpec& spec, int n_cells) {
    spec.validate();
    if (n_cells < 4)
        throw grid_error("discretize: need at least 4 cells");

    const int n = n_cells;
    const double h = 1.0 / n;
    const bool dirichlet = std::holds_alternative<DirichletBc>(spec.boundary);

    Complex kl(0, 0), kr(0, 0), ml(0, 0), mr(0, 0);
    bool has_input_bc = false;
    if (const auto* nb = std::get_if<NeumannBc>(&spec.boundary)) {
        kl = nb->kappa_left;
        kr = nb->kappa_right;
    } else if (const auto* ni = std::get_if<NeumannInputBc>(&spec.boundary)) {
        kl = ni->kappa_left;
        kr = ni->kappa_right;
        ml = ni->m_left;
        mr = ni->m_right;
        has_input_bc = true;
    }

    const int dim = dirichlet ? n - 1 : n + 1;
    const int first_node = dirichlet ? 1 : 0;

    Assembly out;
    out.h = h;
    out.grid = RealVector::LinSpaced(dim, first_node * h, (first_node + dim - 1) * h);
    out.a = Matrix::Zero(dim, dim);
    out.b = Matrix::Zero(dim, dim);

    // Node samples evaluated once so that neighboring rows share bitwise
    // identical face values a_{i+1/2}.
    RealVector a_node(n + 1);
    Vector r0_node(n + 1), r1_node(n + 1), b_node(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double xi = i * h;
        a_node(i) = spec.a(xi).real();
        r0_node(i) = spec.r0(xi);
        r1_node(i) = spec.r1(xi);
        b_node(i) = spec.b(xi);
    }
    RealVector a_face(n);
    for (int i = 0; i < n; ++i) a_face(i) = 0.5 * (a_node(i) + a_node(i + 1));

    for (int k = 0; k < dim; ++k) {
        const int i = first_node + k;   // global node index 0..n
        const bool left_bd = !dirichlet && i == 0;
        const bool right_bd = !dirichlet && i == n;

        if (left_bd) {
            out.a(k, k) += -2.0 * a_face(0) / (h * h) + 2.0 * kl / h;
            out.a(k, k + 1) += 2.0 * a_face(0) / (h * h);
            // r1 * x'(0) with x'(0) = (-kl x0 - ml u0) / a(0) from the flux condition
            out.a(k, k) += -r1_node(0) * kl / a_node(0);
            out.b(k, k) += -r1_node(0) * ml / a_node(0);
            if (has_input_bc) out.b(k, k) += 2.0 * ml / h;
        } else if (right_bd) {
            out.a(k, k) += -2.0 * a_face(n - 1) / (h * h) + 2.0 * kr / h;
            out.a(k, k - 1) += 2.0 * a_face(n - 1) / (h * h);
            // r1 * x'(1) with x'(1) = (kr xN + mr uN) / a(1)
            out.a(k, k) += r1_node(n) * kr / a_node(n);
            out.b(k, k) += r1_node(n) * mr / a_node(n);
            if (has_input_bc) out.b(k, k) += 2.0 * mr / h;
        } else {
            const double am = a_face(i - 1);
            const double ap = a_face(i);
            out.a(k, k) += -(am + ap) / (h * h);
            // Dropped neighbors are the eliminated Dirichlet boundary nodes.
            if (k > 0) out.a(k, k - 1) += am / (h * h);
            if (k + 1 < dim) out.a(k, k + 1) += ap / (h * h);
            const Complex r1 = r1_node(i);
            if (k > 0) out.a(k, k - 1) -= r1 / (2.0 * h);
            if (k + 1 < dim) out.a(k, k + 1) += r1 / (2.0 * h);
        }

        out.a(k, k) += r0_node(i);
        out.b(k, k) += b_node(i);
    }
    return out;
}

} // namespace detail

/// Discretize into an LtiSystem with full-state output. Dirichlet problems
/// carry the n_cells-1 interior nodes; Neumann variants carry all
/// n_cells+1 nodes. For the boundary-input variant the trace couplings m
/// enter the input matrix, so static output feedback on the discrete system
/// agrees exactly with absorbing the feedback into the Robin coefficient.
inline DiscretizedSystem discretize(const ParabolicSpec& spec, int n_cells) {
    detail::Assembly asm_ = detail::assemble(spec, n_cells);
    DiscretizedSystem out;
    const auto dim = asm_.a.rows();
    out.sys.a = std::move(asm_.a);
    out.sys.b = std::move(asm_.b);
    out.sys.c = Matrix::Identity(dim, dim);
    out.sys.d = Matrix::Zero(dim, dim);
    out.grid = std::move(asm_.grid);
    out.h = asm_.h;
    out.sys.validate();
    return out;
}

/// Absorb the static boundary feedback u = lambda x into the spec:
/// kappa <- kappa + lambda m at both endpoints and r0 <- r0 + lambda b for
/// the in-domain path. Requires the boundary-input variant.
inline ParabolicSpec closed_loop_boundary(const ParabolicSpec& spec, Complex lambda) {
    spec.validate();
    const auto* ni = std::get_if<NeumannInputBc>(&spec.boundary);
    if (ni == nullptr)
        throw dimension_error("closed_loop_boundary: spec must have a neumann_input boundary");

    ParabolicSpec out = spec;
    NeumannBc robin;
    robin.kappa_left = ni->kappa_left + lambda * ni->m_left;
    robin.kappa_right = ni->kappa_right + lambda * ni->m_right;
    out.boundary = robin;

    if (spec.r0.size() == spec.b.size()) {
        out.r0.samples = spec.r0.samples + lambda * spec.b.samples;
    } else if (spec.b.size() == 1) {
        out.r0.samples = spec.r0.samples.array() + lambda * spec.b.samples(0);
    } else if (spec.r0.size() == 1) {
        out.r0.samples = (lambda * spec.b.samples).array() + spec.r0.samples(0);
    } else {
        throw coefficient_error("closed_loop_boundary: r0 and b sampled on different grids");
    }
    return out;
}

struct BoundaryLift {
    Matrix j;  ///< state_dim x 2; columns lift (1,0) and (0,1) boundary data
    double mu; ///< shift actually used
};

/// Discrete stationary boundary lift: columns solve (A_h - mu) J = rhs where
/// the rhs carries the boundary inhomogeneity -h of the flux condition
/// n . a grad(Jh) = kappa Jh - h. When mu is not given it starts from
/// 1 + max(0, max Re Spec(A_h)) and doubles up to three attempts.
inline BoundaryLift boundary_lift(const ParabolicSpec& spec, int n_cells,
                                  std::optional<double> mu = std::nullopt) {
    spec.validate();
    if (std::holds_alternative<DirichletBc>(spec.boundary))
        throw dimension_error("boundary_lift: spec must have a neumann or neumann_input boundary");

    // The lift depends on (a, R, K) only; strip any input couplings.
    ParabolicSpec robin_spec = spec;
    if (const auto* ni = std::get_if<NeumannInputBc>(&spec.boundary)) {
        NeumannBc nb;
        nb.kappa_left = ni->kappa_left;
        nb.kappa_right = ni->kappa_right;
        robin_spec.boundary = nb;
    }
    robin_spec.b = SampledFn::constant(0.0);

    const detail::Assembly asm_ = detail::assemble(robin_spec, n_cells);
    const auto dim = asm_.a.rows();
    const double h = asm_.h;

    Matrix rhs = Matrix::Zero(dim, 2);
    const double a_left = spec.a(0.0).real();
    const double a_right = spec.a(1.0).real();
    rhs(0, 0) = 2.0 / h - spec.r1(0.0) / a_left;
    rhs(dim - 1, 1) = 2.0 / h + spec.r1(1.0) / a_right;

    double shift;
    if (mu.has_value()) {
        if (*mu < 0.0)
            throw precondition_error("boundary_lift: shift must be nonnegative");
        shift = *mu;
    } else {
        double max_re = 0.0;
        for (const auto& e : spectrum(asm_.a).eigenvalues)
            max_re = std::max(max_re, e.value.real());
        shift = 1.0 + max_re;
    }

    const int attempts = mu.has_value() ? 1 : 3;
    for (int attempt = 0; attempt < attempts; ++attempt, shift *= 2.0) {
        const Matrix shifted = asm_.a - shift * Matrix::Identity(dim, dim);
        Eigen::FullPivLU<Matrix> lu(shifted);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) continue;
        const Matrix j = lu.solve(rhs);
        const double residual = (shifted * j - rhs).norm() / rhs.norm();
        if (residual > 1e-10)
            throw numeric_error("boundary_lift: solve residual " + std::to_string(residual) +
                                " exceeds 1e-10");
        return {j, shift};
    }
    throw shift_error("boundary_lift: (A_h - mu) singular; retry with a larger shift");
}

} // namespace netsync
