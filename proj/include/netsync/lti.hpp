#pragma once

// Finite-dimensional complex state-space systems, their spectra, the
// observability quotient, and the spectral stability/synchronization
// criteria for diffusively coupled networks of identical subsystems.

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netsync/errors.hpp"
#include "netsync/types.hpp"

namespace netsync {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// State-space quadruple: x' = a x + b u, y = c x + d u.
struct LtiSystem {
    Matrix a; ///< m x m state map
    Matrix b; ///< m x p input map
    Matrix c; ///< q x m output map
    Matrix d; ///< q x p feedthrough

    int state_dim() const { return static_cast<int>(a.rows()); }
    int input_dim() const { return static_cast<int>(b.cols()); }
    int output_dim() const { return static_cast<int>(c.rows()); }

    void validate() const {
        const auto m = a.rows();
        if (a.cols() != m)
            throw dimension_error("LtiSystem: state map must be square");
        if (b.rows() != m)
            throw dimension_error("LtiSystem: input map row count must match state dimension");
        if (c.cols() != m)
            throw dimension_error("LtiSystem: output map column count must match state dimension");
        if (d.rows() != c.rows() || d.cols() != b.cols())
            throw dimension_error("LtiSystem: feedthrough must be output_dim x input_dim");
        if (!all_finite(a) || !all_finite(b) || !all_finite(c) || !all_finite(d))
            throw numeric_error("LtiSystem: non-finite entry");
    }
};

/// Convenience: the state-test companion of a system. Output stability of
/// (a, b*c, I, 0) is state stability of the original loop.
inline LtiSystem state_form(const LtiSystem& sys) {
    const int m = sys.state_dim();
    LtiSystem out;
    out.a = sys.a;
    out.b = sys.b * sys.c;
    out.c = Matrix::Identity(m, m);
    out.d = Matrix::Zero(m, m);
    return out;
}

/// Coupling matrix L acting on the stacked outputs: u_j = sum_i L(j,i) y_i.
/// A diffusive coupling with weights sigma(j,i) >= 0 gives
/// L(j,i) = sigma(j,i) for i != j and L(j,j) = -sum_{i != j} sigma(j,i),
/// i.e. the negated weighted graph Laplacian; every row sums to zero.
struct CouplingMatrix {
    enum class Source { raw, diffusive };

    Matrix l;
    Source source = Source::raw;
    RealMatrix weights; // only meaningful for diffusive couplings

    int nodes() const { return static_cast<int>(l.rows()); }

    static CouplingMatrix raw(Matrix m) {
        CouplingMatrix cm;
        cm.l = std::move(m);
        cm.source = Source::raw;
        cm.validate();
        return cm;
    }

    static CouplingMatrix diffusive(const RealMatrix& sigma) {
        if (sigma.rows() != sigma.cols())
            throw dimension_error("CouplingMatrix: weight matrix must be square");
        if (!all_finite(sigma))
            throw numeric_error("CouplingMatrix: non-finite weight");
        if ((sigma.array() < 0.0).any())
            throw coefficient_error("CouplingMatrix: diffusive weights must be nonnegative");
        const auto n = sigma.rows();
        CouplingMatrix cm;
        cm.l = Matrix::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double row_sum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (i == j) continue;
                cm.l(j, i) = Complex(sigma(j, i), 0.0);
                row_sum += sigma(j, i);
            }
            cm.l(j, j) = Complex(-row_sum, 0.0);
        }
        cm.source = Source::diffusive;
        cm.weights = sigma;
        return cm;
    }

    void validate() const {
        if (l.rows() != l.cols())
            throw dimension_error("CouplingMatrix: must be square");
        if (!all_finite(l))
            throw numeric_error("CouplingMatrix: non-finite entry");
    }
};

/// Eigenvalues grouped into numerical multiplicity clusters, sorted by
/// (real part descending, imaginary part ascending).
struct Spectrum {
    struct Entry {
        Complex value;
        int multiplicity;
    };
    std::vector<Entry> eigenvalues;

    int total_multiplicity() const {
        return std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0,
                               [](int acc, const Entry& e) { return acc + e.multiplicity; });
    }
};

enum class Verdict { synchronizes, does_not_synchronize, marginal };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::synchronizes: return "synchronizes";
    case Verdict::does_not_synchronize: return "does_not_synchronize";
    case Verdict::marginal: return "marginal";
    }
    return "unknown";
}

/// Evidence for one tested coupling eigenvalue.
struct LambdaTest {
    Complex lambda;
    double max_real_part_observable; // -inf when everything is unobservable
    bool stable;
};

/// Criterion verdict with per-eigenvalue evidence. For the stability test
/// (all of Spec(L) tested) lambda1 is absent and `synchronizes` reads
/// `stable`.
struct SyncReport {
    Verdict verdict;
    std::optional<Complex> lambda1;
    std::vector<LambdaTest> per_lambda;
    double margin;
};

// ---------------------------------------------------------------------------
// Spectral operations
// ---------------------------------------------------------------------------

/// Eigenvalues of a square matrix with multiplicities grouped at relative
/// tolerance 1e-8 * ||m||_F. Backed by a Schur-based dense solver; Jordan
/// structure is never computed.
inline Spectrum spectrum(const Matrix& m) {
    if (m.rows() != m.cols())
        throw dimension_error("spectrum: matrix must be square");
    if (!all_finite(m))
        throw numeric_error("spectrum: non-finite entry");

    Spectrum spec;
    const auto n = m.rows();
    if (n == 0) return spec;

    Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw numeric_error("spectrum: eigensolver failed to converge");
    const Vector raw = solver.eigenvalues();

    const double tol = 1e-8 * m.norm();

    // Union-find clustering: two eigenvalues share a group if they are
    // within tol of each other (transitively closed).
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&parent](int i) {
        while (parent[static_cast<size_t>(i)] != i) {
            parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
            i = parent[static_cast<size_t>(i)];
        }
        return i;
    };
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(raw(i) - raw(j)) <= tol)
                parent[static_cast<size_t>(find(static_cast<int>(i)))] =
                    find(static_cast<int>(j));

    std::vector<Complex> sums(static_cast<size_t>(n), Complex(0, 0));
    std::vector<int> counts(static_cast<size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int r = find(static_cast<int>(i));
        sums[static_cast<size_t>(r)] += raw(i);
        counts[static_cast<size_t>(r)] += 1;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto idx = static_cast<size_t>(i);
        if (counts[idx] > 0)
            spec.eigenvalues.push_back({sums[idx] / static_cast<double>(counts[idx]), counts[idx]});
    }
    std::sort(spec.eigenvalues.begin(), spec.eigenvalues.end(),
              [](const Spectrum::Entry& a, const Spectrum::Entry& b) {
                  if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
                  return a.value.imag() < b.value.imag();
              });
    return spec;
}

/// Close the scalar output feedback loop u = lambda*y + v around the system.
/// With G = (I - lambda*d)^{-1}: a' = a + lambda*b*G*c, b' = b*G,
/// c' = G*c, d' = G*d. For d = 0 this is exactly a + lambda*b*c.
inline LtiSystem closed_loop(const LtiSystem& sys, Complex lambda) {
    sys.validate();
    if (sys.input_dim() != sys.output_dim())
        throw dimension_error("closed_loop: output feedback requires input_dim == output_dim");

    const int p = sys.input_dim();
    if (sys.d.isZero(0.0)) {
        LtiSystem out = sys;
        out.a = sys.a + lambda * sys.b * sys.c;
        return out;
    }

    const Matrix loop = Matrix::Identity(p, p) - lambda * sys.d;
    Eigen::FullPivLU<Matrix> lu(loop);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        throw algebraic_loop_error("closed_loop: (I - lambda*d) is singular for lambda = (" +
                                   std::to_string(lambda.real()) + ", " +
                                   std::to_string(lambda.imag()) + ")");
    const Matrix g = lu.inverse();

    LtiSystem out;
    out.a = sys.a + lambda * sys.b * g * sys.c;
    out.b = sys.b * g;
    out.c = g * sys.c;
    out.d = g * sys.d;
    return out;
}

namespace detail {

inline Eigen::Index rank_from_singular_values(const RealVector& sv, double rel_tol) {
    if (sv.size() == 0) return 0;
    const double cutoff = rel_tol * sv(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++r;
    return r;
}

constexpr double kObservabilityRankTol = 1e-10;

/// Stacked observability matrix [c; c*a; ...; c*a^{m-1}] of the norm-scaled
/// state map. Row scaling leaves the kernel unchanged and avoids overflow.
inline Matrix observability_stack(const Matrix& a, const Matrix& c) {
    const auto m = a.rows();
    const auto q = c.rows();
    const double s = std::max(1.0, a.norm());
    const Matrix as = a / s;
    Matrix stack(q * m, m);
    Matrix block = c;
    for (Eigen::Index k = 0; k < m; ++k) {
        stack.middleRows(k * q, q) = block;
        if (k + 1 < m) block = block * as;
    }
    return stack;
}

inline void check_pair_dims(const Matrix& a, const Matrix& c) {
    if (a.rows() != a.cols())
        throw dimension_error("observability: state map must be square");
    if (c.cols() != a.rows())
        throw dimension_error("observability: output map column count must match state dimension");
}

inline bool output_map_full_rank(const Matrix& c) {
    if (c.rows() < c.cols()) return false;
    Eigen::JacobiSVD<Matrix> svd(c);
    return rank_from_singular_values(svd.singularValues(), kObservabilityRankTol) == c.cols();
}

} // namespace detail

/// Orthonormal basis (m x r) of the kernel of the stacked observability
/// matrix: the largest a-invariant subspace of Ker c. Numerical rank uses
/// singular values at relative tolerance 1e-10.
inline Matrix unobservable_subspace(const Matrix& a, const Matrix& c) {
    detail::check_pair_dims(a, c);
    const auto m = a.rows();
    if (detail::output_map_full_rank(c))
        return Matrix(m, 0);

    const Matrix stack = detail::observability_stack(a, c);
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
    const Eigen::Index rank =
        detail::rank_from_singular_values(svd.singularValues(), detail::kObservabilityRankTol);
    return svd.matrixV().rightCols(m - rank);
}

struct ObservablePart {
    Matrix a; ///< state map on the quotient by the unobservable subspace
    Matrix c; ///< output map in the quotient coordinates
};

/// Compress (a, c) onto an orthonormal complement of the unobservable
/// subspace. Spec(result.a) consists of the eigenvalues of a whose
/// generalized eigenvectors reach outside the unobservable subspace.
inline ObservablePart observable_part(const Matrix& a, const Matrix& c) {
    detail::check_pair_dims(a, c);
    if (detail::output_map_full_rank(c))
        return {a, c};

    const Matrix stack = detail::observability_stack(a, c);
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
    const Eigen::Index rank =
        detail::rank_from_singular_values(svd.singularValues(), detail::kObservabilityRankTol);
    const Matrix w = svd.matrixV().leftCols(rank);
    return {w.adjoint() * a * w, c * w};
}

/// Max real part of the observable closed-loop spectrum; -inf when the
/// observable part is empty.
inline double max_observable_real_part(const LtiSystem& sys) {
    const ObservablePart obs = observable_part(sys.a, sys.c);
    if (obs.a.rows() == 0)
        return -std::numeric_limits<double>::infinity();
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& e : spectrum(obs.a).eigenvalues)
        max_re = std::max(max_re, e.value.real());
    return max_re;
}

namespace detail {

inline LambdaTest test_lambda(const LtiSystem& sys, Complex lambda, double margin) {
    const LtiSystem cl = closed_loop(sys, lambda);
    const double max_re = max_observable_real_part(cl);
    return {lambda, max_re, max_re < -margin};
}

inline Verdict verdict_from_tests(const std::vector<LambdaTest>& tests, double margin) {
    const bool all_stable =
        std::all_of(tests.begin(), tests.end(), [](const LambdaTest& t) { return t.stable; });
    if (all_stable) return Verdict::synchronizes;
    const bool any_marginal = std::any_of(tests.begin(), tests.end(), [margin](const LambdaTest& t) {
        return std::abs(t.max_real_part_observable) <= margin;
    });
    return any_marginal ? Verdict::marginal : Verdict::does_not_synchronize;
}

/// lambda1 = consensus eigenvalue of 1_n, plus the residual check
/// ||L 1 - lambda1 1|| <= 1e-10 ||L||.
inline Complex consensus_eigenvalue(const CouplingMatrix& coupling) {
    const auto n = coupling.l.rows();
    const Vector ones = Vector::Ones(n);
    const Vector image = coupling.l * ones;
    const Complex lambda1 = image(0);
    const double residual = (image - lambda1 * ones).norm();
    const double tol = 1e-10 * coupling.l.norm();
    if (residual > tol)
        throw precondition_error(
            "check_synchronization: 1_n is not an eigenvector of the coupling matrix "
            "(residual " + std::to_string(residual) + " > tolerance " + std::to_string(tol) + ")");
    return lambda1;
}

/// Spec(L) with one instance of lambda1 removed.
inline std::vector<Spectrum::Entry> tested_sync_set(const CouplingMatrix& coupling,
                                                    Complex lambda1) {
    std::vector<Spectrum::Entry> entries = spectrum(coupling.l).eigenvalues;
    if (entries.empty()) return entries;
    size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < entries.size(); ++i) {
        const double dist = std::abs(entries[i].value - lambda1);
        if (dist < best) {
            best = dist;
            nearest = i;
        }
    }
    entries[nearest].multiplicity -= 1;
    if (entries[nearest].multiplicity == 0)
        entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(nearest));
    return entries;
}

} // namespace detail

/// Stability of the coupled network: Close(P, lambda) must be output-stable
/// for every lambda in Spec(L). `synchronizes` reads `stable` here.
inline SyncReport check_network_stability(const LtiSystem& sys, const CouplingMatrix& coupling,
                                          double margin) {
    sys.validate();
    coupling.validate();
    if (margin <= 0.0)
        throw precondition_error("check_network_stability: margin must be positive");

    SyncReport report;
    report.margin = margin;
    for (const auto& entry : spectrum(coupling.l).eigenvalues)
        report.per_lambda.push_back(detail::test_lambda(sys, entry.value, margin));
    report.verdict = detail::verdict_from_tests(report.per_lambda, margin);
    return report;
}

/// Synchronization criterion: Close(P, lambda) must be output-stable for
/// every lambda in Spec(L) excluding one instance of the eigenvalue of 1_n.
/// Eigenvalues with multiplicity k > 1 appear once in per_lambda but count
/// with their remaining multiplicity.
inline SyncReport check_synchronization(const LtiSystem& sys, const CouplingMatrix& coupling,
                                        double margin) {
    sys.validate();
    coupling.validate();
    if (margin <= 0.0)
        throw precondition_error("check_synchronization: margin must be positive");

    SyncReport report;
    report.margin = margin;
    report.lambda1 = detail::consensus_eigenvalue(coupling);
    for (const auto& entry : detail::tested_sync_set(coupling, *report.lambda1))
        report.per_lambda.push_back(detail::test_lambda(sys, entry.value, margin));
    report.verdict = detail::verdict_from_tests(report.per_lambda, margin);
    return report;
}

/// The (n-1) x n matrix pi * Q^{-1} with Q = [1_n | e_2 | ... | e_n]:
/// row k is e_{k+1} - e_1, so the kernel is exactly span{1_n}. Applying it
/// to stacked outputs turns trajectories into synchronization errors.
inline Matrix sync_projection(int n) {
    if (n < 2)
        throw dimension_error("sync_projection: need at least two nodes");
    Matrix p = Matrix::Zero(n - 1, n);
    for (int k = 0; k < n - 1; ++k) {
        p(k, 0) = Complex(-1.0, 0.0);
        p(k, k + 1) = Complex(1.0, 0.0);
    }
    return p;
}

} // namespace netsync
