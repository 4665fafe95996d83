#pragma once

// Port-Hamiltonian representations: validation of the structure constraints,
// assembly into an LTV system, canonical construction from a KYP solution,
// null-space decomposition of storage matrices, power balance verification
// and the change of variables that makes the Hamiltonian autonomous.

#include <random>
#include <vector>

#include "ltvph/dissipativity.hpp"
#include "ltvph/errors.hpp"
#include "ltvph/hermlin.hpp"
#include "ltvph/ltv.hpp"
#include "ltvph/matfun.hpp"

namespace ltvph {

struct PhRepresentation {
    MatrixFunction Q, K, J, R, G, P, S, N;
    Interval domain;

    Eigen::Index n() const { return Q.rows(); }
    Eigen::Index m() const { return S.rows(); }

    /// Passivity matrix W(t) = [[R, P], [P^H, S]](t).
    Matrix w_matrix(double t) const {
        const Eigen::Index nn = n(), mm = m();
        Matrix w(nn + mm, nn + mm);
        w.topLeftCorner(nn, nn) = R.eval_at(t);
        w.topRightCorner(nn, mm) = P.eval_at(t);
        w.bottomLeftCorner(mm, nn) = P.eval_at(t).adjoint();
        w.bottomRightCorner(mm, mm) = S.eval_at(t);
        return 0.5 * (w + w.adjoint()).eval();
    }

    /// Checks all structure constraints at the given nodes (relative
    /// tolerance): J and N skew-Hermitian, Q Hermitian PSD,
    /// Q K + K^H Q = Q', and W PSD.  Throws InvariantViolation on failure.
    void validate(const std::vector<double>& grid, double tol = 1e-9) const {
        MatrixFunction qdot = Q.derivative();
        std::set<double> excluded;
        for (double p : Q.event_points()) excluded.insert(p);
        for (const MatrixFunction* f : {&K, &J, &R, &G, &P, &S, &N})
            for (double p : f->event_points()) excluded.insert(p);
        for (double t : grid) {
            bool skip = false;
            for (double p : excluded)
                if (std::abs(t - p) <= 1e-9 * (1.0 + std::abs(t))) skip = true;
            if (skip) continue;

            const Matrix j = J.eval_at(t);
            double res = (j + j.adjoint()).norm();
            if (res > tol * (1.0 + j.norm())) throw InvariantViolation("J skew", t, res);

            const Matrix nmat = N.eval_at(t);
            res = (nmat + nmat.adjoint()).norm();
            if (res > tol * (1.0 + nmat.norm())) throw InvariantViolation("N skew", t, res);

            const Matrix q = Q.eval_at(t);
            res = (q - q.adjoint()).norm();
            if (res > tol * (1.0 + q.norm())) throw InvariantViolation("Q hermitian", t, res);
            PsdResult qp = psd_check(HermMatrix::symmetrized(q, tol), tol);
            if (!qp.psd) throw InvariantViolation("Q psd", t, qp.min_eig);

            const Matrix k = K.eval_at(t);
            const Matrix qd = qdot.eval_at(t);
            res = (q * k + k.adjoint() * q - qd).norm();
            if (res > tol * (1.0 + q.norm() * k.norm() + qd.norm()))
                throw InvariantViolation("Q K + K^H Q = Q'", t, res);

            PsdResult wp = psd_check(HermMatrix(w_matrix(t)), tol);
            if (!wp.psd) throw InvariantViolation("W psd", t, wp.min_eig);
        }
    }
};

/// A = (J - R) Q - K,  B = G - P,  C = (G + P)^H Q,  D = S - N as symbolic
/// composition of the coefficient functions.
inline LtvSystem assemble_system(const PhRepresentation& ph,
                                 const std::vector<double>& validation_grid = {},
                                 double tol = 1e-9) {
    if (!validation_grid.empty()) ph.validate(validation_grid, tol);
    MatrixFunction a = (ph.J - ph.R) * ph.Q - ph.K;
    MatrixFunction b = ph.G - ph.P;
    MatrixFunction c = adjoint(ph.G + ph.P) * ph.Q;
    MatrixFunction d = ph.S - ph.N;
    return LtvSystem(a, b, c, d, ph.domain);
}

struct PowerBalanceResult {
    double max_residual;          // worst |dH + int w - int supply| per interval
    double dissipation_integral;  // int [Qx;u]^H W [Qx;u] over the trajectory
};

/// Residual of the power balance equation in integrated form between
/// consecutive trajectory nodes, with trapezoid quadrature.
inline PowerBalanceResult power_balance_residual(const PhRepresentation& ph,
                                                 const Trajectory& traj) {
    const std::size_t N = traj.size();
    std::vector<double> ham(N), diss(N), sup(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double t = traj.grid[k];
        const Matrix q = ph.Q.eval_at(t);
        ham[k] = 0.5 * (traj.x[k].adjoint() * q * traj.x[k])(0, 0).real();
        Vector z(ph.n() + ph.m());
        z.head(ph.n()) = q * traj.x[k];
        z.tail(ph.m()) = traj.u[k];
        diss[k] = (z.adjoint() * ph.w_matrix(t) * z)(0, 0).real();
        sup[k] = (traj.y[k].adjoint() * traj.u[k])(0, 0).real();
    }
    double worst = 0.0, total_diss = 0.0;
    for (std::size_t k = 0; k + 1 < N; ++k) {
        const double h = traj.grid[k + 1] - traj.grid[k];
        const double d_int = 0.5 * h * (diss[k] + diss[k + 1]);
        const double s_int = 0.5 * h * (sup[k] + sup[k + 1]);
        worst = std::max(worst, std::abs(ham[k + 1] - ham[k] + d_int - s_int));
        total_diss += d_int;
    }
    return {worst, total_diss};
}

struct NullSpaceDecomposition {
    std::vector<double> grid;
    std::vector<Matrix> u;        // pointwise unitary, phase/order aligned
    std::vector<int> rank;        // weakly decreasing across the grid
    std::vector<Matrix> q_tilde;  // U^H Q U per node
};

/// Per-node eigendecomposition of Q with eigenvalues below rank_tol counted
/// as kernel, columns ordered range-first, and eigenvectors aligned to the
/// previous node by greedy maximal-overlap matching with phase fixing.
inline NullSpaceDecomposition null_space_decomposition(const StorageCandidate& storage,
                                                       const std::vector<double>& grid,
                                                       double rank_tol) {
    NullSpaceDecomposition out;
    out.grid = grid;
    const Eigen::Index n = storage.Q.rows();
    Matrix prev;
    for (std::size_t kidx = 0; kidx < grid.size(); ++kidx) {
        const double t = grid[kidx];
        EigResult eig = herm_eig(HermMatrix(storage.eval_q(t)));
        const double scale = std::max(1.0, std::abs(eig.eigenvalues(n - 1)));
        // descending eigenvalue order puts the range block first
        Matrix v(n, n);
        RealVector lam(n);
        for (Eigen::Index c = 0; c < n; ++c) {
            v.col(c) = eig.eigenvectors.col(n - 1 - c);
            lam(c) = eig.eigenvalues(n - 1 - c);
        }
        int r = 0;
        for (Eigen::Index c = 0; c < n; ++c)
            if (lam(c) >= rank_tol * scale) ++r;

        if (!out.rank.empty() && r > out.rank.back())
            throw RankIncreaseDetected(t, out.rank.back(), r);

        if (kidx > 0) {
            // greedy alignment against the previous node
            Matrix aligned(n, n);
            std::vector<bool> used(static_cast<std::size_t>(n), false);
            for (Eigen::Index c = 0; c < n; ++c) {
                Eigen::Index best = -1;
                double best_mag = -1.0;
                for (Eigen::Index d = 0; d < n; ++d) {
                    if (used[static_cast<std::size_t>(d)]) continue;
                    const double mag = std::abs((prev.col(c).adjoint() * v.col(d))(0, 0));
                    if (mag > best_mag) {
                        best_mag = mag;
                        best = d;
                    }
                }
                if (best_mag < 0.5) throw EigenvalueCrossingUnresolved(t);
                used[static_cast<std::size_t>(best)] = true;
                const Complex ip = (prev.col(c).adjoint() * v.col(best))(0, 0);
                const Complex phase = ip / std::abs(ip);
                aligned.col(c) = v.col(best) / phase;
            }
            v = aligned;
        }
        prev = v;
        out.u.push_back(v);
        out.rank.push_back(r);
        out.q_tilde.push_back((v.adjoint() * storage.eval_q(t) * v).eval());
    }
    return out;
}

namespace detail {

struct RankScan {
    int rank = 0;     // common rank (throws RankNotConstant otherwise)
    Matrix u;         // unitary from the first node, range columns first
};

/// Per-node rank of Q without any eigenvector alignment (only the
/// range/kernel split matters here, not continuity inside the blocks).
inline RankScan rank_scan(const StorageCandidate& storage, const std::vector<double>& grid,
                          double rank_tol) {
    RankScan out;
    const Eigen::Index n = storage.Q.rows();
    bool first = true;
    for (double t : grid) {
        EigResult eig = herm_eig(HermMatrix(storage.eval_q(t)));
        const double scale = std::max(1.0, std::abs(eig.eigenvalues(n - 1)));
        int r = 0;
        for (Eigen::Index c = 0; c < n; ++c)
            if (eig.eigenvalues(c) >= rank_tol * scale) ++r;
        if (first) {
            out.rank = r;
            out.u.resize(n, n);
            for (Eigen::Index c = 0; c < n; ++c)
                out.u.col(c) = eig.eigenvectors.col(n - 1 - c);  // descending order
            first = false;
        } else if (r != out.rank) {
            throw RankNotConstant(t, r, out.rank);
        }
    }
    if (first) throw DomainMismatch("rank scan needs a nonempty grid");
    return out;
}

/// The coefficient construction uses a *constant* unitary reordering, which
/// requires ker Q(t) to be time-invariant; verified on the grid.
inline void check_kernel_constant(const StorageCandidate& storage,
                                  const std::vector<double>& grid, const Matrix& u, int rank) {
    const Eigen::Index n = storage.Q.rows();
    if (rank == n) return;
    for (double t : grid) {
        const Matrix q = storage.eval_q(t);
        if ((q * u.rightCols(n - rank)).norm() > 1e-7 * (1.0 + q.norm()))
            throw KernelNotConstant(t);
    }
}

/// Triangular factor F(t) with Q(t) = F(t)^H F(t) as a matrix function whose
/// derivative is exact: with X := triu(F^-H Q' F^-1) taking half the
/// diagonal, F' = X F.
inline MatrixFunction chol_factor(const MatrixFunction& q) {
    const Eigen::Index n = q.rows();
    auto eval = [q](double t) -> Matrix {
        return cholesky(HermMatrix::symmetrized(q.eval_at(t), 1e-9));
    };
    std::function<MatrixFunction()> deriv = [q, eval, n]() -> MatrixFunction {
        MatrixFunction qdot = q.derivative();
        auto deval = [qdot, eval, n](double t) -> Matrix {
            const Matrix f = eval(t);
            const Matrix fh = f.adjoint();  // lower triangular
            Matrix qd = qdot.eval_at(t);
            qd = 0.5 * (qd + qd.adjoint()).eval();
            const Matrix y = fh.triangularView<Eigen::Lower>().solve(qd);  // F^-H Q'
            const Matrix full =
                fh.triangularView<Eigen::Lower>().solve(y.adjoint()).adjoint();  // F^-H Q' F^-1
            Matrix x = Matrix::Zero(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                x(i, i) = 0.5 * full(i, i);
                for (Eigen::Index j = i + 1; j < n; ++j) x(i, j) = full(i, j);
            }
            return x * f;
        };
        return MatrixFunction::from_callable(n, n, q.domain(), deval, {}, q.event_points());
    };
    return MatrixFunction::from_callable(n, n, q.domain(), eval, deriv, q.event_points());
}

}  // namespace detail

struct CanonicalPhResult {
    PhRepresentation ph;
    Matrix u;  // constant unitary reordering used
    int rank;
};

/// Builds the canonical pH representation from a KYP solution Q:
/// after reordering by a constant unitary U = [range | kernel] of Q, the
/// necessary blocks are
///   R11 = -1/2 (A11 Q11^-1 + Q11^-1 A11^H + Q11^-1 Q11' Q11^-1)
///   G1  =  1/2 (Q11^-1 C1^H + B1),   P1 = 1/2 (Q11^-1 C1^H - B1)
///   S   =  1/2 (D + D^H),            N  = 1/2 (D - D^H)
/// and the canonical free choices J12 = J22 = R12 = R22 = P2 = 0,
/// J11 = 1/2 (A11 Q11^-1 - Q11^-1 A11^H), K11 = 1/2 Q11^-1 Q11',
/// K21 = -A21, K22 = -A22.
inline CanonicalPhResult canonical_ph(const LtvSystem& sys, const StorageCandidate& storage,
                                      const std::vector<double>& grid, double tol = 1e-8) {
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();

    KypReport kyp = kyp_check(sys, storage, grid, tol);
    if (!kyp.holds) throw NotAKypSolution(kyp.worst_node, kyp.worst_value);

    detail::RankScan scan = detail::rank_scan(storage, kyp.grid, 1e-9);
    const int r = scan.rank;
    Matrix u = r < n ? scan.u : Matrix(Matrix::Identity(n, n));
    detail::check_kernel_constant(storage, kyp.grid, u, r);

    const Interval dom = sys.domain;
    const TimeExpr half(0.5);

    if (r == 0) {
        // zero storage: the KYP check already forced C = 0 and D + D^H >= 0,
        // and the whole state sits in the kernel rows (K = -A, G = B)
        for (double t : kyp.grid) {
            const double cnorm = sys.C.eval_at(t).norm();
            if (cnorm > tol * (1.0 + cnorm)) throw C2NotZero(t, cnorm);
        }
        PhRepresentation ph{
            storage.Q,
            -sys.A,
            MatrixFunction::zero(n, n, dom),
            MatrixFunction::zero(n, n, dom),
            sys.B,
            MatrixFunction::zero(n, m, dom),
            scale(half, sys.D + adjoint(sys.D)),
            scale(half, adjoint(sys.D) - sys.D),
            dom,
        };
        return {ph, Matrix(Matrix::Identity(n, n)), 0};
    }
    MatrixFunction uc = MatrixFunction::constant(u, dom);
    MatrixFunction uh = MatrixFunction::constant(u.adjoint(), dom);

    // coefficients in reordered coordinates (x = U x~)
    MatrixFunction at = uh * sys.A * uc;
    MatrixFunction bt = uh * sys.B;
    MatrixFunction ct = sys.C * uc;
    MatrixFunction qt = uh * storage.Q * uc;

    // kernel-block inclusions of a storage matrix (A12 = 0, C2 = 0)
    if (r < n) {
        for (double t : kyp.grid) {
            const double a12 = block(at, 0, r, r, n - r).eval_at(t).norm();
            if (a12 > tol * (1.0 + at.eval_at(t).norm())) throw A12NotZero(t, a12);
            const double c2 = block(ct, 0, r, m, n - r).eval_at(t).norm();
            if (c2 > tol * (1.0 + ct.eval_at(t).norm())) throw C2NotZero(t, c2);
        }
    }

    MatrixFunction a11 = block(at, 0, 0, r, r);
    MatrixFunction q11 = block(qt, 0, 0, r, r);
    MatrixFunction q11inv = inverse(q11);
    MatrixFunction q11dot = q11.derivative();
    MatrixFunction b1 = block(bt, 0, 0, r, m);
    MatrixFunction c1 = block(ct, 0, 0, m, r);

    MatrixFunction j11 = scale(half, a11 * q11inv - q11inv * adjoint(a11));
    MatrixFunction r11 =
        scale(TimeExpr(-0.5), a11 * q11inv + q11inv * adjoint(a11) + q11inv * q11dot * q11inv);
    MatrixFunction k11 = scale(half, q11inv * q11dot);
    MatrixFunction g1 = scale(half, q11inv * adjoint(c1) + b1);
    MatrixFunction p1 = scale(half, q11inv * adjoint(c1) - b1);

    MatrixFunction jt = embed(j11, 0, 0, n, n);
    MatrixFunction rt = embed(r11, 0, 0, n, n);
    MatrixFunction kt = embed(k11, 0, 0, n, n);
    MatrixFunction gt = embed(g1, 0, 0, n, m);
    MatrixFunction pt = embed(p1, 0, 0, n, m);
    if (r < n) {
        // kernel rows: A21 = -K21 and A22 = -K22 since (J-R)Q has no such rows
        kt = kt - embed(block(at, r, 0, n - r, r), r, 0, n, n) -
             embed(block(at, r, r, n - r, n - r), r, r, n, n);
        gt = gt + embed(block(bt, r, 0, n - r, m), r, 0, n, m);
    }
    // D = S - N with S Hermitian and N skew forces N = 1/2 (D^H - D)
    MatrixFunction s = scale(half, sys.D + adjoint(sys.D));
    MatrixFunction nf = scale(half, adjoint(sys.D) - sys.D);

    // back to original coordinates (constant unitary, so Z' = 0)
    PhRepresentation ph{
        storage.Q,          // U qt U^H reproduces Q; keep the original object
        uc * kt * uh,       // K
        uc * jt * uh,       // J
        uc * rt * uh,       // R
        uc * gt,            // G
        uc * pt,            // P
        s,                  // S
        nf,                 // N
        dom,
    };
    return {ph, u, r};
}

/// A KYP solution induces a pH representation; alias for canonical_ph.
inline CanonicalPhResult kyp_to_ph(const LtvSystem& sys, const StorageCandidate& storage,
                                   const std::vector<double>& grid, double tol = 1e-8) {
    return canonical_ph(sys, storage, grid, tol);
}

struct AutonomizeResult {
    MatrixFunction z;  // state transformation x = Z x~
    PhRepresentation ph_out;
};

/// Change of variables Z = U diag(V11^-1, I) with Q11 = V11^H V11 that turns
/// the Hamiltonian into 1/2 |x~_1|^2 (Q~ = diag(I_r, 0)).
inline AutonomizeResult autonomize_hamiltonian(const PhRepresentation& ph,
                                               const std::vector<double>& grid) {
    const Eigen::Index n = ph.n();
    StorageCandidate storage{ph.Q, ph.Q.derivative()};
    detail::RankScan scan = detail::rank_scan(storage, grid, 1e-9);
    const int r = scan.rank;
    Matrix u = r < n ? scan.u : Matrix(Matrix::Identity(n, n));
    detail::check_kernel_constant(storage, grid, u, r);
    const Interval dom = ph.domain;
    if (r == 0) {
        // the Hamiltonian is already identically zero; nothing to normalize
        PhRepresentation out = ph;
        out.Q = MatrixFunction::constant(Matrix::Zero(n, n), dom);
        return {MatrixFunction::identity(n, dom), out};
    }
    MatrixFunction uc = MatrixFunction::constant(u, dom);
    MatrixFunction uh = MatrixFunction::constant(u.adjoint(), dom);
    MatrixFunction q11 = block(uh * ph.Q * uc, 0, 0, r, r);
    MatrixFunction v11 = detail::chol_factor(q11);
    MatrixFunction z = uc * embed(inverse(v11), 0, 0, n, n) +
                       uc * embed(MatrixFunction::identity(n - r, dom), r, r, n, n);
    MatrixFunction zinv = inverse(z);
    MatrixFunction zdot = z.derivative();

    Matrix qtilde = Matrix::Zero(n, n);
    qtilde.topLeftCorner(r, r) = Matrix::Identity(r, r);

    PhRepresentation out{
        MatrixFunction::constant(qtilde, dom),
        zinv * (zdot + ph.K * z),
        zinv * ph.J * adjoint(zinv),
        zinv * ph.R * adjoint(zinv),
        zinv * ph.G,
        zinv * ph.P,
        ph.S,
        ph.N,
        dom,
    };
    return {z, out};
}

// --- random pH generator for property tests -------------------------------

struct RandomPhOptions {
    Eigen::Index n = 2;
    Eigen::Index m = 1;
    Eigen::Index rank = 2;  // rank of Q (<= n)
    Interval domain{0.0, 1.0};
};

namespace detail {

inline TimeExpr random_bounded_expr(std::mt19937& rng, double base_lo, double base_hi,
                                    double wiggle) {
    std::uniform_real_distribution<double> b(base_lo, base_hi);
    std::uniform_real_distribution<double> w(-wiggle, wiggle);
    std::uniform_int_distribution<int> pick(0, 2);
    auto t = TimeExpr::var();
    switch (pick(rng)) {
        case 0: return TimeExpr(b(rng)) + TimeExpr(w(rng)) * TimeExpr::sin(t);
        case 1: return TimeExpr(b(rng)) + TimeExpr(w(rng)) * TimeExpr::cos(TimeExpr(2.0) * t);
        default: return TimeExpr(b(rng)) + TimeExpr(0.5 * w(rng)) * t;
    }
}

inline Matrix random_complex(std::mt19937& rng, Eigen::Index r, Eigen::Index c, double s) {
    std::normal_distribution<double> g(0.0, s);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

}  // namespace detail

/// Draws a pH representation that satisfies every structure constraint by
/// construction: W = M^H M + eps I, J/N from skew parts of random matrices,
/// Q = diag(L^H L, 0) with L triangular with positive diagonal expressions,
/// K11 = 1/2 Q11^-1 Q11' (kernel rows of K free).
inline PhRepresentation random_ph(std::mt19937& rng, const RandomPhOptions& opt) {
    const Eigen::Index n = opt.n, m = opt.m, r = opt.rank;
    const Interval dom = opt.domain;

    // triangular L with positive diagonal entries bounded away from zero
    std::vector<TimeExpr> lentries(static_cast<std::size_t>(r * r), TimeExpr(0.0));
    for (Eigen::Index i = 0; i < r; ++i) {
        lentries[i * r + i] = detail::random_bounded_expr(rng, 0.8, 1.6, 0.3);
        for (Eigen::Index j = i + 1; j < r; ++j)
            lentries[i * r + j] = detail::random_bounded_expr(rng, -0.3, 0.3, 0.2);
    }
    MatrixFunction l = MatrixFunction::from_exprs(r, r, std::move(lentries), dom);
    MatrixFunction q11 = adjoint(l) * l;
    MatrixFunction q = embed(q11, 0, 0, n, n);

    // W = M^H M + eps I  >=  eps I
    Matrix mrand = detail::random_complex(rng, n + m, n + m, 0.5);
    Matrix w = mrand.adjoint() * mrand + 0.05 * Matrix::Identity(n + m, n + m);
    MatrixFunction rmat = MatrixFunction::constant(w.topLeftCorner(n, n), dom);
    MatrixFunction pmat = MatrixFunction::constant(w.topRightCorner(n, m), dom);
    MatrixFunction smat = MatrixFunction::constant(w.bottomRightCorner(m, m), dom);

    Matrix jraw = detail::random_complex(rng, n, n, 0.7);
    MatrixFunction jmat = MatrixFunction::constant(0.5 * (jraw - jraw.adjoint()), dom);
    Matrix nraw = detail::random_complex(rng, m, m, 0.5);
    MatrixFunction nmat = MatrixFunction::constant(0.5 * (nraw - nraw.adjoint()), dom);
    MatrixFunction gmat = MatrixFunction::constant(detail::random_complex(rng, n, m, 0.8), dom);

    MatrixFunction k = embed(scale(TimeExpr(0.5), inverse(q11) * q11.derivative()), 0, 0, n, n);
    if (r < n) {
        Matrix kfree = detail::random_complex(rng, n - r, n, 0.5);
        k = k + embed(MatrixFunction::constant(kfree, dom), r, 0, n, n);
    }
    return PhRepresentation{q, k, jmat, rmat, gmat, pmat, smat, nmat, dom};
}

}  // namespace ltvph
