#pragma once

// Differential and integral KYP inequalities, quadratic-storage dissipation
// checks along trajectories, the backward Riccati differential equation and
// finite-horizon available storage.

#include <limits>
#include <ostream>
#include <vector>

#include "ltvph/errors.hpp"
#include "ltvph/hermlin.hpp"
#include "ltvph/ltv.hpp"
#include "ltvph/matfun.hpp"
#include "ltvph/ode.hpp"

namespace ltvph {

/// Candidate storage matrix Q with its exact derivative.  Q(t) must evaluate
/// Hermitian to 1e-10 relative; checks symmetrize the remaining defect.
struct StorageCandidate {
    MatrixFunction Q;
    MatrixFunction Qdot;

    static StorageCandidate from(const MatrixFunction& q) {
        if (q.rows() != q.cols()) throw DimensionMismatch("storage matrix must be square");
        return {q, q.derivative()};
    }

    Matrix eval_q(double t) const {
        return HermMatrix::symmetrized(Q.eval_at(t), 1e-10).matrix();
    }
    Matrix eval_qdot(double t) const {
        return HermMatrix::symmetrized(Qdot.eval_at(t), 1e-10).matrix();
    }

    /// Points at which Qdot is not defined (piecewise boundaries, kinks).
    std::vector<double> excluded_points() const {
        std::set<double> pts;
        for (double p : Q.event_points()) pts.insert(p);
        for (double p : Qdot.event_points()) pts.insert(p);
        return {pts.begin(), pts.end()};
    }
};

/// The (n+m) x (n+m) KYP block matrix
///   [ -A^H Q - Q A - Q'   C^H - Q B ]
///   [  C - B^H Q          D + D^H   ]
/// evaluated at t.
inline HermMatrix kyp_matrix(const LtvSystem& sys, const StorageCandidate& storage, double t) {
    for (double p : storage.excluded_points())
        if (std::abs(t - p) <= 1e-12 * (1.0 + std::abs(t)))
            throw NonDifferentiablePoint(t, "Q' is not defined here");
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    const Matrix a = sys.A.eval_at(t);
    const Matrix b = sys.B.eval_at(t);
    const Matrix c = sys.C.eval_at(t);
    const Matrix d = sys.D.eval_at(t);
    const Matrix q = storage.eval_q(t);
    const Matrix qd = storage.eval_qdot(t);

    Matrix out(n + m, n + m);
    Matrix tl = -(a.adjoint() * q) - q * a - qd;
    Matrix tr = c.adjoint() - q * b;
    out.topLeftCorner(n, n) = 0.5 * (tl + tl.adjoint());
    out.topRightCorner(n, m) = tr;
    out.bottomLeftCorner(m, n) = tr.adjoint();
    Matrix br = d + d.adjoint();
    out.bottomRightCorner(m, m) = 0.5 * (br + br.adjoint());
    return HermMatrix(out);
}

struct KypReport {
    std::vector<double> grid;        // nodes actually checked (excluded points removed)
    std::vector<double> kyp_min_eig; // per node
    bool holds = false;              // KYP matrix PSD and Q PSD at every node
    bool q_psd = false;
    double worst_node = 0.0;
    double worst_value = std::numeric_limits<double>::infinity();
};

/// Grid-sampled proxy for the a.e. pointwise KYP inequality.
inline KypReport kyp_check(const LtvSystem& sys, const StorageCandidate& storage,
                           const std::vector<double>& grid, double tol) {
    KypReport report;
    report.holds = true;
    report.q_psd = true;
    const auto excluded = storage.excluded_points();
    for (double t : grid) {
        bool skip = false;
        for (double p : excluded)
            if (std::abs(t - p) <= 1e-9 * (1.0 + std::abs(t))) skip = true;
        if (skip) continue;
        HermMatrix k = kyp_matrix(sys, storage, t);
        PsdResult pr = psd_check(k, tol);
        report.grid.push_back(t);
        report.kyp_min_eig.push_back(pr.min_eig);
        if (!pr.psd) report.holds = false;
        if (pr.min_eig < report.worst_value) {
            report.worst_value = pr.min_eig;
            report.worst_node = t;
        }
        PsdResult qr = psd_check(HermMatrix(storage.eval_q(t)), tol);
        if (!qr.psd) {
            report.q_psd = false;
            report.holds = false;
        }
    }
    return report;
}

inline void write_kyp_csv(const KypReport& report, std::ostream& os) {
    os << "t,min_eig\n";
    os.precision(17);
    for (std::size_t k = 0; k < report.grid.size(); ++k)
        os << report.grid[k] << "," << report.kyp_min_eig[k] << "\n";
}

struct IntegralKypResult {
    bool holds;
    double min_eig;
};

/// PSD test of the block matrix of integrated coefficients with
/// Q(t_a) - Q(t_b) added to the top-left block.  Quadrature is trapezoid on
/// `nodes` uniform points, split at coefficient discontinuities.
inline IntegralKypResult integral_kyp_check(const LtvSystem& sys, const StorageCandidate& storage,
                                            double t_a, double t_b, std::size_t nodes,
                                            double tol) {
    if (t_a > t_b) throw DomainMismatch("integral KYP needs t_a <= t_b");
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();

    auto node_matrix = [&](double t) {
        const Matrix a = sys.A.eval_at(t);
        const Matrix b = sys.B.eval_at(t);
        const Matrix c = sys.C.eval_at(t);
        const Matrix d = sys.D.eval_at(t);
        const Matrix q = storage.eval_q(t);
        Matrix out(n + m, n + m);
        Matrix tl = -(a.adjoint() * q) - q * a;
        Matrix tr = c.adjoint() - q * b;
        out.topLeftCorner(n, n) = 0.5 * (tl + tl.adjoint());
        out.topRightCorner(n, m) = tr;
        out.bottomLeftCorner(m, n) = tr.adjoint();
        out.bottomRightCorner(m, m) = d + d.adjoint();
        return out;
    };

    // merge uniform nodes with two-sided samples around discontinuities
    std::vector<double> g = uniform_grid(t_a, t_b, std::max<std::size_t>(nodes, 2));
    std::set<double> all(g.begin(), g.end());
    std::set<double> jumps;
    for (const MatrixFunction* f : {&sys.A, &sys.B, &sys.C, &sys.D, &storage.Q})
        for (double p : f->event_points()) jumps.insert(p);
    for (double p : jumps) {
        if (p <= t_a || p >= t_b) continue;
        const double eps = 1e-11 * (1.0 + std::abs(p));
        all.insert(p - eps);
        all.insert(p + eps);
    }
    std::vector<double> merged(all.begin(), all.end());

    Matrix acc = Matrix::Zero(n + m, n + m);
    Matrix prev = node_matrix(merged.front());
    for (std::size_t k = 1; k < merged.size(); ++k) {
        Matrix cur = node_matrix(merged[k]);
        acc += 0.5 * (merged[k] - merged[k - 1]) * (prev + cur);
        prev = cur;
    }
    acc.topLeftCorner(n, n) += storage.eval_q(t_a) - storage.eval_q(t_b);
    PsdResult pr = psd_check(HermMatrix::symmetrized(acc, 1e-10), tol);
    return {pr.psd, pr.min_eig};
}

struct DissipationResult {
    bool passive_on_trajectory;
    double worst_violation;  // max over node pairs t0 <= t1 of dV - supply
};

/// Checks V(t1, x(t1)) - V(t0, x(t0)) <= int Re(y^H u) over every node pair.
inline DissipationResult dissipation_check(const Trajectory& traj,
                                           const StorageCandidate& storage, double tol) {
    const std::size_t N = traj.size();
    if (N == 0) return {true, 0.0};
    std::vector<double> v(N), s(N, 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        Matrix q = storage.eval_q(traj.grid[k]);
        v[k] = 0.5 * (traj.x[k].adjoint() * q * traj.x[k])(0, 0).real();
    }
    auto integrand = [&traj](std::size_t k) {
        return (traj.y[k].adjoint() * traj.u[k])(0, 0).real();
    };
    for (std::size_t k = 1; k < N; ++k)
        s[k] = s[k - 1] +
               0.5 * (traj.grid[k] - traj.grid[k - 1]) * (integrand(k - 1) + integrand(k));

    double worst = -std::numeric_limits<double>::infinity();
    double run_min = v[0] - s[0];
    for (std::size_t k = 0; k < N; ++k) {
        const double d = v[k] - s[k];
        worst = std::max(worst, d - run_min);
        run_min = std::min(run_min, d);
    }
    return {worst <= tol, worst};
}

/// Backward integration of the Riccati differential equation
///   Q' = -A^H Q - Q A - (C^H - Q B)(D + D^H)^{-1}(C - B^H Q)
/// from Q(t_end) = Q_end down to t_start.  Requires D + D^H uniformly
/// positive definite on the window.  The result is a cubic Hermite dense
/// output over the accepted integration steps.
inline StorageCandidate rde_integrate(const LtvSystem& sys, double t_end, const Matrix& q_end,
                                      double t_start, double rtol = 1e-8) {
    if (!(t_start < t_end)) throw DomainMismatch("rde_integrate needs t_start < t_end");
    const Eigen::Index n = sys.n();
    if (q_end.rows() != n || q_end.cols() != n) throw DimensionMismatch("Q_end shape");

    // uniform positivity screen for D + D^H on a sample grid plus jump sides
    {
        std::set<double> probe;
        for (double t : uniform_grid(t_start, t_end, 65)) probe.insert(t);
        for (double p : sys.D.event_points()) {
            const double eps = 1e-9 * (1.0 + std::abs(p));
            if (p - eps > t_start && p - eps < t_end) probe.insert(p - eps);
            if (p + eps > t_start && p + eps < t_end) probe.insert(p + eps);
        }
        for (double t : probe) {
            Matrix d = sys.D.eval_at(t);
            PsdResult pr = psd_check(HermMatrix::symmetrized(d + d.adjoint(), 1e-10), 0.0);
            if (pr.min_eig <= 1e-10 * (1.0 + d.norm()))
                throw DPlusDHNotUniformlyPositive(t, pr.min_eig);
        }
    }

    OdeRhs rhs = [&sys, n](double t, const Vector& y) -> Vector {
        Eigen::Map<const Matrix> qraw(y.data(), n, n);
        Matrix q = 0.5 * (qraw + qraw.adjoint());
        const Matrix a = sys.A.eval_at(t);
        const Matrix b = sys.B.eval_at(t);
        const Matrix c = sys.C.eval_at(t);
        const Matrix d = sys.D.eval_at(t);
        Matrix dh = d + d.adjoint();
        Matrix w = c - b.adjoint() * q;                  // (C - B^H Q)
        Matrix rq = -(a.adjoint() * q) - q * a - w.adjoint() * solve(dh, w);
        rq = 0.5 * (rq + rq.adjoint()).eval();
        return Eigen::Map<Vector>(rq.data(), n * n);
    };

    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = rtol * 1e-2;
    Matrix q0m = 0.5 * (q_end + q_end.adjoint());
    Vector y0 = Eigen::Map<Vector>(q0m.data(), n * n);
    DenseRecord dense;
    try {
        integrate(rhs, y0, {t_end, t_start}, sys.event_points(), opt, {}, &dense);
    } catch (const IntegrationFailure& e) {
        throw BlowUp(e.t);
    }

    const std::size_t K = dense.t.size();
    std::vector<double> knots(K);
    std::vector<Matrix> values(K), slopes(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t r = K - 1 - k;  // reverse into ascending time
        knots[k] = dense.t[r];
        Eigen::Map<const Matrix> qm(dense.y[r].data(), n, n);
        Eigen::Map<const Matrix> fm(dense.f[r].data(), n, n);
        values[k] = 0.5 * (qm + qm.adjoint());
        slopes[k] = 0.5 * (fm + fm.adjoint());
    }
    MatrixFunction q = MatrixFunction::hermite_spline(std::move(knots), std::move(values),
                                                      std::move(slopes));
    return StorageCandidate{q, q.derivative()};
}

struct AvailableStorageDiag {
    Matrix q_at_t;          // Riccati solution at the evaluation time
    double q_change;        // norm of change vs the half-horizon solution
};

/// Finite-horizon available storage 0.5 x^H Q_a(t) x with Q_a from the
/// backward RDE with terminal value 0 at t + horizon.  Nondecreasing in the
/// horizon; `diag`, when given, reports the continuation increment against
/// the half-horizon solution.
inline double available_storage(const LtvSystem& sys, double t, const Vector& x, double horizon,
                                double rtol = 1e-8, AvailableStorageDiag* diag = nullptr) {
    if (x.size() != sys.n()) throw DimensionMismatch("state size");
    if (!(horizon > 0.0)) throw DomainMismatch("horizon must be positive");
    const Matrix zero = Matrix::Zero(sys.n(), sys.n());
    StorageCandidate qa = rde_integrate(sys, t + horizon, zero, t, rtol);
    Matrix q_at_t = qa.eval_q(t);
    if (diag) {
        StorageCandidate half = rde_integrate(sys, t + 0.5 * horizon, zero, t, rtol);
        diag->q_at_t = q_at_t;
        diag->q_change = (q_at_t - half.eval_q(t)).norm();
    }
    return 0.5 * (x.adjoint() * q_at_t * x)(0, 0).real();
}

}  // namespace ltvph
