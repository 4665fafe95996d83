#pragma once

// The LTV state-space model x' = A(t)x + B(t)u, y = C(t)x + D(t)u together
// with state-transition matrices, trajectory simulation, supply integrals and
// a reachability Gramian.

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "ltvph/errors.hpp"
#include "ltvph/hermlin.hpp"
#include "ltvph/matfun.hpp"
#include "ltvph/ode.hpp"

namespace ltvph {

struct LtvSystem {
    MatrixFunction A, B, C, D;
    Interval domain;

    LtvSystem(MatrixFunction A_, MatrixFunction B_, MatrixFunction C_, MatrixFunction D_,
              Interval domain_)
        : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)),
          domain(domain_) {
        const Eigen::Index n = A.rows();
        const Eigen::Index m = B.cols();
        if (A.cols() != n) throw DimensionMismatch("A must be square");
        if (B.rows() != n) throw DimensionMismatch("B must have n rows");
        if (C.cols() != n || C.rows() != m) throw DimensionMismatch("C must be m x n");
        if (D.rows() != m || D.cols() != m) throw DimensionMismatch("D must be m x m");
        for (const MatrixFunction* f : {&A, &B, &C, &D})
            if (!f->domain().contains(domain.lo) || !f->domain().contains(domain.hi))
                throw DomainMismatch("coefficient not defined on the declared system domain");
    }

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }

    /// Discontinuity locations of all four coefficients inside the domain.
    std::vector<double> event_points() const {
        std::set<double> pts;
        for (const MatrixFunction* f : {&A, &B, &C, &D})
            for (double p : f->event_points()) pts.insert(p);
        return {pts.begin(), pts.end()};
    }
};

struct Trajectory {
    std::vector<double> grid;     // strictly increasing
    std::vector<double> weights;  // trapezoid weights per node
    std::vector<Vector> x;
    std::vector<Vector> u;
    std::vector<Vector> y;

    std::size_t size() const { return grid.size(); }

    std::size_t index_of(double t) const {
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (std::abs(grid[k] - t) <= 1e-12 * (1.0 + std::abs(t))) return k;
        throw NodesNotOnGrid(t);
    }
};

inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double h = grid[k + 1] - grid[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    return w;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t nodes) {
    std::vector<double> g(nodes);
    for (std::size_t k = 0; k < nodes; ++k)
        g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nodes - 1);
    return g;
}

/// Phi(t, s): adaptive integration of dPhi/dt = A(t)Phi from s to t,
/// Phi(s, s) = I exactly.  `rtol` is the target accuracy of the result; the
/// integrator runs at a tighter local tolerance so accumulated global error
/// stays within it.
inline Matrix state_transition(const LtvSystem& sys, double t, double s, double rtol = 1e-8) {
    const Eigen::Index n = sys.n();
    if (t == s) return Matrix::Identity(n, n);
    OdeRhs rhs = [&sys, n](double tau, const Vector& y) -> Vector {
        Eigen::Map<const Matrix> phi(y.data(), n, n);
        Matrix dphi = sys.A.eval_at(tau) * phi;
        return Eigen::Map<Vector>(dphi.data(), n * n);
    };
    Matrix id = Matrix::Identity(n, n);
    Vector y0 = Eigen::Map<Vector>(id.data(), n * n);
    OdeOptions opt;
    opt.rtol = rtol * 1e-2;
    opt.atol = rtol * 1e-4;
    Matrix out(n, n);
    integrate(rhs, y0, {s, t}, sys.A.event_points(), opt,
              [&out, n](double, const Vector& y) {
                  out = Eigen::Map<const Matrix>(y.data(), n, n);
              });
    return out;
}

/// Simulates the system on the given sample grid (grid[0] = t0).  The output
/// equation holds at every node by construction.
inline Trajectory simulate(const LtvSystem& sys, double t0, const Vector& x0,
                           const MatrixFunction& u, const std::vector<double>& grid,
                           double rtol = 1e-8) {
    if (grid.empty() || std::abs(grid.front() - t0) > 1e-12 * (1.0 + std::abs(t0)))
        throw DimensionMismatch("grid must start at t0");
    if (x0.size() != sys.n()) throw DimensionMismatch("x0 size");
    if (u.rows() != sys.m() || u.cols() != 1) throw DimensionMismatch("input must be m x 1");
    if (!x0.allFinite()) throw Error("x0 must be finite");

    OdeRhs rhs = [&sys, &u](double t, const Vector& x) -> Vector {
        return sys.A.eval_at(t) * x + sys.B.eval_at(t) * u.eval_at(t).col(0);
    };
    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = rtol * 1e-2;

    std::vector<double> events = sys.event_points();
    for (double p : u.event_points()) events.push_back(p);

    Trajectory traj;
    traj.grid = grid;
    traj.weights = trapezoid_weights(grid);
    traj.x.reserve(grid.size());
    traj.u.reserve(grid.size());
    traj.y.reserve(grid.size());
    integrate(rhs, x0, grid, events, opt, [&](double t, const Vector& x) {
        Vector ut = u.eval_at(t).col(0);
        traj.x.push_back(x);
        traj.u.push_back(ut);
        traj.y.push_back(sys.C.eval_at(t) * x + sys.D.eval_at(t) * ut);
    });
    return traj;
}

/// Integral of Re(y^H u) over [t_a, t_b] by trapezoid quadrature on the
/// trajectory grid; t_a and t_b must be grid nodes.
inline double supply(const Trajectory& traj, double t_a, double t_b) {
    const std::size_t ka = traj.index_of(t_a);
    const std::size_t kb = traj.index_of(t_b);
    if (ka > kb) throw NodesNotOnGrid(t_b);
    double acc = 0.0;
    auto integrand = [&traj](std::size_t k) {
        return (traj.y[k].adjoint() * traj.u[k])(0, 0).real();
    };
    for (std::size_t k = ka; k < kb; ++k)
        acc += 0.5 * (traj.grid[k + 1] - traj.grid[k]) * (integrand(k) + integrand(k + 1));
    return acc;
}

struct GramianResult {
    HermMatrix gramian;
    double min_eig;
    bool reachable;
};

/// W_R = int Phi(t_b,s) B(s) B(s)^H Phi(t_b,s)^H ds on a trapezoid grid of
/// `nodes` points; reachable iff min_eig(W_R) > tol.
inline GramianResult reachability_gramian(const LtvSystem& sys, double t_a, double t_b,
                                          std::size_t nodes, double tol = 1e-9,
                                          double rtol = 1e-8) {
    if (!(t_a < t_b)) throw DomainMismatch("gramian needs t_a < t_b");
    const Eigen::Index n = sys.n();
    // backward sweep M(s) = Phi(t_b, s):  dM/ds = -M A(s),  M(t_b) = I
    OdeRhs rhs = [&sys, n](double s, const Vector& y) -> Vector {
        Eigen::Map<const Matrix> m(y.data(), n, n);
        Matrix dm = -(m * sys.A.eval_at(s));
        return Eigen::Map<Vector>(dm.data(), n * n);
    };
    Matrix id = Matrix::Identity(n, n);
    Vector y0 = Eigen::Map<Vector>(id.data(), n * n);
    OdeOptions opt;
    opt.rtol = rtol;
    opt.atol = rtol * 1e-2;

    std::vector<double> g = uniform_grid(t_b, t_a, nodes);  // descending
    std::vector<double> w = trapezoid_weights(uniform_grid(t_a, t_b, nodes));
    Matrix acc = Matrix::Zero(n, n);
    std::size_t k = 0;
    integrate(rhs, y0, g, sys.event_points(), opt, [&](double s, const Vector& y) {
        Eigen::Map<const Matrix> m(y.data(), n, n);
        Matrix mb = m * sys.B.eval_at(s);
        acc += w[w.size() - 1 - k] * (mb * mb.adjoint());
        ++k;
    });
    acc = 0.5 * (acc + acc.adjoint()).eval();
    HermMatrix wr(acc);
    auto pr = psd_check(wr, tol);
    return {wr, pr.min_eig, pr.min_eig > tol * (1.0 + acc.norm())};
}

inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    const Eigen::Index n = traj.x.empty() ? 0 : traj.x.front().size();
    const Eigen::Index m = traj.u.empty() ? 0 : traj.u.front().size();
    os << "t";
    for (Eigen::Index j = 0; j < n; ++j) os << ",x" << (j + 1) << "_re,x" << (j + 1) << "_im";
    for (Eigen::Index j = 0; j < m; ++j) os << ",u" << (j + 1) << "_re,u" << (j + 1) << "_im";
    for (Eigen::Index j = 0; j < m; ++j) os << ",y" << (j + 1) << "_re,y" << (j + 1) << "_im";
    os << "\n";
    os.precision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << traj.grid[k];
        for (Eigen::Index j = 0; j < n; ++j)
            os << "," << traj.x[k](j).real() << "," << traj.x[k](j).imag();
        for (Eigen::Index j = 0; j < m; ++j)
            os << "," << traj.u[k](j).real() << "," << traj.u[k](j).imag();
        for (Eigen::Index j = 0; j < m; ++j)
            os << "," << traj.y[k](j).real() << "," << traj.y[k](j).imag();
        os << "\n";
    }
}

}  // namespace ltvph
