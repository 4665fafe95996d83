#pragma once

// Galerkin discretization of the Popov operator on piecewise-constant inputs,
// nonnegative-supply testing via the spectrum of the resulting Gram matrix,
// the transfer operator, and the supply identity linking the two routes.

#include <optional>
#include <ostream>
#include <vector>

#include "ltvph/errors.hpp"
#include "ltvph/hermlin.hpp"
#include "ltvph/ltv.hpp"

namespace ltvph {

/// Midpoint-cell discretization of the Popov operator on [t_a, t_b]:
/// block (i,j), i > j, is h C(t_i) Phi(t_i, t_j) B(t_j); block (j,i) its
/// adjoint; diagonal blocks are (D + D^H)(t_i) + h sym(C B)(t_i).  For cell
/// averages u_bar the quadratic form (h/2) u_bar^H M u_bar approximates half
/// the Popov inner product, i.e. the supply from rest.
struct PopovGram {
    double t_a = 0.0, t_b = 0.0;
    double h = 0.0;
    std::vector<double> grid;       // cell midpoints
    Eigen::Index m = 0;
    Matrix matrix;                  // (N m) x (N m), Hermitian
    std::vector<Matrix> phi_mid;    // Phi(t_i, t_a) per midpoint
};

inline PopovGram popov_gram(const LtvSystem& sys, double t_a, double t_b, std::size_t cells,
                            double rtol = 1e-8) {
    if (cells < 2) throw DomainMismatch("popov_gram needs at least 2 cells");
    if (!(t_a < t_b)) throw DomainMismatch("popov_gram needs t_a < t_b");
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();
    PopovGram g;
    g.t_a = t_a;
    g.t_b = t_b;
    g.h = (t_b - t_a) / static_cast<double>(cells);
    g.m = m;
    for (std::size_t i = 0; i < cells; ++i)
        g.grid.push_back(t_a + (static_cast<double>(i) + 0.5) * g.h);

    // one sweep collects Phi(t_i, t_a) at every midpoint; the cocycle
    // Phi(t_i, t_j) = Phi(t_i, t_a) Phi(t_j, t_a)^-1 fills the kernel cache
    OdeRhs rhs = [&sys, n](double tau, const Vector& y) -> Vector {
        Eigen::Map<const Matrix> phi(y.data(), n, n);
        Matrix dphi = sys.A.eval_at(tau) * phi;
        return Eigen::Map<Vector>(dphi.data(), n * n);
    };
    Matrix id = Matrix::Identity(n, n);
    Vector y0 = Eigen::Map<Vector>(id.data(), n * n);
    std::vector<double> required{t_a};
    required.insert(required.end(), g.grid.begin(), g.grid.end());
    OdeOptions opt;
    opt.rtol = rtol * 1e-2;
    opt.atol = rtol * 1e-4;
    g.phi_mid.reserve(cells + 1);
    integrate(rhs, y0, required, sys.event_points(), opt, [&](double, const Vector& y) {
        g.phi_mid.emplace_back(Eigen::Map<const Matrix>(y.data(), n, n));
    });
    g.phi_mid.erase(g.phi_mid.begin());  // drop the t_a sample

    std::vector<Matrix> cmat(cells), bmat(cells), phi_inv_b(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        cmat[i] = sys.C.eval_at(g.grid[i]);
        bmat[i] = sys.B.eval_at(g.grid[i]);
        phi_inv_b[i] = solve(g.phi_mid[i], bmat[i]);  // Phi(t_a, t_i) B(t_i)
    }

    const Eigen::Index dim = static_cast<Eigen::Index>(cells) * m;
    g.matrix = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < cells; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            Matrix blockij = g.h * (cmat[i] * (g.phi_mid[i] * phi_inv_b[j]));
            g.matrix.block(static_cast<Eigen::Index>(i) * m, static_cast<Eigen::Index>(j) * m,
                           m, m) = blockij;
            g.matrix.block(static_cast<Eigen::Index>(j) * m, static_cast<Eigen::Index>(i) * m,
                           m, m) = blockij.adjoint();
        }
        Matrix d = sys.D.eval_at(g.grid[i]);
        Matrix cb = cmat[i] * bmat[i];
        g.matrix.block(static_cast<Eigen::Index>(i) * m, static_cast<Eigen::Index>(i) * m, m,
                       m) = d + d.adjoint() + 0.5 * g.h * (cb + cb.adjoint());
    }
    return g;
}

struct NnResult {
    bool nn;
    double min_eig;
    // Necessary-condition screen: D + D^H must be PSD at every node; a
    // violating node is reported here.
    std::optional<double> d_witness;
    double d_min_eig = 0.0;
};

// PSD of the full Gram matrix already covers every cell-aligned subwindow of
// [t_a, t_b]: the subwindow Gram is a principal submatrix.

inline NnResult nonnegative_supply_check(const LtvSystem& sys, const PopovGram& gram,
                                         double tol) {
    NnResult out{true, 0.0, std::nullopt, 0.0};
    for (double t : gram.grid) {
        Matrix d = sys.D.eval_at(t);
        PsdResult pr = psd_check(HermMatrix::symmetrized(d + d.adjoint(), 1e-10), tol);
        if (!pr.psd && (!out.d_witness || pr.min_eig < out.d_min_eig)) {
            out.d_witness = t;
            out.d_min_eig = pr.min_eig;
        }
    }
    PsdResult pr = psd_check(HermMatrix::symmetrized(gram.matrix, 1e-10), tol);
    out.min_eig = pr.min_eig;
    out.nn = pr.psd && !out.d_witness;
    return out;
}

/// Z_{t0} u sampled on the grid: the zero-state response y.
inline std::vector<Vector> transfer_apply(const LtvSystem& sys, double t0,
                                          const MatrixFunction& u,
                                          const std::vector<double>& grid,
                                          double rtol = 1e-8) {
    Trajectory traj = simulate(sys, t0, Vector::Zero(sys.n()), u, grid, rtol);
    return traj.y;
}

struct SupplyIdentityResult {
    double supply_sim;
    double supply_gram;
    double gap;
};

/// Both routes to the supply from rest: time-domain quadrature along the
/// simulated trajectory vs the Popov quadratic form (h/2) u^H M u.
inline SupplyIdentityResult popov_supply_identity(const LtvSystem& sys, const MatrixFunction& u,
                                                  double t_a, double t_b, std::size_t cells,
                                                  double rtol = 1e-8) {
    PopovGram gram = popov_gram(sys, t_a, t_b, cells, rtol);
    Vector ubar(gram.matrix.rows());
    for (std::size_t i = 0; i < gram.grid.size(); ++i)
        ubar.segment(static_cast<Eigen::Index>(i) * gram.m, gram.m) =
            u.eval_at(gram.grid[i]).col(0);
    const double supply_gram = 0.5 * gram.h * (ubar.adjoint() * gram.matrix * ubar)(0, 0).real();

    // simulation route on a fine fixed grid so the comparison error is
    // dominated by the Gram discretization
    const std::size_t sim_nodes = 4001;
    Trajectory traj =
        simulate(sys, t_a, Vector::Zero(sys.n()), u, uniform_grid(t_a, t_b, sim_nodes), rtol);
    const double supply_sim = supply(traj, t_a, t_b);
    return {supply_sim, supply_gram, std::abs(supply_sim - supply_gram)};
}

inline void write_gram_dump(const PopovGram& gram, std::ostream& os) {
    os.precision(17);
    for (Eigen::Index i = 0; i < gram.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < gram.matrix.cols(); ++j) {
            if (j) os << " ";
            os << gram.matrix(i, j).real() << " " << gram.matrix(i, j).imag();
        }
        os << "\n";
    }
}

inline void write_gram_eigs_csv(const PopovGram& gram, std::ostream& os) {
    EigResult eig = herm_eig(HermMatrix::symmetrized(gram.matrix, 1e-10));
    os << "index,eigenvalue\n";
    os.precision(17);
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k)
        os << k << "," << eig.eigenvalues(k) << "\n";
}

}  // namespace ltvph
