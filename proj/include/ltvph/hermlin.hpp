#pragma once

// Dense complex Hermitian kernels: eigendecomposition, positive
// semidefiniteness with explicit tolerance, triangular factorization in the
// Q = F^H F convention, and linear solves.  Eigen does the heavy lifting;
// the contracts (orderings, tolerances, error taxonomy) live here.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "ltvph/errors.hpp"

namespace ltvph {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Hermitian matrix with symmetrization enforced at construction.  A
/// deviation beyond 1e-12*(1+|M|) is reported, smaller ones are averaged away.
class HermMatrix {
public:
    explicit HermMatrix(const Matrix& m) {
        if (m.rows() != m.cols())
            throw DimensionMismatch("HermMatrix needs a square matrix");
        const double scale = 1.0 + m.norm();
        deviation_ = (m - m.adjoint()).norm();
        if (deviation_ > 1e-12 * scale)
            throw InvariantViolation("hermitian", 0.0, deviation_);
        mat_ = 0.5 * (m + m.adjoint());
    }

    /// Accepts a matrix that is Hermitian only up to `max_relative_deviation`
    /// (e.g. quadrature output) and averages the defect away.
    static HermMatrix symmetrized(const Matrix& m, double max_relative_deviation) {
        if (m.rows() != m.cols())
            throw DimensionMismatch("HermMatrix needs a square matrix");
        const double dev = (m - m.adjoint()).norm();
        if (dev > max_relative_deviation * (1.0 + m.norm()))
            throw InvariantViolation("hermitian", 0.0, dev);
        HermMatrix out(Matrix(0.5 * (m + m.adjoint())));
        out.deviation_ = dev;
        return out;
    }

    const Matrix& matrix() const { return mat_; }
    Eigen::Index size() const { return mat_.rows(); }
    double hermitian_deviation() const { return deviation_; }

private:
    Matrix mat_;
    double deviation_ = 0.0;
};

struct EigResult {
    RealVector eigenvalues;  // ascending
    Matrix eigenvectors;     // unitary, columns
};

/// Hermitian eigendecomposition, eigenvalues ascending, V unitary.
inline EigResult herm_eig(const HermMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("hermitian eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

struct PsdResult {
    bool psd;
    double min_eig;
};

/// PSD test with relative tolerance: psd iff min_eig >= -tol*(1+|M|_2).
inline PsdResult psd_check(const HermMatrix& m, double tol) {
    if (m.size() == 0) return {true, 0.0};
    EigResult eig = herm_eig(m);
    const double min_eig = eig.eigenvalues(0);
    const double max_abs =
        std::max(std::abs(eig.eigenvalues(0)), std::abs(eig.eigenvalues(eig.eigenvalues.size() - 1)));
    return {min_eig >= -tol * (1.0 + max_abs), min_eig};
}

/// Factorization M = F^H F with F triangular with real positive diagonal,
/// built by the top-left pivot recursion
///   F = [ sqrt(a)   b/sqrt(a) ]      M = [ a    b  ]
///       [   0          F1     ],         [ b^H  M1 ],
/// so F(0,0) = sqrt(M(0,0)) and F1 factors the Schur complement.
inline Matrix cholesky(const HermMatrix& m) {
    const Eigen::Index n = m.size();
    Matrix work = m.matrix();
    Matrix f = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double pivot = work(k, k).real();
        if (pivot <= 0.0 || !std::isfinite(pivot))
            throw NotPositiveDefinite(static_cast<int>(k));
        const double root = std::sqrt(pivot);
        f(k, k) = root;
        for (Eigen::Index j = k + 1; j < n; ++j) f(k, j) = work(k, j) / root;
        for (Eigen::Index i = k + 1; i < n; ++i)
            for (Eigen::Index j = k + 1; j < n; ++j)
                work(i, j) -= std::conj(f(k, i)) * f(k, j);
    }
    return f;
}

/// General complex linear solve M X = rhs; throws SingularMatrix with a rank
/// estimate when M is (numerically) rank-deficient.
inline Matrix solve(const Matrix& m, const Matrix& rhs) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("solve needs a square matrix");
    if (m.rows() != rhs.rows())
        throw DimensionMismatch("solve rhs row count");
    Eigen::FullPivLU<Matrix> lu(m);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible())
        throw SingularMatrix(static_cast<int>(lu.rank()), static_cast<int>(m.rows()));
    return lu.solve(rhs);
}

inline double min_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

inline double spectral_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace ltvph
