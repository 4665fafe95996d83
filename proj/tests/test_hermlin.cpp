#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ltvph/hermlin.hpp"

using namespace ltvph;
using Catch::Approx;

namespace {

Matrix random_hermitian(std::mt19937& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (m + m.adjoint()).eval();
}

// Sylvester criterion oracle for small matrices: PD iff all leading principal
// minors positive; PSD via shift continuity (M + eps I PD for all eps > 0).
Complex det_small(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

bool pd_by_minors(const Matrix& m) {
    for (int k = 1; k <= m.rows(); ++k)
        if (det_small(m.topLeftCorner(k, k)).real() <= 0.0) return false;
    return true;
}

bool psd_by_minors(const Matrix& m) {
    // M is PSD iff M + eps I is PD for every eps > 0; test a decreasing ladder
    for (double eps : {1e-2, 1e-4, 1e-6, 1e-8})
        if (!pd_by_minors(m + eps * Matrix::Identity(m.rows(), m.cols())))
            return false;
    return true;
}

}  // namespace

TEST_CASE("herm_eig on references") {
    Matrix i2 = Matrix::Identity(2, 2);
    auto e = herm_eig(HermMatrix(i2));
    CHECK(e.eigenvalues(0) == Approx(1.0));
    CHECK(e.eigenvalues(1) == Approx(1.0));

    Matrix m(2, 2);
    m << Complex(2, 0), Complex(1, 0), Complex(1, 0), Complex(2, 0);
    e = herm_eig(HermMatrix(m));
    CHECK(e.eigenvalues(0) == Approx(1.0));  // roots of (2-l)^2 - 1
    CHECK(e.eigenvalues(1) == Approx(3.0));

    Matrix p(2, 2);
    p << Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(0, 0);
    e = herm_eig(HermMatrix(p));
    CHECK(e.eigenvalues(0) == Approx(-1.0));  // char poly l^2 - 1
    CHECK(e.eigenvalues(1) == Approx(1.0));
    CHECK((e.eigenvectors.adjoint() * e.eigenvectors - i2).norm() < 1e-10);
}

TEST_CASE("herm_eig reconstruction on random matrices") {
    std::mt19937 rng(31);
    for (int n : {2, 5, 17, 50}) {
        Matrix m = random_hermitian(rng, n);
        auto e = herm_eig(HermMatrix(m));
        Matrix rec = e.eigenvectors * e.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>() *
                     e.eigenvectors.adjoint();
        CHECK((rec - m).norm() <= 1e-9 * (1.0 + m.norm()));
        for (int k = 1; k < n; ++k) CHECK(e.eigenvalues(k - 1) <= e.eigenvalues(k));
        CHECK((e.eigenvectors.adjoint() * e.eigenvectors - Matrix::Identity(n, n)).norm() < 1e-10);
    }
}

TEST_CASE("psd_check basics") {
    Matrix d(2, 2);
    d << 1, 0, 0, 0;
    auto r = psd_check(HermMatrix(d), 1e-9);
    CHECK(r.psd);
    CHECK(r.min_eig == Approx(0.0).margin(1e-14));

    d(1, 1) = -1e-3;
    r = psd_check(HermMatrix(d), 1e-9);
    CHECK_FALSE(r.psd);

    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    r = psd_check(HermMatrix(m), 1e-9);
    CHECK(r.psd);
    CHECK(r.min_eig == Approx(1.0));
}

TEST_CASE("psd_check agrees with principal-minor oracle") {
    std::mt19937 rng(77);
    std::normal_distribution<double> g(0.0, 1.0);
    int disagreements = 0;
    for (int trial = 0; trial < 400; ++trial) {
        int n = (trial % 2) ? 2 : 3;
        Matrix m = random_hermitian(rng, n);
        if (trial % 3 == 0) {
            // bias some trials towards PSD
            Matrix a(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
            m = (a.adjoint() * a).eval();
        }
        auto r = psd_check(HermMatrix(m), 1e-9);
        bool oracle = psd_by_minors(m);
        // skip near-degenerate cases where both sides sit on the tolerance edge
        if (std::abs(r.min_eig) < 1e-7 * (1.0 + m.norm())) continue;
        if (r.psd != oracle) ++disagreements;
    }
    CHECK(disagreements == 0);
}

TEST_CASE("cholesky convention and failure") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    Matrix f = cholesky(HermMatrix(d));
    CHECK(f(0, 0).real() == Approx(2.0));
    CHECK(f(1, 1).real() == Approx(3.0));
    CHECK(std::abs(f(1, 0)) + std::abs(f(0, 1)) == Approx(0.0).margin(1e-15));

    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    f = cholesky(HermMatrix(m));
    // top-left pivot first: F(0,0) = sqrt(M00); off-diagonal from the recursion
    CHECK(f(0, 0).real() == Approx(std::sqrt(2.0)));
    CHECK(std::abs(f(0, 1)) == Approx(1.0 / std::sqrt(2.0)));
    CHECK((f.adjoint() * f - m).norm() <= 1e-10 * m.norm());

    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 1;
    CHECK_THROWS_AS(cholesky(HermMatrix(s)), NotPositiveDefinite);
}

TEST_CASE("cholesky round trip on random PD matrices") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int n : {1, 3, 8, 20}) {
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
        Matrix m = (a.adjoint() * a + 0.1 * Matrix::Identity(n, n)).eval();
        Matrix f = cholesky(HermMatrix(m));
        CHECK((f.adjoint() * f - m).norm() <= 1e-10 * m.norm());
        for (int k = 0; k < n; ++k) {
            CHECK(f(k, k).imag() == 0.0);
            CHECK(f(k, k).real() > 0.0);
        }
        // triangular: nothing below the diagonal
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) CHECK(std::abs(f(i, j)) == 0.0);
    }
}

TEST_CASE("solve") {
    Matrix id = Matrix::Identity(3, 3);
    Vector b(3);
    b << Complex(1, 1), Complex(2, 0), Complex(0, -1);
    CHECK((solve(id, b) - b).norm() < 1e-14);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 4;
    Vector rhs(2);
    rhs << 2, 4;
    Vector x = solve(d, rhs);
    CHECK(x(0).real() == Approx(1.0));
    CHECK(x(1).real() == Approx(1.0));

    Matrix u(2, 2);
    u << 1, 1, 0, 1;
    rhs << 2, 1;
    x = solve(u, rhs);
    CHECK(x(0).real() == Approx(1.0));  // back substitution by hand
    CHECK(x(1).real() == Approx(1.0));

    Matrix sing(2, 2);
    sing << 1, 1, 1, 1;
    try {
        solve(sing, rhs);
        FAIL("expected SingularMatrix");
    } catch (const SingularMatrix& e) {
        CHECK(e.rank == 1);
    }
}
