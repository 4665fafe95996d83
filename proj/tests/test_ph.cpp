#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ltvph/ph.hpp"

using namespace ltvph;
using Catch::Approx;

namespace {

MatrixFunction mf(Eigen::Index r, Eigen::Index c, std::vector<std::string> entries,
                  Interval dom = {-10, 10}) {
    std::vector<TimeExpr> ex;
    for (auto& s : entries) ex.push_back(TimeExpr::parse(s));
    return MatrixFunction::from_exprs(r, c, std::move(ex), dom);
}

// the time-varying mass example in (position, momentum) coordinates
PhRepresentation rocket_ph(Interval dom = {-0.5, 1.5}) {
    return PhRepresentation{
        mf(2, 2, {"0", "0", "0", "1/(2-t)"}, dom),              // Q
        mf(2, 2, {"0", "0", "0", "1/(2*(2-t))"}, dom),          // K = 1/2 diag(0, -m'/m)
        mf(2, 2, {"0", "1", "-1", "0"}, dom),                   // J
        mf(2, 2, {"0", "0", "0", "1/2"}, dom),                  // R = 1/2 diag(0, -m')
        mf(2, 2, {"0", "0", "1", "1"}, dom),                    // G
        MatrixFunction::zero(2, 2, dom),                        // P
        MatrixFunction::zero(2, 2, dom),                        // S
        MatrixFunction::zero(2, 2, dom),                        // N
        dom,
    };
}

MatrixFunction input_expr(Eigen::Index m, std::vector<std::string> entries, Interval dom) {
    return mf(m, 1, std::move(entries), dom);
}

std::mt19937 rng(20260810);

}  // namespace

TEST_CASE("assemble_system reproduces closed forms") {
    // trivial lossless integrator: J=R=K=N=P=0, Q=1, G=1, S=0
    Interval dom{-10, 10};
    PhRepresentation triv{
        mf(1, 1, {"1"}, dom),  mf(1, 1, {"0"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"0"}, dom),  mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"0"}, dom),  mf(1, 1, {"0"}, dom), dom,
    };
    LtvSystem sys = assemble_system(triv, uniform_grid(-1, 1, 5));
    CHECK(std::abs(sys.A.eval_at(0.3)(0, 0)) < 1e-15);
    CHECK(sys.B.eval_at(0.3)(0, 0).real() == Approx(1.0));
    CHECK(sys.C.eval_at(0.3)(0, 0).real() == Approx(1.0));
    CHECK(std::abs(sys.D.eval_at(0.3)(0, 0)) < 1e-15);

    // rocket: A = [[0, 1/m],[0, m'/m]], B = [[0,0],[-m',1]] with m = 2 - t
    PhRepresentation rocket = rocket_ph();
    LtvSystem rs = assemble_system(rocket, uniform_grid(0, 1, 11));
    for (double t : {0.0, 0.5, 1.0}) {
        const double m = 2.0 - t;
        Matrix a = rs.A.eval_at(t);
        CHECK(a(0, 1).real() == Approx(1.0 / m));
        CHECK(a(1, 1).real() == Approx(-1.0 / m));
        CHECK(std::abs(a(0, 0)) + std::abs(a(1, 0)) < 1e-14);
        Matrix b = rs.B.eval_at(t);
        CHECK(b(1, 0).real() == Approx(1.0));
        CHECK(b(1, 1).real() == Approx(1.0));
        // y = (-m' v, v) = (v, v) for m' = -1
        Matrix c = rs.C.eval_at(t);
        CHECK(c(0, 1).real() == Approx(1.0 / m));
        CHECK(c(1, 1).real() == Approx(1.0 / m));
    }
}

TEST_CASE("invariant validation rejects broken structures") {
    Interval dom{-1, 1};
    PhRepresentation bad{
        mf(1, 1, {"1"}, dom),  mf(1, 1, {"0"}, dom), mf(1, 1, {"1"}, dom),  // J not skew
        mf(1, 1, {"0"}, dom),  mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"0"}, dom),  mf(1, 1, {"0"}, dom), dom,
    };
    CHECK_THROWS_AS(bad.validate(uniform_grid(-1, 1, 3)), InvariantViolation);

    // K inconsistent with Q' must be flagged
    PhRepresentation badk{
        mf(1, 1, {"2-t"}, dom), mf(1, 1, {"0"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"1"}, dom),   mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"1"}, dom),   mf(1, 1, {"0"}, dom), dom,
    };
    CHECK_THROWS_AS(badk.validate(uniform_grid(-1, 1, 3)), InvariantViolation);
}

TEST_CASE("canonical pH on the full-rank scalar example") {
    Interval dom{-10, 10};
    LtvSystem decay(mf(1, 1, {"-1"}, dom), mf(1, 1, {"1"}, dom), mf(1, 1, {"1"}, dom),
                    mf(1, 1, {"0"}, dom), dom);
    auto storage = StorageCandidate::from(mf(1, 1, {"1"}, dom));
    auto grid = uniform_grid(0, 1, 11);
    auto res = canonical_ph(decay, storage, grid);
    CHECK(res.rank == 1);
    for (double t : {0.0, 0.5}) {
        CHECK(std::abs(res.ph.K.eval_at(t)(0, 0)) < 1e-12);
        CHECK(std::abs(res.ph.J.eval_at(t)(0, 0)) < 1e-12);
        CHECK(res.ph.R.eval_at(t)(0, 0).real() == Approx(1.0));
        CHECK(res.ph.G.eval_at(t)(0, 0).real() == Approx(1.0));
        CHECK(std::abs(res.ph.P.eval_at(t)(0, 0)) < 1e-12);
        CHECK(std::abs(res.ph.S.eval_at(t)(0, 0)) < 1e-12);
        CHECK(std::abs(res.ph.N.eval_at(t)(0, 0)) < 1e-12);
    }
    res.ph.validate(grid);
}

TEST_CASE("canonical pH on the rank-deficient rocket storage") {
    // system matrices of the mass example with m = 2 - t
    Interval dom{-0.5, 1.5};
    LtvSystem sys(mf(2, 2, {"0", "1/(2-t)", "0", "-1/(2-t)"}, dom),
                  mf(2, 2, {"0", "0", "1", "1"}, dom),
                  mf(2, 2, {"0", "1/(2-t)", "0", "1/(2-t)"}, dom),
                  MatrixFunction::zero(2, 2, dom), dom);
    auto storage = StorageCandidate::from(mf(2, 2, {"0", "0", "0", "1/(2-t)"}, dom));
    auto grid = uniform_grid(0, 1, 101);
    auto res = canonical_ph(sys, storage, grid);
    CHECK(res.rank == 1);

    // K11 = -m'/(2m) and R11 = -m'/2 in the energy coordinate; at t=0:
    // m=2, m'=-1 -> K11 = 1/4, R11 = 1/2.  In original coordinates these sit
    // at the momentum entry (1,1).
    Matrix k0 = res.ph.K.eval_at(0.0);
    Matrix r0 = res.ph.R.eval_at(0.0);
    CHECK(k0(1, 1).real() == Approx(0.25).margin(1e-10));
    CHECK(r0(1, 1).real() == Approx(0.5).margin(1e-10));
    for (double t : grid) {
        const double m = 2.0 - t;
        Matrix kt = res.ph.K.eval_at(t);
        Matrix rt = res.ph.R.eval_at(t);
        CHECK(std::abs(kt(1, 1).real() - 1.0 / (2.0 * m)) < 1e-10);
        CHECK(std::abs(rt(1, 1).real() - 0.5) < 1e-10);
    }

    // assembled representation reproduces the system on the grid
    res.ph.validate(grid, 1e-8);
    LtvSystem back = assemble_system(res.ph);
    for (double t : uniform_grid(0, 1, 7)) {
        CHECK((back.A.eval_at(t) - sys.A.eval_at(t)).norm() < 1e-8);
        CHECK((back.B.eval_at(t) - sys.B.eval_at(t)).norm() < 1e-8);
        CHECK((back.C.eval_at(t) - sys.C.eval_at(t)).norm() < 1e-8);
        CHECK((back.D.eval_at(t) - sys.D.eval_at(t)).norm() < 1e-8);
    }
}

TEST_CASE("canonical pH with a zero storage matrix") {
    // x' = -x + u, y = u keeps no certified energy; Q = 0 certifies it anyway
    Interval dom{-5, 5};
    LtvSystem sys(mf(1, 1, {"-1"}, dom), mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom),
                  mf(1, 1, {"1"}, dom), dom);
    auto storage = StorageCandidate::from(mf(1, 1, {"0"}, dom));
    auto grid = uniform_grid(0, 1, 11);
    auto res = canonical_ph(sys, storage, grid);
    CHECK(res.rank == 0);
    res.ph.validate(grid);
    LtvSystem back = assemble_system(res.ph);
    for (double t : {0.2, 0.8}) {
        CHECK((back.A.eval_at(t) - sys.A.eval_at(t)).norm() < 1e-12);
        CHECK((back.B.eval_at(t) - sys.B.eval_at(t)).norm() < 1e-12);
        CHECK((back.D.eval_at(t) - sys.D.eval_at(t)).norm() < 1e-12);
    }
    auto aut = autonomize_hamiltonian(res.ph, grid);
    CHECK((aut.z.eval_at(0.5) - Matrix::Identity(1, 1)).norm() < 1e-14);
}

TEST_CASE("canonical pH error paths") {
    Interval dom{0.5, 3};
    // increasing output gain: Q = t is not a KYP solution
    LtvSystem grow(mf(1, 1, {"0"}, dom), mf(1, 1, {"1"}, dom), mf(1, 1, {"t"}, dom),
                   mf(1, 1, {"0"}, dom), dom);
    auto qt = StorageCandidate::from(mf(1, 1, {"t"}, dom));
    CHECK_THROWS_AS(canonical_ph(grow, qt, uniform_grid(1, 2, 11)), NotAKypSolution);
}

TEST_CASE("round trip on random representations") {
    for (int trial = 0; trial < 10; ++trial) {
        RandomPhOptions opt;
        opt.n = 1 + trial % 3;
        opt.m = 1 + (trial / 3) % 2;
        opt.rank = (trial % 4 == 3 && opt.n > 1) ? opt.n - 1 : opt.n;
        opt.domain = {0.0, 1.0};
        PhRepresentation ph = random_ph(rng, opt);
        auto grid = uniform_grid(0.05, 0.95, 13);
        ph.validate(grid, 1e-9);
        LtvSystem sys = assemble_system(ph);

        // exact identity: KYP matrix equals
        // 2 diag(Q, I) W diag(Q, I) at every node
        auto storage = StorageCandidate::from(ph.Q);
        for (double t : {0.2, 0.6}) {
            Matrix q = storage.eval_q(t);
            Matrix dqi = Matrix::Identity(opt.n + opt.m, opt.n + opt.m);
            dqi.topLeftCorner(opt.n, opt.n) = q;
            Matrix expect = 2.0 * dqi.adjoint() * ph.w_matrix(t) * dqi;
            Matrix got = kyp_matrix(sys, storage, t).matrix();
            CHECK((got - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        }

        auto kyp = kyp_check(sys, storage, grid, 1e-9);
        CHECK(kyp.holds);

        // canonical reconstruction matches A,B,C,D (J,K may differ)
        auto res = canonical_ph(sys, storage, grid);
        LtvSystem back = assemble_system(res.ph);
        for (double t : {0.1, 0.5, 0.9}) {
            CHECK((back.A.eval_at(t) - sys.A.eval_at(t)).norm() <
                  1e-8 * (1.0 + sys.A.eval_at(t).norm()));
            CHECK((back.B.eval_at(t) - sys.B.eval_at(t)).norm() < 1e-8);
            CHECK((back.C.eval_at(t) - sys.C.eval_at(t)).norm() < 1e-8);
            CHECK((back.D.eval_at(t) - sys.D.eval_at(t)).norm() < 1e-8);
        }

        // kernel inclusion: ker Q inside ker(QA + Q') and ker C
        if (opt.rank < opt.n) {
            MatrixFunction qdot = ph.Q.derivative();
            for (double t : {0.25, 0.75}) {
                Matrix q = storage.eval_q(t);
                EigResult eig = herm_eig(HermMatrix(q));
                for (Eigen::Index c = 0; c < opt.n - opt.rank; ++c) {
                    Vector v = eig.eigenvectors.col(c);  // ascending: kernel first
                    CHECK(((q * sys.A.eval_at(t) + qdot.eval_at(t)) * v).norm() < 1e-9);
                    CHECK((sys.C.eval_at(t) * v).norm() < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("null space decomposition") {
    Interval dom{-0.5, 1.5};
    // rocket storage: permutation splits off the zero direction
    auto storage = StorageCandidate::from(mf(2, 2, {"0", "0", "0", "1/(2-t)"}, dom));
    auto dec = null_space_decomposition(storage, uniform_grid(0, 1, 21), 1e-9);
    for (std::size_t k = 0; k < dec.grid.size(); ++k) {
        CHECK(dec.rank[k] == 1);
        CHECK(std::abs(dec.q_tilde[k](0, 0).real() - 1.0 / (2.0 - dec.grid[k])) < 1e-12);
        CHECK(dec.q_tilde[k].norm() ==
              Approx(std::abs(dec.q_tilde[k](0, 0))).margin(1e-12));
        CHECK((dec.u[k] * dec.u[k].adjoint() - Matrix::Identity(2, 2)).norm() < 1e-12);
    }

    auto id_storage = StorageCandidate::from(MatrixFunction::identity(3, dom));
    dec = null_space_decomposition(id_storage, uniform_grid(0, 1, 5), 1e-9);
    for (int r : dec.rank) CHECK(r == 3);

    // rank drop 1 -> 0 across a step is weakly decreasing and accepted
    auto step = StorageCandidate::from(mf(1, 1, {"piecewise{t<0: 1; else: 0}"}, {-5, 5}));
    dec = null_space_decomposition(step, {-1.0, -0.5, 0.5, 1.0}, 1e-9);
    CHECK(dec.rank.front() == 1);
    CHECK(dec.rank.back() == 0);

    // a rank increase is rejected
    auto stepup = StorageCandidate::from(mf(1, 1, {"piecewise{t<0: 0; else: 1}"}, {-5, 5}));
    CHECK_THROWS_AS(null_space_decomposition(stepup, {-1.0, 1.0}, 1e-9),
                    RankIncreaseDetected);
}

TEST_CASE("power balance on the lossy scalar system") {
    Interval dom{-10, 10};
    PhRepresentation ph{
        mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"1"}, dom), mf(1, 1, {"1"}, dom), mf(1, 1, {"0"}, dom),
        mf(1, 1, {"0"}, dom), mf(1, 1, {"0"}, dom), dom,
    };
    LtvSystem sys = assemble_system(ph);  // x' = -x + u, y = x
    Vector x0 = Vector::Ones(1);

    // u = 0: dH = -int x^2, residual at quadrature order
    auto traj = simulate(sys, 0.0, x0, MatrixFunction::zero(1, 1, dom), uniform_grid(0, 1, 201));
    auto pb = power_balance_residual(ph, traj);
    CHECK(pb.max_residual < 5e-8);
    CHECK(pb.dissipation_integral ==
          Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-4));

    // W = 0 (lossless): dH equals the supply integral up to quadrature error
    PhRepresentation lossless = ph;
    lossless.R = mf(1, 1, {"0"}, dom);
    LtvSystem lsys = assemble_system(lossless);
    traj = simulate(lsys, 0.0, x0, mf(1, 1, {"sin(3*t)"}, dom), uniform_grid(0, 1, 201));
    pb = power_balance_residual(lossless, traj);
    CHECK(pb.max_residual < 5e-7);
    CHECK(pb.dissipation_integral == Approx(0.0).margin(1e-12));
}

TEST_CASE("power balance residual decays at second order") {
    PhRepresentation rocket = rocket_ph();
    LtvSystem sys = assemble_system(rocket);
    Vector x0(2);
    x0 << 0.0, 1.0;
    auto u = input_expr(2, {"sin(t)/4", "cos(2*t)/4"}, rocket.domain);

    double prev = 0.0;
    for (int level = 0; level < 4; ++level) {
        std::size_t nodes = 11 * (1u << level) - (1u << level) + 1;  // 11, 21, 41, 81
        auto traj = simulate(sys, 0.0, x0, u, uniform_grid(0, 1, nodes), 1e-10);
        auto pb = power_balance_residual(rocket, traj);
        if (level > 0) CHECK(prev / pb.max_residual > 3.5);
        prev = pb.max_residual;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("triangular factor function has an exact derivative") {
    Interval dom{-1, 1};
    auto t = TimeExpr::var();
    auto l = MatrixFunction::from_exprs(
        2, 2,
        {TimeExpr(1.5) + TimeExpr(0.4) * TimeExpr::sin(t), TimeExpr(0.3) * t, TimeExpr(0.0),
         TimeExpr(1.2) + TimeExpr(0.2) * TimeExpr::cos(t)},
        dom);
    auto q = adjoint(l) * l;  // positive definite, time varying
    auto f = detail::chol_factor(q);
    auto df = f.derivative();
    for (double at : {-0.6, 0.0, 0.7}) {
        Matrix fv = f.eval_at(at);
        CHECK((fv.adjoint() * fv - q.eval_at(at)).norm() < 1e-12);
        const double h = 1e-6;
        Matrix fd = (f.eval_at(at + h) - f.eval_at(at - h)) / (2 * h);
        CHECK((df.eval_at(at) - fd).norm() < 1e-8);
    }
}

TEST_CASE("autonomize hamiltonian") {
    Interval dom{-0.5, 1.5};
    PhRepresentation rocket = rocket_ph(dom);
    auto grid = uniform_grid(0, 1, 21);
    auto res = autonomize_hamiltonian(rocket, grid);

    // Z^H Q Z = diag(I_r, 0) at nodes
    Matrix want = Matrix::Zero(2, 2);
    want(0, 0) = 1.0;
    for (double t : grid) {
        Matrix z = res.z.eval_at(t);
        Matrix q = rocket.Q.eval_at(t);
        CHECK((z.adjoint() * q * z - want).norm() < 1e-8);
    }
    res.ph_out.validate(grid, 1e-7);

    // trajectories map back via x = Z x~ and reproduce outputs
    LtvSystem orig = assemble_system(rocket);
    LtvSystem trans = assemble_system(res.ph_out);
    auto u = input_expr(2, {"sin(t)/4", "1/4"}, dom);
    Vector x0(2);
    x0 << 0.2, 1.0;
    Vector xt0 = solve(res.z.eval_at(0.0), x0);
    auto gridt = uniform_grid(0, 1, 41);
    auto torig = simulate(orig, 0.0, x0, u, gridt, 1e-10);
    auto ttrans = simulate(trans, 0.0, xt0, u, gridt, 1e-10);
    for (std::size_t k = 0; k < gridt.size(); ++k) {
        Vector mapped = res.z.eval_at(gridt[k]) * ttrans.x[k];
        CHECK((mapped - torig.x[k]).norm() < 1e-6);
        CHECK((ttrans.y[k] - torig.y[k]).norm() < 1e-6);
    }

    // identity storage stays untouched
    PhRepresentation triv{
        MatrixFunction::identity(2, dom), MatrixFunction::zero(2, 2, dom),
        mf(2, 2, {"0", "1", "-1", "0"}, dom), MatrixFunction::identity(2, dom),
        MatrixFunction::identity(2, dom).derivative(),  // zero G is fine
        MatrixFunction::zero(2, 2, dom), MatrixFunction::identity(2, dom),
        MatrixFunction::zero(2, 2, dom), dom,
    };
    auto res2 = autonomize_hamiltonian(triv, grid);
    for (double t : {0.1, 0.9})
        CHECK((res2.z.eval_at(t) - Matrix::Identity(2, 2)).norm() < 1e-10);
}
