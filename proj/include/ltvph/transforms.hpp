#pragma once

// State, input-output and time transformations of LTV systems, the induced
// transformations of storage matrices and pH coefficients, and numerical
// verification that the dissipativity properties are invariant.

#include <optional>
#include <vector>

#include "ltvph/dissipativity.hpp"
#include "ltvph/errors.hpp"
#include "ltvph/ltv.hpp"
#include "ltvph/matfun.hpp"
#include "ltvph/ph.hpp"

namespace ltvph {

namespace detail {

inline void check_invertible(const MatrixFunction& z, const std::vector<double>& nodes,
                             double tol) {
    for (double t : nodes) {
        const double s = min_singular_value(z.eval_at(t));
        if (s <= tol) throw SingularTransform(t, s);
    }
}

inline std::vector<double> probe_nodes(const Interval& dom, const MatrixFunction& f) {
    std::vector<double> nodes = uniform_grid(dom.lo, dom.hi, 65);
    for (double p : f.event_points()) {
        const double eps = 1e-9 * (1.0 + std::abs(p));
        if (p - eps > dom.lo) nodes.push_back(p - eps);
        if (p + eps < dom.hi) nodes.push_back(p + eps);
    }
    return nodes;
}

// Subdivides each grid interval so supply quadrature error is well below the
// invariance tolerances; the original nodes sit at multiples of the stride.
inline std::pair<std::vector<double>, std::size_t> refine_grid(const std::vector<double>& grid,
                                                               std::size_t target) {
    const std::size_t intervals = grid.size() - 1;
    const std::size_t sub = std::max<std::size_t>(1, (target + intervals - 1) / intervals);
    std::vector<double> fine;
    fine.reserve(intervals * sub + 1);
    for (std::size_t k = 0; k < intervals; ++k)
        for (std::size_t j = 0; j < sub; ++j)
            fine.push_back(grid[k] +
                           (grid[k + 1] - grid[k]) * static_cast<double>(j) /
                               static_cast<double>(sub));
    fine.push_back(grid.back());
    return {fine, sub};
}

}  // namespace detail

/// x = Z x~ turns (A,B,C,D) into (Z^-1(AZ - Z'), Z^-1 B, C Z, D).
inline LtvSystem state_transform(const LtvSystem& sys, const MatrixFunction& z,
                                 double tol = 1e-9) {
    if (z.rows() != sys.n() || z.cols() != sys.n())
        throw DimensionMismatch("state transform must be n x n");
    detail::check_invertible(z, detail::probe_nodes(sys.domain, z), tol);
    MatrixFunction zinv = inverse(z);
    MatrixFunction a = zinv * (sys.A * z - z.derivative());
    MatrixFunction b = zinv * sys.B;
    MatrixFunction c = sys.C * z;
    return LtvSystem(a, b, c, sys.D, sys.domain);
}

/// u = V u_check, y_check = V^H y turns (B, C, D) into (BV, V^H C, V^H D V).
inline LtvSystem io_transform(const LtvSystem& sys, const MatrixFunction& v,
                              double tol = 1e-9) {
    if (v.rows() != sys.m() || v.cols() != sys.m())
        throw DimensionMismatch("io transform must be m x m");
    detail::check_invertible(v, detail::probe_nodes(sys.domain, v), tol);
    MatrixFunction vh = adjoint(v);
    return LtvSystem(sys.A, sys.B * v, vh * sys.C, vh * sys.D * v, sys.domain);
}

/// Monotone inversion of theta(t_hat) = target over `search` by bisection
/// polished with Newton steps.
inline double invert_time_map(const TimeExpr& theta, double target, Interval search) {
    TimeExpr dtheta = theta.differentiate();
    double lo = search.lo, hi = search.hi;
    double flo = theta.eval(lo).real() - target;
    double fhi = theta.eval(hi).real() - target;
    if (flo > 0.0 || fhi < 0.0) throw DomainMismatch("time map does not reach the target");
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double fmid = theta.eval(mid).real() - target;
        if (fmid <= 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + std::abs(mid))) break;
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 4; ++iter) {
        const double f = theta.eval(x).real() - target;
        const double df = dtheta.eval(x).real();
        if (df <= 0.0) break;
        const double step = f / df;
        double xn = x - step;
        if (xn < search.lo || xn > search.hi) break;
        x = xn;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return x;
}

/// t = theta(t_hat) with theta' > 0 turns every coefficient F into
/// theta' (F o theta) on the new time interval.
inline LtvSystem time_transform(const LtvSystem& sys, const TimeExpr& theta,
                                Interval new_domain) {
    TimeExpr dtheta = theta.differentiate();
    for (double th : uniform_grid(new_domain.lo, new_domain.hi, 65)) {
        const double d = dtheta.eval(th).real();
        if (!(d > 0.0)) throw NotOrientationPreserving(th, d);
    }
    const double lo_img = theta.eval(new_domain.lo).real();
    const double hi_img = theta.eval(new_domain.hi).real();
    if (!sys.domain.contains(lo_img) || !sys.domain.contains(hi_img))
        throw DomainMismatch("theta does not map the new domain into the system domain");

    auto mapped_events = [&](const MatrixFunction& f) {
        std::vector<double> out;
        for (double p : f.event_points())
            if (p > lo_img && p < hi_img)
                out.push_back(invert_time_map(theta, p, new_domain));
        return out;
    };
    auto tf = [&](const MatrixFunction& f) {
        return scale(dtheta, compose_time(f, theta, new_domain, mapped_events(f)));
    };
    return LtvSystem(tf(sys.A), tf(sys.B), tf(sys.C), tf(sys.D), new_domain);
}

// --- induced transformations of storage matrices and pH coefficients ------

inline StorageCandidate state_transform_storage(const StorageCandidate& storage,
                                                const MatrixFunction& z) {
    return StorageCandidate::from(adjoint(z) * storage.Q * z);
}

inline StorageCandidate time_transform_storage(const StorageCandidate& storage,
                                               const TimeExpr& theta, Interval new_domain) {
    std::vector<double> mapped;
    for (double p : storage.Q.event_points()) {
        const double lo_img = theta.eval(new_domain.lo).real();
        const double hi_img = theta.eval(new_domain.hi).real();
        if (p > lo_img && p < hi_img) mapped.push_back(invert_time_map(theta, p, new_domain));
    }
    return StorageCandidate::from(compose_time(storage.Q, theta, new_domain, mapped));
}

inline PhRepresentation state_transform_ph(const PhRepresentation& ph,
                                           const MatrixFunction& z) {
    MatrixFunction zinv = inverse(z);
    MatrixFunction zinvh = adjoint(zinv);
    return PhRepresentation{
        adjoint(z) * ph.Q * z,
        zinv * (z.derivative() + ph.K * z),
        zinv * ph.J * zinvh,
        zinv * ph.R * zinvh,
        zinv * ph.G,
        zinv * ph.P,
        ph.S,
        ph.N,
        ph.domain,
    };
}

inline PhRepresentation io_transform_ph(const PhRepresentation& ph, const MatrixFunction& v) {
    MatrixFunction vh = adjoint(v);
    return PhRepresentation{ph.Q,      ph.K,     ph.J,          ph.R,
                            ph.G * v,  ph.P * v, vh * ph.S * v, vh * ph.N * v,
                            ph.domain};
}

inline PhRepresentation time_transform_ph(const PhRepresentation& ph, const TimeExpr& theta,
                                          Interval new_domain) {
    TimeExpr dtheta = theta.differentiate();
    auto comp = [&](const MatrixFunction& f) {
        std::vector<double> mapped;
        const double lo_img = theta.eval(new_domain.lo).real();
        const double hi_img = theta.eval(new_domain.hi).real();
        for (double p : f.event_points())
            if (p > lo_img && p < hi_img) mapped.push_back(invert_time_map(theta, p, new_domain));
        return compose_time(f, theta, new_domain, mapped);
    };
    auto tf = [&](const MatrixFunction& f) { return scale(dtheta, comp(f)); };
    return PhRepresentation{comp(ph.Q), tf(ph.K), tf(ph.J), tf(ph.R),
                            tf(ph.G),   tf(ph.P), tf(ph.S), tf(ph.N), new_domain};
}

// --- invariance verification ----------------------------------------------

struct InvarianceReport {
    bool congruence_ok = false;  // exact algebraic identity between KYP matrices
    double congruence_worst = 0.0;
    bool kyp_preserved = false;  // transformed storage still certifies the KYP
    double kyp_worst_min_eig = 0.0;
    bool supply_invariant = false;
    double supply_gap = 0.0;
    double correspondence_worst = 0.0;  // trajectory/output matching residual
    bool ph_preserved = true;  // stays true when no representation is supplied
    double ph_worst = 0.0;

    bool all_passed() const {
        return congruence_ok && kyp_preserved && supply_invariant && ph_preserved;
    }
};

struct VerifyOptions {
    std::vector<double> grid;      // analysis nodes (transformed time for time maps)
    MatrixFunction input;          // m x 1 input driving the matched trajectories
    Vector x0;                     // initial state for the original system
    double kyp_tol = 1e-8;
    double congruence_tol = 1e-9;
    double supply_tol = 1e-6;
    double rtol = 1e-10;
    const PhRepresentation* ph = nullptr;
};

inline InvarianceReport verify_state_invariance(const LtvSystem& sys,
                                                const StorageCandidate& storage,
                                                const MatrixFunction& z,
                                                const VerifyOptions& opt) {
    InvarianceReport rep;
    LtvSystem tsys = state_transform(sys, z);
    StorageCandidate tstorage = state_transform_storage(storage, z);
    const Eigen::Index n = sys.n(), m = sys.m();

    // congruence: KYP_t = diag(Z, I)^H KYP diag(Z, I) nodewise
    rep.congruence_ok = true;
    for (double t : opt.grid) {
        Matrix ext = Matrix::Identity(n + m, n + m);
        ext.topLeftCorner(n, n) = z.eval_at(t);
        Matrix lhs = kyp_matrix(tsys, tstorage, t).matrix();
        Matrix rhs = ext.adjoint() * kyp_matrix(sys, storage, t).matrix() * ext;
        const double res = (lhs - rhs).norm() / (1.0 + rhs.norm());
        rep.congruence_worst = std::max(rep.congruence_worst, res);
        if (res > opt.congruence_tol) rep.congruence_ok = false;
    }

    KypReport kyp = kyp_check(tsys, tstorage, opt.grid, opt.kyp_tol);
    rep.kyp_preserved = kyp.holds;
    rep.kyp_worst_min_eig = kyp.worst_value;

    // matched trajectories share (u, y); supplies must agree
    auto [fine, stride] = detail::refine_grid(opt.grid, 2000);
    Trajectory orig = simulate(sys, fine.front(), opt.x0, opt.input, fine, opt.rtol);
    Vector xt0 = solve(z.eval_at(fine.front()), opt.x0);
    Trajectory trans = simulate(tsys, fine.front(), xt0, opt.input, fine, opt.rtol);
    rep.supply_gap = std::abs(supply(orig, fine.front(), fine.back()) -
                              supply(trans, fine.front(), fine.back()));
    rep.supply_invariant = rep.supply_gap <= opt.supply_tol;
    for (std::size_t k = 0; k < opt.grid.size(); ++k) {
        const std::size_t f = std::min(k * stride, fine.size() - 1);
        const double res = (z.eval_at(fine[f]) * trans.x[f] - orig.x[f]).norm();
        rep.correspondence_worst = std::max(rep.correspondence_worst, res);
    }

    if (opt.ph) {
        PhRepresentation tph = state_transform_ph(*opt.ph, z);
        try {
            tph.validate(opt.grid, 1e-7);
        } catch (const InvariantViolation& e) {
            rep.ph_preserved = false;
            rep.ph_worst = e.residual;
        }
    }
    return rep;
}

inline InvarianceReport verify_io_invariance(const LtvSystem& sys,
                                             const StorageCandidate& storage,
                                             const MatrixFunction& v,
                                             const VerifyOptions& opt) {
    InvarianceReport rep;
    LtvSystem tsys = io_transform(sys, v);
    const Eigen::Index n = sys.n(), m = sys.m();

    rep.congruence_ok = true;
    for (double t : opt.grid) {
        Matrix ext = Matrix::Identity(n + m, n + m);
        ext.bottomRightCorner(m, m) = v.eval_at(t);
        Matrix lhs = kyp_matrix(tsys, storage, t).matrix();
        Matrix rhs = ext.adjoint() * kyp_matrix(sys, storage, t).matrix() * ext;
        const double res = (lhs - rhs).norm() / (1.0 + rhs.norm());
        rep.congruence_worst = std::max(rep.congruence_worst, res);
        if (res > opt.congruence_tol) rep.congruence_ok = false;
    }

    KypReport kyp = kyp_check(tsys, storage, opt.grid, opt.kyp_tol);
    rep.kyp_preserved = kyp.holds;
    rep.kyp_worst_min_eig = kyp.worst_value;

    // u_check = V^-1 u gives identical states and pointwise equal supply
    auto [fine, stride] = detail::refine_grid(opt.grid, 2000);
    Trajectory orig = simulate(sys, fine.front(), opt.x0, opt.input, fine, opt.rtol);
    MatrixFunction ucheck = inverse(v) * opt.input;
    Trajectory trans = simulate(tsys, fine.front(), opt.x0, ucheck, fine, opt.rtol);
    rep.supply_gap = std::abs(supply(orig, fine.front(), fine.back()) -
                              supply(trans, fine.front(), fine.back()));
    rep.supply_invariant = rep.supply_gap <= opt.supply_tol;
    for (std::size_t k = 0; k < opt.grid.size(); ++k) {
        const std::size_t f = std::min(k * stride, fine.size() - 1);
        rep.correspondence_worst =
            std::max(rep.correspondence_worst, (trans.x[f] - orig.x[f]).norm());
    }

    if (opt.ph) {
        PhRepresentation tph = io_transform_ph(*opt.ph, v);
        try {
            tph.validate(opt.grid, 1e-7);
        } catch (const InvariantViolation& e) {
            rep.ph_preserved = false;
            rep.ph_worst = e.residual;
        }
    }
    return rep;
}

/// `opt.grid` lives in the transformed time variable here.
inline InvarianceReport verify_time_invariance(const LtvSystem& sys,
                                               const StorageCandidate& storage,
                                               const TimeExpr& theta, Interval new_domain,
                                               const VerifyOptions& opt) {
    InvarianceReport rep;
    LtvSystem tsys = time_transform(sys, theta, new_domain);
    StorageCandidate tstorage = time_transform_storage(storage, theta, new_domain);
    TimeExpr dtheta = theta.differentiate();

    // scaling identity: KYP_t(t_hat) = theta'(t_hat) KYP(theta(t_hat))
    rep.congruence_ok = true;
    for (double th : opt.grid) {
        Matrix lhs = kyp_matrix(tsys, tstorage, th).matrix();
        Matrix rhs = dtheta.eval(th).real() * kyp_matrix(sys, storage, theta.eval(th).real()).matrix();
        const double res = (lhs - rhs).norm() / (1.0 + rhs.norm());
        rep.congruence_worst = std::max(rep.congruence_worst, res);
        if (res > opt.congruence_tol) rep.congruence_ok = false;
    }

    KypReport kyp = kyp_check(tsys, tstorage, opt.grid, opt.kyp_tol);
    rep.kyp_preserved = kyp.holds;
    rep.kyp_worst_min_eig = kyp.worst_value;

    // matched trajectories: x_hat = x o theta, u_hat = u o theta,
    // y_hat = theta' (y o theta); supplies over matched windows agree
    auto [fine_hat, stride] = detail::refine_grid(opt.grid, 2000);
    std::vector<double> fine_t;
    for (double th : fine_hat) fine_t.push_back(theta.eval(th).real());
    Trajectory orig = simulate(sys, fine_t.front(), opt.x0, opt.input, fine_t, opt.rtol);
    MatrixFunction uhat = compose_time(opt.input, theta, new_domain, {});
    Trajectory trans = simulate(tsys, fine_hat.front(), opt.x0, uhat, fine_hat, opt.rtol);
    rep.supply_gap = std::abs(supply(orig, fine_t.front(), fine_t.back()) -
                              supply(trans, fine_hat.front(), fine_hat.back()));
    rep.supply_invariant = rep.supply_gap <= opt.supply_tol;
    for (std::size_t k = 0; k < opt.grid.size(); ++k) {
        const std::size_t f = std::min(k * stride, fine_hat.size() - 1);
        rep.correspondence_worst =
            std::max(rep.correspondence_worst, (trans.x[f] - orig.x[f]).norm());
        const double scale_k = dtheta.eval(fine_hat[f]).real();
        rep.correspondence_worst = std::max(
            rep.correspondence_worst, (trans.y[f] - scale_k * orig.y[f]).norm());
    }

    if (opt.ph) {
        PhRepresentation tph = time_transform_ph(*opt.ph, theta, new_domain);
        try {
            tph.validate(opt.grid, 1e-7);
        } catch (const InvariantViolation& e) {
            rep.ph_preserved = false;
            rep.ph_worst = e.residual;
        }
    }
    return rep;
}

}  // namespace ltvph
