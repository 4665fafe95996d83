#pragma once

// Builders for the two worked physical examples: motion of a time-varying
// mass (rocket) and a stratified two-layer heat storage, each returned both
// as a raw LTV system and as its pH representation, with reference quantities
// for cross-checking.

#include <utility>

#include "ltvph/errors.hpp"
#include "ltvph/ltv.hpp"
#include "ltvph/matfun.hpp"
#include "ltvph/ode.hpp"
#include "ltvph/ph.hpp"

namespace ltvph {

struct RocketParams {
    TimeExpr mass;  // m(t) > 0, weakly decreasing
    Interval domain;
};

struct RocketSystem {
    LtvSystem sys;
    PhRepresentation ph;
};

/// State (z, p) = (height, momentum), input (v_e, F_ext):
///   A = [[0, 1/m], [0, m'/m]],  B = [[0, 0], [-m', 1]],
///   Q = diag(0, 1/m), K = 1/2 diag(0, -m'/m), R = 1/2 diag(0, -m'),
///   J = [[0, 1], [-1, 0]], G = B, C = G^T Q, P = S = N = 0.
inline RocketSystem rocket_system(const RocketParams& params) {
    const Interval dom = params.domain;
    const TimeExpr m = params.mass;
    const TimeExpr mdot = m.differentiate();
    for (double t : uniform_grid(dom.lo, dom.hi, 65)) {
        const double mv = m.eval(t).real();
        if (!(mv > 0.0)) throw InvariantViolation("mass positive", t, mv);
        const double md = mdot.eval(t).real();
        if (md > 1e-12) throw InvariantViolation("mass weakly decreasing", t, md);
    }
    const TimeExpr zero(0.0), one(1.0), half(0.5);
    const TimeExpr inv_m = TimeExpr::recip(m);

    auto mf22 = [&](TimeExpr a00, TimeExpr a01, TimeExpr a10, TimeExpr a11) {
        return MatrixFunction::from_exprs(2, 2, {a00, a01, a10, a11}, dom);
    };
    MatrixFunction a = mf22(zero, inv_m, zero, mdot * inv_m);
    MatrixFunction b = mf22(zero, zero, -mdot, one);
    MatrixFunction c = mf22(zero, -mdot * inv_m, zero, inv_m);
    MatrixFunction d = MatrixFunction::zero(2, 2, dom);
    LtvSystem sys(a, b, c, d, dom);

    PhRepresentation ph{
        mf22(zero, zero, zero, inv_m),               // Q
        mf22(zero, zero, zero, -half * mdot * inv_m),  // K
        mf22(zero, one, -one, zero),                 // J
        mf22(zero, zero, zero, -half * mdot),        // R
        b,                                           // G
        MatrixFunction::zero(2, 2, dom),             // P
        MatrixFunction::zero(2, 2, dom),             // S
        MatrixFunction::zero(2, 2, dom),             // N
        dom,
    };
    return {std::move(sys), std::move(ph)};
}

struct HeatingParams {
    TimeExpr q_p;   // production-side mass flow, > 0
    TimeExpr q_d;   // demand-side mass flow, > 0
    double v_s;     // total storage volume
    double v_h0;    // hot-layer volume at the left end of the domain
    Interval domain;
};

struct HeatingSystem {
    LtvSystem sys;
    PhRepresentation ph;
    MatrixFunction kyp_residual_ref;  // diag((q_d+q_p)/V_h^2, (q_d+q_p)/V_c^2)
    MatrixFunction v_h;               // hot-layer volume (1x1)
};

/// Stratified storage with state (V_h T_h, V_c T_c) and inputs the inflow
/// temperatures:
///   A = diag(-q_d/V_h, -q_p/V_c),  B = diag(q_p, q_d),  C = B^T Q,  D = 0,
///   Q = diag(1/V_h, 1/V_c),  K = 1/2 Q^-1 Q',  R = 1/2 (q_d+q_p) I.
/// The layer volumes follow V_h' = q_p - q_d, V_c = V_s - V_h; the volume
/// trajectory is integrated once into a dense interpolant whose derivative is
/// the exact flow difference.
inline HeatingSystem heating_system(const HeatingParams& params, double rtol = 1e-12) {
    const Interval dom = params.domain;
    const TimeExpr qp = params.q_p;
    const TimeExpr qd = params.q_d;
    const TimeExpr flow_diff = qp - qd;

    for (double t : uniform_grid(dom.lo, dom.hi, 65)) {
        if (!(qp.eval(t).real() > 0.0))
            throw InvariantViolation("q_p positive", t, qp.eval(t).real());
        if (!(qd.eval(t).real() > 0.0))
            throw InvariantViolation("q_d positive", t, qd.eval(t).real());
    }

    // hot-layer volume: V_h(dom.lo) = v_h0, V_h' = q_p - q_d; constant flow
    // differences stay symbolic (affine), anything else is integrated once
    MatrixFunction vh = [&]() -> MatrixFunction {
        if (auto c = flow_diff.constant_value()) {
            TimeExpr affine = TimeExpr(params.v_h0) +
                              TimeExpr::constant(*c) * (TimeExpr::var() - TimeExpr(dom.lo));
            return MatrixFunction::scalar(affine, dom);
        }
        std::vector<double> events;
        for (double p : flow_diff.special_points()) events.push_back(p);
        OdeRhs rhs = [flow_diff](double t, const Vector&) -> Vector {
            return Vector::Constant(1, flow_diff.eval(t));
        };
        OdeOptions opt;
        opt.rtol = rtol;
        opt.atol = rtol;
        DenseRecord dense;
        integrate(rhs, Vector::Constant(1, Complex(params.v_h0, 0.0)), {dom.lo, dom.hi},
                  events, opt, {}, &dense);
        std::vector<Matrix> values, slopes;
        for (std::size_t k = 0; k < dense.t.size(); ++k) {
            values.push_back(Matrix::Constant(1, 1, dense.y[k](0)));
            slopes.push_back(Matrix::Constant(1, 1, dense.f[k](0)));
        }
        MatrixFunction spline =
            MatrixFunction::hermite_spline(dense.t, std::move(values), std::move(slopes));
        MatrixFunction diff_mf = MatrixFunction::scalar(flow_diff, dom);
        return MatrixFunction::from_callable(
            1, 1, dom, [spline](double t) { return spline.eval_at(t); },
            [diff_mf]() { return diff_mf; }, events);
    }();

    MatrixFunction vc =
        MatrixFunction::constant(Matrix::Constant(1, 1, Complex(params.v_s, 0.0)), dom) - vh;
    for (double t : uniform_grid(dom.lo, dom.hi, 129)) {
        const double h = vh.eval_at(t)(0, 0).real();
        if (!(h > 0.0)) throw VolumeNonPositive(t, h);
        const double c = params.v_s - h;
        if (!(c > 0.0)) throw VolumeNonPositive(t, c);
    }

    MatrixFunction inv_vh = inverse(vh);
    MatrixFunction inv_vc = inverse(vc);
    auto qp_mf = MatrixFunction::scalar(qp, dom);
    auto qd_mf = MatrixFunction::scalar(qd, dom);
    auto qsum_mf = MatrixFunction::scalar(qp + qd, dom);

    MatrixFunction a = embed(-(qd_mf * inv_vh), 0, 0, 2, 2) + embed(-(qp_mf * inv_vc), 1, 1, 2, 2);
    MatrixFunction b = embed(qp_mf, 0, 0, 2, 2) + embed(qd_mf, 1, 1, 2, 2);
    MatrixFunction q = embed(inv_vh, 0, 0, 2, 2) + embed(inv_vc, 1, 1, 2, 2);
    MatrixFunction c = b * q;  // B^T Q for diagonal real B
    MatrixFunction d = MatrixFunction::zero(2, 2, dom);
    LtvSystem sys(a, b, c, d, dom);

    const TimeExpr half(0.5);
    PhRepresentation ph{
        q,
        scale(half, inverse(q) * q.derivative()),  // K = 1/2 Q^-1 Q'
        MatrixFunction::zero(2, 2, dom),
        embed(scale(half, qsum_mf), 0, 0, 2, 2) + embed(scale(half, qsum_mf), 1, 1, 2, 2),
        b,  // G
        MatrixFunction::zero(2, 2, dom),
        MatrixFunction::zero(2, 2, dom),
        MatrixFunction::zero(2, 2, dom),
        dom,
    };

    MatrixFunction ref = embed(qsum_mf * inv_vh * inv_vh, 0, 0, 2, 2) +
                         embed(qsum_mf * inv_vc * inv_vc, 1, 1, 2, 2);
    return {std::move(sys), std::move(ph), std::move(ref), vh};
}

}  // namespace ltvph
