#pragma once

// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) with PI step-size
// control.  Discontinuities of piecewise coefficients are handled by splitting
// the integration at declared event points and nudging end-of-segment stage
// evaluations to the segment's interior side, so each smooth piece is
// integrated at full order.  Supports backward integration (t1 < t0).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ltvph/errors.hpp"
#include "ltvph/hermlin.hpp"

namespace ltvph {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double blowup_norm = 1e12;
    long max_steps = 50'000'000;
};

struct DenseRecord {
    std::vector<double> t;
    std::vector<Vector> y;
    std::vector<Vector> f;
};

using OdeRhs = std::function<Vector(double, const Vector&)>;
using OdePointFn = std::function<void(double, const Vector&)>;

namespace detail {

// Dormand-Prince 5(4) tableau
inline constexpr double DP_C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double DP_A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double DP_E[7] = {71.0 / 57600,    0.0,        -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

class Dopri5 {
public:
    Dopri5(OdeRhs rhs, OdeOptions opt) : rhs_(std::move(rhs)), opt_(opt) {}

    /// Integrates across `stops` (strictly monotone, stops[0] = t0), invoking
    /// on_point at every index listed in `report` (indices into stops).
    void run(const Vector& y0, const std::vector<double>& stops,
             const std::vector<bool>& report, const OdePointFn& on_point,
             DenseRecord* dense) {
        Vector y = y0;
        if (report[0] && on_point) on_point(stops[0], y);
        for (std::size_t s = 0; s + 1 < stops.size(); ++s) {
            integrate_segment(stops[s], stops[s + 1], y, dense);
            if (report[s + 1] && on_point) on_point(stops[s + 1], y);
        }
    }

private:
    Vector eval_rhs(double t, const Vector& y, double seg_a, double seg_b) {
        // keep stage times inside the open segment so one-sided coefficient
        // values are taken from the correct side of a discontinuity; with
        // half-open guards this matters at both ends of backward segments
        double tt = t;
        const double dir = seg_b >= seg_a ? 1.0 : -1.0;
        const double nudge_b = 1e-13 * (1.0 + std::abs(seg_b));
        const double nudge_a = 1e-13 * (1.0 + std::abs(seg_a));
        if (dir > 0 ? tt >= seg_b : tt <= seg_b) tt = seg_b - dir * nudge_b;
        if (dir > 0 ? tt <= seg_a : tt >= seg_a) tt = seg_a + dir * nudge_a;
        return rhs_(tt, y);
    }

    void integrate_segment(double a, double b, Vector& y, DenseRecord* dense) {
        if (a == b) return;
        const double dir = b > a ? 1.0 : -1.0;
        double t = a;
        Vector k[7];
        k[0] = eval_rhs(t, y, a, b);
        if (dense && (dense->t.empty() || dense->t.back() != t)) {
            dense->t.push_back(t);
            dense->y.push_back(y);
            dense->f.push_back(k[0]);
        }
        double h = initial_step(t, y, k[0], std::abs(b - a));
        double err_prev = 1.0;
        long steps = 0;
        while (dir * (b - t) > 0) {
            if (++steps > opt_.max_steps)
                throw IntegrationFailure(t, "step budget exhausted");
            h = std::min(h, opt_.max_step);
            const double remaining = std::abs(b - t);
            bool last = false;
            if (h > 0.95 * remaining) {  // stretch slightly instead of leaving a sliver
                h = remaining;
                last = true;
            }
            const double hmin = 16.0 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, std::abs(t));
            if (!last && h < hmin) throw IntegrationFailure(t, "step size underflow");
            const double hs = dir * h;

            Vector ytmp;
            for (int i = 1; i < 7; ++i) {
                ytmp = y;
                for (int j = 0; j < i; ++j)
                    if (DP_A[i][j] != 0.0) ytmp += (hs * DP_A[i][j]) * k[j];
                k[i] = eval_rhs(t + DP_C[i] * hs, ytmp, a, b);
            }
            // stage 7 state is the 5th order solution (FSAL)
            const Vector& ynew = ytmp;

            Vector errvec = Vector::Zero(y.size());
            for (int i = 0; i < 7; ++i)
                if (DP_E[i] != 0.0) errvec += (hs * DP_E[i]) * k[i];
            double err = 0.0;
            bool finite = ynew.allFinite();
            if (finite) {
                for (Eigen::Index c = 0; c < y.size(); ++c) {
                    const double sc =
                        opt_.atol + opt_.rtol * std::max(std::abs(y(c)), std::abs(ynew(c)));
                    const double e = std::abs(errvec(c)) / sc;
                    err += e * e;
                }
                err = std::sqrt(err / static_cast<double>(y.size()));
            }

            if (!finite || err > 1.0) {
                if (h <= hmin) {
                    if (!finite) throw BlowUp(t);
                    throw IntegrationFailure(t, "step size underflow");
                }
                const double fac =
                    finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
                h = std::max(h * fac, 0.5 * hmin);
                continue;
            }

            t = last ? b : t + hs;
            y = ynew;
            if (y.norm() > opt_.blowup_norm) throw BlowUp(t);
            k[0] = k[6];  // FSAL
            if (dense) {
                dense->t.push_back(t);
                dense->y.push_back(y);
                dense->f.push_back(k[0]);
            }
            // PI controller
            const double e1 = std::max(err, 1e-16);
            double fac = 0.9 * std::pow(e1, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, 5.0);
            h *= fac;
            err_prev = e1;
        }
    }

    double initial_step(double t, const Vector& y, const Vector& f, double span) {
        double d0 = 0.0, d1 = 0.0;
        for (Eigen::Index c = 0; c < y.size(); ++c) {
            const double sc = opt_.atol + opt_.rtol * std::abs(y(c));
            d0 += std::pow(std::abs(y(c)) / sc, 2);
            d1 += std::pow(std::abs(f(c)) / sc, 2);
        }
        d0 = std::sqrt(d0 / std::max<double>(1, y.size()));
        d1 = std::sqrt(d1 / std::max<double>(1, y.size()));
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        (void)t;
        return std::max(1e-12 * span, std::min({h0, span, opt_.max_step}));
    }

    OdeRhs rhs_;
    OdeOptions opt_;
};

}  // namespace detail

/// Integrates y' = rhs(t, y) from required[0] through required.back(),
/// invoking on_point at each entry of `required` (strictly monotone, either
/// direction).  `events` are additional interior split points (discontinuity
/// locations); dense, when given, records every accepted step for Hermite
/// interpolation.
inline void integrate(const OdeRhs& rhs, const Vector& y0, const std::vector<double>& required,
                      const std::vector<double>& events, const OdeOptions& opt,
                      const OdePointFn& on_point, DenseRecord* dense = nullptr) {
    if (required.size() < 2) {
        if (!required.empty() && on_point) on_point(required.front(), y0);
        return;
    }
    const bool forward = required.back() > required.front();
    for (std::size_t i = 1; i < required.size(); ++i) {
        if (forward ? required[i] <= required[i - 1] : required[i] >= required[i - 1])
            throw Error("output points must be strictly monotone");
    }
    const double lo = std::min(required.front(), required.back());
    const double hi = std::max(required.front(), required.back());

    // merge interior event points, skipping any that (nearly) coincide with a
    // required output point
    std::vector<double> extra;
    for (double e : events) {
        if (e <= lo || e >= hi) continue;
        bool close = false;
        for (double r : required)
            if (std::abs(e - r) < 1e-13 * (1.0 + std::abs(e))) close = true;
        for (double x : extra)
            if (std::abs(e - x) < 1e-13 * (1.0 + std::abs(e))) close = true;
        if (!close) extra.push_back(e);
    }
    std::vector<double> stops = required;
    stops.insert(stops.end(), extra.begin(), extra.end());
    if (forward)
        std::sort(stops.begin(), stops.end());
    else
        std::sort(stops.begin(), stops.end(), std::greater<>());

    std::vector<bool> report(stops.size(), false);
    std::size_t ri = 0;
    for (std::size_t s = 0; s < stops.size() && ri < required.size(); ++s) {
        if (stops[s] == required[ri]) {
            report[s] = true;
            ++ri;
        }
    }
    if (ri != required.size()) throw Error("internal: lost a required output point");

    detail::Dopri5 solver(rhs, opt);
    solver.run(y0, stops, report, on_point, dense);
}

}  // namespace ltvph
