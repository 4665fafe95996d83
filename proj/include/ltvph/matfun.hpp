#pragma once

// Matrix-valued functions of time.  Leaves are grids of TimeExpr or constant
// matrices; sums, products, adjoints, embeddings, pointwise inverses and time
// reparameterizations are composed structurally so that derivative() is exact
// everywhere (product rule, d(M^-1) = -M^-1 M' M^-1, chain rule), never a
// finite difference.  Pointwise inverses evaluate by numeric solves.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "ltvph/errors.hpp"
#include "ltvph/expr.hpp"
#include "ltvph/hermlin.hpp"

namespace ltvph {

struct Interval {
    double lo;
    double hi;

    bool contains(double t) const {
        const double slack = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
        return t >= lo - slack && t <= hi + slack;
    }
    Interval intersect(const Interval& other) const {
        return {std::max(lo, other.lo), std::min(hi, other.hi)};
    }
    double length() const { return hi - lo; }
};

class MatrixFunction;

namespace detail {

struct MatImpl {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Interval domain{-1e300, 1e300};

    virtual ~MatImpl() = default;
    virtual Matrix eval(double t) const = 0;
    virtual MatrixFunction derivative() const = 0;
    virtual void collect_events(std::set<double>& out) const = 0;
    virtual std::optional<std::vector<TimeExpr>> try_exprs() const { return std::nullopt; }
};

using MatImplPtr = std::shared_ptr<const MatImpl>;

}  // namespace detail

class MatrixFunction {
public:
    MatrixFunction() = default;
    explicit MatrixFunction(detail::MatImplPtr impl) : impl_(std::move(impl)) {}

    bool valid() const { return impl_ != nullptr; }
    Eigen::Index rows() const { return impl_->rows; }
    Eigen::Index cols() const { return impl_->cols; }
    const Interval& domain() const { return impl_->domain; }

    Matrix eval_at(double t) const {
        if (!impl_->domain.contains(t))
            throw DomainMismatch("t=" + std::to_string(t) + " outside [" +
                                 std::to_string(impl_->domain.lo) + ", " +
                                 std::to_string(impl_->domain.hi) + "]");
        return impl_->eval(t);
    }

    MatrixFunction derivative() const { return impl_->derivative(); }

    /// Breakpoints / kinks / poles harvested from the expression leaves;
    /// integrators must not step across these.
    std::vector<double> event_points() const {
        std::set<double> pts;
        impl_->collect_events(pts);
        std::vector<double> out;
        for (double p : pts)
            if (impl_->domain.contains(p)) out.push_back(p);
        return out;
    }

    /// Entry expressions when the whole tree is symbolic (row-major), for
    /// serialization; nullopt when any part is a numeric closure.
    std::optional<std::vector<TimeExpr>> try_exprs() const { return impl_->try_exprs(); }

    // --- builders ---
    static MatrixFunction from_exprs(Eigen::Index rows, Eigen::Index cols,
                                     std::vector<TimeExpr> entries, Interval domain);
    static MatrixFunction constant(const Matrix& value, Interval domain);
    static MatrixFunction zero(Eigen::Index rows, Eigen::Index cols, Interval domain) {
        return constant(Matrix::Zero(rows, cols), domain);
    }
    static MatrixFunction identity(Eigen::Index n, Interval domain) {
        return constant(Matrix::Identity(n, n), domain);
    }
    static MatrixFunction scalar(const TimeExpr& e, Interval domain) {
        return from_exprs(1, 1, {e}, domain);
    }
    static MatrixFunction from_callable(Eigen::Index rows, Eigen::Index cols, Interval domain,
                                        std::function<Matrix(double)> eval,
                                        std::function<MatrixFunction()> derivative = {},
                                        std::vector<double> events = {});

    /// Cubic Hermite interpolant through (t_k, value_k, slope_k); derivative()
    /// differentiates the same cubic.
    static MatrixFunction hermite_spline(std::vector<double> knots, std::vector<Matrix> values,
                                         std::vector<Matrix> slopes);

private:
    detail::MatImplPtr impl_;
};

// combinators
MatrixFunction operator+(const MatrixFunction& a, const MatrixFunction& b);
MatrixFunction operator-(const MatrixFunction& a, const MatrixFunction& b);
MatrixFunction operator*(const MatrixFunction& a, const MatrixFunction& b);
MatrixFunction operator-(const MatrixFunction& a);
MatrixFunction adjoint(const MatrixFunction& a);
MatrixFunction scale(const TimeExpr& s, const MatrixFunction& a);
MatrixFunction scale(Complex s, const MatrixFunction& a);
/// Pointwise inverse realized by numeric solves at evaluation time.
MatrixFunction inverse(const MatrixFunction& a);
/// Places `inner` at block position (i0, j0) of a rows x cols zero matrix.
MatrixFunction embed(const MatrixFunction& inner, Eigen::Index i0, Eigen::Index j0,
                     Eigen::Index rows, Eigen::Index cols);
/// Extracts the rows x cols block at (i0, j0).
MatrixFunction block(const MatrixFunction& a, Eigen::Index i0, Eigen::Index j0,
                     Eigen::Index rows, Eigen::Index cols);
/// A(theta(t)) on new_domain; mapped_events are the preimages of A's events.
MatrixFunction compose_time(const MatrixFunction& a, const TimeExpr& theta, Interval new_domain,
                            std::vector<double> mapped_events);

namespace detail {

struct SymbolicMat final : MatImpl {
    std::vector<TimeExpr> entries;  // row-major

    Matrix eval(double t) const override {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = entries[i * cols + j].eval(t);
        return m;
    }
    MatrixFunction derivative() const override {
        std::vector<TimeExpr> d;
        d.reserve(entries.size());
        for (const auto& e : entries) d.push_back(e.differentiate());
        return MatrixFunction::from_exprs(rows, cols, std::move(d), domain);
    }
    void collect_events(std::set<double>& out) const override {
        for (const auto& e : entries)
            for (double p : e.special_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override { return entries; }
};

struct ConstMat final : MatImpl {
    Matrix value;

    Matrix eval(double) const override { return value; }
    MatrixFunction derivative() const override {
        return MatrixFunction::zero(rows, cols, domain);
    }
    void collect_events(std::set<double>&) const override {}
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        std::vector<TimeExpr> out;
        out.reserve(static_cast<std::size_t>(rows * cols));
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out.push_back(TimeExpr::constant(value(i, j)));
        return out;
    }
};

struct SumMat final : MatImpl {
    MatrixFunction a, b;
    double sign = 1.0;

    Matrix eval(double t) const override {
        return sign > 0 ? Matrix(a.eval_at(t) + b.eval_at(t)) : Matrix(a.eval_at(t) - b.eval_at(t));
    }
    MatrixFunction derivative() const override {
        return sign > 0 ? a.derivative() + b.derivative() : a.derivative() - b.derivative();
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : a.event_points()) out.insert(p);
        for (double p : b.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ea = a.try_exprs();
        auto eb = b.try_exprs();
        if (!ea || !eb) return std::nullopt;
        std::vector<TimeExpr> out;
        out.reserve(ea->size());
        for (std::size_t k = 0; k < ea->size(); ++k)
            out.push_back(sign > 0 ? (*ea)[k] + (*eb)[k] : (*ea)[k] - (*eb)[k]);
        return out;
    }
};

struct ProdMat final : MatImpl {
    MatrixFunction a, b;

    Matrix eval(double t) const override { return a.eval_at(t) * b.eval_at(t); }
    MatrixFunction derivative() const override {
        return a.derivative() * b + a * b.derivative();
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : a.event_points()) out.insert(p);
        for (double p : b.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ea = a.try_exprs();
        auto eb = b.try_exprs();
        if (!ea || !eb) return std::nullopt;
        std::vector<TimeExpr> out;
        const Eigen::Index inner = a.cols();
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                TimeExpr acc(0.0);
                for (Eigen::Index k = 0; k < inner; ++k)
                    acc = acc + (*ea)[i * inner + k] * (*eb)[k * cols + j];
                out.push_back(acc);
            }
        return out;
    }
};

struct AdjointMat final : MatImpl {
    MatrixFunction a;

    Matrix eval(double t) const override { return a.eval_at(t).adjoint(); }
    MatrixFunction derivative() const override { return adjoint(a.derivative()); }
    void collect_events(std::set<double>& out) const override {
        for (double p : a.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        // conjugation is not in the expression op set, so the adjoint is only
        // expressible as the transpose of real-valued entries
        auto ea = a.try_exprs();
        if (!ea) return std::nullopt;
        for (const auto& e : *ea)
            if (!e.is_real_valued()) return std::nullopt;
        std::vector<TimeExpr> out;
        out.reserve(ea->size());
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out.push_back((*ea)[j * rows + i]);
        return out;
    }
};

struct ScaledMat final : MatImpl {
    TimeExpr s;
    MatrixFunction a;

    Matrix eval(double t) const override { return s.eval(t) * a.eval_at(t); }
    MatrixFunction derivative() const override {
        return scale(s.differentiate(), a) + scale(s, a.derivative());
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : s.special_points()) out.insert(p);
        for (double p : a.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ea = a.try_exprs();
        if (!ea) return std::nullopt;
        std::vector<TimeExpr> out;
        out.reserve(ea->size());
        for (const auto& e : *ea) out.push_back(s * e);
        return out;
    }
};

struct InverseMat final : MatImpl {
    MatrixFunction a;

    Matrix eval(double t) const override {
        return ltvph::solve(a.eval_at(t), Matrix::Identity(rows, cols));
    }
    MatrixFunction derivative() const override {
        MatrixFunction inv(std::make_shared<InverseMat>(*this));
        return -(inv * a.derivative() * inv);
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : a.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ea = a.try_exprs();
        if (!ea) return std::nullopt;
        if (rows == 1) return std::vector<TimeExpr>{TimeExpr::recip((*ea)[0])};
        // diagonal matrices invert entrywise
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                if (i != j) {
                    auto c = (*ea)[i * cols + j].constant_value();
                    if (!c || *c != Complex(0.0)) return std::nullopt;
                }
        std::vector<TimeExpr> out = *ea;
        for (Eigen::Index i = 0; i < rows; ++i)
            out[i * cols + i] = TimeExpr::recip((*ea)[i * cols + i]);
        return out;
    }
};

struct EmbedMat final : MatImpl {
    MatrixFunction inner;
    Eigen::Index i0 = 0, j0 = 0;

    Matrix eval(double t) const override {
        Matrix m = Matrix::Zero(rows, cols);
        m.block(i0, j0, inner.rows(), inner.cols()) = inner.eval_at(t);
        return m;
    }
    MatrixFunction derivative() const override {
        return embed(inner.derivative(), i0, j0, rows, cols);
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : inner.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ei = inner.try_exprs();
        if (!ei) return std::nullopt;
        std::vector<TimeExpr> out(static_cast<std::size_t>(rows * cols), TimeExpr(0.0));
        for (Eigen::Index i = 0; i < inner.rows(); ++i)
            for (Eigen::Index j = 0; j < inner.cols(); ++j)
                out[(i0 + i) * cols + (j0 + j)] = (*ei)[i * inner.cols() + j];
        return out;
    }
};

struct BlockMat final : MatImpl {
    MatrixFunction a;
    Eigen::Index i0 = 0, j0 = 0;

    Matrix eval(double t) const override {
        return a.eval_at(t).block(i0, j0, rows, cols);
    }
    MatrixFunction derivative() const override {
        return block(a.derivative(), i0, j0, rows, cols);
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : a.event_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        auto ea = a.try_exprs();
        if (!ea) return std::nullopt;
        std::vector<TimeExpr> out;
        out.reserve(static_cast<std::size_t>(rows * cols));
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                out.push_back((*ea)[(i0 + i) * a.cols() + (j0 + j)]);
        return out;
    }
};

struct CallableMat final : MatImpl {
    std::function<Matrix(double)> fn;
    std::function<MatrixFunction()> deriv;
    std::vector<double> events;

    Matrix eval(double t) const override { return fn(t); }
    MatrixFunction derivative() const override {
        if (!deriv) throw Error("derivative unavailable for this numeric matrix function");
        return deriv();
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : events) out.insert(p);
    }
};

struct ComposeTimeMat final : MatImpl {
    MatrixFunction a;
    TimeExpr theta;
    std::vector<double> mapped_events;

    Matrix eval(double t) const override {
        double tau = theta.eval(t).real();
        return a.eval_at(tau);
    }
    MatrixFunction derivative() const override {
        // d/dt A(theta(t)) = theta'(t) * A'(theta(t))
        return scale(theta.differentiate(),
                     compose_time(a.derivative(), theta, domain, mapped_events));
    }
    void collect_events(std::set<double>& out) const override {
        for (double p : mapped_events) out.insert(p);
        for (double p : theta.special_points()) out.insert(p);
    }
    std::optional<std::vector<TimeExpr>> try_exprs() const override {
        // guard semantics do not survive substitution; only piecewise-free
        // trees compose symbolically, and the numeric path is always exact,
        // so serialization of compositions is not offered.
        return std::nullopt;
    }
};

struct HermiteMat final : MatImpl {
    std::vector<double> knots;
    std::vector<Matrix> values;
    std::vector<Matrix> slopes;
    bool differentiated = false;

    std::size_t segment(double t) const {
        auto it = std::upper_bound(knots.begin(), knots.end(), t);
        std::size_t k = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin() - 1);
        return std::min(k, knots.size() - 2);
    }

    Matrix eval(double t) const override {
        const std::size_t k = segment(t);
        const double h = knots[k + 1] - knots[k];
        const double s = (t - knots[k]) / h;
        const Matrix& y0 = values[k];
        const Matrix& y1 = values[k + 1];
        const Matrix& m0 = slopes[k];
        const Matrix& m1 = slopes[k + 1];
        if (!differentiated) {
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
            const double h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s);
            const double h11 = s * s * (s - 1);
            return h00 * y0 + (h10 * h) * m0 + h01 * y1 + (h11 * h) * m1;
        }
        const double d00 = 6 * s * (s - 1) / h;
        const double d10 = (1 - s) * (1 - 3 * s);
        const double d01 = -6 * s * (s - 1) / h;
        const double d11 = s * (3 * s - 2);
        return d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
    }
    MatrixFunction derivative() const override {
        if (differentiated)
            throw Error("second derivative of a Hermite dense output is not provided");
        auto d = std::make_shared<HermiteMat>(*this);
        d->differentiated = true;
        return MatrixFunction(detail::MatImplPtr(d));
    }
    void collect_events(std::set<double>&) const override {}
};

inline void check_same_shape(const MatrixFunction& a, const MatrixFunction& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
}

}  // namespace detail

inline MatrixFunction MatrixFunction::from_exprs(Eigen::Index rows, Eigen::Index cols,
                                                 std::vector<TimeExpr> entries, Interval domain) {
    if (static_cast<Eigen::Index>(entries.size()) != rows * cols)
        throw DimensionMismatch("expression grid size");
    auto impl = std::make_shared<detail::SymbolicMat>();
    impl->rows = rows;
    impl->cols = cols;
    impl->domain = domain;
    impl->entries = std::move(entries);
    return MatrixFunction(impl);
}

inline MatrixFunction MatrixFunction::constant(const Matrix& value, Interval domain) {
    auto impl = std::make_shared<detail::ConstMat>();
    impl->rows = value.rows();
    impl->cols = value.cols();
    impl->domain = domain;
    impl->value = value;
    return MatrixFunction(impl);
}

inline MatrixFunction MatrixFunction::from_callable(Eigen::Index rows, Eigen::Index cols,
                                                    Interval domain,
                                                    std::function<Matrix(double)> eval,
                                                    std::function<MatrixFunction()> derivative,
                                                    std::vector<double> events) {
    auto impl = std::make_shared<detail::CallableMat>();
    impl->rows = rows;
    impl->cols = cols;
    impl->domain = domain;
    impl->fn = std::move(eval);
    impl->deriv = std::move(derivative);
    impl->events = std::move(events);
    return MatrixFunction(impl);
}

inline MatrixFunction MatrixFunction::hermite_spline(std::vector<double> knots,
                                                     std::vector<Matrix> values,
                                                     std::vector<Matrix> slopes) {
    if (knots.size() < 2 || knots.size() != values.size() || knots.size() != slopes.size())
        throw DimensionMismatch("hermite spline needs matching knots/values/slopes");
    auto impl = std::make_shared<detail::HermiteMat>();
    impl->rows = values.front().rows();
    impl->cols = values.front().cols();
    impl->domain = {knots.front(), knots.back()};
    impl->knots = std::move(knots);
    impl->values = std::move(values);
    impl->slopes = std::move(slopes);
    return MatrixFunction(impl);
}

inline MatrixFunction operator+(const MatrixFunction& a, const MatrixFunction& b) {
    detail::check_same_shape(a, b, "add");
    auto impl = std::make_shared<detail::SumMat>();
    impl->rows = a.rows();
    impl->cols = a.cols();
    impl->domain = a.domain().intersect(b.domain());
    impl->a = a;
    impl->b = b;
    impl->sign = 1.0;
    return MatrixFunction(impl);
}

inline MatrixFunction operator-(const MatrixFunction& a, const MatrixFunction& b) {
    detail::check_same_shape(a, b, "sub");
    auto impl = std::make_shared<detail::SumMat>();
    impl->rows = a.rows();
    impl->cols = a.cols();
    impl->domain = a.domain().intersect(b.domain());
    impl->a = a;
    impl->b = b;
    impl->sign = -1.0;
    return MatrixFunction(impl);
}

inline MatrixFunction operator*(const MatrixFunction& a, const MatrixFunction& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matrix product");
    auto impl = std::make_shared<detail::ProdMat>();
    impl->rows = a.rows();
    impl->cols = b.cols();
    impl->domain = a.domain().intersect(b.domain());
    impl->a = a;
    impl->b = b;
    return MatrixFunction(impl);
}

inline MatrixFunction operator-(const MatrixFunction& a) {
    return scale(Complex(-1.0, 0.0), a);
}

inline MatrixFunction adjoint(const MatrixFunction& a) {
    auto impl = std::make_shared<detail::AdjointMat>();
    impl->rows = a.cols();
    impl->cols = a.rows();
    impl->domain = a.domain();
    impl->a = a;
    return MatrixFunction(impl);
}

inline MatrixFunction scale(const TimeExpr& s, const MatrixFunction& a) {
    auto impl = std::make_shared<detail::ScaledMat>();
    impl->rows = a.rows();
    impl->cols = a.cols();
    impl->domain = a.domain();
    impl->s = s;
    impl->a = a;
    return MatrixFunction(impl);
}

inline MatrixFunction scale(Complex s, const MatrixFunction& a) {
    return scale(TimeExpr::constant(s), a);
}

inline MatrixFunction inverse(const MatrixFunction& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("inverse of non-square matrix");
    auto impl = std::make_shared<detail::InverseMat>();
    impl->rows = a.rows();
    impl->cols = a.cols();
    impl->domain = a.domain();
    impl->a = a;
    return MatrixFunction(impl);
}

inline MatrixFunction embed(const MatrixFunction& inner, Eigen::Index i0, Eigen::Index j0,
                            Eigen::Index rows, Eigen::Index cols) {
    if (i0 + inner.rows() > rows || j0 + inner.cols() > cols)
        throw DimensionMismatch("embed block exceeds target shape");
    auto impl = std::make_shared<detail::EmbedMat>();
    impl->rows = rows;
    impl->cols = cols;
    impl->domain = inner.domain();
    impl->inner = inner;
    impl->i0 = i0;
    impl->j0 = j0;
    return MatrixFunction(impl);
}

inline MatrixFunction block(const MatrixFunction& a, Eigen::Index i0, Eigen::Index j0,
                            Eigen::Index rows, Eigen::Index cols) {
    if (i0 + rows > a.rows() || j0 + cols > a.cols())
        throw DimensionMismatch("block exceeds source shape");
    auto impl = std::make_shared<detail::BlockMat>();
    impl->rows = rows;
    impl->cols = cols;
    impl->domain = a.domain();
    impl->a = a;
    impl->i0 = i0;
    impl->j0 = j0;
    return MatrixFunction(impl);
}

inline MatrixFunction compose_time(const MatrixFunction& a, const TimeExpr& theta,
                                   Interval new_domain, std::vector<double> mapped_events) {
    auto impl = std::make_shared<detail::ComposeTimeMat>();
    impl->rows = a.rows();
    impl->cols = a.cols();
    impl->domain = new_domain;
    impl->a = a;
    impl->theta = theta;
    impl->mapped_events = std::move(mapped_events);
    return MatrixFunction(impl);
}

}  // namespace ltvph
