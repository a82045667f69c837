#pragma once

// Truncated Taylor series in time whose coefficients are spatial fields.
//
// The expansion profiles need exact time derivatives of quantities that are
// only defined through elliptic solves and compositions (no closed-form time
// dependence).  Representing every field as sum_k c[k] t^k around the
// current instant turns time differentiation into index shifts: products
// become Cauchy convolutions, compositions use the closed-form derivative
// stacks of the gas laws, and evolution equations become recurrences
// c[k+1] = [rhs]_k / (k+1).  All operations truncate at the common order.

#include <functional>
#include <vector>

#include "eplim/gas_law.hpp"
#include "eplim/grid.hpp"

namespace eplim {

struct FieldSeries {
    std::vector<Field> c;

    FieldSeries() = default;
    FieldSeries(const Grid& g, int order) : c(order + 1, Field(g)) {}

    int order() const { return static_cast<int>(c.size()) - 1; }
    const Field& operator[](int k) const { return c[k]; }
    Field& operator[](int k) { return c[k]; }

    /// Series with a prescribed leading coefficient and zero higher terms.
    static FieldSeries frozen(const Field& f0, int order) {
        FieldSeries s(f0.grid(), order);
        s.c[0] = f0;
        return s;
    }

    Field eval(double t) const {
        Field acc = c[order()];
        for (int k = order() - 1; k >= 0; --k) acc = c[k] + t * acc;
        return acc;
    }
};

namespace series {

inline void check_orders(const FieldSeries& a, const FieldSeries& b, const char* op) {
    if (a.order() != b.order()) throw std::domain_error(std::string(op) + ": order mismatch");
}

inline FieldSeries add(const FieldSeries& a, const FieldSeries& b) {
    check_orders(a, b, "series add");
    FieldSeries r = a;
    for (int k = 0; k <= r.order(); ++k) r[k] += b[k];
    return r;
}

inline FieldSeries sub(const FieldSeries& a, const FieldSeries& b) {
    check_orders(a, b, "series sub");
    FieldSeries r = a;
    for (int k = 0; k <= r.order(); ++k) r[k] -= b[k];
    return r;
}

inline FieldSeries scale(const FieldSeries& a, double f) {
    FieldSeries r = a;
    for (int k = 0; k <= r.order(); ++k) r[k] *= f;
    return r;
}

/// Cauchy product truncated at the smaller order.
inline FieldSeries mul(const FieldSeries& a, const FieldSeries& b) {
    const int K = std::min(a.order(), b.order());
    FieldSeries r(a.c[0].grid(), K);
    for (int k = 0; k <= K; ++k)
        for (int j = 0; j <= k; ++j) r[k] += a[j] * b[k - j];
    return r;
}

/// Reciprocal series; the leading coefficient must be bounded away from zero.
inline FieldSeries recip(const FieldSeries& a) {
    const int K = a.order();
    FieldSeries r(a.c[0].grid(), K);
    r[0] = Field::constant(a.c[0].grid(), 1.0) / a.c[0];
    for (int k = 1; k <= K; ++k) {
        Field acc(a.c[0].grid());
        for (int j = 1; j <= k; ++j) acc += a[j] * r[k - j];
        r[k] = -1.0 * (acc / a.c[0]);
    }
    return r;
}

/// Composition f(a(t)) for a smooth scalar function given by its derivative
/// stack: deriv(v, k) = f^(k)(v).  Evaluated pointwise with the shared
/// scalar kernel.
inline FieldSeries compose(const FieldSeries& a,
                           const std::function<double(double, int)>& deriv) {
    const int K = a.order();
    const Grid& g = a.c[0].grid();
    FieldSeries r(g, K);
    std::vector<double> u(K + 1), out(K + 1);
    for (int p = 0; p < g.n; ++p) {
        for (int k = 0; k <= K; ++k) u[k] = a[k][p];
        auto dof = [&](int k) {
            double f = 1.0;
            for (int i = 2; i <= k; ++i) f *= i;
            return deriv(u[0], k) / f;
        };
        detail::compose_scalar_series(u.data(), K, dof, out.data());
        for (int k = 0; k <= K; ++k) r[k][p] = out[k];
    }
    return r;
}

/// Series of the time derivative: one order shorter, coefficients (k+1)c[k+1].
inline FieldSeries dt_shift(const FieldSeries& a) {
    if (a.order() < 1) throw std::domain_error("series dt_shift: order too small");
    FieldSeries r(a.c[0].grid(), a.order() - 1);
    for (int k = 0; k < a.order(); ++k) r[k] = (k + 1.0) * a[k + 1];
    return r;
}

/// Coefficient-wise spatial derivative.
inline FieldSeries dx(const FieldSeries& a, int order = 1) {
    FieldSeries r = a;
    for (int k = 0; k <= r.order(); ++k) r[k] = a[k].derivative(order);
    return r;
}

/// Coefficient-wise mean-zero antiderivative (inputs mean-free per order).
inline FieldSeries antiderivative(const FieldSeries& a) {
    FieldSeries r = a;
    for (int k = 0; k <= r.order(); ++k) r[k] = a[k].antiderivative();
    return r;
}

/// Truncate (or pad with zero fields) to the requested order.
inline FieldSeries resize(const FieldSeries& a, int order) {
    FieldSeries r(a.c[0].grid(), order);
    for (int k = 0; k <= std::min(order, a.order()); ++k) r[k] = a[k];
    return r;
}

} // namespace series
} // namespace eplim
