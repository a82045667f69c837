#pragma once

// Barotropic pressure laws in enthalpy form, plus the mass-ratio scaling
// bookkeeping shared by the whole library.
//
// The law is p(n) = a^2 n^gamma with gamma >= 1.  The enthalpy h is the
// primitive of p'(n)/n normalized by h(1) = 0:
//
//   gamma == 1:  h(n) = a^2 log n
//   gamma  > 1:  h(n) = a^2 gamma / (gamma - 1) (n^(gamma-1) - 1)
//
// Both branches have closed-form inverses and derivatives of every order,
// which the expansion machinery uses directly instead of differentiating
// numerically.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "eplim/grid.hpp"

namespace eplim {

/// Hard cap on expansion depth for the closed-form Taylor helpers.
inline constexpr int kMaxTaylorOrder = 8;

class GasLaw {
  public:
    GasLaw() = default;
    GasLaw(double a, double gamma) : a_(a), gamma_(gamma) {
        if (!(a > 0.0)) throw std::domain_error("GasLaw: a must be positive");
        if (!(gamma >= 1.0)) throw std::domain_error("GasLaw: gamma must be >= 1");
    }

    double a() const { return a_; }
    double gamma() const { return gamma_; }
    bool isothermal() const { return std::abs(gamma_ - 1.0) < 1e-12; }

    double pressure(double n) const {
        check_density(n);
        return a_ * a_ * std::pow(n, gamma_);
    }

    double pressure_prime(double n) const {
        check_density(n);
        return a_ * a_ * gamma_ * std::pow(n, gamma_ - 1.0);
    }

    double sound_speed(double n) const { return std::sqrt(pressure_prime(n)); }

    double enthalpy(double n) const {
        check_density(n);
        if (isothermal()) return a_ * a_ * std::log(n);
        const double b = gamma_ - 1.0;
        return a_ * a_ * gamma_ / b * (std::pow(n, b) - 1.0);
    }

    /// h'(n) = p'(n)/n.
    double enthalpy_prime(double n) const {
        check_density(n);
        return a_ * a_ * gamma_ * std::pow(n, gamma_ - 2.0);
    }

    /// k-th derivative of h at n, closed form, any k <= kMaxTaylorOrder.
    double enthalpy_deriv(double n, int k) const {
        check_density(n);
        check_order(k);
        if (k == 0) return enthalpy(n);
        if (isothermal()) {
            double sign = (k % 2 == 1) ? 1.0 : -1.0;
            double fact = 1.0;
            for (int i = 1; i < k; ++i) fact *= i;
            return sign * fact * a_ * a_ * std::pow(n, -static_cast<double>(k));
        }
        const double b = gamma_ - 1.0;
        double coef = a_ * a_ * gamma_ / b;
        double p = b;
        for (int i = 0; i < k; ++i) {
            coef *= p;
            p -= 1.0;
        }
        return coef * std::pow(n, b - k);
    }

    /// Lower end of the enthalpy range (the inverse is defined above it).
    double enthalpy_floor() const {
        if (isothermal()) return -std::numeric_limits<double>::infinity();
        return -a_ * a_ * gamma_ / (gamma_ - 1.0);
    }

    double enthalpy_inverse(double h) const {
        if (isothermal()) return std::exp(h / (a_ * a_));
        const double b = gamma_ - 1.0;
        const double t = 1.0 + h * b / (a_ * a_ * gamma_);
        if (!(t > 0.0)) throw std::domain_error("GasLaw: enthalpy below admissible range");
        return std::pow(t, 1.0 / b);
    }

    /// k-th derivative of the inverse enthalpy at h, closed form.
    double enthalpy_inverse_deriv(double h, int k) const {
        check_order(k);
        if (isothermal()) {
            const double a2 = a_ * a_;
            return std::exp(h / a2) / std::pow(a2, k);
        }
        const double b = gamma_ - 1.0;
        const double s = b / (a_ * a_ * gamma_); // dt/dh for t = 1 + s h
        const double t = 1.0 + h * s;
        if (!(t > 0.0)) throw std::domain_error("GasLaw: enthalpy below admissible range");
        double coef = 1.0;
        double p = 1.0 / b;
        for (int i = 0; i < k; ++i) {
            coef *= p * s;
            p -= 1.0;
        }
        return coef * std::pow(t, 1.0 / b - k);
    }

    // Pointwise lifts to fields.
    Field pressure(const Field& n) const { return lift(n, [this](double x) { return pressure(x); }); }
    Field enthalpy(const Field& n) const { return lift(n, [this](double x) { return enthalpy(x); }); }
    Field enthalpy_prime(const Field& n) const { return lift(n, [this](double x) { return enthalpy_prime(x); }); }
    Field enthalpy_inverse(const Field& h) const { return lift(h, [this](double x) { return enthalpy_inverse(x); }); }
    Field sound_speed(const Field& n) const { return lift(n, [this](double x) { return sound_speed(x); }); }

  private:
    template <class Fn>
    static Field lift(const Field& f, Fn&& fn) {
        Field r = f.map(fn);
        r.require_finite("GasLaw");
        return r;
    }

    static void check_density(double n) {
        if (!(n > 0.0)) throw std::domain_error("GasLaw: density must be positive");
    }

    static void check_order(int k) {
        if (k < 0 || k > kMaxTaylorOrder)
            throw std::domain_error("GasLaw: derivative order out of supported range");
    }

    double a_ = 1.0;
    double gamma_ = 1.0;
};

struct GasLawPair {
    GasLaw electron;
    GasLaw ion;
};

enum class Regime { ZeroElectronMass, InfinityIonMass, RawMasses };

/// Mass scaling shared by the solvers: eps^2 = m_e / m_i always holds.
/// The two singular regimes pin the heavier species' mass to one.
struct ScalingParams {
    Regime regime = Regime::ZeroElectronMass;
    double eps = 1.0;
    double lambda = 1.0;
    double m_e = 1.0;
    double m_i = 1.0;

    static ScalingParams zero_electron(double eps, double lambda = 1.0) {
        check_eps(eps);
        check_lambda(lambda);
        ScalingParams p;
        p.regime = Regime::ZeroElectronMass;
        p.eps = eps;
        p.lambda = lambda;
        p.m_e = eps * eps;
        p.m_i = 1.0;
        return p;
    }

    static ScalingParams infinity_ion(double eps, double lambda = 1.0) {
        check_eps(eps);
        check_lambda(lambda);
        ScalingParams p;
        p.regime = Regime::InfinityIonMass;
        p.eps = eps;
        p.lambda = lambda;
        p.m_e = 1.0;
        p.m_i = 1.0 / (eps * eps);
        return p;
    }

    static ScalingParams raw(double m_e, double m_i, double lambda = 1.0) {
        if (!(m_e > 0.0) || !(m_i > 0.0))
            throw std::domain_error("ScalingParams: masses must be positive");
        check_lambda(lambda);
        ScalingParams p;
        p.regime = Regime::RawMasses;
        p.eps = std::sqrt(m_e / m_i);
        p.lambda = lambda;
        p.m_e = m_e;
        p.m_i = m_i;
        return p;
    }

  private:
    static void check_eps(double eps) {
        if (!(eps > 0.0 && eps <= 1.0))
            throw std::domain_error("ScalingParams: eps must lie in (0, 1]");
    }
    static void check_lambda(double lambda) {
        if (!(lambda > 0.0)) throw std::domain_error("ScalingParams: lambda must be positive");
    }
};

namespace detail {

/// Composition of a scalar Taylor series with a smooth function given by its
/// derivative stack: input u = sum_j u[j] tau^j, output coefficients of
/// f(u(tau)) through order K.  deriv_over_fact(k) must return
/// f^(k)(u[0]) / k!.
inline void compose_scalar_series(const double* u, int K,
                                  const std::function<double(int)>& deriv_over_fact,
                                  double* out) {
    std::vector<double> delta(K + 1, 0.0), pw(K + 1, 0.0), nxt(K + 1, 0.0);
    for (int j = 1; j <= K; ++j) delta[j] = u[j];
    for (int j = 0; j <= K; ++j) out[j] = 0.0;
    out[0] = deriv_over_fact(0);
    pw = delta;
    for (int k = 1; k <= K; ++k) {
        const double c = deriv_over_fact(k);
        for (int j = k; j <= K; ++j) out[j] += c * pw[j];
        if (k == K) break;
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int i = 1; i <= K; ++i) {
            if (pw[i] == 0.0) continue;
            for (int j = 1; i + j <= K; ++j) nxt[i + j] += pw[i] * delta[j];
        }
        std::swap(pw, nxt);
    }
}

} // namespace detail

/// Coefficient fields of eps^(2j), j = 0..m, in the expansion of
/// h(n0 + sum_{j>=1} eps^(2j) corrections[j-1]).  The j = 0 term is h(n0),
/// the j = 1 term is h'(n0) * corrections[0], and higher terms carry the
/// bundled nonlinear contributions of the lower-order corrections.
inline std::vector<Field> enthalpy_taylor_terms(const GasLaw& law, const Field& n0,
                                                const std::vector<Field>& corrections, int m) {
    if (m < 0 || m > kMaxTaylorOrder)
        throw std::domain_error("enthalpy_taylor_terms: order out of range");
    if (static_cast<int>(corrections.size()) < m)
        throw std::domain_error("enthalpy_taylor_terms: not enough correction fields");
    if (!(n0.min_value() > 0.0))
        throw std::domain_error("enthalpy_taylor_terms: base density must be positive");
    for (const auto& c : corrections)
        if (c.grid() != n0.grid()) throw std::domain_error("enthalpy_taylor_terms: grid mismatch");

    std::vector<Field> out(m + 1, Field(n0.grid()));
    std::vector<double> u(m + 1), res(m + 1);
    for (int p = 0; p < n0.size(); ++p) {
        u[0] = n0[p];
        for (int j = 1; j <= m; ++j) u[j] = corrections[j - 1][p];
        auto dof = [&](int k) -> double {
            double f = 1.0;
            for (int i = 2; i <= k; ++i) f *= i;
            return law.enthalpy_deriv(u[0], k) / f;
        };
        detail::compose_scalar_series(u.data(), m, dof, res.data());
        for (int j = 0; j <= m; ++j) out[j][p] = res[j];
    }
    for (auto& f : out) f.require_finite("enthalpy_taylor_terms");
    return out;
}

} // namespace eplim
