#pragma once

// Evaluation of how well a truncated expansion satisfies the full two-fluid
// system.  The combined fields sum the stored orders with weights eps^(2j);
// their time derivatives use the stored per-order derivatives, so no finite
// differencing in time enters.  The equation residuals keep the singular
// mass factor exactly where the scaled momentum equation carries it:
// on the electron momentum when the electron mass vanishes, on the
// enthalpy-potential gradient of the ions when the ion mass diverges.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eplim/bipolar.hpp"
#include "eplim/elliptic.hpp"
#include "eplim/profiles.hpp"

namespace eplim {

struct ApproximateState {
    Field n_e, u_e, n_i, u_i, phi;
    Field dt_n_e, dt_u_e, dt_n_i, dt_u_i;

    explicit ApproximateState(const Grid& g)
        : n_e(g), u_e(g), n_i(g), u_i(g), phi(g),
          dt_n_e(g), dt_u_e(g), dt_n_i(g), dt_u_i(g) {}
};

namespace detail {

inline int effective_order(const ProfileSet& set, int m_eff) {
    if (m_eff < 0) return set.order_m;
    if (m_eff > set.order_m)
        throw std::domain_error("residual: requested order exceeds the stored expansion");
    return m_eff;
}

inline void accumulate_slice(ApproximateState& a, const ProfileSlice& s, double w) {
    a.n_e += w * s.n_e;
    a.u_e += w * s.u_e;
    a.n_i += w * s.n_i;
    a.u_i += w * s.u_i;
    a.phi += w * s.phi;
    a.dt_n_e += w * s.dt_n_e;
    a.dt_u_e += w * s.dt_u_e;
    a.dt_n_i += w * s.dt_n_i;
    a.dt_u_i += w * s.dt_u_i;
}

} // namespace detail

/// Combined expansion fields at sample node k: sum_j eps^(2j) times order j.
/// The potential is the summed expansion potential, deliberately not
/// re-solved from the summed densities.
inline ApproximateState approximate_at_node(const ProfileSet& set, double eps, int k,
                                            int m_eff = -1) {
    const int m = detail::effective_order(set, m_eff);
    ApproximateState a(set.grid);
    double w = 1.0;
    for (int j = 0; j <= m; ++j) {
        detail::accumulate_slice(a, set.slice(j, k), w);
        w *= eps * eps;
    }
    return a;
}

/// Combined fields at an arbitrary time inside the stored span, linear in
/// time between neighboring samples and exact at the nodes.
inline ApproximateState approximate_state(const ProfileSet& set, double eps, double t,
                                          int m_eff = -1) {
    const auto& ts = set.times;
    if (ts.empty()) throw std::domain_error("approximate_state: empty profile set");
    const double tol = 1e-12 * std::max(1.0, std::abs(ts.back()));
    if (t < ts.front() - tol || t > ts.back() + tol)
        throw std::domain_error("approximate_state: time outside the stored span");
    int hi = 1;
    while (hi < static_cast<int>(ts.size()) - 1 && ts[hi] < t) ++hi;
    const int lo = hi - 1;
    const double span = ts[hi] - ts[lo];
    double theta = span > 0.0 ? (t - ts[lo]) / span : 0.0;
    theta = std::min(1.0, std::max(0.0, theta));
    ApproximateState a = approximate_at_node(set, eps, lo, m_eff);
    if (theta > 0.0) {
        const ApproximateState b = approximate_at_node(set, eps, hi, m_eff);
        const double c0 = 1.0 - theta;
        a.n_e = c0 * a.n_e + theta * b.n_e;
        a.u_e = c0 * a.u_e + theta * b.u_e;
        a.n_i = c0 * a.n_i + theta * b.n_i;
        a.u_i = c0 * a.u_i + theta * b.u_i;
        a.phi = c0 * a.phi + theta * b.phi;
        a.dt_n_e = c0 * a.dt_n_e + theta * b.dt_n_e;
        a.dt_u_e = c0 * a.dt_u_e + theta * b.dt_u_e;
        a.dt_n_i = c0 * a.dt_n_i + theta * b.dt_n_i;
        a.dt_u_i = c0 * a.dt_u_i + theta * b.dt_u_i;
    }
    return a;
}

struct ResidualFields {
    Field r_n_e, r_u_e, r_n_i, r_u_i, r_phi;

    explicit ResidualFields(const Grid& g)
        : r_n_e(g), r_u_e(g), r_n_i(g), r_u_i(g), r_phi(g) {}

    /// Root sum of squares of the per-equation L2 norms.
    double combined_l2() const {
        const double a = r_n_e.l2_norm(), b = r_u_e.l2_norm(), c = r_n_i.l2_norm(),
                     d = r_u_i.l2_norm(), e = r_phi.l2_norm();
        return std::sqrt(a * a + b * b + c * c + d * d + e * e);
    }

    /// Same combination in the graded norm of order s.
    double combined_sobolev(double s) const {
        const double a = r_n_e.sobolev_norm(s), b = r_u_e.sobolev_norm(s),
                     c = r_n_i.sobolev_norm(s), d = r_u_i.sobolev_norm(s),
                     e = r_phi.sobolev_norm(s);
        return std::sqrt(a * a + b * b + c * c + d * d + e * e);
    }
};

/// Residuals of the scaled two-fluid system for the combined expansion at
/// sample node k, using stored time derivatives and spectral space
/// derivatives.
inline ResidualFields residual_at(const ProfileSet& set, double eps, int k, int m_eff = -1) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::domain_error("residual: eps must lie in (0, 1]");
    const ApproximateState a = approximate_at_node(set, eps, k, m_eff);
    const GasLaw& le = set.laws.electron;
    const GasLaw& li = set.laws.ion;
    ResidualFields r(set.grid);
    r.r_n_e = a.dt_n_e + (a.n_e * a.u_e).derivative();
    r.r_n_i = a.dt_n_i + (a.n_i * a.u_i).derivative();
    const Field e_inertia = a.dt_u_e + a.u_e * a.u_e.derivative();
    const Field i_inertia = a.dt_u_i + a.u_i * a.u_i.derivative();
    const Field e_force = (le.enthalpy(a.n_e) - a.phi).derivative();
    const Field i_force = (li.enthalpy(a.n_i) + a.phi).derivative();
    if (set.regime == Regime::ZeroElectronMass) {
        r.r_u_e = (eps * eps) * e_inertia + e_force;
        r.r_u_i = i_inertia + i_force;
    } else {
        r.r_u_e = e_inertia + e_force;
        r.r_u_i = i_inertia + (eps * eps) * i_force;
    }
    r.r_phi = (-set.lambda * set.lambda) * a.phi.derivative(2) - (a.n_i - a.n_e);
    return r;
}

/// Largest combined residual over all sample nodes.
inline double residual_sup(const ProfileSet& set, double eps, int m_eff = -1) {
    double sup = 0.0;
    for (int k = 0; k < set.samples(); ++k)
        sup = std::max(sup, residual_at(set, eps, k, m_eff).combined_l2());
    return sup;
}

/// Squared groups of the weighted deviation norm the stability estimate
/// controls: the density-and-potential part and the velocity part.  The
/// singular weight sits on the light species' velocity: eps |U_e|_s^2 when
/// the electron mass vanishes, |U_i|_s^2 / eps^2 when the ion mass diverges.
struct DeviationParts {
    double density2 = 0.0;
    double velocity2 = 0.0;
};

inline DeviationParts deviation_parts(Regime regime, double eps, double s,
                                      const Field& dn_e, const Field& du_e,
                                      const Field& dn_i, const Field& du_i,
                                      const Field& dphi) {
    const double ne = dn_e.sobolev_norm(s);
    const double ni = dn_i.sobolev_norm(s);
    const double gphi = dphi.derivative().sobolev_norm(s);
    const double ue = du_e.sobolev_norm(s);
    const double ui = du_i.sobolev_norm(s);
    DeviationParts p;
    p.density2 = ne * ne + ni * ni + gphi * gphi;
    if (regime == Regime::ZeroElectronMass) {
        p.velocity2 = eps * ue * ue + ui * ui;
    } else if (regime == Regime::InfinityIonMass) {
        p.velocity2 = ue * ue + ui * ui / (eps * eps);
    } else {
        p.velocity2 = ue * ue + ui * ui;
    }
    return p;
}

inline double deviation_norm(Regime regime, double eps, double s,
                             const Field& dn_e, const Field& du_e,
                             const Field& dn_i, const Field& du_i,
                             const Field& dphi) {
    const DeviationParts p = deviation_parts(regime, eps, s, dn_e, du_e, dn_i, du_i, dphi);
    return std::sqrt(p.density2 + p.velocity2);
}

struct WellPrepared {
    BipolarState state;
    double deviation; // achieved weighted deviation from the expansion at t = 0
};

/// Initial data for the full system: the combined expansion at the first
/// sample plus a fixed smooth mean-free perturbation, rescaled so that the
/// weighted deviation norm equals scale * eps^(2m+1) in the vanishing-mass
/// regime and scale * eps^(2m+2) in the diverging-mass regime.  The
/// perturbation keeps species masses and charge balance intact; the
/// potential of the returned state is re-solved in the mean-zero gauge.
inline WellPrepared well_prepared_initial(const ProfileSet& set, double eps, double scale,
                                          double s = 0.0) {
    const Grid& g = set.grid;
    const ApproximateState base = approximate_at_node(set, eps, 0);
    const Field su_e = Field::sample(g, [&](double x) {
        return std::sin(2.0 * std::numbers::pi * x / g.length);
    });
    const Field sn_i = Field::sample(g, [&](double x) {
        return std::cos(3.0 * 2.0 * std::numbers::pi * x / g.length);
    });
    const Field su_i = Field::sample(g, [&](double x) {
        return std::sin(2.0 * 2.0 * std::numbers::pi * x / g.length + 0.7);
    });
    Field sn_e(g);
    Field sphi(g);
    if (set.regime == Regime::ZeroElectronMass) {
        // Preparedness in the vanishing-mass regime means the plant must not
        // load the fast oscillation: slave the electron density and the
        // potential to the ion plant through the screened response, which
        // balances the electron force pointwise.
        const GasLaw& law = set.laws.electron;
        const Field w0 = base.n_e.map([&](double n) { return 1.0 / law.enthalpy_deriv(n, 1); });
        sphi = HelmholtzOperator(w0, set.lambda).solve(sn_i);
        sn_e = w0 * sphi;
    } else {
        sn_e = Field::sample(g, [&](double x) {
            return std::cos(2.0 * 2.0 * std::numbers::pi * x / g.length);
        });
        sphi = solve_poisson((sn_i - sn_e).zero_mean(), set.lambda);
    }
    const double unit = deviation_norm(set.regime, eps, s, sn_e, su_e, sn_i, su_i, sphi);
    const int p = set.regime == Regime::ZeroElectronMass ? 2 * set.order_m + 1
                                                         : 2 * set.order_m + 2;
    const double amp = scale * std::pow(eps, p) / unit;
    BipolarState state = make_bipolar_state(base.n_e + amp * sn_e, base.u_e + amp * su_e,
                                            base.n_i + amp * sn_i, base.u_i + amp * su_i,
                                            set.lambda);
    return WellPrepared{std::move(state), amp * unit};
}

} // namespace eplim
