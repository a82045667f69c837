#pragma once

// Two-fluid pressure dynamics coupled through a self-consistent potential.
//
// State per species: density n and velocity u on the periodic grid.  The
// potential solves -lambda^2 phi'' = n_i - n_e and is recomputed from the
// densities whenever it is needed (every stage of every step); it is never
// advanced in time.  Equations, in enthalpy form:
//
//   dt n_nu + (n_nu u_nu)'                          = 0
//   dt u_e  + u_e u_e' + (h_e(n_e) - phi)' / m_e    = 0
//   dt u_i  + u_i u_i' + (h_i(n_i) + phi)' / m_i    = 0
//
// Time stepping is three-stage strong-stability-preserving Runge-Kutta with
// an exponential spectral filter applied to each stage tendency; the filter
// leaves resolved modes untouched and keeps species masses exact.

#include <algorithm>
#include <cmath>
#include <vector>

#include "eplim/elliptic.hpp"
#include "eplim/errors.hpp"
#include "eplim/gas_law.hpp"
#include "eplim/grid.hpp"

namespace eplim {

struct FluidState {
    Field n;
    Field u;
};

struct BipolarState {
    FluidState electron;
    FluidState ion;
    Field phi;
    double time = 0.0;
};

/// Charge imbalance |integral(n_i - n_e)| permitted before the elliptic
/// coupling is considered inconsistent.
inline constexpr double kNeutralityTol = 1e-10;

inline void check_neutrality(const Field& n_e, const Field& n_i) {
    const double L = n_e.grid().length;
    const double imbalance = std::abs(n_i.mean() - n_e.mean()) * L;
    if (imbalance > kNeutralityTol * std::max(1.0, n_i.mean() * L))
        throw CompatibilityError("bipolar: species charges are not balanced");
}

/// Potential consistent with the current densities, mean-zero gauge.
inline Field solve_phi(const Field& n_e, const Field& n_i, double lambda) {
    check_neutrality(n_e, n_i);
    return solve_poisson((n_i - n_e).zero_mean(), lambda);
}

/// Assemble a state with a freshly solved potential.
inline BipolarState make_bipolar_state(Field n_e, Field u_e, Field n_i, Field u_i,
                                       double lambda, double time = 0.0) {
    if (!(n_e.min_value() > 0.0) || !(n_i.min_value() > 0.0))
        throw std::domain_error("make_bipolar_state: densities must be positive");
    BipolarState s;
    s.phi = solve_phi(n_e, n_i, lambda);
    s.electron = {std::move(n_e), std::move(u_e)};
    s.ion = {std::move(n_i), std::move(u_i)};
    s.time = time;
    return s;
}

struct Tendencies {
    Field dn_e, du_e, dn_i, du_i;
};

/// Fastest signal speed: max over species and points of |u| + c(n)/sqrt(m).
inline double max_wave_speed(const BipolarState& s, const ScalingParams& p,
                             const GasLawPair& laws) {
    double v = 0.0;
    for (int j = 0; j < s.electron.n.size(); ++j) {
        v = std::max(v, std::abs(s.electron.u[j]) +
                            laws.electron.sound_speed(s.electron.n[j]) / std::sqrt(p.m_e));
        v = std::max(v, std::abs(s.ion.u[j]) +
                            laws.ion.sound_speed(s.ion.n[j]) / std::sqrt(p.m_i));
    }
    return v;
}

/// Right-hand side with the potential re-solved from the instantaneous
/// densities.  Throws BlowUpError below the density floor.
inline Tendencies rhs_bipolar(const BipolarState& s, const ScalingParams& p,
                              const GasLawPair& laws, double density_floor = 1e-8) {
    if (s.electron.n.min_value() < density_floor || s.ion.n.min_value() < density_floor)
        throw BlowUpError("rhs_bipolar: density fell below floor");
    const Field phi = solve_phi(s.electron.n, s.ion.n, p.lambda);

    Tendencies t;
    t.dn_e = -1.0 * (s.electron.n * s.electron.u).derivative();
    t.dn_i = -1.0 * (s.ion.n * s.ion.u).derivative();
    t.du_e = -1.0 * (s.electron.u * s.electron.u.derivative()) -
             (1.0 / p.m_e) * (laws.electron.enthalpy(s.electron.n) - phi).derivative();
    t.du_i = -1.0 * (s.ion.u * s.ion.u.derivative()) -
             (1.0 / p.m_i) * (laws.ion.enthalpy(s.ion.n) + phi).derivative();
    return t;
}

struct IntegrateOptions {
    double cfl = 0.4;
    double density_floor = 1e-8;
    double blowup_norm = 1e6;
    double filter_alpha = 36.8;
    int filter_order = 36;
    std::vector<double> sample_times; // sorted, within [start, t_end]
};

struct Trajectory {
    std::vector<BipolarState> samples;
    int steps = 0;
    double dt_min = 0.0;
};

namespace detail {

struct RawState {
    Field n_e, u_e, n_i, u_i;

    static RawState of(const BipolarState& s) {
        return {s.electron.n, s.electron.u, s.ion.n, s.ion.u};
    }
    RawState plus(const Tendencies& t, double dt, double alpha, int order) const {
        return {n_e + dt * t.dn_e.filtered(alpha, order),
                u_e + dt * t.du_e.filtered(alpha, order),
                n_i + dt * t.dn_i.filtered(alpha, order),
                u_i + dt * t.du_i.filtered(alpha, order)};
    }
    RawState blend(double a, const RawState& o, double b) const {
        return {a * n_e + b * o.n_e, a * u_e + b * o.u_e,
                a * n_i + b * o.n_i, a * u_i + b * o.u_i};
    }
    BipolarState to_state(double lambda, double time) const {
        BipolarState s;
        s.electron = {n_e, u_e};
        s.ion = {n_i, u_i};
        s.phi = solve_phi(n_e, n_i, lambda);
        s.time = time;
        return s;
    }
    double max_norm() const {
        return std::max(std::max(n_e.max_abs(), u_e.max_abs()),
                        std::max(n_i.max_abs(), u_i.max_abs()));
    }
};

} // namespace detail

/// Advance the coupled system to t_end, recomputing the step from the CFL
/// condition against the instantaneous fastest wave.  States at the
/// requested sample times (hit exactly) are returned; if no samples are
/// requested, only the final state is.
inline Trajectory integrate(const BipolarState& initial, const ScalingParams& p,
                            const GasLawPair& laws, double t_end,
                            const IntegrateOptions& opts = {}) {
    const Grid& g = initial.electron.n.grid();
    const double mass_e0 = initial.electron.n.mean();
    const double mass_i0 = initial.ion.n.mean();

    auto rhs = [&](const detail::RawState& r) {
        BipolarState s;
        s.electron = {r.n_e, r.u_e};
        s.ion = {r.n_i, r.u_i};
        s.time = 0.0;
        return rhs_bipolar(s, p, laws, opts.density_floor);
    };

    std::vector<double> events = opts.sample_times;
    std::sort(events.begin(), events.end());

    Trajectory out;
    detail::RawState y = detail::RawState::of(initial);
    double t = initial.time;
    std::size_t next_event = 0;

    auto emit_due = [&](double now) {
        while (next_event < events.size() && events[next_event] <= now + 1e-12 * std::max(1.0, t_end)) {
            out.samples.push_back(y.to_state(p.lambda, events[next_event]));
            ++next_event;
        }
    };
    emit_due(t);

    const double horizon = t_end;
    out.dt_min = horizon - t;
    while (t < horizon - 1e-14 * std::max(1.0, horizon)) {
        BipolarState cur;
        cur.electron = {y.n_e, y.u_e};
        cur.ion = {y.n_i, y.u_i};
        const double speed = max_wave_speed(cur, p, laws);
        double dt = opts.cfl * g.dx / std::max(speed, 1e-12);
        double target = horizon;
        if (next_event < events.size()) target = std::min(target, events[next_event]);
        dt = std::min(dt, target - t);

        const Tendencies k0 = rhs(y);
        const detail::RawState y1 = y.plus(k0, dt, opts.filter_alpha, opts.filter_order);
        const Tendencies k1 = rhs(y1);
        const detail::RawState y2 =
            y.blend(0.75, y1.plus(k1, dt, opts.filter_alpha, opts.filter_order), 0.25);
        const Tendencies k2 = rhs(y2);
        y = y.blend(1.0 / 3.0, y2.plus(k2, dt, opts.filter_alpha, opts.filter_order), 2.0 / 3.0);

        t += dt;
        ++out.steps;
        out.dt_min = std::min(out.dt_min, dt);

        if (y.max_norm() > opts.blowup_norm || !y.n_e.finite() || !y.u_e.finite() ||
            !y.n_i.finite() || !y.u_i.finite())
            throw BlowUpError("integrate: field norm exploded");
        if (y.n_e.min_value() < opts.density_floor || y.n_i.min_value() < opts.density_floor)
            throw BlowUpError("integrate: density fell below floor");
        if (std::abs(y.n_e.mean() - mass_e0) > 1e-8 * mass_e0 ||
            std::abs(y.n_i.mean() - mass_i0) > 1e-8 * mass_i0)
            throw BlowUpError("integrate: species mass drifted");

        emit_due(t);
    }

    if (out.samples.empty() || out.samples.back().time < t - 1e-12)
        out.samples.push_back(y.to_state(p.lambda, t));
    return out;
}

/// Diagonal symmetrizer weights: (h'(n), m n) per species, evaluated on the
/// reference densities.  Positive definite for positive densities.
struct SymmetrizerDiag {
    Field e_density, e_velocity, i_density, i_velocity;

    static SymmetrizerDiag at(const Field& n_e, const Field& n_i, const GasLawPair& laws,
                              const ScalingParams& p) {
        SymmetrizerDiag s;
        s.e_density = laws.electron.enthalpy_prime(n_e);
        s.e_velocity = p.m_e * n_e;
        s.i_density = laws.ion.enthalpy_prime(n_i);
        s.i_velocity = p.m_i * n_i;
        return s;
    }

    double min_weight() const {
        return std::min(std::min(e_density.min_value(), e_velocity.min_value()),
                        std::min(i_density.min_value(), i_velocity.min_value()));
    }
};

namespace detail {

inline double weighted_h_s(const Field& weight, const Field& f, int s) {
    double acc = 0.0;
    Field d = f;
    for (int a = 0; a <= s; ++a) {
        if (a > 0) d = f.derivative(a);
        double part = 0.0;
        for (int j = 0; j < f.size(); ++j) part += weight[j] * d[j] * d[j];
        acc += part * f.grid().dx;
    }
    return acc;
}

} // namespace detail

/// Weighted squared energy of a perturbation around a reference state:
/// per species the symmetrizer-weighted sums of derivative norms up to
/// order s, plus the derivative norms of the potential gradient.
inline double energy_functional(const FluidState& diff_e, const FluidState& diff_i,
                                const Field& phi_diff, const SymmetrizerDiag& sym, int s) {
    if (s < 0) throw std::domain_error("energy_functional: s must be >= 0");
    double acc = 0.0;
    acc += detail::weighted_h_s(sym.e_density, diff_e.n, s);
    acc += detail::weighted_h_s(sym.e_velocity, diff_e.u, s);
    acc += detail::weighted_h_s(sym.i_density, diff_i.n, s);
    acc += detail::weighted_h_s(sym.i_velocity, diff_i.u, s);
    for (int a = 0; a <= s; ++a) {
        const double nrm = phi_diff.derivative(a + 1).l2_norm();
        acc += nrm * nrm;
    }
    return acc;
}

} // namespace eplim
