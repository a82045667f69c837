#pragma once

// Construction of the limit hierarchies that the two-fluid dynamics relaxes
// onto.  Each builder integrates the reduced evolution system for its regime
// and, at every sample instant, expands all fields as truncated Taylor series
// in time so that exact time derivatives are available without finite
// differencing.  The slaved electron fields of the vanishing-electron-mass
// hierarchy are reconstructed algebraically from those series: in one space
// dimension the electron continuity equation determines the momentum density
// up to a spatial constant, and the momentum balance then determines the
// pressure potential up to its (irrelevant) mean.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eplim/bipolar.hpp"
#include "eplim/elliptic.hpp"
#include "eplim/series.hpp"

namespace eplim {

/// All stored fields of one expansion order at one sample instant.  Time
/// derivatives come from the Taylor ladder, not from differencing, so they
/// satisfy the reduced equations to solver tolerance.
struct ProfileSlice {
    Field n_e, u_e, n_i, u_i, phi;
    Field dt_n_e, dt_u_e, dt_n_i, dt_u_i;
    Field p_e;          // electron pressure potential, mean-zero gauge
    bool has_p_e = false;

    explicit ProfileSlice(const Grid& g)
        : n_e(g), u_e(g), n_i(g), u_i(g), phi(g),
          dt_n_e(g), dt_u_e(g), dt_n_i(g), dt_u_i(g), p_e(g) {}
};

struct ProfileSet {
    Regime regime;
    int order_m = 0;
    GasLawPair laws;
    double lambda = 1.0;
    Grid grid;
    double t_end = 0.0;
    double build_cfl = 0.4;
    std::vector<double> times;
    // orders[j][k]: expansion order j at sample times[k]
    std::vector<std::vector<ProfileSlice>> orders;
    // Mean electron velocity per expansion order (a conserved scalar of the
    // slaved electron flow; only meaningful in the vanishing-mass regime).
    std::array<double, 2> electron_mean_velocity{0.0, 0.0};

    ProfileSet(Regime r, int m, const GasLawPair& l, double lam, const Grid& g)
        : regime(r), order_m(m), laws(l), lambda(lam), grid(g) {}

    const ProfileSlice& slice(int j, int k) const {
        if (j < 0 || j >= static_cast<int>(orders.size()))
            throw std::out_of_range("ProfileSet: expansion order out of range");
        if (k < 0 || k >= static_cast<int>(orders[j].size()))
            throw std::out_of_range("ProfileSet: sample index out of range");
        return orders[j][k];
    }
    int samples() const { return static_cast<int>(times.size()); }
};

struct ProfileBuildOptions {
    int samples = 11;
    double cfl = 0.4;
    int taylor_order = 5;     // depth of the per-sample ladders, >= 4
    double density_floor = 1e-8;
    double blowup_norm = 1e6;
    double filter_alpha = 36.8;
    int filter_order = 36;
};

namespace detail {

/// Velocity from a momentum-density series: solves (flux + c(t)) / n = u
/// where the free constants c_k are fixed by prescribed means of u,
/// mean(u_0) = mean0 and mean(u_k) = 0 for k >= 1 (the mean is conserved).
inline FieldSeries velocity_from_flux(const FieldSeries& flux, const FieldSeries& n,
                                      double mean0) {
    series::check_orders(flux, n, "velocity_from_flux");
    const int K = flux.order();
    const FieldSeries b = series::recip(n);
    FieldSeries u = series::mul(flux, b);
    for (int k = 0; k <= K; ++k) {
        const double want = (k == 0) ? mean0 : 0.0;
        const double c = (want - u[k].mean()) / b[0].mean();
        for (int j = k; j <= K; ++j) u[j] += c * b[j - k];
    }
    return u;
}

/// Taylor ladder of the vanishing-electron-mass hierarchy about one instant.
/// Input is the instantaneous ion data (leading order, and the first-order
/// correction when present); everything else is slaved.  Series depths
/// decrease with each reconstruction stage, so K >= 4 is required for the
/// full first-order electron data and K >= 2 for the leading order.
struct ZeChain {
    FieldSeries n_i0, u_i0, phi0, n_e0, u_e0, p_e0;
    std::optional<FieldSeries> n_i1, u_i1, phi1, n_e1, u_e1, p_e1;
};

inline ZeChain ze_chain(const std::vector<Field>& state, double mean_ue0, double mean_ue1,
                        const GasLawPair& laws, double lambda, int K,
                        PoissonBoltzmannOptions& pb_opts) {
    const bool first_order = state.size() == 4;
    if (!first_order && state.size() != 2)
        throw std::domain_error("ze_chain: state must hold 2 or 4 fields");
    if (K < 2 || (first_order && K < 4))
        throw std::domain_error("ze_chain: ladder depth too small");
    const Grid& g = state[0].grid();
    const GasLaw& le = laws.electron;
    const GasLaw& li = laws.ion;

    auto hinv_stack = [&](double v, int k) { return le.enthalpy_inverse_deriv(v, k); };
    auto hinvp_stack = [&](double v, int k) { return le.enthalpy_inverse_deriv(v, k + 1); };
    auto hi_stack = [&](double v, int k) { return li.enthalpy_deriv(v, k); };
    auto hip_stack = [&](double v, int k) { return li.enthalpy_deriv(v, k + 1); };

    ZeChain ch;
    ch.n_i0 = FieldSeries(g, K);
    ch.u_i0 = FieldSeries(g, K);
    ch.phi0 = FieldSeries(g, K);
    ch.n_i0[0] = state[0];
    ch.u_i0[0] = state[1];

    // Leading potential: quasineutral equilibrium with the instantaneous ions.
    auto pb = solve_poisson_boltzmann(state[0], lambda, le, pb_opts);
    pb_opts.initial_guess = pb.phi;
    ch.phi0[0] = pb.phi;
    const Field w0 = pb.n_e.map([&](double v) { return 1.0 / le.enthalpy_prime(v); });
    const HelmholtzOperator linearized(w0, lambda);

    // Ion recurrences feed the linearized equilibrium balance order by order.
    // When the ladder solves for coefficient k+1, that slot still holds the
    // zero field, so the composition coefficient below collects exactly the
    // terms that do not involve it.
    for (int k = 0; k < K; ++k) {
        ch.n_i0[k + 1] = (-1.0 / (k + 1)) * series::mul(ch.n_i0, ch.u_i0)[k].derivative();
        ch.u_i0[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.u_i0, series::dx(ch.u_i0))[k] +
             (series::compose(ch.n_i0, hi_stack)[k] + ch.phi0[k]).derivative());
        const Field known = series::compose(ch.phi0, hinv_stack)[k + 1];
        ch.phi0[k + 1] = linearized.solve(ch.n_i0[k + 1] - known);
    }
    ch.n_e0 = series::compose(ch.phi0, hinv_stack);

    // Electron reconstruction: continuity gives the momentum density up to a
    // constant, the mean of the velocity pins the constant, and the momentum
    // balance yields the pressure potential.
    const FieldSeries dtne0 = series::dt_shift(ch.n_e0);
    const FieldSeries flux0 = series::scale(series::antiderivative(dtne0), -1.0);
    ch.u_e0 = velocity_from_flux(flux0, series::resize(ch.n_e0, K - 1), mean_ue0);
    {
        const FieldSeries due0 = series::dt_shift(ch.u_e0);
        const FieldSeries adv0 = series::mul(ch.u_e0, series::dx(ch.u_e0));
        ch.p_e0 = FieldSeries(g, K - 2);
        for (int k = 0; k <= K - 2; ++k)
            ch.p_e0[k] = (-1.0) * (due0[k] + adv0[k]).antiderivative();
    }
    if (!first_order) return ch;

    ch.n_i1 = FieldSeries(g, K);
    ch.u_i1 = FieldSeries(g, K);
    ch.phi1 = FieldSeries(g, K);
    FieldSeries& ni1 = *ch.n_i1;
    FieldSeries& ui1 = *ch.u_i1;
    FieldSeries& phi1 = *ch.phi1;
    ni1[0] = state[2];
    ui1[0] = state[3];

    const FieldSeries w0s = series::compose(ch.phi0, hinvp_stack);
    const FieldSeries pe0p = series::resize(ch.p_e0, K);
    const int K1 = K - 2;   // reachable depth of the first-order potential

    // Same zero-slot trick: the product coefficient at order q excludes the
    // unknown phi1_q, so the constant-coefficient part can be solved for.
    auto phi1_step = [&](int q) {
        const Field known = series::mul(w0s, series::add(phi1, pe0p))[q];
        phi1[q] = linearized.solve(ni1[q] - known);
    };
    phi1_step(0);
    const FieldSeries hips = series::compose(ch.n_i0, hip_stack);
    for (int k = 0; k <= K - 2; ++k) {
        ni1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.n_i0, ui1)[k] + series::mul(ni1, ch.u_i0)[k]).derivative();
        ui1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.u_i0, ui1)[k].derivative() +
             (series::mul(hips, ni1)[k] + phi1[k]).derivative());
        if (k + 1 <= K1) phi1_step(k + 1);
    }

    ch.n_e1 = series::mul(series::resize(w0s, K1),
                          series::add(series::resize(phi1, K1), series::resize(pe0p, K1)));
    const FieldSeries dtne1 = series::dt_shift(*ch.n_e1);
    const FieldSeries flux1 =
        series::sub(series::scale(series::antiderivative(dtne1), -1.0),
                    series::resize(series::mul(*ch.n_e1, ch.u_e0), K - 3));
    ch.u_e1 = velocity_from_flux(flux1, series::resize(ch.n_e0, K - 3), mean_ue1);
    {
        const FieldSeries due1 = series::dt_shift(*ch.u_e1);
        const FieldSeries adv1 = series::dx(series::mul(ch.u_e0, *ch.u_e1));
        ch.p_e1 = FieldSeries(g, K - 4);
        for (int k = 0; k <= K - 4; ++k)
            (*ch.p_e1)[k] = (-1.0) * (due1[k] + adv1[k]).antiderivative();
    }
    return ch;
}

/// Taylor ladder of the infinite-ion-mass hierarchy.  Both fluids evolve:
/// the ions are pressureless and force-free at leading order, and the
/// first-order ion momentum carries the resolved gradient of the leading
/// enthalpy-potential sum.  All potentials come from plain Poisson solves.
struct IiChain {
    FieldSeries n_e0, u_e0, n_i0, u_i0, phi0;
    std::optional<FieldSeries> n_e1, u_e1, n_i1, u_i1, phi1;
};

inline IiChain ii_chain(const std::vector<Field>& state, const GasLawPair& laws,
                        double lambda, int K) {
    const bool first_order = state.size() == 8;
    if (!first_order && state.size() != 4)
        throw std::domain_error("ii_chain: state must hold 4 or 8 fields");
    if (K < 1) throw std::domain_error("ii_chain: ladder depth too small");
    const Grid& g = state[0].grid();
    const GasLaw& le = laws.electron;
    const GasLaw& li = laws.ion;

    auto he_stack = [&](double v, int k) { return le.enthalpy_deriv(v, k); };
    auto hep_stack = [&](double v, int k) { return le.enthalpy_deriv(v, k + 1); };
    auto hi_stack = [&](double v, int k) { return li.enthalpy_deriv(v, k); };

    IiChain ch;
    ch.n_e0 = FieldSeries(g, K);
    ch.u_e0 = FieldSeries(g, K);
    ch.n_i0 = FieldSeries(g, K);
    ch.u_i0 = FieldSeries(g, K);
    ch.phi0 = FieldSeries(g, K);
    ch.n_e0[0] = state[0];
    ch.u_e0[0] = state[1];
    ch.n_i0[0] = state[2];
    ch.u_i0[0] = state[3];
    if (first_order) {
        ch.n_e1 = FieldSeries(g, K);
        ch.u_e1 = FieldSeries(g, K);
        ch.n_i1 = FieldSeries(g, K);
        ch.u_i1 = FieldSeries(g, K);
        ch.phi1 = FieldSeries(g, K);
        (*ch.n_e1)[0] = state[4];
        (*ch.u_e1)[0] = state[5];
        (*ch.n_i1)[0] = state[6];
        (*ch.u_i1)[0] = state[7];
    }

    for (int k = 0; k < K; ++k) {
        ch.phi0[k] = solve_poisson((ch.n_i0[k] - ch.n_e0[k]).zero_mean(), lambda);
        ch.n_i0[k + 1] = (-1.0 / (k + 1)) * series::mul(ch.n_i0, ch.u_i0)[k].derivative();
        ch.u_i0[k + 1] = (-1.0 / (k + 1)) * series::mul(ch.u_i0, series::dx(ch.u_i0))[k];
        ch.n_e0[k + 1] = (-1.0 / (k + 1)) * series::mul(ch.n_e0, ch.u_e0)[k].derivative();
        ch.u_e0[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.u_e0, series::dx(ch.u_e0))[k] +
             (series::compose(ch.n_e0, he_stack)[k] - ch.phi0[k]).derivative());
        if (!first_order) continue;
        FieldSeries& ne1 = *ch.n_e1;
        FieldSeries& ue1 = *ch.u_e1;
        FieldSeries& ni1 = *ch.n_i1;
        FieldSeries& ui1 = *ch.u_i1;
        FieldSeries& phi1 = *ch.phi1;
        phi1[k] = solve_poisson((ni1[k] - ne1[k]).zero_mean(), lambda);
        ni1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.n_i0, ui1)[k] + series::mul(ni1, ch.u_i0)[k]).derivative();
        ui1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.u_i0, ui1)[k].derivative() +
             (series::compose(ch.n_i0, hi_stack)[k] + ch.phi0[k]).derivative());
        ne1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.n_e0, ue1)[k] + series::mul(ne1, ch.u_e0)[k]).derivative();
        ue1[k + 1] = (-1.0 / (k + 1)) *
            (series::mul(ch.u_e0, ue1)[k].derivative() +
             (series::mul(series::compose(ch.n_e0, hep_stack), ne1)[k] - phi1[k]).derivative());
    }
    return ch;
}

inline std::vector<Field> co_plus(const std::vector<Field>& s, const std::vector<Field>& t,
                                  double dt, double alpha, int order) {
    std::vector<Field> r;
    r.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        r.push_back(s[i] + dt * t[i].filtered(alpha, order));
    return r;
}

inline std::vector<Field> co_blend(double a, const std::vector<Field>& x,
                                   double b, const std::vector<Field>& y) {
    std::vector<Field> r;
    r.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r.push_back(a * x[i] + b * y[i]);
    return r;
}

/// Strong-stability-preserving third-order integration of a small vector of
/// coupled fields with exact sample hits.  rhs(state) -> tendencies,
/// speed(state) -> max wave speed, check(state, t) throws on invalid states,
/// on_sample(state, t) is called exactly at every requested time.
template <class RhsFn, class SpeedFn, class CheckFn, class SampleFn>
inline void co_integrate(std::vector<Field> state, const std::vector<double>& times,
                         double cfl, double dx, double alpha, int forder,
                         RhsFn&& rhs, SpeedFn&& speed, CheckFn&& check, SampleFn&& on_sample) {
    double t = times.front();
    const double t_end = times.back();
    const double tol = 1e-12 * std::max(1.0, std::abs(t_end));
    std::size_t next = 0;
    auto emit_due = [&] {
        while (next < times.size() && times[next] <= t + tol) {
            on_sample(state, times[next]);
            ++next;
        }
    };
    check(state, t);
    emit_due();
    while (t < t_end - tol) {
        double dt = cfl * dx / std::max(speed(state), 1e-12);
        const double cap = (next < times.size() ? times[next] : t_end) - t;
        dt = std::min(dt, cap);
        const auto s1 = co_plus(state, rhs(state), dt, alpha, forder);
        const auto s2 = co_blend(0.75, state, 0.25, co_plus(s1, rhs(s1), dt, alpha, forder));
        state = co_blend(1.0 / 3.0, state, 2.0 / 3.0, co_plus(s2, rhs(s2), dt, alpha, forder));
        t += dt;
        check(state, t);
        emit_due();
    }
    emit_due();
}

inline std::vector<double> sample_times(double t_end, int samples) {
    if (!(t_end > 0.0)) throw std::domain_error("profile build: t_end must be positive");
    if (samples < 2) throw std::domain_error("profile build: need at least two samples");
    std::vector<double> ts(samples);
    for (int k = 0; k < samples; ++k) ts[k] = t_end * k / (samples - 1);
    return ts;
}

inline void check_positive(const Field& n, double floor, const char* what) {
    if (!(n.min_value() > floor))
        throw BlowUpError(std::string(what) + ": density reached the positivity floor");
}

inline void check_masses(const std::vector<Field>& state, const std::vector<std::size_t>& idx,
                         const std::vector<double>& mass0, const char* what) {
    for (std::size_t q = 0; q < idx.size(); ++q) {
        const double m = state[idx[q]].mean();
        if (std::abs(m - mass0[q]) > 1e-8 * std::max(1.0, std::abs(mass0[q])))
            throw BlowUpError(std::string(what) + ": species mass drifted");
    }
}

inline void check_bounded(const std::vector<Field>& state, double bound, const char* what) {
    for (const Field& f : state) {
        f.require_finite(what);
        if (f.max_abs() > bound)
            throw BlowUpError(std::string(what) + ": state norm exceeded the blow-up bound");
    }
}

} // namespace detail

/// Leading-order profile of the vanishing-electron-mass regime.  The ions
/// evolve under the equilibrium potential; electrons are slaved.  The mean
/// electron velocity is a free scalar of the slaved flow and is conserved.
inline ProfileSet solve_zero_electron_leading(const Field& n_i, const Field& u_i,
                                              double electron_mean_velocity,
                                              const GasLawPair& laws, double lambda,
                                              double t_end,
                                              const ProfileBuildOptions& opts = {}) {
    if (n_i.grid() != u_i.grid()) throw std::domain_error("profile build: grid mismatch");
    if (opts.taylor_order < 2) throw std::domain_error("profile build: taylor_order too small");
    detail::check_positive(n_i, opts.density_floor, "zero-electron profile");
    const Grid g = n_i.grid();

    ProfileSet set(Regime::ZeroElectronMass, 0, laws, lambda, g);
    set.t_end = t_end;
    set.build_cfl = opts.cfl;
    set.times = detail::sample_times(t_end, opts.samples);
    set.electron_mean_velocity = {electron_mean_velocity, 0.0};
    set.orders.resize(1);

    PoissonBoltzmannOptions pb_opts;
    const std::vector<double> mass0 = {n_i.mean()};
    auto rhs = [&](const std::vector<Field>& s) {
        detail::check_positive(s[0], opts.density_floor, "zero-electron profile");
        auto ch = detail::ze_chain(s, electron_mean_velocity, 0.0, laws, lambda, 2, pb_opts);
        return std::vector<Field>{ch.n_i0[1], ch.u_i0[1]};
    };
    auto speed = [&](const std::vector<Field>& s) {
        const Field c = laws.ion.sound_speed(s[0]);
        double m = 0.0;
        for (int j = 0; j < g.n; ++j) m = std::max(m, std::abs(s[1][j]) + c[j]);
        return m;
    };
    auto check = [&](const std::vector<Field>& s, double) {
        detail::check_bounded(s, opts.blowup_norm, "zero-electron profile");
        detail::check_positive(s[0], opts.density_floor, "zero-electron profile");
        detail::check_masses(s, {0}, mass0, "zero-electron profile");
    };
    auto on_sample = [&](const std::vector<Field>& s, double ts) {
        auto ch = detail::ze_chain(s, electron_mean_velocity, 0.0, laws, lambda,
                                   std::max(opts.taylor_order, 2), pb_opts);
        ProfileSlice sl(g);
        sl.n_e = ch.n_e0[0];
        sl.u_e = ch.u_e0[0];
        sl.n_i = ch.n_i0[0];
        sl.u_i = ch.u_i0[0];
        sl.phi = ch.phi0[0];
        sl.dt_n_e = ch.n_e0[1];
        sl.dt_u_e = ch.u_e0[1];
        sl.dt_n_i = ch.n_i0[1];
        sl.dt_u_i = ch.u_i0[1];
        sl.p_e = ch.p_e0[0];
        sl.has_p_e = true;
        (void)ts;
        set.orders[0].push_back(std::move(sl));
    };
    detail::co_integrate({n_i, u_i}, set.times, opts.cfl, g.dx, opts.filter_alpha,
                         opts.filter_order, rhs, speed, check, on_sample);
    return set;
}

/// First-order extension: re-runs the coupled leading plus first-order ion
/// system from the leading set's initial data and cadence.  The first-order
/// electron data is slaved, with its own conserved mean velocity.
inline ProfileSet solve_zero_electron_order1(const ProfileSet& leading,
                                             const Field& n_i1, const Field& u_i1,
                                             double electron_mean_velocity1,
                                             const ProfileBuildOptions& opts = {}) {
    if (leading.regime != Regime::ZeroElectronMass || leading.order_m != 0)
        throw std::domain_error("first-order build needs a leading zero-electron set");
    if (leading.orders.empty() || leading.orders[0].empty())
        throw std::domain_error("first-order build: leading set has no samples");
    const Grid g = leading.grid;
    if (n_i1.grid() != g || u_i1.grid() != g)
        throw std::domain_error("first-order build: grid mismatch");
    if (opts.taylor_order < 4)
        throw std::domain_error("first-order build: taylor_order must be at least 4");

    ProfileSet set(Regime::ZeroElectronMass, 1, leading.laws, leading.lambda, g);
    set.t_end = leading.t_end;
    set.build_cfl = leading.build_cfl;
    set.times = leading.times;
    const double mu0 = leading.electron_mean_velocity[0];
    const double mu1 = electron_mean_velocity1;
    set.electron_mean_velocity = {mu0, mu1};
    set.orders.resize(2);

    const GasLawPair& laws = leading.laws;
    const double lambda = leading.lambda;
    PoissonBoltzmannOptions pb_opts;
    const std::vector<double> mass0 = {leading.orders[0][0].n_i.mean(), n_i1.mean()};
    auto rhs = [&](const std::vector<Field>& s) {
        detail::check_positive(s[0], opts.density_floor, "zero-electron profile");
        auto ch = detail::ze_chain(s, mu0, mu1, laws, lambda, 4, pb_opts);
        return std::vector<Field>{ch.n_i0[1], ch.u_i0[1], (*ch.n_i1)[1], (*ch.u_i1)[1]};
    };
    auto speed = [&](const std::vector<Field>& s) {
        const Field c = laws.ion.sound_speed(s[0]);
        double m = 0.0;
        for (int j = 0; j < g.n; ++j) m = std::max(m, std::abs(s[1][j]) + c[j]);
        return m;
    };
    auto check = [&](const std::vector<Field>& s, double) {
        detail::check_bounded(s, opts.blowup_norm, "zero-electron profile");
        detail::check_positive(s[0], opts.density_floor, "zero-electron profile");
        detail::check_masses(s, {0, 2}, mass0, "zero-electron profile");
    };
    auto on_sample = [&](const std::vector<Field>& s, double) {
        auto ch = detail::ze_chain(s, mu0, mu1, laws, lambda,
                                   std::max(opts.taylor_order, 4), pb_opts);
        ProfileSlice s0(g), s1(g);
        s0.n_e = ch.n_e0[0];
        s0.u_e = ch.u_e0[0];
        s0.n_i = ch.n_i0[0];
        s0.u_i = ch.u_i0[0];
        s0.phi = ch.phi0[0];
        s0.dt_n_e = ch.n_e0[1];
        s0.dt_u_e = ch.u_e0[1];
        s0.dt_n_i = ch.n_i0[1];
        s0.dt_u_i = ch.u_i0[1];
        s0.p_e = ch.p_e0[0];
        s0.has_p_e = true;
        s1.n_e = (*ch.n_e1)[0];
        s1.u_e = (*ch.u_e1)[0];
        s1.n_i = (*ch.n_i1)[0];
        s1.u_i = (*ch.u_i1)[0];
        s1.phi = (*ch.phi1)[0];
        s1.dt_n_e = (*ch.n_e1)[1];
        s1.dt_u_e = (*ch.u_e1)[1];
        s1.dt_n_i = (*ch.n_i1)[1];
        s1.dt_u_i = (*ch.u_i1)[1];
        s1.p_e = (*ch.p_e1)[0];
        s1.has_p_e = true;
        set.orders[0].push_back(std::move(s0));
        set.orders[1].push_back(std::move(s1));
    };
    const ProfileSlice& init = leading.orders[0][0];
    detail::co_integrate({init.n_i, init.u_i, n_i1, u_i1}, set.times, set.build_cfl, g.dx,
                         opts.filter_alpha, opts.filter_order, rhs, speed, check, on_sample);
    return set;
}

/// Leading-order profile of the infinite-ion-mass regime: a unipolar
/// electron fluid coupled to pressureless, force-free ions.  The pressureless
/// pair steepens; characteristics of the initial ion velocity must not cross
/// before t_end, which is checked up front and monitored during the run.
inline ProfileSet solve_infinity_ion_leading(const Field& n_e, const Field& u_e,
                                             const Field& n_i, const Field& u_i,
                                             const GasLawPair& laws, double lambda,
                                             double t_end,
                                             const ProfileBuildOptions& opts = {}) {
    const Grid g = n_e.grid();
    if (u_e.grid() != g || n_i.grid() != g || u_i.grid() != g)
        throw std::domain_error("profile build: grid mismatch");
    if (opts.taylor_order < 1) throw std::domain_error("profile build: taylor_order too small");
    detail::check_positive(n_e, opts.density_floor, "infinite-ion profile");
    detail::check_positive(n_i, opts.density_floor, "infinite-ion profile");
    check_neutrality(n_e, n_i);

    const double slope0 = u_i.derivative().min_value();
    if (1.0 + t_end * slope0 <= 0.0)
        throw CharacteristicCrossingError(
            "infinite-ion profile: ion characteristics cross before the requested horizon");

    ProfileSet set(Regime::InfinityIonMass, 0, laws, lambda, g);
    set.t_end = t_end;
    set.build_cfl = opts.cfl;
    set.times = detail::sample_times(t_end, opts.samples);
    set.orders.resize(1);

    const std::vector<double> mass0 = {n_e.mean(), n_i.mean()};
    auto rhs = [&](const std::vector<Field>& s) {
        detail::check_positive(s[0], opts.density_floor, "infinite-ion profile");
        detail::check_positive(s[2], opts.density_floor, "infinite-ion profile");
        auto ch = detail::ii_chain(s, laws, lambda, 1);
        return std::vector<Field>{ch.n_e0[1], ch.u_e0[1], ch.n_i0[1], ch.u_i0[1]};
    };
    auto speed = [&](const std::vector<Field>& s) {
        const Field c = laws.electron.sound_speed(s[0]);
        double m = 0.0;
        for (int j = 0; j < g.n; ++j) {
            m = std::max(m, std::abs(s[1][j]) + c[j]);
            m = std::max(m, std::abs(s[3][j]));
        }
        return m;
    };
    auto check = [&](const std::vector<Field>& s, double t) {
        detail::check_bounded(s, opts.blowup_norm, "infinite-ion profile");
        detail::check_positive(s[0], opts.density_floor, "infinite-ion profile");
        detail::check_positive(s[2], opts.density_floor, "infinite-ion profile");
        detail::check_masses(s, {0, 2}, mass0, "infinite-ion profile");
        if (1.0 + t * slope0 <= 0.0)
            throw CharacteristicCrossingError("infinite-ion profile: ion characteristics crossed");
    };
    auto on_sample = [&](const std::vector<Field>& s, double) {
        auto ch = detail::ii_chain(s, laws, lambda, std::max(opts.taylor_order, 1));
        ProfileSlice sl(g);
        sl.n_e = ch.n_e0[0];
        sl.u_e = ch.u_e0[0];
        sl.n_i = ch.n_i0[0];
        sl.u_i = ch.u_i0[0];
        sl.phi = ch.phi0[0];
        sl.dt_n_e = ch.n_e0[1];
        sl.dt_u_e = ch.u_e0[1];
        sl.dt_n_i = ch.n_i0[1];
        sl.dt_u_i = ch.u_i0[1];
        set.orders[0].push_back(std::move(sl));
    };
    detail::co_integrate({n_e, u_e, n_i, u_i}, set.times, opts.cfl, g.dx, opts.filter_alpha,
                         opts.filter_order, rhs, speed, check, on_sample);
    return set;
}

/// First-order extension of the infinite-ion hierarchy.  The first-order ion
/// momentum is forced by the gradient of the leading enthalpy-potential sum
/// (the resolved first-order ion pressure term); the first-order electron
/// pair is the linearization of the unipolar flow around the leading order.
inline ProfileSet solve_infinity_ion_order1(const ProfileSet& leading,
                                            const Field& n_e1, const Field& u_e1,
                                            const Field& n_i1, const Field& u_i1,
                                            const ProfileBuildOptions& opts = {}) {
    if (leading.regime != Regime::InfinityIonMass || leading.order_m != 0)
        throw std::domain_error("first-order build needs a leading infinite-ion set");
    if (leading.orders.empty() || leading.orders[0].empty())
        throw std::domain_error("first-order build: leading set has no samples");
    const Grid g = leading.grid;
    if (n_e1.grid() != g || u_e1.grid() != g || n_i1.grid() != g || u_i1.grid() != g)
        throw std::domain_error("first-order build: grid mismatch");
    if (std::abs(n_i1.mean() - n_e1.mean()) * g.length >
        kNeutralityTol * std::max(1.0, std::abs(n_i1.mean()) * g.length))
        throw CompatibilityError("first-order build: corrections must carry equal charge");

    const GasLawPair& laws = leading.laws;
    const double lambda = leading.lambda;
    ProfileSet set(Regime::InfinityIonMass, 1, laws, lambda, g);
    set.t_end = leading.t_end;
    set.build_cfl = leading.build_cfl;
    set.times = leading.times;
    set.orders.resize(2);

    const ProfileSlice& init = leading.orders[0][0];
    const double slope0 = init.u_i.derivative().min_value();
    const std::vector<double> mass0 = {init.n_e.mean(), init.n_i.mean(),
                                       n_e1.mean(), n_i1.mean()};
    auto rhs = [&](const std::vector<Field>& s) {
        detail::check_positive(s[0], opts.density_floor, "infinite-ion profile");
        detail::check_positive(s[2], opts.density_floor, "infinite-ion profile");
        auto ch = detail::ii_chain(s, laws, lambda, 1);
        return std::vector<Field>{ch.n_e0[1],    ch.u_e0[1],    ch.n_i0[1],    ch.u_i0[1],
                                  (*ch.n_e1)[1], (*ch.u_e1)[1], (*ch.n_i1)[1], (*ch.u_i1)[1]};
    };
    auto speed = [&](const std::vector<Field>& s) {
        const Field c = laws.electron.sound_speed(s[0]);
        double m = 0.0;
        for (int j = 0; j < g.n; ++j) {
            m = std::max(m, std::abs(s[1][j]) + c[j]);
            m = std::max(m, std::abs(s[3][j]));
        }
        return m;
    };
    auto check = [&](const std::vector<Field>& s, double t) {
        detail::check_bounded(s, opts.blowup_norm, "infinite-ion profile");
        detail::check_positive(s[0], opts.density_floor, "infinite-ion profile");
        detail::check_positive(s[2], opts.density_floor, "infinite-ion profile");
        detail::check_masses(s, {0, 2, 4, 6}, mass0, "infinite-ion profile");
        if (1.0 + t * slope0 <= 0.0)
            throw CharacteristicCrossingError("infinite-ion profile: ion characteristics crossed");
    };
    auto on_sample = [&](const std::vector<Field>& s, double) {
        auto ch = detail::ii_chain(s, laws, lambda, std::max(opts.taylor_order, 1));
        ProfileSlice s0(g), s1(g);
        s0.n_e = ch.n_e0[0];
        s0.u_e = ch.u_e0[0];
        s0.n_i = ch.n_i0[0];
        s0.u_i = ch.u_i0[0];
        s0.phi = ch.phi0[0];
        s0.dt_n_e = ch.n_e0[1];
        s0.dt_u_e = ch.u_e0[1];
        s0.dt_n_i = ch.n_i0[1];
        s0.dt_u_i = ch.u_i0[1];
        s1.n_e = (*ch.n_e1)[0];
        s1.u_e = (*ch.u_e1)[0];
        s1.n_i = (*ch.n_i1)[0];
        s1.u_i = (*ch.u_i1)[0];
        s1.phi = (*ch.phi1)[0];
        s1.dt_n_e = (*ch.n_e1)[1];
        s1.dt_u_e = (*ch.u_e1)[1];
        s1.dt_n_i = (*ch.n_i1)[1];
        s1.dt_u_i = (*ch.u_i1)[1];
        set.orders[0].push_back(std::move(s0));
        set.orders[1].push_back(std::move(s1));
    };
    detail::co_integrate({init.n_e, init.u_e, init.n_i, init.u_i, n_e1, u_e1, n_i1, u_i1},
                         set.times, set.build_cfl, g.dx, opts.filter_alpha, opts.filter_order,
                         rhs, speed, check, on_sample);
    return set;
}

} // namespace eplim
