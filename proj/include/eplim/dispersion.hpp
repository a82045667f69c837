#pragma once

// Linear wave diagnostic: launch an exact eigenmode of the linearization
// about the quiet state, evolve the full nonlinear system at small
// amplitude, and extract the oscillation frequency of the seeded Fourier
// mode by a least-squares cosine fit.  Serves as an end-to-end check that
// the discretization propagates plasma waves at the analytic frequency.

#include <cmath>
#include <vector>

#include "eplim/bipolar.hpp"

namespace eplim {

struct DispersionResult {
    int mode = 1;
    double wavenumber = 0.0;
    double measured = 0.0;        // frequency of the cosine fit
    double predicted = 0.0;       // fast-branch formula from the light mass
    double exact_linear = 0.0;    // eigenvalue of the full 2x2 linearization
    double rel_error = 0.0;       // |measured - predicted| / predicted
};

inline DispersionResult measure_fast_branch(const GasLawPair& laws, const ScalingParams& p,
                                            const Grid& g, int mode = 1, double T = 1.0,
                                            int ns = 201, double amplitude = 1e-6) {
    if (mode < 1 || mode >= g.n / 2) throw std::domain_error("dispersion: mode out of range");
    if (ns < 8) throw std::domain_error("dispersion: need more samples");
    const double lambda = p.lambda;
    const double k = g.wavenumber(mode);

    // eigenpair of the second-order linearized system for the density pair
    const double Oe2 = (k * k * laws.electron.enthalpy_prime(1.0) + 1.0 / (lambda * lambda)) / p.m_e;
    const double Oi2 = (k * k * laws.ion.enthalpy_prime(1.0) + 1.0 / (lambda * lambda)) / p.m_i;
    const double ce = 1.0 / (lambda * lambda * p.m_e);
    const double ci = 1.0 / (lambda * lambda * p.m_i);
    const double half = 0.5 * (Oe2 + Oi2);
    const double disc = std::sqrt(0.25 * (Oe2 - Oi2) * (Oe2 - Oi2) + ce * ci);
    const double w2 = half + disc; // fast branch
    const double vi = (Oe2 - w2) / ce;

    const double A = amplitude;
    Field n_e = Field::sample(g, [&](double x) { return 1.0 + A * std::cos(k * x); });
    Field n_i = Field::sample(g, [&](double x) { return 1.0 + A * vi * std::cos(k * x); });
    BipolarState s = make_bipolar_state(std::move(n_e), Field(g), std::move(n_i), Field(g), lambda);

    IntegrateOptions opts;
    for (int j = 0; j < ns; ++j) opts.sample_times.push_back(T * j / (ns - 1));
    Trajectory tr = integrate(s, p, laws, T, opts);

    std::vector<double> tt(ns), cc(ns);
    for (int j = 0; j < ns; ++j) {
        tt[j] = tr.samples[j].time;
        auto spec = (tr.samples[j].electron.n - 1.0).spectrum();
        cc[j] = 2.0 * spec[mode].real() / A;
    }
    // least-squares cosine fit residual as a function of the trial frequency
    auto resid = [&](double w) {
        double scc = 0, sss = 0, ssc = 0, rc = 0, rs = 0;
        for (int j = 0; j < ns; ++j) {
            const double c = std::cos(w * tt[j]), sn = std::sin(w * tt[j]);
            scc += c * c;
            sss += sn * sn;
            ssc += sn * c;
            rc += cc[j] * c;
            rs += cc[j] * sn;
        }
        const double det = scc * sss - ssc * ssc;
        const double al = (rc * sss - rs * ssc) / det;
        const double be = (rs * scc - rc * ssc) / det;
        double r = 0;
        for (int j = 0; j < ns; ++j) {
            const double fit = al * std::cos(w * tt[j]) + be * std::sin(w * tt[j]);
            r += (cc[j] - fit) * (cc[j] - fit);
        }
        return r;
    };
    double lo = 0.8 * std::sqrt(w2), hi = 1.2 * std::sqrt(w2);
    for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (resid(m1) < resid(m2))
            hi = m2;
        else
            lo = m1;
    }

    DispersionResult r;
    r.mode = mode;
    r.wavenumber = k;
    r.measured = 0.5 * (lo + hi);
    r.predicted = std::sqrt((laws.electron.a() * laws.electron.a() * k * k +
                             1.0 / (lambda * lambda)) / p.m_e);
    r.exact_linear = std::sqrt(w2);
    r.rel_error = std::abs(r.measured - r.predicted) / r.predicted;
    return r;
}

} // namespace eplim
