#pragma once

// Periodic elliptic solves.
//
//   solve_poisson:            -lambda^2 phi'' = source, mean-zero gauge
//   HelmholtzOperator:        -lambda^2 psi'' + w(x) psi = g,  w > 0 pointwise
//   solve_poisson_boltzmann:  -lambda^2 phi'' + hinv(phi) = n_i
//
// The screened solver freezes the coefficient at the midpoint of its range
// and iterates the resulting constant-coefficient problem; the iteration
// contracts with ratio (w_max - w_min) / (w_max + w_min) < 1, so it always
// converges for admissible coefficients.  The nonlinear solve is damped
// Newton with the screened solver providing each Newton step.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "eplim/errors.hpp"
#include "eplim/gas_law.hpp"
#include "eplim/grid.hpp"

namespace eplim {

/// Solve -lambda^2 phi'' = source with periodic boundary conditions.
/// The source must be mean-free (compatibility); phi is returned mean-zero.
inline Field solve_poisson(const Field& source, double lambda) {
    source.require_finite("solve_poisson");
    const double norm = source.l2_norm();
    if (std::abs(source.mean()) > 1e-10 * norm)
        throw CompatibilityError("solve_poisson: source has nonzero mean");
    auto c = source.spectrum();
    c[0] = 0.0;
    for (int j = 1; j < source.size(); ++j) {
        const double k = source.grid().wavenumber(j);
        c[j] /= lambda * lambda * k * k;
    }
    return Field::from_spectrum(source.grid(), c);
}

/// Screened operator -lambda^2 d_xx + w(x) with strictly positive w.
class HelmholtzOperator {
  public:
    HelmholtzOperator(Field w, double lambda) : w_(std::move(w)), lambda_(lambda) {
        w_.require_finite("HelmholtzOperator");
        wmin_ = w_.min_value();
        wmax_ = w_.max_value();
        if (!(wmin_ > 0.0))
            throw std::domain_error("HelmholtzOperator: coefficient must be positive");
    }

    const Field& coefficient() const { return w_; }

    Field apply(const Field& psi) const {
        return (-lambda_ * lambda_) * psi.derivative(2) + w_ * psi;
    }

    /// Solve (-lambda^2 d_xx + w) psi = g by preconditioned fixed-point
    /// iteration with the coefficient frozen at (wmin + wmax) / 2.
    ///
    /// The update is evaluated in preconditioned form,
    ///   delta = P^-1 g - psi - P^-1((w - wbar) psi),  P = -lambda^2 d_xx + wbar,
    /// which never applies the unpreconditioned operator, so the iteration
    /// is not limited by the kmax^2 roundoff amplification of a raw
    /// residual evaluation.  Convergence is declared on the update norm.
    Field solve(const Field& g, double tol = 1e-13, int max_iter = 4000) const {
        g.require_finite("HelmholtzOperator::solve");
        const double wbar = 0.5 * (wmin_ + wmax_);
        const double gnorm = g.l2_norm();
        if (gnorm == 0.0) return Field(g.grid());

        const Field pg = constant_solve(g, wbar);
        const Field dev = w_ - wbar;
        const double scale = std::max(pg.l2_norm(), gnorm / wbar);
        Field psi = pg;
        for (int it = 0; it < max_iter; ++it) {
            Field delta = pg - psi - constant_solve(dev * psi, wbar);
            psi += delta;
            if (delta.l2_norm() <= tol * std::max(scale, psi.l2_norm())) return psi;
        }
        throw NonConvergenceError("HelmholtzOperator: inner iteration stalled");
    }

  private:
    Field constant_solve(const Field& g, double wbar) const {
        auto c = g.spectrum();
        for (int j = 0; j < g.size(); ++j) {
            const double k = g.grid().wavenumber(j);
            c[j] /= lambda_ * lambda_ * k * k + wbar;
        }
        return Field::from_spectrum(g.grid(), c);
    }

    Field w_;
    double lambda_;
    double wmin_ = 0.0, wmax_ = 0.0;
};

struct PoissonBoltzmannOptions {
    double tol_factor = 1e-11; // residual target: tol_factor * max(1, ||n_i||)
    int max_iter = 50;
    int max_halvings = 20;
    std::optional<Field> initial_guess;
};

struct PoissonBoltzmannResult {
    Field phi;
    Field n_e; // hinv(phi), positive pointwise
    int iterations = 0;
    std::vector<double> residual_history; // ||F(phi)|| per accepted iterate
};

/// Solve -lambda^2 phi'' + hinv(phi) = n_i for the potential in equilibrium
/// with the prescribed ion density.  The zero-order term pins the additive
/// constant of phi, which makes the charge balance integral(n_i - n_e) = 0
/// hold automatically at the solution.
inline PoissonBoltzmannResult solve_poisson_boltzmann(const Field& n_i, double lambda,
                                                      const GasLaw& law_e,
                                                      const PoissonBoltzmannOptions& opts = {}) {
    n_i.require_finite("solve_poisson_boltzmann");
    if (!(n_i.min_value() > 0.0))
        throw std::domain_error("solve_poisson_boltzmann: ion density must be positive");
    const Grid& g = n_i.grid();
    const double tol = opts.tol_factor * std::max(1.0, n_i.l2_norm());

    auto in_range = [&](const Field& phi) {
        return phi.min_value() > law_e.enthalpy_floor();
    };
    auto residual_of = [&](const Field& phi) {
        return (-lambda * lambda) * phi.derivative(2) + law_e.enthalpy_inverse(phi) - n_i;
    };

    // Initial guess: linearization about n_e = 1 applied to the mean-free
    // part of n_i, damped by the response factor of the first mode.
    Field phi(g);
    if (opts.initial_guess) {
        phi = *opts.initial_guess;
        if (phi.grid() != g) throw std::domain_error("solve_poisson_boltzmann: guess grid mismatch");
        if (!in_range(phi)) throw std::domain_error("solve_poisson_boltzmann: guess out of range");
    } else {
        const double k1 = 2.0 * std::numbers::pi / g.length;
        const double hp1 = law_e.enthalpy_prime(1.0);
        const double alpha = hp1 / (hp1 + lambda * lambda * k1 * k1);
        Field cand = alpha * solve_poisson(n_i.zero_mean(), lambda) + law_e.enthalpy(n_i.mean());
        if (in_range(cand) && residual_of(cand).l2_norm() < residual_of(phi).l2_norm()) phi = cand;
    }

    PoissonBoltzmannResult res;
    Field F = residual_of(phi);
    double fnorm = F.l2_norm();
    res.residual_history.push_back(fnorm);

    for (int it = 0; it < opts.max_iter; ++it) {
        if (fnorm <= tol) {
            res.phi = phi;
            res.n_e = law_e.enthalpy_inverse(phi);
            res.iterations = it;
            return res;
        }
        // Newton step: F'(phi) delta = -F, with F'(phi) = -lambda^2 d_xx + hinv'(phi)
        Field w = phi.map([&](double v) { return law_e.enthalpy_inverse_deriv(v, 1); });
        HelmholtzOperator lin(w, lambda);
        Field delta = lin.solve(-1.0 * F);

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            Field trial = phi + step * delta;
            if (in_range(trial)) {
                Field Ft = residual_of(trial);
                const double fn = Ft.l2_norm();
                if (fn < fnorm) {
                    phi = trial;
                    F = Ft;
                    fnorm = fn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted)
            throw NonConvergenceError("solve_poisson_boltzmann: line search failed");
        res.residual_history.push_back(fnorm);
    }
    if (fnorm <= tol) {
        res.phi = phi;
        res.n_e = law_e.enthalpy_inverse(phi);
        res.iterations = opts.max_iter;
        return res;
    }
    throw NonConvergenceError("solve_poisson_boltzmann: Newton did not reach tolerance");
}

} // namespace eplim
