#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "eplim/elliptic.hpp"
#include "support.hpp"

using eplim::Field;
using eplim::GasLaw;
using eplim::Grid;
using eplim::HelmholtzOperator;
using testsupport::dense_solve;
using testsupport::random_band_limited;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fixed smooth continuum source, mean-free, used by the finite-difference
// oracle on more than one grid.
double oracle_source(double x) {
    return 0.8 * std::sin(kTwoPi * x) + 0.3 * std::cos(2 * kTwoPi * x + 0.4) -
           0.15 * std::sin(4 * kTwoPi * x + 1.1);
}

// Periodic second-order finite-difference solve of -lambda^2 phi'' = s with
// the mean pinned to zero; independent algebraic route (dense elimination).
Field fd_poisson(const Field& s, double lambda) {
    const int n = s.size();
    const double h = s.grid().dx;
    const double c = lambda * lambda / (h * h);
    std::vector<double> A(n * n, 0.0), b(n, 0.0);
    for (int r = 0; r < n; ++r) {
        A[r * n + r] = 2.0 * c;
        A[r * n + ((r + 1) % n)] = -c;
        A[r * n + ((r + n - 1) % n)] = -c;
        b[r] = s[r];
    }
    for (int col = 0; col < n; ++col) A[(n - 1) * n + col] = 1.0; // gauge row
    b[n - 1] = 0.0;
    return Field(s.grid(), dense_solve(std::move(A), std::move(b)));
}

} // namespace

TEST_SUITE("elliptic") {

TEST_CASE("poisson: single mode is solved exactly") {
    Grid g(128, 1.0);
    const double lambda = 0.7;
    const int k = 3;
    Field src = Field::sample(g, [&](double x) { return std::sin(kTwoPi * k * x); });
    Field phi = eplim::solve_poisson(src, lambda);
    const double kap = kTwoPi * k;
    Field exact = src * (1.0 / (lambda * lambda * kap * kap));
    CHECK((phi - exact).max_abs() <= 1e-12 * exact.max_abs());
    CHECK(std::abs(phi.mean()) <= 1e-13);
}

TEST_CASE("poisson: nonzero-mean source is rejected") {
    Grid g(64, 1.0);
    Field src = Field::sample(g, [](double x) { return 1.0 + std::sin(kTwoPi * x); });
    CHECK_THROWS_AS(eplim::solve_poisson(src, 1.0), eplim::CompatibilityError);
}

TEST_CASE("poisson: residual and gauge on random data") {
    Grid g(256, 1.3);
    Field src = random_band_limited(g, 30, 77u);
    const double lambda = 1.0;
    Field phi = eplim::solve_poisson(src, lambda);
    Field resid = (-lambda * lambda) * phi.derivative(2) - src;
    CHECK(resid.l2_norm() <= 1e-10 * src.l2_norm());
    CHECK(std::abs(phi.mean()) <= 1e-13);
}

TEST_CASE("poisson: agreement with finite-difference oracle at second order") {
    const double lambda = 0.9;
    double diff[2];
    int idx = 0;
    for (int n : {64, 128}) {
        Grid g(n, 1.0);
        Field src = Field::sample(g, oracle_source);
        Field spect = eplim::solve_poisson(src, lambda);
        Field fd = fd_poisson(src, lambda);
        diff[idx++] = (spect - fd).max_abs();
    }
    CHECK(diff[0] <= 1e-2);
    CHECK(diff[1] <= diff[0] / 3.0); // second-order shrink, expect ~4x
}

TEST_CASE("helmholtz: manufactured solution with variable coefficient") {
    Grid g(128, 1.0);
    Field psi = random_band_limited(g, 10, 11u) + 0.5;
    Field w = Field::sample(g, [](double x) { return 1.5 + 0.7 * std::cos(kTwoPi * x); });
    HelmholtzOperator op(w, 0.8);
    Field got = op.solve(op.apply(psi));
    CHECK((got - psi).max_abs() <= 1e-11 * std::max(1.0, psi.max_abs()));
}

TEST_CASE("helmholtz: constant coefficient converges immediately") {
    Grid g(64, 1.0);
    Field w = Field::constant(g, 2.0);
    HelmholtzOperator op(w, 1.0);
    Field psi = random_band_limited(g, 6, 13u);
    Field got = op.solve(op.apply(psi));
    CHECK((got - psi).max_abs() <= 1e-12);
}

TEST_CASE("helmholtz: nonpositive coefficient is rejected") {
    Grid g(64, 1.0);
    Field w = Field::sample(g, [](double x) { return 0.5 + std::cos(kTwoPi * x); });
    CHECK_THROWS_AS(HelmholtzOperator(w, 1.0), std::domain_error);
}

TEST_CASE("poisson-boltzmann: linearized response at small amplitude") {
    Grid g(128, 1.0);
    GasLaw law(1.0, 1.0);
    const double lambda = 1.0;
    const double kap = kTwoPi;
    auto deviation = [&](double delta) {
        Field ni = Field::sample(g, [&](double x) { return 1.0 + delta * std::cos(kTwoPi * x); });
        auto res = eplim::solve_poisson_boltzmann(ni, lambda, law);
        Field lin = Field::sample(g, [&](double x) {
            return delta * std::cos(kTwoPi * x) / (lambda * lambda * kap * kap + 1.0);
        });
        return (res.phi - lin).max_abs();
    };
    const double delta = 1e-4;
    CHECK(deviation(delta) <= 10.0 * delta * delta);
    // the deviation is the quadratic correction: halving delta shrinks it ~4x
    CHECK(deviation(delta / 2) <= deviation(delta) / 3.5);
}

TEST_CASE("poisson-boltzmann: residual, positivity, charge balance") {
    Grid g(128, 1.0);
    const double lambda = 0.9;
    for (GasLaw law : {GasLaw(1.0, 1.0), GasLaw(1.0, 2.0), GasLaw(1.2, 1.5)}) {
        Field ni = Field::sample(g, [](double x) {
            return 1.0 + 0.3 * std::cos(kTwoPi * x) + 0.1 * std::sin(2 * kTwoPi * x);
        });
        auto res = eplim::solve_poisson_boltzmann(ni, lambda, law);
        Field F = (-lambda * lambda) * res.phi.derivative(2) + law.enthalpy_inverse(res.phi) - ni;
        CHECK(F.l2_norm() <= 1e-11 * std::max(1.0, ni.l2_norm()));
        CHECK(res.n_e.min_value() > 0.0);
        CHECK(std::abs(ni.mean() - res.n_e.mean()) <= 1e-10 * ni.mean());
    }
}

TEST_CASE("poisson-boltzmann: newton tail is quadratic") {
    Grid g(128, 1.0);
    GasLaw law(1.0, 1.0);
    Field ni = Field::sample(g, [](double x) { return 1.0 + 0.5 * std::cos(kTwoPi * x); });
    eplim::PoissonBoltzmannOptions opts;
    opts.initial_guess = Field(g); // cold start lengthens the Newton path
    auto res = eplim::solve_poisson_boltzmann(ni, 1.0, law, opts);
    std::vector<double> hist;
    for (double r : res.residual_history)
        if (r >= 1e-12) hist.push_back(r);
    REQUIRE(hist.size() >= 3);
    const int n = static_cast<int>(hist.size());
    for (int i = n - 3; i + 1 < n; ++i) {
        CHECK(hist[i + 1] <= 1e6 * hist[i] * hist[i]);
    }
}

TEST_CASE("poisson-boltzmann: dense-matrix damped newton oracle agrees") {
    Grid g(64, 1.0);
    GasLaw law(1.0, 1.0);
    const double lambda = 1.0;
    const int n = g.n;
    Field ni = Field::sample(g, [](double x) {
        return 1.0 + 0.25 * std::cos(kTwoPi * x) + 0.1 * std::sin(2 * kTwoPi * x + 0.3);
    });

    // Dense image of the spectral second derivative (same discrete operator,
    // independent solve algorithm below).
    std::vector<double> D2(n * n);
    for (int j = 0; j < n; ++j) {
        Field e(g);
        e[j] = 1.0;
        Field col = e.derivative(2);
        for (int r = 0; r < n; ++r) D2[r * n + j] = col[r];
    }
    auto F_dense = [&](const std::vector<double>& phi) {
        std::vector<double> out(n, 0.0);
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int c = 0; c < n; ++c) acc += D2[r * n + c] * phi[c];
            out[r] = -lambda * lambda * acc + law.enthalpy_inverse(phi[r]) - ni[r];
        }
        return out;
    };
    auto norm2 = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s * g.dx);
    };

    std::vector<double> phi(n, 0.0);
    std::vector<double> F = F_dense(phi);
    double fn = norm2(F);
    for (int it = 0; it < 60 && fn > 1e-12; ++it) {
        // numerical Jacobian, centered differences column by column
        std::vector<double> J(n * n);
        const double d = 1e-6;
        for (int c = 0; c < n; ++c) {
            std::vector<double> pp = phi, pm = phi;
            pp[c] += d;
            pm[c] -= d;
            auto Fp = F_dense(pp);
            auto Fm = F_dense(pm);
            for (int r = 0; r < n; ++r) J[r * n + c] = (Fp[r] - Fm[r]) / (2.0 * d);
        }
        std::vector<double> rhs(n);
        for (int r = 0; r < n; ++r) rhs[r] = -F[r];
        auto step = dense_solve(std::move(J), std::move(rhs));
        double s = 1.0;
        for (int h = 0; h < 25; ++h) {
            std::vector<double> trial = phi;
            for (int r = 0; r < n; ++r) trial[r] += s * step[r];
            auto Ft = F_dense(trial);
            if (norm2(Ft) < fn) {
                phi = trial;
                F = Ft;
                fn = norm2(Ft);
                break;
            }
            s *= 0.5;
        }
    }
    REQUIRE(fn <= 1e-11);

    auto res = eplim::solve_poisson_boltzmann(ni, lambda, law);
    double diff = 0.0;
    for (int r = 0; r < n; ++r) diff = std::max(diff, std::abs(res.phi[r] - phi[r]));
    CHECK(diff <= 1e-9);
}

TEST_CASE("poisson-boltzmann: warm start converges in a couple of steps") {
    Grid g(128, 1.0);
    GasLaw law(1.0, 1.0);
    Field ni = Field::sample(g, [](double x) { return 1.0 + 0.2 * std::cos(kTwoPi * x); });
    auto first = eplim::solve_poisson_boltzmann(ni, 1.0, law);
    Field ni2 = Field::sample(g, [](double x) { return 1.0 + 0.21 * std::cos(kTwoPi * x); });
    eplim::PoissonBoltzmannOptions opts;
    opts.initial_guess = first.phi;
    auto second = eplim::solve_poisson_boltzmann(ni2, 1.0, law, opts);
    CHECK(second.iterations <= 3);
}

TEST_CASE("poisson-boltzmann: nonpositive ion density is rejected") {
    Grid g(64, 1.0);
    Field bad = Field::sample(g, [](double x) { return 0.5 + std::cos(kTwoPi * x); });
    CHECK_THROWS_AS(eplim::solve_poisson_boltzmann(bad, 1.0, GasLaw(1.0, 1.0)), std::domain_error);
}

} // TEST_SUITE
