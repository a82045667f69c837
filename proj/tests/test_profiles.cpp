#include "doctest.h"

#include <cmath>
#include <numbers>

#include <filesystem>

#include "eplim/profiles.hpp"
#include "eplim/profiles_io.hpp"

using namespace eplim;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProfileBuildOptions quick_opts() {
    ProfileBuildOptions o;
    o.samples = 3;
    return o;
}
} // namespace

TEST_SUITE("profiles") {

TEST_CASE("uniform quiet plasma is a fixed point of both hierarchies") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const Field one = Field::constant(g, 1.0);
    const Field zero(g);

    auto ze = solve_zero_electron_leading(one, zero, 0.0, laws, 1.0, 0.05, quick_opts());
    REQUIRE(ze.samples() == 3);
    for (int k = 0; k < ze.samples(); ++k) {
        const ProfileSlice& s = ze.slice(0, k);
        CHECK((s.n_e - 1.0).max_abs() < 1e-11);
        CHECK(s.u_e.max_abs() < 1e-11);
        CHECK((s.n_i - 1.0).max_abs() < 1e-11);
        CHECK(s.u_i.max_abs() < 1e-11);
        CHECK(s.phi.max_abs() < 1e-11);
        CHECK(s.p_e.max_abs() < 1e-11);
        CHECK(s.dt_n_i.max_abs() < 1e-11);
        CHECK(s.dt_u_e.max_abs() < 1e-11);
    }

    auto ii = solve_infinity_ion_leading(one, zero, one, zero, laws, 1.0, 0.05, quick_opts());
    for (int k = 0; k < ii.samples(); ++k) {
        const ProfileSlice& s = ii.slice(0, k);
        CHECK((s.n_e - 1.0).max_abs() < 1e-12);
        CHECK((s.n_i - 1.0).max_abs() < 1e-12);
        CHECK(s.phi.max_abs() < 1e-12);
        CHECK(s.dt_n_e.max_abs() < 1e-12);
        CHECK(s.dt_u_i.max_abs() < 1e-12);
    }
}

TEST_CASE("slaved electron fields satisfy their balance laws at every sample") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(0.9, 2.0)};
    const double lambda = 0.8;
    const Field ni = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ui = Field::sample(g, [](double x) { return 0.05 * std::sin(kTwoPi * x); });
    auto set = solve_zero_electron_leading(ni, ui, 0.15, laws, lambda, 0.05, quick_opts());

    for (int k = 0; k < set.samples(); ++k) {
        const ProfileSlice& s = set.slice(0, k);
        // equilibrium closure with the instantaneous potential
        CHECK((s.n_e - laws.electron.enthalpy_inverse(s.phi)).max_abs() < 1e-12);
        const Field gauss = (-lambda * lambda) * s.phi.derivative(2) + s.n_e - s.n_i;
        CHECK(gauss.max_abs() < 1e-9);
        // ion pair evolves under the equilibrium potential
        const Field ion_mass = s.dt_n_i + (s.n_i * s.u_i).derivative();
        CHECK(ion_mass.max_abs() < 1e-9);
        const Field ion_mom = s.dt_u_i + s.u_i * s.u_i.derivative() +
                              (laws.ion.enthalpy(s.n_i) + s.phi).derivative();
        CHECK(ion_mom.max_abs() < 1e-9);
        // reconstructed electron flow: continuity and constrained momentum
        const Field e_mass = s.dt_n_e + (s.n_e * s.u_e).derivative();
        CHECK(e_mass.max_abs() < 1e-9);
        REQUIRE(s.has_p_e);
        const Field e_mom = s.dt_u_e + s.u_e * s.u_e.derivative() + s.p_e.derivative();
        CHECK(e_mom.max_abs() < 1e-9);
        CHECK(std::abs(s.p_e.mean()) < 1e-12);
        CHECK(s.u_e.mean() == doctest::Approx(0.15).epsilon(1e-10));
    }
}

TEST_CASE("first-order correction closes the linearized equilibrium balance") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const double lambda = 1.0;
    const Field ni = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ui = Field::sample(g, [](double x) { return 0.05 * std::sin(kTwoPi * x); });
    const Field ni1 = Field::sample(g, [](double x) { return 0.08 * std::cos(2 * kTwoPi * x); });
    const Field ui1 = Field::sample(g, [](double x) { return 0.06 * std::sin(kTwoPi * x + 0.4); });
    auto leading = solve_zero_electron_leading(ni, ui, 0.0, laws, lambda, 0.05, quick_opts());
    auto set = solve_zero_electron_order1(leading, ni1, ui1, 0.1, quick_opts());
    REQUIRE(set.orders.size() == 2);

    for (int k = 0; k < set.samples(); ++k) {
        const ProfileSlice& s0 = set.slice(0, k);
        const ProfileSlice& s1 = set.slice(1, k);
        const Field w0 = s0.n_e.map([&](double v) { return 1.0 / laws.electron.enthalpy_prime(v); });
        // density correction is the linearized equilibrium response
        CHECK((s1.n_e - w0 * (s0.p_e + s1.phi)).max_abs() < 1e-10);
        // screened potential equation for the correction
        const Field screened = (-lambda * lambda) * s1.phi.derivative(2) + w0 * s1.phi -
                               (s1.n_i - w0 * s0.p_e);
        CHECK(screened.max_abs() < 1e-9);
        // linearized ion pair driven by the correction potential
        const Field ion_mass = s1.dt_n_i + (s0.n_i * s1.u_i + s1.n_i * s0.u_i).derivative();
        CHECK(ion_mass.max_abs() < 1e-9);
        const Field ion_mom = s1.dt_u_i + (s0.u_i * s1.u_i).derivative() +
                              (laws.ion.enthalpy_prime(s0.n_i) * s1.n_i + s1.phi).derivative();
        CHECK(ion_mom.max_abs() < 1e-9);
        // first-order electron continuity and momentum
        const Field e_mass = s1.dt_n_e + (s0.n_e * s1.u_e + s1.n_e * s0.u_e).derivative();
        CHECK(e_mass.max_abs() < 1e-9);
        const Field e_mom = s1.dt_u_e + (s0.u_e * s1.u_e).derivative() + s1.p_e.derivative();
        CHECK(e_mom.max_abs() < 1e-9);
        CHECK(s1.u_e.mean() == doctest::Approx(0.1).epsilon(1e-10));
    }
}

TEST_CASE("first-order solve is affine in the correction data") {
    // The correction system is forced by the leading order (w0 p_e0 enters the
    // screened potential equation), so solutions are affine in the correction
    // data: differences from the zero-correction solution must scale exactly.
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const Field ni = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ui(g);
    const Field ni1 = Field::sample(g, [](double x) { return 0.05 * std::cos(2 * kTwoPi * x); });
    const Field ui1 = Field::sample(g, [](double x) { return 0.04 * std::sin(kTwoPi * x); });
    auto leading = solve_zero_electron_leading(ni, ui, 0.0, laws, 1.0, 0.04, quick_opts());
    auto none = solve_zero_electron_order1(leading, Field(g), Field(g), 0.0, quick_opts());
    auto once = solve_zero_electron_order1(leading, ni1, ui1, 0.05, quick_opts());
    auto twice = solve_zero_electron_order1(leading, 2.0 * ni1, 2.0 * ui1, 0.10, quick_opts());
    const int last = once.samples() - 1;
    const ProfileSlice& z = none.slice(1, last);
    const ProfileSlice& a = once.slice(1, last);
    const ProfileSlice& b = twice.slice(1, last);
    CHECK((b.n_i - z.n_i - 2.0 * (a.n_i - z.n_i)).max_abs() < 1e-10);
    CHECK((b.u_i - z.u_i - 2.0 * (a.u_i - z.u_i)).max_abs() < 1e-10);
    CHECK((b.n_e - z.n_e - 2.0 * (a.n_e - z.n_e)).max_abs() < 1e-10);
    CHECK((b.u_e - z.u_e - 2.0 * (a.u_e - z.u_e)).max_abs() < 1e-10);
    CHECK((b.phi - z.phi - 2.0 * (a.phi - z.phi)).max_abs() < 1e-10);
    // leading order is untouched by the correction
    CHECK((twice.slice(0, last).n_i - once.slice(0, last).n_i).max_abs() < 1e-14);
}

TEST_CASE("pressureless ions advect exactly at constant velocity") {
    Grid g(128, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const double c = 0.3, t_end = 0.1;
    const Field ne = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ni = ne;
    const Field ue(g);
    const Field uic = Field::constant(g, c);
    auto set = solve_infinity_ion_leading(ne, ue, ni, uic, laws, 1.0, t_end, quick_opts());
    const ProfileSlice& s = set.slice(0, set.samples() - 1);
    const Field exact = Field::sample(g, [&](double x) {
        return 1.0 + 0.1 * std::cos(kTwoPi * (x - c * t_end));
    });
    CHECK((s.n_i - exact).max_abs() < 1e-7);
    CHECK((s.u_i - c).max_abs() < 1e-10);
}

TEST_CASE("free-streaming ions follow their characteristics until they cross") {
    Grid g(128, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const double t_end = 0.1;
    auto u0 = [](double x) { return 0.2 * std::sin(kTwoPi * x); };
    const Field ne = Field::constant(g, 1.0);
    const Field ni = ne;
    const Field ui = Field::sample(g, u0);
    auto set = solve_infinity_ion_leading(ne, Field(g), ni, ui, laws, 1.0, t_end, quick_opts());
    const ProfileSlice& s = set.slice(0, set.samples() - 1);
    // invert x = xi + t u0(xi) per node and transport the initial data
    for (int j = 0; j < g.n; j += 7) {
        const double x = g.node(j);
        double xi = x;
        for (int it = 0; it < 60; ++it) {
            const double f = xi + t_end * u0(xi) - x;
            const double fp = 1.0 + t_end * 0.2 * kTwoPi * std::cos(kTwoPi * xi);
            xi -= f / fp;
        }
        const double jac = 1.0 + t_end * 0.2 * kTwoPi * std::cos(kTwoPi * xi);
        CHECK(std::abs(s.u_i.interpolate(x) - u0(xi)) < 1e-7);
        CHECK(std::abs(s.n_i.interpolate(x) - 1.0 / jac) < 1e-7);
    }
}

TEST_CASE("crossing characteristics are rejected up front") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const Field ne = Field::constant(g, 1.0);
    const Field ui = Field::sample(g, [](double x) { return 0.5 * std::sin(kTwoPi * x); });
    // min slope is -0.5 * 2 pi, so crossing happens near t = 0.32
    CHECK_THROWS_AS(
        solve_infinity_ion_leading(ne, Field(g), ne, ui, laws, 1.0, 1.0, quick_opts()),
        CharacteristicCrossingError);
}

TEST_CASE("first-order ion momentum carries the resolved leading gradient") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(0.8, 2.0)};
    const double lambda = 0.9;
    const Field ne = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ue = Field::sample(g, [](double x) { return 0.05 * std::sin(kTwoPi * x); });
    const Field ni = ne;
    const Field ui = Field::sample(g, [](double x) { return 0.04 * std::sin(kTwoPi * x + 0.3); });
    const Field ne1 = Field::sample(g, [](double x) { return 0.06 * std::cos(2 * kTwoPi * x); });
    const Field ni1 = ne1;
    const Field ue1 = Field::sample(g, [](double x) { return 0.03 * std::sin(2 * kTwoPi * x); });
    const Field ui1(g);
    auto leading = solve_infinity_ion_leading(ne, ue, ni, ui, laws, lambda, 0.05, quick_opts());
    auto set = solve_infinity_ion_order1(leading, ne1, ue1, ni1, ui1, quick_opts());

    for (int k = 0; k < set.samples(); ++k) {
        const ProfileSlice& s0 = set.slice(0, k);
        const ProfileSlice& s1 = set.slice(1, k);
        const Field ion_mom = s1.dt_u_i + (s0.u_i * s1.u_i).derivative() +
                              (laws.ion.enthalpy(s0.n_i) + s0.phi).derivative();
        CHECK(ion_mom.max_abs() < 1e-9);
        const Field ion_mass = s1.dt_n_i + (s0.n_i * s1.u_i + s1.n_i * s0.u_i).derivative();
        CHECK(ion_mass.max_abs() < 1e-9);
        const Field e_mom = s1.dt_u_e + (s0.u_e * s1.u_e).derivative() +
                            (laws.electron.enthalpy_prime(s0.n_e) * s1.n_e - s1.phi).derivative();
        CHECK(e_mom.max_abs() < 1e-9);
        const Field gauss1 = (-lambda * lambda) * s1.phi.derivative(2) - (s1.n_i - s1.n_e);
        CHECK(gauss1.max_abs() < 1e-9);
    }
}

TEST_CASE("time refinement converges at third order") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const Field ni = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ui = Field::sample(g, [](double x) { return 0.05 * std::sin(kTwoPi * x); });
    ProfileBuildOptions coarse = quick_opts();
    ProfileBuildOptions fine = quick_opts();
    ProfileBuildOptions finest = quick_opts();
    coarse.cfl = 0.4;
    fine.cfl = 0.2;
    finest.cfl = 0.05;
    auto a = solve_zero_electron_leading(ni, ui, 0.0, laws, 1.0, 0.05, coarse);
    auto b = solve_zero_electron_leading(ni, ui, 0.0, laws, 1.0, 0.05, fine);
    auto c = solve_zero_electron_leading(ni, ui, 0.0, laws, 1.0, 0.05, finest);
    const int last = a.samples() - 1;
    const double ea = (a.slice(0, last).n_i - c.slice(0, last).n_i).max_abs();
    const double eb = (b.slice(0, last).n_i - c.slice(0, last).n_i).max_abs();
    CHECK(ea / eb > 6.0);
    CHECK(ea < 1e-5);
}

TEST_CASE("profile sets survive a save and load roundtrip bit for bit") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.1, 1.0), GasLaw(0.9, 2.0)};
    const Field ni = Field::sample(g, [](double x) { return 1.0 + 0.1 * std::cos(kTwoPi * x); });
    const Field ui = Field::sample(g, [](double x) { return 0.05 * std::sin(kTwoPi * x); });
    const Field ni1 = Field::sample(g, [](double x) { return 0.04 * std::cos(2 * kTwoPi * x); });
    auto leading = solve_zero_electron_leading(ni, ui, 0.1, laws, 0.8, 0.04, quick_opts());
    auto set = solve_zero_electron_order1(leading, ni1, Field(g), 0.02, quick_opts());

    const auto dir = std::filesystem::temp_directory_path() / "eplim_profile_roundtrip";
    std::filesystem::remove_all(dir);
    save_profile_set(set, dir.string());
    auto back = load_profile_set(dir.string());

    CHECK(back.regime == set.regime);
    CHECK(back.order_m == 1);
    CHECK(back.grid == set.grid);
    CHECK(back.lambda == set.lambda);
    CHECK(back.t_end == set.t_end);
    CHECK(back.times == set.times);
    CHECK(back.electron_mean_velocity == set.electron_mean_velocity);
    CHECK(back.laws.ion.gamma() == set.laws.ion.gamma());
    REQUIRE(back.orders.size() == set.orders.size());
    double worst = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < set.samples(); ++k) {
            const ProfileSlice& a = set.slice(j, k);
            const ProfileSlice& b = back.slice(j, k);
            worst = std::max(worst, (a.n_e - b.n_e).max_abs());
            worst = std::max(worst, (a.u_e - b.u_e).max_abs());
            worst = std::max(worst, (a.n_i - b.n_i).max_abs());
            worst = std::max(worst, (a.u_i - b.u_i).max_abs());
            worst = std::max(worst, (a.phi - b.phi).max_abs());
            worst = std::max(worst, (a.dt_n_e - b.dt_n_e).max_abs());
            worst = std::max(worst, (a.dt_u_i - b.dt_u_i).max_abs());
            worst = std::max(worst, (a.p_e - b.p_e).max_abs());
            CHECK(b.has_p_e);
        }
    CHECK(worst == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("build preconditions are enforced") {
    Grid g(64, 1.0);
    GasLawPair laws{GasLaw(1.0, 1.0), GasLaw(1.0, 1.0)};
    const Field one = Field::constant(g, 1.0);
    const Field bad = Field::constant(g, 1.001);
    CHECK_THROWS_AS(
        solve_infinity_ion_leading(one, Field(g), bad, Field(g), laws, 1.0, 0.1, quick_opts()),
        CompatibilityError);
    auto ze = solve_zero_electron_leading(one, Field(g), 0.0, laws, 1.0, 0.05, quick_opts());
    auto ii = solve_infinity_ion_leading(one, Field(g), one, Field(g), laws, 1.0, 0.05, quick_opts());
    CHECK_THROWS_AS(solve_zero_electron_order1(ii, one, one, 0.0, quick_opts()),
                    std::domain_error);
    CHECK_THROWS_AS(solve_infinity_ion_order1(ze, one, one, one, one, quick_opts()),
                    std::domain_error);
    CHECK_THROWS_AS(solve_infinity_ion_order1(ii, bad, one, one, one, quick_opts()),
                    CompatibilityError);
}

} // TEST_SUITE
