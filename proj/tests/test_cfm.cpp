#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "platoon/cfm.hpp"

using namespace platoon;
using namespace platoon::cfm;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("ovm reference values") {
    OvmParams p;
    // zero deviation from safe spacing, saturated tanh(s)
    const double s30 = p.rho * 30.0 + p.s0;
    CHECK(ovm_accel({s30, 0.0, 30.0}, p) == doctest::Approx(15.0 * std::tanh(s30) - 30.0));
    CHECK(ovm_accel({s30, 0.0, 30.0}, p) == doctest::Approx(-15.0).epsilon(1e-12));

    // standing start with an open road
    CHECK(ovm_accel({1e9, 0.0, 0.0}, p) == doctest::Approx(15.0 * (1.0 + std::tanh(2.0))).epsilon(1e-14));
    CHECK(free_road_accel(0.0, p) == doctest::Approx(15.0 * (1.0 + std::tanh(2.0))));

    // OVM ignores the approach rate
    CHECK(ovm_accel({40.0, 3.0, 20.0}, p) == ovm_accel({40.0, -3.0, 20.0}, p));
}

TEST_CASE("ovm equilibrium from an independent root find") {
    OvmParams p;
    for (double v : {15.0, 18.5, 22.0, 27.0}) {
        // closed form: delta = atanh(2 v / v_d - tanh(s))
        const double s = p.rho * v + p.s0;
        const double gap = s + std::atanh(2.0 * v / p.v_d - std::tanh(s));
        CHECK(std::abs(ovm_accel({gap, 0.0, v}, p)) < 1e-9);
        CHECK(equilibrium_gap(v, p) == doctest::Approx(gap).epsilon(1e-9));
    }
}

TEST_CASE("idm reference values") {
    IdmParams p;
    CHECK(idm_accel({1e12, 0.0, 30.0}, p) == doctest::Approx(0.0));
    CHECK(idm_accel({2.0, 0.0, 0.0}, p) == doctest::Approx(0.0));

    const double gap_eq = 32.0 / std::sqrt(1.0 - std::pow(2.0 / 3.0, 4));
    CHECK(gap_eq == doctest::Approx(288.0 / std::sqrt(65.0)).epsilon(1e-12));
    CHECK(gap_eq == doctest::Approx(35.722).epsilon(1e-4));
    CHECK(std::abs(idm_accel({gap_eq, 0.0, 20.0}, p)) < 1e-9);
    CHECK(equilibrium_gap(20.0, p) == doctest::Approx(gap_eq).epsilon(1e-9));

    CHECK_THROWS_AS(idm_accel({0.0, 0.0, 10.0}, p), ValidationError);
    CHECK_THROWS_AS(idm_accel({-1.0, 0.0, 10.0}, p), ValidationError);
}

TEST_CASE("idm desired gap forms") {
    IdmParams p;
    const CfmInput closing{40.0, -2.0, 20.0};
    CHECK(idm_desired_gap(closing, p) == doctest::Approx(32.0 + 20.0 * 2.0 / (2.0 * std::sqrt(6.0))));
    // closing in makes the driver brake harder than holding speed
    CHECK(idm_accel(closing, p) < idm_accel({40.0, 0.0, 20.0}, p));

    p.gap_form = IdmGapForm::Printed;
    CHECK(idm_desired_gap({40.0, 2.0, 20.0}, p) == doctest::Approx(32.0 + 20.0 * 2.0 / (2.0 * 6.0)));
}

TEST_CASE("finite-difference partials match hand derivatives") {
    IdmParams p;
    for (double v : {12.0, 20.0, 28.0}) {
        const CfmInput eq{equilibrium_gap(v, p), 0.0, v};
        const auto fd = partials(eq, p);
        const auto an = oracle::idm_analytic(eq, p);
        CHECK(rel_err(fd.d_gap, an.d_gap) < 1e-4);
        CHECK(rel_err(fd.d_rel, an.d_rel) < 1e-4);
        CHECK(rel_err(fd.d_speed, an.d_speed) < 1e-4);
    }
    const CfmInput off{37.0, -1.5, 21.0};
    const auto fd = partials(off, p);
    const auto an = oracle::idm_analytic(off, p);
    CHECK(rel_err(fd.d_gap, an.d_gap) < 1e-4);
    CHECK(rel_err(fd.d_rel, an.d_rel) < 1e-4);
    CHECK(rel_err(fd.d_speed, an.d_speed) < 1e-4);
}

TEST_CASE("finite differences converge at second order") {
    IdmParams p;
    const CfmInput at{30.0, -2.0, 18.0};
    const auto an = oracle::idm_analytic(at, p);
    const auto coarse = partials(at, p, 0.2);
    const auto fine = partials(at, p, 0.1);
    const double r_gap = std::abs(coarse.d_gap - an.d_gap) / std::abs(fine.d_gap - an.d_gap);
    const double r_speed = std::abs(coarse.d_speed - an.d_speed) / std::abs(fine.d_speed - an.d_speed);
    CHECK(r_gap == doctest::Approx(4.0).epsilon(0.05));
    CHECK(r_speed == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("characteristic roots agree with companion eigenvalues") {
    const double cases[][2] = {{3.0, 2.0}, {0.5, 4.0}, {1.0, 0.25}, {2.2, -1.0}, {1e-3, 1e-8}, {25.0, 0.3}};
    for (const auto& bc : cases) {
        const double b = bc[0], c = bc[1];
        Eigen::Matrix2d companion;
        companion << 0.0, -c, 1.0, -b;
        Eigen::EigenSolver<Eigen::Matrix2d> es(companion);
        auto ev = es.eigenvalues();
        auto [r1, r2] = quadratic_roots(b, c);
        auto near = [](std::complex<double> x, std::complex<double> y) { return std::abs(x - y) < 1e-10; };
        const bool direct = near(r1, ev(0)) && near(r2, ev(1));
        const bool swapped = near(r1, ev(1)) && near(r2, ev(0));
        CHECK((direct || swapped));
    }
}

TEST_CASE("eligibility of both models") {
    SUBCASE("idm at 20 m/s") {
        IdmParams p;
        const auto rep = check_eligibility(p, {{equilibrium_gap(20.0, p), 0.0, 20.0}});
        REQUIRE(rep.probes.size() == 1);
        CHECK(rep.probes[0].rational == Verdict::Pass);
        CHECK(rep.probes[0].platoon == Verdict::Pass);
        CHECK(rep.probes[0].string == Verdict::Pass);
        CHECK(rep.all_passed());
    }
    SUBCASE("ovm at 15 m/s, weak on the approach rate") {
        OvmParams p;
        const auto rep = check_eligibility(p, {{equilibrium_gap(15.0, p), 0.0, 15.0}});
        CHECK(rep.probes[0].rational == Verdict::WeakPass);
        CHECK(rep.probes[0].d.d_rel == 0.0);
        CHECK(rep.probes[0].platoon == Verdict::Pass);
        CHECK(rep.probes[0].string == Verdict::Pass);
        CHECK(rep.all_passed());
    }
    SUBCASE("probe spread") {
        for (ModelParams m : {ModelParams{OvmParams{}}, ModelParams{IdmParams{}}}) {
            const auto probes = equilibrium_probes(m, 10.0, 29.0, 10);
            CHECK(probes.size() == 10);
            CHECK(probes.front().v == 10.0);
            CHECK(probes.back().v == 29.0);
            CHECK(check_eligibility(m, probes).all_passed());
        }
    }
}

TEST_CASE("eligibility rejects bad probes") {
    IdmParams p;
    CHECK_THROWS_AS(check_eligibility(p, {{50.0, 0.0, 20.0}}), EligibilityError);
    CHECK_FALSE(EligibilityReport{}.all_passed());
}
