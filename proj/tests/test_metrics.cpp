#include <cmath>

#include "doctest.h"
#include "fedara/error.h"
#include "fedara/metrics.h"
#include "fedara/rng.h"

using namespace fedara;

TEST_SUITE_BEGIN("metrics");

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m.data = {a, b, c, d};
    return m;
}

}  // namespace

TEST_CASE("mag discrepancy hand cases") {
    Matrix g = mat2(1, 2, 3, 4);
    CHECK(mag_discrepancy(g, {g, g, g}) == 0.0);

    Matrix shifted = mat2(1 + 3, 2 + 4, 3, 4);  // differs by [[3,4],[0,0]]
    CHECK(mag_discrepancy(g, {shifted}) == doctest::Approx(5.0).epsilon(1e-12));

    // K locals at the same distance add up
    double delta = frobenius_norm(sub(g, shifted));
    CHECK(mag_discrepancy(g, {shifted, shifted, shifted, shifted}) ==
          doctest::Approx(4.0 * delta).epsilon(1e-12));
}

TEST_CASE("dir discrepancy hand cases") {
    Matrix g = mat2(1, 2, 3, 4);
    CHECK(dir_discrepancy(g, {g, g}) == doctest::Approx(1.0).epsilon(1e-12));

    Matrix neg = mat2(-1, -2, -3, -4);
    CHECK(dir_discrepancy(g, {neg}) == doctest::Approx(-1.0).epsilon(1e-12));

    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = gaussian_fill(rng, 3, 3, 1.0);
        Matrix b = gaussian_fill(rng, 3, 3, 1.0);
        double v = dir_discrepancy(a, {b});
        CHECK(v >= -1.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("zero norms make the direction metric undefined") {
    Matrix g = mat2(1, 2, 3, 4);
    Matrix zero(2, 2);
    CHECK_THROWS_AS(dir_discrepancy(zero, {g}), UndefinedMetric);
    CHECK_THROWS_AS(dir_discrepancy(g, {zero}), UndefinedMetric);
    CHECK_THROWS_AS(dir_discrepancy(g, {g, zero}), UndefinedMetric);
    CHECK(mag_discrepancy(zero, {zero}) == 0.0);  // mag stays defined
}

TEST_CASE("shape mismatches are contract violations") {
    Matrix g = mat2(1, 2, 3, 4);
    CHECK_THROWS_AS(mag_discrepancy(g, {Matrix(2, 3)}), ContractViolation);
    CHECK_THROWS_AS(mag_discrepancy(g, {}), ContractViolation);
}

TEST_CASE("closed forms at hand-evaluated points") {
    DriftParams p;
    p.tau_b = p.tau_a = p.tau_e = 1.0;
    p.rho_b = p.rho_a = 0.5;
    CHECK(drift_closed_form(p, DriftFlavor::kBA, 8) == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(drift_closed_form(p, DriftFlavor::kBEA, 8) == doctest::Approx(8.0).epsilon(1e-12));

    // r = 1 has no cross terms
    CHECK(drift_closed_form(p, DriftFlavor::kBA, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(drift_closed_form(p, DriftFlavor::kBEA, 1) == doctest::Approx(1.0).epsilon(1e-12));

    // IID case: both become linear in r
    DriftParams iid = p;
    iid.rho_b = iid.rho_a = 0.0;
    for (size_t r : {2, 4, 8}) {
        CHECK(drift_closed_form(iid, DriftFlavor::kBA, r) ==
              doctest::Approx(double(r)).epsilon(1e-12));
        CHECK(drift_closed_form(iid, DriftFlavor::kBEA, r) ==
              doctest::Approx(double(r)).epsilon(1e-12));
    }
}

TEST_CASE("drift params validation") {
    DriftParams p;
    p.trials = 50;
    CHECK_THROWS_AS(p.validate(), ContractViolation);
    p.trials = 2000;
    p.rho_b = 1.0;  // needs rho < tau
    CHECK_THROWS_AS(p.validate(), ContractViolation);
}

TEST_CASE("monte carlo agrees with the closed forms") {
    DriftParams p;
    p.d = 32;
    p.r_values = {2, 4, 8};
    p.trials = 600;
    p.seed = 7;
    DriftReport report = drift_monte_carlo(p);
    REQUIRE(report.rows.size() == 6);
    for (const DriftRow& row : report.rows) {
        CHECK(std::fabs(row.mc_mean - row.closed_form) <= 4.0 * row.std_error);
        CHECK(row.mc_mean >= 0.0);
        CHECK(std::isfinite(row.std_error));
    }
}

TEST_CASE("iid sampling gives linear growth for both flavors") {
    DriftParams p;
    p.d = 32;
    p.rho_b = p.rho_a = 0.0;
    p.r_values = {2, 4, 8, 16};
    p.trials = 800;
    p.seed = 8;
    DriftReport report = drift_monte_carlo(p);
    CHECK(report.slope_ba >= 0.9);
    CHECK(report.slope_ba <= 1.1);
    CHECK(report.slope_bea >= 0.9);
    CHECK(report.slope_bea <= 1.1);
}

TEST_CASE("correlated factors separate the two flavors") {
    DriftParams p;
    p.d = 32;
    p.rho_b = p.rho_a = 0.8;
    p.r_values = {2, 4, 8, 16};
    p.trials = 800;
    p.seed = 9;
    DriftReport report = drift_monte_carlo(p);
    CHECK(report.slope_ba > 1.5);
    CHECK(report.slope_bea < 1.25);
    // BEA stays at or below BA whenever cross terms exist and tau_e <= 1
    for (size_t i = 0; i < p.r_values.size(); ++i) {
        double ba = report.rows[2 * i].mc_mean;
        double bea = report.rows[2 * i + 1].mc_mean;
        CHECK(bea <= ba * 1.05);
    }
}

TEST_CASE("monte carlo is deterministic per seed") {
    DriftParams p;
    p.d = 16;
    p.r_values = {2, 4};
    p.trials = 200;
    p.seed = 10;
    DriftReport a = drift_monte_carlo(p);
    DriftReport b = drift_monte_carlo(p);
    for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mc_mean == b.rows[i].mc_mean);
    }
    CHECK(a.slope_ba == b.slope_ba);
}

TEST_SUITE_END();
