#include "wug/special_functions.hpp"

#include <doctest.h>

#include <cmath>
#include <initializer_list>

using namespace wug;

// Closed forms used as independent oracles:
//   chi2_sf(x, 1) = erfc(sqrt(x/2))          chi2_sf(x, 2) = exp(-x/2)
//   t two-sided, df=1: 1 - (2/pi) atan(|t|)  df=2: 1 - |t|/sqrt(t^2+2)
//   I_x(1, 1) = x                            I_x(a, 1) = x^a
//   P(1, x) = 1 - exp(-x)                    P(1/2, x) = erf(sqrt(x))

TEST_CASE("chi-squared survival matches the erfc closed form at df 1") {
    for (double x : {0.01, 0.5, 1.0, 2.0, 3.841, 6.635, 10.83, 20.0}) {
        CHECK(chi2_sf(x, 1) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
    }
}

TEST_CASE("chi-squared tabulated quantiles") {
    CHECK(chi2_sf(3.841, 1) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(chi2_sf(6.635, 1) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(chi2_sf(10.828, 1) == doctest::Approx(0.001).epsilon(2e-3));
    CHECK(chi2_sf(5.991, 2) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(chi2_sf(0.0, 1) == doctest::Approx(1.0));
}

TEST_CASE("chi-squared survival matches the exponential closed form at df 2") {
    for (double x : {0.1, 1.0, 4.0, 9.0}) {
        CHECK(chi2_sf(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-10));
    }
}

TEST_CASE("student t two-sided p matches arctangent closed form at df 1") {
    const double pi = std::acos(-1.0);
    for (double t : {0.5, 1.0, 2.0, 6.314, 12.706}) {
        double oracle = 1.0 - (2.0 / pi) * std::atan(t);
        CHECK(student_t_two_sided_p(t, 1) == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(student_t_two_sided_p(-t, 1) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("student t two-sided p matches algebraic closed form at df 2") {
    for (double t : {0.5, 1.0, 2.92, 4.303}) {
        double oracle = 1.0 - t / std::sqrt(t * t + 2.0);
        CHECK(student_t_two_sided_p(t, 2) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("student t tabulated quantiles") {
    CHECK(student_t_two_sided_p(12.706, 1) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(student_t_two_sided_p(4.303, 2) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(student_t_two_sided_p(2.776, 4) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(student_t_two_sided_p(2.228, 10) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(student_t_two_sided_p(1.984, 100) == doctest::Approx(0.05).epsilon(1e-2));
    CHECK(student_t_two_sided_p(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("incomplete beta closed forms and symmetry") {
    for (double x : {0.1, 0.3, 0.5, 0.9}) {
        CHECK(incomplete_beta(1, 1, x) == doctest::Approx(x).epsilon(1e-12));
        CHECK(incomplete_beta(2, 1, x) == doctest::Approx(x * x).epsilon(1e-10));
        CHECK(incomplete_beta(1, 2, x) == doctest::Approx(1.0 - (1.0 - x) * (1.0 - x)).epsilon(1e-10));
        for (double a : {0.5, 2.0, 7.5}) {
            for (double b : {0.5, 3.0}) {
                CHECK(incomplete_beta(a, b, x) ==
                      doctest::Approx(1.0 - incomplete_beta(b, a, 1.0 - x)).epsilon(1e-9));
            }
        }
    }
    CHECK(incomplete_beta(2, 3, 0.0) == doctest::Approx(0.0));
    CHECK(incomplete_beta(2, 3, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("incomplete gamma closed forms and complementarity") {
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-10));
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-9));
        for (double a : {0.5, 1.0, 2.5, 8.0}) {
            CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(gamma_p(3.0, 0.0) == doctest::Approx(0.0));
}
