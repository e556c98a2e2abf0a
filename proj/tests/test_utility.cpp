#include <doctest.h>

#include <cmath>
#include <random>

#include "semistatic/utility.hpp"

using namespace semistatic;

TEST_CASE("log utility closed forms") {
    UtilityFunction u = UtilityFunction::log_utility();
    CHECK(u.value(1.0) == 0.0);
    CHECK(u.marginal(1.0) == 1.0);
    CHECK(u.value(-0.5) == -kInf);
    CHECK(u.value(0.0) == -kInf);
    CHECK(u.conjugate(1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(u.inverse_marginal(2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(u.marginal(0.0), std::domain_error);
    CHECK_THROWS_AS(u.conjugate(0.0), std::domain_error);
    CHECK_THROWS_AS(u.conjugate(-1.0), std::domain_error);
}

TEST_CASE("power utility closed forms") {
    UtilityFunction u = UtilityFunction::power(0.5);
    CHECK(u.value(4.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(u.marginal(4.0) == doctest::Approx(0.5).epsilon(1e-15));  // x^(alpha-1)
    CHECK(u.value(0.0) == 0.0);
    CHECK(u.value(-1.0) == -kInf);

    UtilityFunction w = UtilityFunction::power(-1.0);
    CHECK(w.beta() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.conjugate(4.0) == doctest::Approx(-4.0).epsilon(1e-14));  // -2 sqrt(y)
    CHECK(w.conjugate(1.0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(w.value(0.0) == -kInf);
    CHECK(!w.unbounded_above());
    CHECK(u.unbounded_above());

    CHECK_THROWS(UtilityFunction::power(0.0));
    CHECK_THROWS(UtilityFunction::power(1.5));
}

TEST_CASE("counter-example utility hits its anchor") {
    UtilityFunction u = UtilityFunction::builtin_s10();
    CHECK(u.value(1.0) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(u.value(3.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(u.value(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u.value(0.5) == doctest::Approx(-500.0).epsilon(1e-12));
    // marginal returns the left slope at a kink
    CHECK(u.marginal(1.0) == doctest::Approx(1000.0).epsilon(1e-15));
    CHECK(u.marginal(2.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(u.marginal(3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(u.marginal(3.5) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(!u.inada());
}

TEST_CASE("piecewise conjugate of a single slope") {
    UtilityFunction u = UtilityFunction::piecewise_linear({0.0}, {2.0}, 0.0, 0.0);
    CHECK(u.conjugate(2.0) == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(u.conjugate(3.0) == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(u.conjugate(1.0) == kInf);
}

TEST_CASE("piecewise construction rejects bad data") {
    CHECK_THROWS(UtilityFunction::piecewise_linear({0.5, 1.0}, {2.0, 1.0}, 1.0, 0.0));
    CHECK_THROWS(UtilityFunction::piecewise_linear({0.0, 1.0}, {1.0, 2.0}, 1.0, 0.0));
    CHECK_THROWS(UtilityFunction::piecewise_linear({0.0, 1.0}, {2.0, -1.0}, 1.0, 0.0));
}

TEST_CASE("Fenchel-Young inequality with equality at the marginal") {
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> lx(-3.0, 3.0);
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5),
                          UtilityFunction::power(-1.0)}) {
        for (int i = 0; i < 1000; ++i) {
            const double x = std::exp(lx(rng));
            const double y = std::exp(lx(rng));
            CHECK(u.value(x) <= u.conjugate(y) + x * y + 1e-9);
        }
        for (double x : {0.2, 1.0, 7.5}) {
            const double y = u.marginal(x);
            CHECK(std::abs(u.value(x) - (u.conjugate(y) + x * y)) <= 1e-9);
        }
    }
}

TEST_CASE("marginal inverts") {
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5),
                          UtilityFunction::power(-3.0)}) {
        for (double x = 1e-4; x <= 1e4; x *= 10.0) {
            const double back = u.inverse_marginal(u.marginal(x));
            CHECK(std::abs(back - x) <= 1e-10 * x);
        }
    }
}

TEST_CASE("Inada behavior at the origin") {
    CHECK(UtilityFunction::log_utility().marginal(1e-8) > 1e6);
    CHECK(UtilityFunction::power(-1.0).marginal(1e-8) > 1e6);
    // x^(alpha-1) diverges more slowly for alpha in (0,1); probe closer in
    CHECK(UtilityFunction::power(0.5).marginal(1e-14) > 1e6);
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5),
                          UtilityFunction::power(-1.0)}) {
        double prev = kInf;
        for (double x = 1e-3; x <= 1e3; x *= 2.0) {
            const double m = u.marginal(x);
            CHECK(m < prev);
            prev = m;
        }
    }
}

TEST_CASE("bidual residual vanishes on a refined grid") {
    {
        UtilityFunction u = UtilityFunction::log_utility();
        const double xs[] = {0.5, 1.0, 2.0};
        CHECK(bidual_check(u, xs) <= 1e-6);
    }
    {
        UtilityFunction u = UtilityFunction::power(0.5);
        const double xs[] = {1.0, 4.0};
        CHECK(bidual_check(u, xs) <= 1e-6);
    }
    {
        // envelope equality is exact when the grid contains y* = U'(x)
        UtilityFunction u = UtilityFunction::log_utility();
        const double x = 2.0;
        const double ys[] = {0.1, u.marginal(x), 3.0};
        CHECK(bidual_residual(u, x, ys) <= 1e-15);
    }
}

TEST_CASE("piecewise inverse marginal picks the smallest maximizer") {
    UtilityFunction u = UtilityFunction::builtin_s10();
    CHECK(u.inverse_marginal(2e6) == 0.0);
    CHECK(u.inverse_marginal(5000.0) == doctest::Approx(0.5));
    CHECK(u.inverse_marginal(10.0) == doctest::Approx(1.0));
    CHECK(u.inverse_marginal(0.5) == doctest::Approx(3.0));
    CHECK(u.inverse_marginal(1e-4) == doctest::Approx(4.0));
    CHECK(u.inverse_marginal(1e-8) == kInf);
}
