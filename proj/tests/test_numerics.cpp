#include "doseframe/numerics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace doseframe;

TEST_CASE("incomplete beta: tabulated value")
{
    CHECK(reg_inc_beta({2.0, 3.0}, 0.25) == doctest::Approx(0.26171875).epsilon(1e-14));
    CHECK(reg_inc_beta({1.0, 1.0}, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(reg_inc_beta({2.0, 3.0}, 0.0) == 0.0);
    CHECK(reg_inc_beta({2.0, 3.0}, 1.0) == 1.0);
}

TEST_CASE("incomplete beta matches the binomial-sum oracle for integer shapes")
{
    for (int a = 1; a <= 40; a += 3)
        for (int b = 1; b <= 40; b += 2)
            for (int i = 1; i < 50; ++i) {
                const double x = i / 50.0;
                const long double ref = oracle::ibeta_int(a, b, x);
                const double got = reg_inc_beta({double(a), double(b)}, x);
                if (ref > 1e-250L)
                    REQUIRE(std::fabs(got - ref) <= 1e-11L * ref + 1e-300L);
            }
}

TEST_CASE("incomplete beta reflection identity I_x(a,b) = 1 - I_{1-x}(b,a)")
{
    oracle::Gen g(11);
    for (int t = 0; t < 2000; ++t) {
        const double a = g.uniform(0.2, 60.0);
        const double b = g.uniform(0.2, 60.0);
        const double x = g.uniform();
        const double lhs = reg_inc_beta({a, b}, x);
        const double rhs = reg_inc_beta_upper({b, a}, 1.0 - x);
        REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-10));
        REQUIRE(reg_inc_beta({a, b}, x) + reg_inc_beta({b, a}, 1.0 - x) == doctest::Approx(1.0).epsilon(1e-11));
    }
}

TEST_CASE("incomplete beta is nondecreasing in x")
{
    oracle::Gen g(12);
    for (int t = 0; t < 200; ++t) {
        const BetaParams p{g.uniform(0.5, 40.0), g.uniform(0.5, 40.0)};
        double prev = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double v = reg_inc_beta(p, i / 400.0);
            REQUIRE(v >= prev - 1e-15);
            REQUIRE(v <= 1.0);
            prev = v;
        }
    }
}

TEST_CASE("incomplete beta agrees with direct integration for fractional shapes")
{
    const BetaParams p{2.5, 3.7};
    for (double x : {0.05, 0.2, 0.5, 0.77, 0.99}) {
        // Composite Simpson of the density on [0, x] with many panels.
        const int m = 200000;
        const double h = x / m;
        long double s = 0.0L;
        for (int i = 0; i <= m; ++i) {
            const double t = i * h;
            const long double f = std::exp((p.alpha - 1) * std::log(t > 0 ? t : 1e-300) +
                                           (p.beta - 1) * std::log1p(-t) - log_beta_fn(p.alpha, p.beta));
            s += (i == 0 || i == m) ? f : (i % 2 ? 4 * f : 2 * f);
        }
        CHECK(reg_inc_beta(p, x) == doctest::Approx(double(s * h / 3)).epsilon(1e-9));
    }
}

TEST_CASE("interval mass keeps relative accuracy in far tails")
{
    // Be(1, 31): Pr(p > 0.9) = 0.1^31.
    CHECK(beta_interval_mass({1.0, 31.0}, 0.9, 1.0) == doctest::Approx(1e-31).epsilon(1e-10));
    // Be(31, 1): Pr(p < 0.1) = 0.1^31.
    CHECK(beta_interval_mass({31.0, 1.0}, 0.0, 0.1) == doctest::Approx(1e-31).epsilon(1e-10));
    CHECK(beta_interval_mass({3.0, 5.0}, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("adaptive Simpson")
{
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS(integrate([](double x) { return x; }, 1.0, 0.0));
    // A narrow peak away from every initial node of a single-panel start.
    const double peak = integrate([](double x) { return std::exp(-200.0 * (x - 3.0) * (x - 3.0)); }, -11.6, 11.6);
    CHECK(peak == doctest::Approx(std::sqrt(std::numbers::pi / 200.0)).epsilon(1e-8));
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / std::sqrt(std::fabs(x - 0.3)); }, 0.0, 1.0,
                              Quadrature{1e-14, 16}),
                    ConvergenceError);
}

TEST_CASE("bisection")
{
    const double r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 0.0);
    CHECK(std::fabs(r - std::numbers::sqrt2) <= 2.0 * std::numeric_limits<double>::epsilon());
    CHECK(bisect([](double x) { return x - 0.25; }, 0.0, 1.0, 1e-6) == doctest::Approx(0.25).epsilon(1e-5));
    CHECK_THROWS_AS(bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0), BracketError);
}

TEST_CASE("PAVA: worked example")
{
    const std::vector<double> v{1.0, 3.0, 2.0, 4.0};
    const std::vector<double> w(4, 1.0);
    const std::vector<double> fit = pava_isotonic(v, w);
    CHECK(fit == std::vector<double>{1.0, 2.5, 2.5, 4.0});

    const std::vector<double> v2{0.5, 0.2};
    const std::vector<double> w2{3.0, 1.0};
    const std::vector<double> fit2 = pava_isotonic(v2, w2);
    CHECK(fit2[0] == doctest::Approx(0.425));
    CHECK(fit2[1] == doctest::Approx(0.425));
}

TEST_CASE("PAVA properties against the min-max oracle")
{
    oracle::Gen g(13);
    for (int t = 0; t < 500; ++t) {
        const int n = g.integer(1, 9);
        std::vector<double> v(n), w(n);
        for (int i = 0; i < n; ++i) {
            v[i] = g.uniform();
            w[i] = g.uniform(0.1, 5.0);
        }
        const std::vector<double> fit = pava_isotonic(v, w);
        const std::vector<double> ref = oracle::isotonic_minmax(v, w);
        double mv = 0.0, mf = 0.0;
        for (int i = 0; i < n; ++i) {
            REQUIRE(fit[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            if (i > 0)
                REQUIRE(fit[i] >= fit[i - 1]);
            mv += w[i] * v[i];
            mf += w[i] * fit[i];
        }
        REQUIRE(mf == doctest::Approx(mv).epsilon(1e-12));
        REQUIRE(pava_isotonic(fit, w) == fit);
    }
}
