#include "tcopt/errors.hpp"
#include "tcopt/special.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>

#include <cmath>

using tcopt::special::bessel_j;
using tcopt::special::bessel_j0_minus_j2;

TEST(Special, BesselMatchesBoostOnGrid) {
    for (int n = 0; n <= 12; ++n) {
        for (double x = 0.0; x <= 40.0; x += 0.37) {
            const double expected = boost::math::cyl_bessel_j(n, x);
            EXPECT_NEAR(bessel_j(n, x), expected, 1e-13) << "n=" << n << " x=" << x;
        }
    }
}

TEST(Special, BesselNegativeOrderAndArgument) {
    for (int n = 1; n <= 7; ++n) {
        const double x = 3.3;
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        EXPECT_DOUBLE_EQ(bessel_j(-n, x), sign * bessel_j(n, x));
        EXPECT_DOUBLE_EQ(bessel_j(n, -x), sign * bessel_j(n, x));
    }
}

TEST(Special, JZeroMinusJTwoIsTwiceDerivativeOfJOne) {
    for (double x = 0.1; x < 20.0; x += 0.5) {
        const double derivative = boost::math::cyl_bessel_j_prime(1, x);
        EXPECT_NEAR(bessel_j0_minus_j2(x), 2.0 * derivative, 1e-13);
    }
}

TEST(Special, FindRootOnPolynomial) {
    const auto root = tcopt::special::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0);
    EXPECT_NEAR(root.x, std::sqrt(2.0), 1e-8 * std::sqrt(2.0));
    EXPECT_LE(root.lower, root.x);
    EXPECT_GE(root.upper, root.x);
}

TEST(Special, FindRootRejectsBracketWithoutSignChange) {
    EXPECT_THROW((void)tcopt::special::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0),
                 tcopt::SolverError);
}

TEST(Special, NthZeroOfSine) {
    const auto root = tcopt::special::nth_zero([](double x) { return std::sin(x); }, 3, 0.1, 0.05, 20.0);
    EXPECT_NEAR(root.x, 3.0 * M_PI, 1e-7);
}

TEST(Special, NthZeroBeyondLimitThrows) {
    EXPECT_THROW((void)tcopt::special::nth_zero([](double x) { return std::sin(x); }, 10, 0.1, 0.05, 5.0),
                 tcopt::SolverError);
}
