#pragma once

#include <functional>
#include <string>

namespace tcopt::special {

/// Bessel function of the first kind for any integer order and real argument.
/// Uses J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x) to extend the
/// standard library's non-negative domain.
[[nodiscard]] double bessel_j(int order, double x);

/// J0(x) - J2(x), i.e. 2 J1'(x). Its zeros fix the wall boundary condition of the m=1 modes.
[[nodiscard]] double bessel_j0_minus_j2(double x);

/// Result of a bracketed root search.
struct Root {
    double x = 0.0;
    double lower = 0.0; ///< final bracket
    double upper = 0.0;
    int iterations = 0;
};

struct RootOptions {
    double relative_tolerance = 1e-8;
    int max_bisection_iterations = 200;
    int max_secant_iterations = 50;
};

/// Bisection on a sign-changing bracket, then secant refinement kept inside the bracket.
/// Throws SolverError (with the bracket in the message) when the bracket is invalid or
/// the iteration budget runs out.
[[nodiscard]] Root find_root(const std::function<double(double)>& f, double lower, double upper,
                             const RootOptions& options = {});

/// The index-th (1-based) positive zero of f found by scanning from `start` in steps of
/// `step` until `limit`, then refined with find_root.
[[nodiscard]] Root nth_zero(const std::function<double(double)>& f, int index, double start,
                            double step, double limit, const RootOptions& options = {});

} // namespace tcopt::special
