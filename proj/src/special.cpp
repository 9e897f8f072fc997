#include "tcopt/special.hpp"

#include "tcopt/errors.hpp"

#include <cmath>
#include <sstream>

namespace tcopt::special {

double bessel_j(int order, double x) {
    double sign = 1.0;
    if (order < 0) {
        order = -order;
        if (order % 2 != 0) sign = -sign;
    }
    if (x < 0.0) {
        x = -x;
        if (order % 2 != 0) sign = -sign;
    }
    return sign * std::cyl_bessel_j(static_cast<double>(order), x);
}

double bessel_j0_minus_j2(double x) {
    return bessel_j(0, x) - bessel_j(2, x);
}

namespace {

std::string bracket_message(const char* what, double lo, double hi, double flo, double fhi, int it) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": bracket [" << lo << ", " << hi << "], f = [" << flo << ", " << fhi
       << "], iterations " << it;
    return os.str();
}

} // namespace

Root find_root(const std::function<double(double)>& f, double lower, double upper,
               const RootOptions& options) {
    double flo = f(lower);
    double fhi = f(upper);
    if (flo == 0.0) return {lower, lower, lower, 0};
    if (fhi == 0.0) return {upper, upper, upper, 0};
    if (!(std::signbit(flo) != std::signbit(fhi)) || !std::isfinite(flo) || !std::isfinite(fhi)) {
        throw SolverError(bracket_message("root not bracketed", lower, upper, flo, fhi, 0));
    }

    int it = 0;
    // Bisection until the bracket is small enough for the secant step to be safe.
    const double coarse = std::max(1e-4, options.relative_tolerance);
    while (upper - lower > coarse * std::max(std::abs(lower), std::abs(upper))) {
        if (++it > options.max_bisection_iterations) {
            throw SolverError(bracket_message("bisection did not converge", lower, upper, flo, fhi, it));
        }
        const double mid = 0.5 * (lower + upper);
        const double fmid = f(mid);
        if (fmid == 0.0) return {mid, mid, mid, it};
        if (std::signbit(fmid) == std::signbit(flo)) {
            lower = mid;
            flo = fmid;
        } else {
            upper = mid;
            fhi = fmid;
        }
    }

    double x0 = lower, f0 = flo;
    double x1 = upper, f1 = fhi;
    for (int k = 0; k < options.max_secant_iterations; ++k) {
        ++it;
        double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 > lower && x2 < upper)) x2 = 0.5 * (lower + upper);
        const double f2 = f(x2);
        if (std::signbit(f2) == std::signbit(flo)) {
            lower = x2;
            flo = f2;
        } else {
            upper = x2;
            fhi = f2;
        }
        const double step = std::abs(x2 - x1);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        const double tight = 1e-3 * options.relative_tolerance * std::abs(x2);
        if (f2 == 0.0 || step <= tight || upper - lower <= tight) {
            return {x2, lower, upper, it};
        }
    }
    throw SolverError(bracket_message("secant refinement did not converge", lower, upper, flo, fhi, it));
}

Root nth_zero(const std::function<double(double)>& f, int index, double start, double step,
              double limit, const RootOptions& options) {
    if (index < 1) throw DomainError("root index must be >= 1");
    int found = 0;
    double a = start;
    double fa = f(a);
    while (a < limit) {
        const double b = std::min(a + step, limit);
        const double fb = f(b);
        if (std::signbit(fa) != std::signbit(fb) || fb == 0.0) {
            if (++found == index) return find_root(f, a, b, options);
        }
        a = b;
        fa = fb;
    }
    std::ostringstream os;
    os << "only " << found << " sign changes found on [" << start << ", " << limit
       << "] while looking for zero #" << index;
    throw SolverError(os.str());
}

} // namespace tcopt::special
