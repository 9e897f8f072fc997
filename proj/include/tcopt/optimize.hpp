#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tcopt::optim {

/// Box constraints; empty vectors mean unbounded.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    /// Projects x onto the box in place.
    void clamp(std::span<double> x) const;
};

struct Result {
    std::vector<double> x;
    double cost = 0.0; ///< objective value (sum of squares for least squares)
    int iterations = 0;
    bool converged = false;
    std::string message;
};

struct SimplexOptions {
    int max_iterations = 400;
    double size_tolerance = 1e-6; ///< characteristic simplex size at convergence
};

/// Derivative-free Nelder-Mead (GSL nmsimplex2). Points outside the box are projected
/// before evaluation, so the objective only ever sees feasible parameters.
[[nodiscard]] Result minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                                      std::vector<double> start, std::vector<double> step,
                                      const Bounds& bounds, const SimplexOptions& options = {});

/// Residual callback: fills `residuals` for parameters `x`.
using ResidualFn = std::function<void(std::span<const double> x, std::span<double> residuals)>;

struct LeastSquaresOptions {
    int max_iterations = 100;
    double x_tolerance = 1e-10;
    double g_tolerance = 1e-12;
    double f_tolerance = 1e-12;
    /// Relative step for the forward-difference Jacobian.
    double diff_step = 1e-7;
};

/// Levenberg-Marquardt trust-region least squares (GSL multifit_nlinear) with a finite
/// difference Jacobian. Bounds are enforced by projection.
[[nodiscard]] Result least_squares(const ResidualFn& residual, std::vector<double> start,
                                   std::size_t n_residuals, const Bounds& bounds,
                                   const LeastSquaresOptions& options = {});

/// Covariance-free parameter uncertainty helper: sqrt of the diagonal of (J^T J)^-1 * s^2,
/// with s^2 = cost / (n - p), evaluated at x. Returns NaN entries when J^T J is singular.
[[nodiscard]] std::vector<double> standard_errors(const ResidualFn& residual, std::span<const double> x,
                                                  std::size_t n_residuals, double diff_step = 1e-7);

} // namespace tcopt::optim
