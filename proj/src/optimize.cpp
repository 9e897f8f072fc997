#include "tcopt/optimize.hpp"

#include "tcopt/errors.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_linalg.h>
#include <gsl/gsl_matrix.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace tcopt::optim {

namespace {

struct GslErrorHandlerGuard {
    GslErrorHandlerGuard() : previous(gsl_set_error_handler_off()) {}
    ~GslErrorHandlerGuard() { gsl_set_error_handler(previous); }
    gsl_error_handler_t* previous;
};

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr make_vector(std::span<const double> values) {
    VectorPtr v(gsl_vector_alloc(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) gsl_vector_set(v.get(), i, values[i]);
    return v;
}

std::vector<double> to_std(const gsl_vector* v) {
    std::vector<double> out(v->size);
    for (std::size_t i = 0; i < v->size; ++i) out[i] = gsl_vector_get(v, i);
    return out;
}

struct SimplexContext {
    const std::function<double(std::span<const double>)>* objective;
    const Bounds* bounds;
    std::vector<double> scratch;
};

double simplex_trampoline(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<SimplexContext*>(params);
    for (std::size_t i = 0; i < v->size; ++i) ctx->scratch[i] = gsl_vector_get(v, i);
    ctx->bounds->clamp(ctx->scratch);
    const double value = (*ctx->objective)(ctx->scratch);
    return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

struct LsqContext {
    const ResidualFn* residual;
    const Bounds* bounds;
    std::vector<double> scratch;
    std::vector<double> out;
};

int lsq_trampoline(const gsl_vector* x, void* params, gsl_vector* f) {
    auto* ctx = static_cast<LsqContext*>(params);
    for (std::size_t i = 0; i < x->size; ++i) ctx->scratch[i] = gsl_vector_get(x, i);
    ctx->bounds->clamp(ctx->scratch);
    (*ctx->residual)(ctx->scratch, ctx->out);
    for (std::size_t i = 0; i < f->size; ++i) {
        const double r = ctx->out[i];
        if (!std::isfinite(r)) return GSL_EBADFUNC;
        gsl_vector_set(f, i, r);
    }
    return GSL_SUCCESS;
}

double sum_squares(std::span<const double> r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

} // namespace

void Bounds::clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i < lower.size() && x[i] < lower[i]) x[i] = lower[i];
        if (i < upper.size() && x[i] > upper[i]) x[i] = upper[i];
    }
}

Result minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                        std::vector<double> start, std::vector<double> step, const Bounds& bounds,
                        const SimplexOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || step.size() != n) throw DomainError("simplex: start/step size mismatch");
    GslErrorHandlerGuard guard;
    bounds.clamp(start);

    SimplexContext ctx{&objective, &bounds, std::vector<double>(n)};
    gsl_multimin_function fn{&simplex_trampoline, n, &ctx};
    auto x = make_vector(start);
    auto ss = make_vector(step);

    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
        &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), ss.get());

    Result result;
    int status = GSL_CONTINUE;
    int it = 0;
    while (status == GSL_CONTINUE && it < options.max_iterations) {
        ++it;
        if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
        const double size = gsl_multimin_fminimizer_size(solver.get());
        status = gsl_multimin_test_size(size, options.size_tolerance);
    }
    result.x = to_std(solver->x);
    bounds.clamp(result.x);
    result.cost = solver->fval;
    result.iterations = it;
    result.converged = status == GSL_SUCCESS;
    result.message = result.converged ? "simplex converged" : "simplex iteration limit reached";
    return result;
}

Result least_squares(const ResidualFn& residual, std::vector<double> start, std::size_t n_residuals,
                     const Bounds& bounds, const LeastSquaresOptions& options) {
    const std::size_t p = start.size();
    if (p == 0 || n_residuals < p) throw DomainError("least squares: need at least as many residuals as parameters");
    GslErrorHandlerGuard guard;
    bounds.clamp(start);

    LsqContext ctx{&residual, &bounds, std::vector<double>(p), std::vector<double>(n_residuals)};
    gsl_multifit_nlinear_fdf fdf{};
    fdf.f = &lsq_trampoline;
    fdf.df = nullptr; // finite differences
    fdf.fvv = nullptr;
    fdf.n = n_residuals;
    fdf.p = p;
    fdf.params = &ctx;

    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    params.trs = gsl_multifit_nlinear_trs_lm;
    params.h_df = options.diff_step;

    std::unique_ptr<gsl_multifit_nlinear_workspace, decltype(&gsl_multifit_nlinear_free)> work(
        gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, n_residuals, p),
        &gsl_multifit_nlinear_free);
    auto x0 = make_vector(start);

    Result result;
    if (gsl_multifit_nlinear_init(x0.get(), &fdf, work.get()) != GSL_SUCCESS) {
        result.x = start;
        result.message = "residual evaluation failed at the starting point";
        return result;
    }
    int info = 0;
    const int status = gsl_multifit_nlinear_driver(static_cast<std::size_t>(options.max_iterations),
                                                   options.x_tolerance, options.g_tolerance,
                                                   options.f_tolerance, nullptr, nullptr, &info, work.get());
    result.x = to_std(gsl_multifit_nlinear_position(work.get()));
    bounds.clamp(result.x);
    std::vector<double> r(n_residuals);
    residual(result.x, r);
    result.cost = sum_squares(r);
    result.iterations = static_cast<int>(gsl_multifit_nlinear_niter(work.get()));
    // GSL_ENOPROG means no further reduction was possible, which at a minimum is success. The
    // trust-region step also reports GSL_EMAXITER when it cannot find any decreasing step
    // before the outer iteration budget is used up; that too means we are sitting at a minimum.
    const bool stuck_at_minimum = status == GSL_EMAXITER && result.iterations < options.max_iterations;
    result.converged = status == GSL_SUCCESS || status == GSL_ENOPROG || stuck_at_minimum;
    result.message = gsl_strerror(status);
    return result;
}

std::vector<double> standard_errors(const ResidualFn& residual, std::span<const double> x,
                                    std::size_t n_residuals, double diff_step) {
    const std::size_t p = x.size();
    std::vector<double> base(n_residuals), shifted(n_residuals);
    std::vector<double> xp(x.begin(), x.end());
    residual(xp, base);
    std::unique_ptr<gsl_matrix, decltype(&gsl_matrix_free)> jac(gsl_matrix_alloc(n_residuals, p),
                                                                &gsl_matrix_free);
    for (std::size_t j = 0; j < p; ++j) {
        const double h = diff_step * std::max(std::abs(x[j]), 1e-8);
        xp[j] = x[j] + h;
        residual(xp, shifted);
        xp[j] = x[j];
        for (std::size_t i = 0; i < n_residuals; ++i) gsl_matrix_set(jac.get(), i, j, (shifted[i] - base[i]) / h);
    }
    std::unique_ptr<gsl_matrix, decltype(&gsl_matrix_free)> jtj(gsl_matrix_alloc(p, p), &gsl_matrix_free);
    gsl_blas_dgemm(CblasTrans, CblasNoTrans, 1.0, jac.get(), jac.get(), 0.0, jtj.get());

    GslErrorHandlerGuard guard;
    std::vector<double> out(p, std::numeric_limits<double>::quiet_NaN());
    if (gsl_linalg_cholesky_decomp1(jtj.get()) != GSL_SUCCESS) return out;
    if (gsl_linalg_cholesky_invert(jtj.get()) != GSL_SUCCESS) return out;
    const double dof = n_residuals > p ? static_cast<double>(n_residuals - p) : 1.0;
    const double s2 = sum_squares(base) / dof;
    for (std::size_t j = 0; j < p; ++j) out[j] = std::sqrt(std::max(0.0, gsl_matrix_get(jtj.get(), j, j) * s2));
    return out;
}

} // namespace tcopt::optim
