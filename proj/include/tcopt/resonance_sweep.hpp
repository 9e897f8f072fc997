#pragma once

#include "tcopt/signal_engine.hpp"
#include "tcopt/spectral_fit.hpp"
#include "tcopt/surface_hydro.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tcopt::sweep {

/// One drive frequency of a sweep and the fitted modulation G it produced.
struct SweepPoint {
    double excitation_hz = 0.0; ///< Hz
    double response = 0.0;      ///< G, Hz
    double sigma = 0.0;         ///< Hz; 0 = no uncertainty known

    void validate() const;
};

/// G(f) = peak * (f_m df)^2 / ((f_m^2 - f^2)^2 + (df f)^2): the squared amplitude response of a
/// driven damped oscillator, since G scales with theta_max^2.
struct ResonanceFit {
    double center = 0.0; ///< f_m, Hz
    double width = 0.0;  ///< df = gamma / 2 pi, Hz
    double peak = 0.0;   ///< G at f_m, Hz
    double quality_factor = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    /// The fitted centre lies outside the swept range, so it is an extrapolation.
    bool extrapolated = false;

    [[nodiscard]] double response(double f) const;
};

[[nodiscard]] double squared_lorentzian(double f, double center, double width, double peak);

/// Least-squares fit of the squared Lorentzian. Uses inverse-variance weights when every point
/// carries a positive sigma, unweighted otherwise. Needs at least 5 points.
[[nodiscard]] ResonanceFit fit_resonance(std::span<const SweepPoint> points);

struct WidthPair {
    double fork_width = 0.0; ///< Hz
    double mode_width = 0.0; ///< Hz
};

struct Regression {
    double slope = 0.0;
    /// Mode width extrapolated to zero fork width, i.e. with no thermal excitations.
    double intercept = 0.0;
    std::vector<double> residuals;
};

/// Ordinary least squares of mode width on fork width. Throws DomainError for fewer than three
/// pairs or when all fork widths coincide.
[[nodiscard]] Regression width_vs_fork_regression(std::span<const WidthPair> pairs);

/// Q of the temperature-independent part: 1/Q_total = 1/Q_thermal + 1/Q_residual.
[[nodiscard]] double residual_quality_factor(double q_total, double q_thermal);

struct ForkReference {
    double width = 0.0;       ///< Hz
    double temperature = 0.0; ///< K
};

struct ForkReading {
    double temperature = 0.0; ///< K
    /// Set when the width exceeds the configured validity bound of the ballistic regime.
    std::optional<std::string> warning;
};

/// Inverts width proportional to exp(-gap / k_B T) through a reference point. `gap` is in J.
/// `max_valid_width` <= 0 disables the regime check.
[[nodiscard]] ForkReading fork_thermometry(double fork_width, const ForkReference& reference, double gap,
                                           double max_valid_width = 0.0);

/// Everything needed to synthesize a sweep through the full signal chain.
struct PipelineSweep {
    hydro::SurfaceMode mode;
    crystal::TimeCrystalParams crystal;
    double resonant_tilt = 0.0; ///< rad, theta_max on resonance
    std::vector<double> excitation_hz;
    signal::SynthesisOptions synthesis;
    signal::NoiseSpec noise; ///< seed is offset by the point index
    spectral::RecordFitOptions analysis;
    unsigned threads = 0; ///< points synthesized and fit in parallel; 0 = hardware concurrency
};

/// Evenly spaced drive frequencies.
[[nodiscard]] std::vector<double> linear_frequencies(double first_hz, double last_hz, std::size_t count);

/// Synthesizes one record per drive frequency, fits every window and reports the median G
/// with the window scatter as its uncertainty. Results are in input order.
[[nodiscard]] std::vector<SweepPoint> run_pipeline_sweep(const PipelineSweep& sweep);

/// Modulation G the sweep injects at a drive frequency.
[[nodiscard]] double injected_response(const PipelineSweep& sweep, double excitation_hz);

} // namespace tcopt::sweep
