#pragma once

#include "tcopt/fft.hpp"
#include "tcopt/signal_engine.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace tcopt::spectral {

struct SpectrogramOptions {
    std::size_t window_size = 30000;
    double hop_fraction = 0.1;
    WindowKind window = WindowKind::hann;
    /// Retained baseband range in Hz. Non-finite limits select the range automatically from
    /// the occupied part of the spectrum.
    double band_low = -std::numeric_limits<double>::infinity();
    double band_high = std::numeric_limits<double>::infinity();
};

struct Frame {
    double t_center = 0.0;          ///< s
    std::size_t first_sample = 0;
    std::vector<double> magnitude; ///< |X_k| / sum(w), one entry per retained bin
};

/// Sliding windowed FFT magnitudes. Retained bins are contiguous in frequency:
/// frequency(j) = f_start + j * bin_width.
struct Spectrogram {
    std::size_t window_size = 0;
    std::size_t hop = 0;
    WindowKind window = WindowKind::hann;
    double sample_rate = 0.0;
    double bin_width = 0.0;
    double f_start = 0.0;
    std::vector<Frame> frames;

    [[nodiscard]] std::size_t bins() const { return frames.empty() ? 0 : frames.front().magnitude.size(); }
    [[nodiscard]] double frequency(std::size_t bin) const { return f_start + static_cast<double>(bin) * bin_width; }
    /// Nearest retained bin to a frequency (clamped).
    [[nodiscard]] std::size_t bin_of(double frequency) const;
    [[nodiscard]] double frame_spacing() const { return static_cast<double>(hop) / sample_rate; }
};

/// Throws DomainError when the record is shorter than one window.
[[nodiscard]] Spectrogram spectrogram(const signal::SignalRecord& rec, const SpectrogramOptions& options = {});

/// Magnitude spectrum of one window starting at `first_sample`, full band, bins in ascending
/// frequency from -fs/2. Used for automatic band selection and for diagnostics.
[[nodiscard]] std::vector<double> window_spectrum(const signal::SignalRecord& rec, std::size_t first_sample,
                                                  std::size_t window_size, WindowKind window);

/// Peak position refined by a parabola through the log magnitudes of the three top bins.
/// Returns the fractional bin offset in [-0.5, 0.5] and the interpolated magnitude.
struct PeakEstimate {
    double offset = 0.0;
    double magnitude = 0.0;
};
[[nodiscard]] PeakEstimate interpolate_peak(double left, double centre, double right);

struct TraceOptions {
    double continuity_limit = 5.0; ///< Hz per frame
    /// Drive frequency in Hz, or 0 when unknown (disables the sideband-midpoint fallback).
    double excitation_hz = 0.0;
    /// Local maxima below this fraction of the frame maximum are not band candidates.
    double relative_threshold = 1e-3;
    int smoothing_frames = 5;
};

struct TracePoint {
    double t_center = 0.0;
    double frequency = 0.0; ///< Hz, baseband
    double amplitude = 0.0; ///< V
    bool gap = false;       ///< no band within the continuity limit; frequency carried forward
    bool fallback = false;  ///< central band located as the midpoint of a sideband pair
};

struct BandTrace {
    std::vector<TracePoint> points;
    std::vector<double> smoothed; ///< centred moving average of the frequencies

    /// Linear interpolation of the smoothed trace, flat beyond the ends.
    [[nodiscard]] double frequency_at(double t) const;
    [[nodiscard]] std::size_t gaps() const;
};

/// Follows the central band frame by frame. The first frame starts from the power-weighted
/// centroid, which coincides with the mean frequency of a constant-envelope FM signal.
/// Later frames predict from the trend of the last three frames and take the nearest local
/// maximum within the continuity limit. When no maximum qualifies and the drive frequency is
/// known, the midpoint of the strongest symmetric sideband pair is used instead.
[[nodiscard]] BandTrace trace_central_band(const Spectrogram& spec, const TraceOptions& options = {});

/// |c_n| of the stationary FM line spectrum for modulation G (Hz), asymmetry Theta and drive
/// frequency f_exc (Hz); index n + n_max holds line n at offset n * f_exc from the mean.
[[nodiscard]] std::vector<double> sideband_amplitudes(double modulation_hz, double asymmetry, double excitation_hz,
                                                      int n_max);

/// Everything the per-window model needs besides the four parameters.
struct ModelContext {
    double excitation_hz = 12.5;
    double sample_rate = 48000.0;
    std::size_t window_size = 30000;
    WindowKind window = WindowKind::hann;
    /// omega_0(t) variation inside the window in baseband Hz, one value per sample (or empty for
    /// none). Its mean is removed, so only the shape matters.
    std::vector<double> drift_hz;
    /// Starting guess for the mean frequency, normally the traced central band.
    double initial_frequency = 0.0;
    /// Time (s) of the window's first sample on the drive clock, where the tilt is
    /// theta_max sin(w_exc t). Magnitudes depend on the drive phase only through leakage
    /// between neighbouring lines, but that is enough to bias small Theta if ignored.
    double start_time = 0.0;
};

struct FitOptions {
    int n_max = 5;                 ///< sidebands inside the fit band at minimum
    int simplex_iterations = 250;
    int least_squares_iterations = 60;
    double max_asymmetry = 10.0;
    /// A window whose peak is below this multiple of the median magnitude is rejected.
    double floor_ratio = 5.0;
};

/// The four fitted parameters plus diagnostics.
struct WindowFit {
    double t_center = 0.0;
    double amplitude = 0.0;      ///< A, V
    double modulation = 0.0;     ///< G = g theta_max^2, Hz
    double asymmetry = 0.0;      ///< Theta = theta_0 / theta_max
    double mean_frequency = 0.0; ///< Hz, baseband, model frequency averaged over the window
    double residual_norm = 0.0;  ///< V, l2 norm of the magnitude residual over the fit band
    bool converged = false;
    bool asymmetry_identifiable = true;
    double modulation_floor = 0.0; ///< smallest G resolvable at this window's noise level
    std::size_t fit_bins = 0;
};

/// Magnitude spectrum (normalized by sum(w), full FFT length, ascending from -fs/2) of the model
/// U(t) = A sin(int omega_TC) as it appears at the lock-in output.
[[nodiscard]] std::vector<double> model_spectrum(const ModelContext& ctx, double amplitude, double modulation_hz,
                                                 double asymmetry, double mean_hz);

/// Fits one spectrogram frame. `magnitude[j]` belongs to frequency f_start + j * bin_width.
/// Throws AmplitudeFloorError when the band holds no signal above the noise floor.
[[nodiscard]] WindowFit fit_window(std::span<const double> magnitude, double f_start, double bin_width,
                                   const ModelContext& ctx, const FitOptions& options = {});

/// Line magnitudes of one frame around a known centre: the carrier and the sidebands at
/// centre +- n f_exc, each taken as the largest bin within one bin of its nominal position.
struct LineLevels {
    double carrier = 0.0;
    std::vector<double> lower; ///< index n - 1 holds the line at centre - n f_exc
    std::vector<double> upper; ///< index n - 1 holds the line at centre + n f_exc
    double even_energy = 0.0;  ///< sum of squared sideband magnitudes with even n
    double odd_energy = 0.0;   ///< same for odd n
    double strongest_sideband = 0.0;
};

[[nodiscard]] LineLevels line_levels(const Spectrogram& spec, std::size_t frame, double centre_hz,
                                     double excitation_hz, int n_max);

struct RecordFitOptions {
    SpectrogramOptions spectrogram;
    TraceOptions trace;
    FitOptions fit;
    std::size_t frame_stride = 1; ///< fit every n-th frame
    std::size_t first_frame = 0;
    std::size_t max_fits = std::numeric_limits<std::size_t>::max();
    unsigned threads = 0; ///< 0 = hardware concurrency
};

struct RecordAnalysis {
    Spectrogram spectrogram;
    BandTrace trace;
    std::vector<WindowFit> fits;
};

/// spectrogram -> trace -> per-window fits, with omega_0(t) in each window taken from the
/// smoothed trace. Tracing is sequential; window fits run in parallel and are returned in
/// frame order.
[[nodiscard]] RecordAnalysis analyze_record(const signal::SignalRecord& rec, double excitation_hz,
                                            const RecordFitOptions& options = {});

[[nodiscard]] std::vector<WindowFit> fit_record(const signal::SignalRecord& rec, double excitation_hz,
                                                const RecordFitOptions& options = {});

} // namespace tcopt::spectral
