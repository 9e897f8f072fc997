#pragma once

#include "tcopt/surface_hydro.hpp"
#include "tcopt/timecrystal_model.hpp"
#include "tcopt/units.hpp"

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tcopt::calib {
struct GeophoneCal;
}

namespace tcopt::signal {

/// Complex lock-in output. The lock-in reference sits `lockin_offset` above the asymptotic
/// precession frequency and mixes with exp(+i w_ref t), so the carrier appears at the positive
/// baseband frequency w_ref - w_TC and an upward shift of w_TC moves it down.
struct SignalRecord {
    std::vector<std::complex<double>> samples; ///< V
    double sample_rate = 48000.0;              ///< Hz
    double lockin_offset = units::hz_to_rad_s(3000.0); ///< rad s^-1
    double t0 = 0.0;                           ///< s, time of the first sample

    void validate() const;
    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
    [[nodiscard]] double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
    /// Baseband frequency (Hz) of a precession frequency given as an offset from the asymptote.
    [[nodiscard]] double baseband_hz(double shift_rad_s) const {
        return units::rad_s_to_hz(lockin_offset - shift_rad_s);
    }
};

/// Mechanical forcing: theta(t) = max_tilt * sin(w_exc t) for start <= t < stop.
struct DriveProgram {
    double excitation_frequency = units::hz_to_rad_s(12.5); ///< rad s^-1
    double max_tilt = 0.0;                                  ///< rad
    double start = 0.0;                                     ///< s
    double stop = std::numeric_limits<double>::infinity();  ///< s

    void validate() const;
    [[nodiscard]] double tilt(double t) const;
    [[nodiscard]] double excitation_hz() const { return units::rad_s_to_hz(excitation_frequency); }
};

/// Drive at `omega_exc` whose amplitude follows the mode's damped-oscillator response, scaled
/// so that on resonance the tilt amplitude is `resonant_tilt`.
[[nodiscard]] DriveProgram drive_for_mode(const hydro::SurfaceMode& mode, double omega_exc,
                                          double resonant_tilt);

struct NoiseSpec {
    double additive_noise_rms = 0.0; ///< V, rms of the complex noise (both quadratures together)
    std::uint64_t seed = 0;

    void validate() const;
};

/// Noise rms that puts the lock-in carrier power (A/2)^2 `snr_db` above the full-band noise power.
[[nodiscard]] double noise_rms_for_snr(double amplitude, double snr_db);

struct SynthesisOptions {
    double duration = 1.0;                              ///< s
    double sample_rate = 48000.0;                       ///< Hz
    double lockin_offset = units::hz_to_rad_s(3000.0);  ///< rad s^-1
    double amplitude = 1.0;                             ///< A, V (lock-in output has magnitude A/2)
    double amplitude_decay_time = std::numeric_limits<double>::infinity(); ///< s
    double t0 = 0.0;
};

/// Synthesizes the lock-in output of U(t) = A sin(int omega_TC dt'). The phase is the
/// trapezoidal cumulative integral of the baseband frequency. Throws ConfigError when the
/// sample rate is below four times the largest expected baseband frequency.
[[nodiscard]] SignalRecord synthesize(const crystal::TimeCrystalParams& params, const DriveProgram& drive,
                                      const NoiseSpec& noise, const SynthesisOptions& options);

/// Largest |baseband frequency| (Hz) the synthesizer can produce for these inputs.
[[nodiscard]] double max_baseband_hz(const crystal::TimeCrystalParams& params, const DriveProgram& drive,
                                     double lockin_offset);

/// Geophone voltage: B + sqrt(2) C A_nom^nu sin(w_exc t), i.e. a sinusoid whose rms equals the
/// calibrated amplitude C A_nom^nu on top of the base level B.
[[nodiscard]] std::vector<double> geophone_trace(double nominal_amplitude, const calib::GeophoneCal& cal,
                                                 double omega_exc, double duration, double sample_rate,
                                                 const NoiseSpec& noise = {});

/// Measured geophone voltage V_gp of a trace: mean level plus rms of the oscillating part.
[[nodiscard]] double geophone_level(std::span<const double> trace);

/// Drive frequency (Hz) from a geophone trace: FFT peak refined by maximizing the windowed DTFT.
[[nodiscard]] double estimate_drive_frequency(std::span<const double> trace, double sample_rate);

} // namespace tcopt::signal
