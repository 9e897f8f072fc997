#include "tcopt/signal_engine.hpp"

#include "tcopt/calibration.hpp"
#include "tcopt/errors.hpp"
#include "tcopt/fft.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tcopt::signal {

void SignalRecord::validate() const {
    if (!(sample_rate > 0.0)) throw DomainError("sample rate must be positive");
    if (!std::isfinite(lockin_offset) || !std::isfinite(t0)) throw DomainError("record header not finite");
    for (const auto& s : samples) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw DomainError("record holds non-finite samples");
    }
}

void DriveProgram::validate() const {
    if (!(excitation_frequency > 0.0)) throw DomainError("excitation frequency must be positive");
    if (!(max_tilt >= 0.0)) throw DomainError("tilt amplitude must be non-negative");
    if (!(stop >= start)) throw DomainError("drive stop precedes start");
}

double DriveProgram::tilt(double t) const {
    if (t < start || t >= stop) return 0.0;
    return max_tilt * std::sin(excitation_frequency * t);
}

DriveProgram drive_for_mode(const hydro::SurfaceMode& mode, double omega_exc, double resonant_tilt) {
    DriveProgram d;
    d.excitation_frequency = omega_exc;
    d.max_tilt = resonant_tilt * mode.relative_response(omega_exc);
    return d;
}

void NoiseSpec::validate() const {
    if (!(additive_noise_rms >= 0.0)) throw DomainError("noise rms must be non-negative");
}

double noise_rms_for_snr(double amplitude, double snr_db) {
    return 0.5 * amplitude / std::pow(10.0, snr_db / 20.0);
}

double max_baseband_hz(const crystal::TimeCrystalParams& params, const DriveProgram& drive,
                       double lockin_offset) {
    const double worst_tilt = drive.max_tilt + std::abs(params.static_tilt);
    const double shift_hz = std::abs(params.coupling.hz_per_rad2()) * worst_tilt * worst_tilt;
    return std::abs(units::rad_s_to_hz(lockin_offset)) + units::rad_s_to_hz(params.drift.amplitude) + shift_hz;
}

SignalRecord synthesize(const crystal::TimeCrystalParams& params, const DriveProgram& drive,
                        const NoiseSpec& noise, const SynthesisOptions& options) {
    params.validate();
    drive.validate();
    noise.validate();
    if (!(options.duration > 0.0)) throw ConfigError("duration must be positive");
    if (!(options.sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
    if (!(options.amplitude >= 0.0)) throw ConfigError("amplitude must be non-negative");
    if (!(options.amplitude_decay_time > 0.0)) throw ConfigError("amplitude decay time must be positive");

    const double fmax = max_baseband_hz(params, drive, options.lockin_offset);
    if (options.sample_rate < 4.0 * fmax) {
        std::ostringstream os;
        os << "sample rate " << options.sample_rate << " Hz is below 4x the largest baseband frequency "
           << fmax << " Hz";
        throw ConfigError(os.str());
    }

    const auto n = static_cast<std::size_t>(std::llround(options.duration * options.sample_rate));
    SignalRecord rec;
    rec.sample_rate = options.sample_rate;
    rec.lockin_offset = options.lockin_offset;
    rec.t0 = options.t0;
    rec.samples.resize(n);

    // Baseband angular frequency w_ref - w_TC(t), evaluated relative to the asymptote.
    auto baseband = [&](double t) {
        const double shift = params.drift.offset(t) + crystal::frequency_shift(params, drive.tilt(t));
        return options.lockin_offset - shift;
    };

    const double dt = 1.0 / options.sample_rate;
    const double half_amplitude = 0.5 * options.amplitude;
    const bool decays = std::isfinite(options.amplitude_decay_time);
    // Mixing A sin(phi) with exp(+i w_ref t) and discarding the sum frequency leaves
    // (A/2) i exp(i (w_ref t - phi)).
    const std::complex<double> carrier_phase(0.0, 1.0);
    double phase = 0.0;
    double w_prev = baseband(rec.time(0));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rec.time(i);
        if (i > 0) {
            const double w = baseband(t);
            phase += 0.5 * (w + w_prev) * dt;
            w_prev = w;
            if (std::abs(phase) > 1e3) phase = std::remainder(phase, units::two_pi);
        }
        double amp = half_amplitude;
        if (decays) amp *= std::exp(-(t - options.t0) / options.amplitude_decay_time);
        rec.samples[i] = amp * carrier_phase * std::polar(1.0, phase);
    }

    if (noise.additive_noise_rms > 0.0) {
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<double> gauss(0.0, noise.additive_noise_rms / std::sqrt(2.0));
        for (auto& s : rec.samples) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            s += std::complex<double>(re, im);
        }
    }
    return rec;
}

std::vector<double> geophone_trace(double nominal_amplitude, const calib::GeophoneCal& cal, double omega_exc,
                                   double duration, double sample_rate, const NoiseSpec& noise) {
    if (!(nominal_amplitude >= 0.0)) throw DomainError("nominal drive amplitude must be non-negative");
    if (!(duration > 0.0) || !(sample_rate > 0.0)) throw ConfigError("geophone duration and rate must be positive");
    cal.validate();
    noise.validate();
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    const double rms = cal.level(nominal_amplitude) - cal.base;
    std::vector<double> trace(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        trace[i] = cal.base + std::sqrt(2.0) * rms * std::sin(omega_exc * t);
    }
    if (noise.additive_noise_rms > 0.0) {
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<double> gauss(0.0, noise.additive_noise_rms);
        for (auto& v : trace) v += gauss(rng);
    }
    return trace;
}

double geophone_level(std::span<const double> trace) {
    if (trace.empty()) throw DomainError("empty geophone trace");
    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= static_cast<double>(trace.size());
    double var = 0.0;
    for (double v : trace) var += (v - mean) * (v - mean);
    return mean + std::sqrt(var / static_cast<double>(trace.size()));
}

namespace {

double dtft_magnitude(std::span<const double> x, std::span<const double> w, double mean, double f, double fs) {
    std::complex<double> acc{};
    const std::complex<double> step = std::polar(1.0, -units::two_pi * f / fs);
    std::complex<double> rot{1.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += w[i] * (x[i] - mean) * rot;
        rot *= step;
        if ((i & 1023u) == 0) rot /= std::abs(rot);
    }
    return std::abs(acc);
}

} // namespace

double estimate_drive_frequency(std::span<const double> trace, double sample_rate) {
    const std::size_t n = trace.size();
    if (n < 16) throw DomainError("geophone trace too short for a frequency estimate");
    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= static_cast<double>(n);
    const auto window = make_window(WindowKind::hann, n);
    std::vector<std::complex<double>> in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = window[i] * (trace[i] - mean);
    Fft fft(n);
    fft.forward(in, out);
    std::size_t best = 1;
    for (std::size_t k = 1; k < n / 2; ++k) {
        if (std::abs(out[k]) > std::abs(out[best])) best = k;
    }
    const double df = sample_rate / static_cast<double>(n);
    // Golden-section search of the windowed DTFT magnitude within one bin of the peak.
    double lo = (static_cast<double>(best) - 1.0) * df;
    double hi = (static_cast<double>(best) + 1.0) * df;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - r * (hi - lo);
    double b = lo + r * (hi - lo);
    double fa = dtft_magnitude(trace, window, mean, a, sample_rate);
    double fb = dtft_magnitude(trace, window, mean, b, sample_rate);
    for (int it = 0; it < 60 && hi - lo > 1e-9 * df; ++it) {
        if (fa > fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = dtft_magnitude(trace, window, mean, a, sample_rate);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = dtft_magnitude(trace, window, mean, b, sample_rate);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace tcopt::signal
