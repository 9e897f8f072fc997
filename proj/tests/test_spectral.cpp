#include "tcopt/errors.hpp"
#include "tcopt/fft.hpp"
#include "tcopt/signal_engine.hpp"
#include "tcopt/spectral_fit.hpp"
#include "tcopt/units.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

using namespace tcopt;
using namespace tcopt::spectral;

namespace {

constexpr double kBin = 1.6; // Hz, 48 kHz / 30000

struct Scenario {
    double modulation = 50.0; ///< G, Hz
    double asymmetry = 0.2;   ///< Theta
    double excitation_hz = 12.5;
    double amplitude = 1.0;
    double duration = 1.0;
    double noise_rms = 0.0;
    std::uint64_t seed = 1;
    double lockin_offset_hz = 3000.0;
    double drift_hz = 0.0;
    double drift_time = 10.0;
};

/// Fixed coupling of 10 Hz/deg^2; theta_max and theta_0 follow from (G, Theta).
constexpr double kCoupling = 10.0;

crystal::TimeCrystalParams crystal_for(const Scenario& s) {
    crystal::TimeCrystalParams p;
    p.base_frequency = units::hz_to_rad_s(833e3);
    p.coupling = crystal::Coupling::from_hz_per_deg2(kCoupling);
    const double theta_max_deg = std::sqrt(s.modulation / kCoupling);
    p.static_tilt = units::deg_to_rad(s.asymmetry * theta_max_deg);
    p.drift.amplitude = units::hz_to_rad_s(s.drift_hz);
    p.drift.relaxation_time = s.drift_time;
    return p;
}

signal::DriveProgram drive_for(const Scenario& s) {
    signal::DriveProgram d;
    d.excitation_frequency = units::hz_to_rad_s(s.excitation_hz);
    d.max_tilt = units::deg_to_rad(std::sqrt(s.modulation / kCoupling));
    return d;
}

signal::SignalRecord synth(const Scenario& s) {
    signal::SynthesisOptions o;
    o.duration = s.duration;
    o.amplitude = s.amplitude;
    o.lockin_offset = units::hz_to_rad_s(s.lockin_offset_hz);
    return signal::synthesize(crystal_for(s), drive_for(s), {s.noise_rms, s.seed}, o);
}

/// Window average of the true baseband frequency for the window starting at `first`.
double true_window_mean(const Scenario& s, const signal::SignalRecord& rec, std::size_t first, std::size_t n) {
    const auto p = crystal_for(s);
    const auto d = drive_for(s);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = rec.time(first + j);
        sum += units::rad_s_to_hz(rec.lockin_offset - p.drift.offset(t) - crystal::frequency_shift(p, d.tilt(t)));
    }
    return sum / static_cast<double>(n);
}

/// Fits one frame of a record the way analyze_record does, but with a flat omega_0.
WindowFit fit_frame(const signal::SignalRecord& rec, const Spectrogram& spec, std::size_t frame,
                    double excitation_hz, double initial_frequency) {
    ModelContext ctx;
    ctx.excitation_hz = excitation_hz;
    ctx.sample_rate = rec.sample_rate;
    ctx.window_size = spec.window_size;
    ctx.window = spec.window;
    ctx.initial_frequency = initial_frequency;
    ctx.start_time = rec.time(spec.frames[frame].first_sample);
    return fit_window(spec.frames[frame].magnitude, spec.f_start, spec.bin_width, ctx);
}

RecordFitOptions single_fit(std::size_t first_frame = 0) {
    RecordFitOptions o;
    o.first_frame = first_frame;
    o.max_fits = 1;
    o.threads = 1;
    return o;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST(Spectral, BinWidthAndFrameSpacing) {
    Scenario s;
    s.modulation = 0.0;
    s.duration = 1.5;
    const auto spec = spectrogram(synth(s));
    EXPECT_DOUBLE_EQ(spec.bin_width, 1.6);
    EXPECT_EQ(spec.hop, 3000U);
    EXPECT_DOUBLE_EQ(spec.frame_spacing(), 0.0625);
    EXPECT_EQ(spec.frames.size(), (72000U - 30000U) / 3000U + 1U);
}

TEST(Spectral, ShortRecordRejected) {
    Scenario s;
    s.duration = 0.5;
    EXPECT_THROW((void)spectrogram(synth(s)), DomainError);
}

TEST(Spectral, PureToneSingleDominantBin) {
    Scenario s;
    s.modulation = 0.0;
    s.lockin_offset_hz = 3000.7; // between bins: worst case for scalloping
    const auto spec = spectrogram(synth(s));
    const auto& mag = spec.frames.front().magnitude;
    const auto peak = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
    EXPECT_NEAR(spec.frequency(peak), 3000.7, 0.5 * kBin);
    // Hann scalloping loss is at most 1.42 dB.
    EXPECT_LE(mag[peak], 0.5 * (1.0 + 1e-9));
    EXPECT_GE(mag[peak], 0.5 * std::pow(10.0, -1.43 / 20.0));
    for (std::size_t k = 0; k < mag.size(); ++k) {
        // Hann leakage more than three bins away is below 1.5% of the peak.
        if (k + 3 < peak || k > peak + 3) EXPECT_LT(mag[k], 0.015 * mag[peak]);
    }
}

TEST(Spectral, ParabolicInterpolationOfSymmetricPeak) {
    const auto centred = interpolate_peak(0.5, 1.0, 0.5);
    EXPECT_NEAR(centred.offset, 0.0, 1e-15);
    const auto shifted = interpolate_peak(0.3, 1.0, 0.8);
    EXPECT_GT(shifted.offset, 0.0);
    EXPECT_LE(shifted.offset, 0.5);
    EXPECT_GE(shifted.magnitude, 1.0);
}

TEST(Spectral, ParsevalAgainstWindowSpectrum) {
    Scenario s;
    s.noise_rms = 0.05;
    const auto rec = synth(s);
    const std::size_t n = 30000;
    const auto mag = window_spectrum(rec, 0, n, WindowKind::rectangular);
    double time_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) time_energy += std::norm(rec.samples[i]);
    double spectral_energy = 0.0;
    // Magnitudes are |X| / n for the rectangular window, so sum |X|^2 / n = n sum mag^2.
    for (double m : mag) spectral_energy += m * m;
    spectral_energy *= static_cast<double>(n);
    EXPECT_NEAR(spectral_energy, time_energy, 1e-9 * time_energy);
}

TEST(Spectral, TracePureToneConstant) {
    Scenario s;
    s.modulation = 0.0;
    s.lockin_offset_hz = 3000.37;
    s.duration = 2.0;
    const auto trace = trace_central_band(spectrogram(synth(s)));
    ASSERT_FALSE(trace.points.empty());
    for (const auto& p : trace.points) {
        EXPECT_NEAR(p.frequency, 3000.37, kBin / 10.0);
        EXPECT_FALSE(p.gap);
    }
}

TEST(Spectral, TraceFollowsDrift) {
    Scenario s;
    s.modulation = 0.0;
    s.drift_hz = 150.0;
    s.drift_time = 10.0;
    s.duration = 6.0;
    const auto rec = synth(s);
    const auto spec = spectrogram(rec);
    const auto trace = trace_central_band(spec);
    ASSERT_EQ(trace.points.size(), spec.frames.size());
    for (std::size_t i = 0; i < spec.frames.size(); ++i) {
        const double expected = true_window_mean(s, rec, spec.frames[i].first_sample, spec.window_size);
        EXPECT_NEAR(trace.points[i].frequency, expected, kBin) << "frame " << i;
    }
    EXPECT_EQ(trace.gaps(), 0U);
}

TEST(Spectral, TraceUsesSidebandMidpointAtCarrierNull) {
    Scenario s;
    s.asymmetry = 0.0;
    s.modulation = 4.0 * 12.5 * 2.404825557695773;
    s.duration = 2.0;
    const auto rec = synth(s);
    const auto spec = spectrogram(rec);
    TraceOptions opts;
    opts.excitation_hz = 12.5;
    const auto trace = trace_central_band(spec, opts);
    bool any_fallback = false;
    for (std::size_t i = 0; i < spec.frames.size(); ++i) {
        const double expected = true_window_mean(s, rec, spec.frames[i].first_sample, spec.window_size);
        EXPECT_NEAR(trace.points[i].frequency, expected, 2.0 * 12.5) << "frame " << i;
        any_fallback = any_fallback || trace.points[i].fallback;
    }
    EXPECT_TRUE(any_fallback);
}

TEST(Spectral, SidebandOracleMatchesJacobiAnger) {
    // Theta = 0: only even lines, with |c_2m| = |J_m(G / (4 f))|.
    const auto c = sideband_amplitudes(50.0, 0.0, 12.5, 6);
    const double beta = 50.0 / (4.0 * 12.5);
    for (int m = -3; m <= 3; ++m) {
        EXPECT_NEAR(c[static_cast<std::size_t>(2 * m + 6)], std::abs(std::cyl_bessel_j(std::abs(m), beta)), 1e-10);
    }
    for (int n : {-5, -3, -1, 1, 3, 5}) EXPECT_NEAR(c[static_cast<std::size_t>(n + 6)], 0.0, 1e-12);
    // Power is conserved.
    const auto d = sideband_amplitudes(80.0, 0.7, 10.0, 40);
    const double power = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
    EXPECT_NEAR(power, 1.0, 1e-9);
}

TEST(Spectral, SidebandOracleMatchesLongRecordFft) {
    Scenario s;
    s.modulation = 50.0;
    s.asymmetry = 0.3;
    s.excitation_hz = 12.0; // 8 s record: lines land on exact bins
    s.duration = 8.0;
    s.lockin_offset_hz = 3000.0 + s.modulation * (0.5 + s.asymmetry * s.asymmetry); // mean at 3000 Hz
    const auto rec = synth(s);
    const auto mag = window_spectrum(rec, 0, rec.size(), WindowKind::rectangular);
    const double df = rec.sample_rate / static_cast<double>(rec.size());
    auto line = [&](double f) {
        const auto k = static_cast<std::size_t>(std::llround((f + 0.5 * rec.sample_rate) / df));
        return mag[k];
    };
    const auto oracle = sideband_amplitudes(s.modulation, s.asymmetry, s.excitation_hz, 5);
    const double carrier = line(3000.0);
    ASSERT_NEAR(carrier / 0.5, oracle[5], 1e-3);
    for (int n = 1; n <= 3; ++n) {
        for (int sign : {-1, 1}) {
            // Line n of the oracle sits at +n f from the mean baseband frequency.
            const double measured = line(3000.0 + sign * n * s.excitation_hz) / carrier;
            const double expected = oracle[static_cast<std::size_t>(5 + sign * n)] / oracle[5];
            EXPECT_NEAR(measured, expected, 0.01 * expected) << "n=" << sign * n;
        }
    }
}

TEST(Spectral, NoiselessRoundTrip) {
    Scenario s; // A = 1, G = 50 Hz, Theta = 0.2, f_exc = 12.5 Hz
    const auto rec = synth(s);
    const auto spec = spectrogram(rec);
    const auto trace = trace_central_band(spec);
    const auto fit = fit_frame(rec, spec, 0, s.excitation_hz, trace.points[0].frequency);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.amplitude, 1.0, 0.02);
    EXPECT_NEAR(fit.modulation, 50.0, 0.02 * 50.0);
    EXPECT_NEAR(fit.asymmetry, 0.2, 0.02 * 0.2);
    EXPECT_NEAR(fit.mean_frequency, true_window_mean(s, rec, 0, spec.window_size), 0.1 * kBin);
    EXPECT_TRUE(fit.asymmetry_identifiable);
}

TEST(Spectral, ZeroModulationFlagsAsymmetry) {
    Scenario s;
    s.modulation = 0.0;
    s.asymmetry = 0.0;
    const auto fit = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    EXPECT_LT(fit.modulation, kBin / 10.0);
    EXPECT_FALSE(fit.asymmetry_identifiable);
}

TEST(Spectral, NoiseOnlyWindowRaisesFloorError) {
    Scenario s;
    s.amplitude = 0.0;
    s.noise_rms = 0.05;
    const auto rec = synth(s);
    SpectrogramOptions so;
    so.band_low = 2800.0;
    so.band_high = 3100.0;
    const auto spec = spectrogram(rec, so);
    EXPECT_THROW((void)fit_frame(rec, spec, 0, 12.5, 3000.0), AmplitudeFloorError);
}

TEST(Spectral, ScaleEquivariance) {
    Scenario s;
    s.modulation = 30.0;
    s.asymmetry = 0.4;
    const auto base = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    s.amplitude = 3.0;
    const auto scaled = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    EXPECT_NEAR(scaled.amplitude, 3.0 * base.amplitude, 1e-3 * 3.0 * base.amplitude);
    EXPECT_NEAR(scaled.modulation, base.modulation, 1e-3 * base.modulation);
    EXPECT_NEAR(scaled.asymmetry, base.asymmetry, 1e-3 * base.asymmetry);
    EXPECT_NEAR(scaled.mean_frequency, base.mean_frequency, 1e-3 * base.mean_frequency);
}

TEST(Spectral, FrequencyShiftEquivariance) {
    Scenario s;
    s.modulation = 30.0;
    s.asymmetry = 0.4;
    const auto base = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    const double delta = 7.3;
    s.lockin_offset_hz += delta;
    const auto shifted = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    EXPECT_NEAR(shifted.mean_frequency - base.mean_frequency, delta, 0.01 * kBin);
    EXPECT_NEAR(shifted.modulation, base.modulation, 0.01 * base.modulation);
    EXPECT_NEAR(shifted.asymmetry, base.asymmetry, 0.01 * base.asymmetry);
}

TEST(Spectral, MeanShiftIsHalfTheModulation) {
    Scenario s;
    s.modulation = 40.0;
    s.asymmetry = 0.0;
    const auto driven = fit_record(synth(s), s.excitation_hz, single_fit()).front();
    Scenario idle = s;
    idle.modulation = 0.0;
    const auto undriven = fit_record(synth(idle), s.excitation_hz, single_fit()).front();
    // The baseband frequency moves down when omega_TC moves up.
    const double shift = undriven.mean_frequency - driven.mean_frequency;
    EXPECT_NEAR(shift, driven.modulation / 2.0, 0.05 * driven.modulation / 2.0);
    EXPECT_NEAR(shift, 20.0, 0.05 * 20.0);
}

TEST(Spectral, SymmetricDriveAsymmetryConsistentWithZero) {
    Scenario s;
    s.modulation = 40.0;
    s.asymmetry = 0.0;
    s.noise_rms = signal::noise_rms_for_snr(1.0, 20.0);
    std::vector<double> thetas;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        s.seed = seed;
        thetas.push_back(fit_record(synth(s), s.excitation_hz, single_fit()).front().asymmetry);
    }
    const double mean = std::accumulate(thetas.begin(), thetas.end(), 0.0) / thetas.size();
    double var = 0.0;
    for (double t : thetas) var += (t - mean) * (t - mean);
    const double sd = std::sqrt(var / (thetas.size() - 1));
    EXPECT_LT(std::abs(mean), 3.0 * sd + 1e-3);
    for (double t : thetas) EXPECT_LT(std::abs(t), 0.1);
}

TEST(Spectral, StationaryFitsAgree) {
    Scenario s;
    s.modulation = 60.0;
    s.asymmetry = 0.3;
    s.duration = 2.0;
    s.noise_rms = signal::noise_rms_for_snr(1.0, 30.0);
    RecordFitOptions o;
    o.frame_stride = 5;
    o.threads = 1;
    const auto fits = fit_record(synth(s), s.excitation_hz, o);
    ASSERT_GE(fits.size(), 3U);
    double sum2 = 0.0;
    for (const auto& f : fits) sum2 += std::pow(f.modulation / s.modulation - 1.0, 2);
    EXPECT_LT(std::sqrt(sum2 / fits.size()), 0.03);
}

TEST(Spectral, UndrivenRecordStaysBelowFloor) {
    Scenario s;
    s.modulation = 0.0;
    s.asymmetry = 0.0;
    s.duration = 1.5;
    s.noise_rms = signal::noise_rms_for_snr(1.0, 20.0);
    RecordFitOptions o;
    o.frame_stride = 7;
    o.threads = 1;
    const auto fits = fit_record(synth(s), s.excitation_hz, o);
    ASSERT_GE(fits.size(), 2U);
    for (const auto& f : fits) EXPECT_LT(f.modulation, f.modulation_floor);
}

TEST(Spectral, DriftingRecordWithSteadyDrive) {
    Scenario s;
    s.modulation = 50.0;
    s.asymmetry = 0.2;
    s.drift_hz = 150.0;
    s.drift_time = 10.0;
    s.duration = 4.0;
    s.noise_rms = signal::noise_rms_for_snr(1.0, 30.0);
    RecordFitOptions o;
    o.frame_stride = 10;
    o.threads = 1;
    const auto fits = fit_record(synth(s), s.excitation_hz, o);
    ASSERT_GE(fits.size(), 4U);
    std::vector<double> g;
    for (const auto& f : fits) g.push_back(f.modulation);
    const double m = median(g);
    EXPECT_NEAR(m, 50.0, 0.05 * 50.0);
    for (double v : g) EXPECT_NEAR(v, m, 0.05 * m);
}

TEST(Spectral, LineLevelsOfCarrierNull) {
    Scenario s;
    s.asymmetry = 0.0;
    s.modulation = 4.0 * 12.5 * 2.404825557695773;
    const auto rec = synth(s);
    const auto spec = spectrogram(rec);
    const auto levels = line_levels(spec, 0, 3000.0 - s.modulation / 2.0, 12.5, 6);
    EXPECT_LT(levels.carrier, 0.02 * levels.strongest_sideband);
    EXPECT_LT(levels.odd_energy, 0.01 * levels.even_energy);
}
