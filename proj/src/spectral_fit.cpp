#include "tcopt/spectral_fit.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/optimize.hpp"
#include "tcopt/special.hpp"
#include "tcopt/units.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

namespace tcopt::spectral {

namespace {

// Index of the zero-frequency bin in the ascending (shifted) layout.
std::size_t zero_bin(std::size_t n) {
    return n / 2;
}

// Fills `out` with |FFT(w * x)| / sum(w) in ascending frequency order, restricted to
// shifted indices [lo, hi].
void shifted_magnitudes(Fft& fft, std::span<const std::complex<double>> weighted, double weight_sum,
                        std::vector<std::complex<double>>& scratch, std::size_t lo, std::size_t hi,
                        std::vector<double>& out) {
    const std::size_t n = weighted.size();
    scratch.resize(n);
    fft.forward(weighted, scratch);
    const std::size_t h = zero_bin(n);
    out.resize(hi - lo + 1);
    for (std::size_t j = lo; j <= hi; ++j) {
        const std::size_t k = (j + n - h) % n;
        out[j - lo] = std::abs(scratch[k]) / weight_sum;
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::complex<double> i_power(int m) {
    switch (((m % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

// |W(delta)| / W(0) for the window transform at a fractional bin offset, tabulated once per
// (window, length) at 1/32 bin resolution out to kKernelReach bins.
constexpr int kKernelReach = 6;
constexpr int kKernelSub = 32;

class WindowKernel {
  public:
    WindowKernel(WindowKind kind, std::size_t n) : table_(kKernelReach * kKernelSub + 1) {
        const auto w = make_window(kind, n);
        const double sum = std::accumulate(w.begin(), w.end(), 0.0);
        const double centre = 0.5 * static_cast<double>(n - 1);
        for (std::size_t s = 0; s < table_.size(); ++s) {
            const double delta = static_cast<double>(s) / kKernelSub;
            // Symmetric window: the transform about the centre is real.
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += w[j] * std::cos(units::two_pi * delta * (static_cast<double>(j) - centre) / static_cast<double>(n));
            }
            table_[s] = std::abs(acc) / sum;
        }
    }

    [[nodiscard]] double operator()(double delta) const {
        const double x = std::abs(delta) * kKernelSub;
        const auto i = static_cast<std::size_t>(x);
        if (i + 1 >= table_.size()) return 0.0;
        const double frac = x - static_cast<double>(i);
        return table_[i] + frac * (table_[i + 1] - table_[i]);
    }

  private:
    std::vector<double> table_;
};

const WindowKernel& kernel_for(WindowKind kind, std::size_t n) {
    static std::mutex m;
    static std::map<std::pair<int, std::size_t>, std::unique_ptr<WindowKernel>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[{static_cast<int>(kind), n}];
    if (!slot) slot = std::make_unique<WindowKernel>(kind, n);
    return *slot;
}

// Synthesizes the unit-amplitude model window and returns its magnitudes on a band of
// shifted FFT indices.
class ModelEvaluator {
  public:
    ModelEvaluator(const ModelContext& ctx, std::size_t lo, std::size_t hi)
        : ctx_(ctx), fft_(ctx.window_size), lo_(lo), hi_(hi) {
        const std::size_t n = ctx.window_size;
        window_ = make_window(ctx.window, n);
        weight_sum_ = std::accumulate(window_.begin(), window_.end(), 0.0);
        drive_.resize(n);
        drift_.assign(n, 0.0);
        const double dt = 1.0 / ctx.sample_rate;
        for (std::size_t j = 0; j < n; ++j) {
            drive_[j] = std::sin(units::two_pi * ctx.excitation_hz * (ctx.start_time + static_cast<double>(j) * dt));
        }
        if (!ctx.drift_hz.empty()) {
            if (ctx.drift_hz.size() != n) throw DomainError("drift shape must have one value per window sample");
            const double mean = std::accumulate(ctx.drift_hz.begin(), ctx.drift_hz.end(), 0.0) / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) drift_[j] = ctx.drift_hz[j] - mean;
        }
        samples_.resize(n);
        freq_.resize(n);
    }

    // Per-sample baseband frequency in Hz.
    void frequencies(double g, double theta, double mean_hz) {
        for (std::size_t j = 0; j < freq_.size(); ++j) {
            const double d = drive_[j] - theta;
            freq_[j] = mean_hz + drift_[j] - g * (d * d - theta * theta - 0.5);
        }
    }

    const std::vector<double>& unit_magnitudes(double g, double theta, double mean_hz) {
        frequencies(g, theta, mean_hz);
        const double dt = 1.0 / ctx_.sample_rate;
        double phase = 0.0;
        for (std::size_t j = 0; j < freq_.size(); ++j) {
            if (j > 0) {
                phase += units::pi * (freq_[j] + freq_[j - 1]) * dt;
                if (std::abs(phase) > 1e3) phase = std::remainder(phase, units::two_pi);
            }
            samples_[j] = 0.5 * window_[j] * std::polar(1.0, phase);
        }
        shifted_magnitudes(fft_, samples_, weight_sum_, scratch_, lo_, hi_, mags_);
        return mags_;
    }

    double mean_frequency(double g, double theta, double mean_hz) {
        frequencies(g, theta, mean_hz);
        return std::accumulate(freq_.begin(), freq_.end(), 0.0) / static_cast<double>(freq_.size());
    }

  private:
    const ModelContext& ctx_;
    Fft fft_;
    std::size_t lo_, hi_;
    std::vector<double> window_, drive_, drift_, freq_, mags_;
    double weight_sum_ = 1.0;
    std::vector<std::complex<double>> samples_, scratch_;
};

// A >= 0 minimizing |d - A m|^2.
double best_scale(std::span<const double> d, std::span<const double> m) {
    double dm = 0.0, mm = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        dm += d[i] * m[i];
        mm += m[i] * m[i];
    }
    return mm > 0.0 ? std::max(0.0, dm / mm) : 0.0;
}

} // namespace

std::size_t Spectrogram::bin_of(double f) const {
    if (bins() == 0) return 0;
    const double x = std::round((f - f_start) / bin_width);
    return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(bins() - 1)));
}

std::vector<double> window_spectrum(const signal::SignalRecord& rec, std::size_t first_sample, std::size_t window_size,
                                    WindowKind window) {
    if (first_sample + window_size > rec.size()) throw DomainError("window extends past the end of the record");
    const auto w = make_window(window, window_size);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::complex<double>> in(window_size), scratch;
    for (std::size_t j = 0; j < window_size; ++j) in[j] = w[j] * rec.samples[first_sample + j];
    Fft fft(window_size);
    std::vector<double> out;
    shifted_magnitudes(fft, in, sum, scratch, 0, window_size - 1, out);
    return out;
}

namespace {

std::pair<double, double> auto_band(const signal::SignalRecord& rec, std::size_t n, WindowKind window) {
    const std::size_t last = rec.size() - n;
    const double df = rec.sample_rate / static_cast<double>(n);
    const std::size_t h = zero_bin(n);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::vector<std::vector<double>> spectra;
    double mx = 0.0;
    for (std::size_t start : {std::size_t{0}, last / 2, last}) {
        spectra.push_back(window_spectrum(rec, start, n, window));
        mx = std::max(mx, *std::max_element(spectra.back().begin(), spectra.back().end()));
    }
    // Above the noise as well as 60 dB below the strongest line.
    const double level = std::max(1e-3 * mx, 10.0 * median(spectra.front()));
    for (const auto& s : spectra) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (s[j] > level) {
                const double f = (static_cast<double>(j) - static_cast<double>(h)) * df;
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        }
    }
    constexpr double kPad = 250.0;
    return {lo - kPad, hi + kPad};
}

} // namespace

Spectrogram spectrogram(const signal::SignalRecord& rec, const SpectrogramOptions& options) {
    rec.validate();
    const std::size_t n = options.window_size;
    if (n < 4) throw DomainError("window size must be at least 4 samples");
    if (rec.size() < n) {
        std::ostringstream os;
        os << "record of " << rec.size() << " samples is shorter than one " << n << "-point window";
        throw DomainError(os.str());
    }
    if (!(options.hop_fraction > 0.0 && options.hop_fraction <= 1.0)) {
        throw DomainError("hop fraction must lie in (0, 1]");
    }

    Spectrogram spec;
    spec.window_size = n;
    spec.hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.hop_fraction * static_cast<double>(n))));
    spec.window = options.window;
    spec.sample_rate = rec.sample_rate;
    spec.bin_width = rec.sample_rate / static_cast<double>(n);

    double band_lo = options.band_low;
    double band_hi = options.band_high;
    if (!std::isfinite(band_lo) || !std::isfinite(band_hi)) {
        const auto [lo, hi] = auto_band(rec, n, options.window);
        if (!std::isfinite(band_lo)) band_lo = lo;
        if (!std::isfinite(band_hi)) band_hi = hi;
    }
    if (!(band_hi > band_lo)) throw DomainError("empty spectrogram band");
    const std::size_t h = zero_bin(n);
    const double df = spec.bin_width;
    const auto to_index = [&](double f) {
        const double j = f / df + static_cast<double>(h);
        return std::clamp(j, 0.0, static_cast<double>(n - 1));
    };
    const auto lo = static_cast<std::size_t>(std::ceil(to_index(band_lo)));
    const auto hi = static_cast<std::size_t>(std::floor(to_index(band_hi)));
    if (hi < lo) throw DomainError("spectrogram band holds no bins");
    spec.f_start = (static_cast<double>(lo) - static_cast<double>(h)) * df;

    const auto w = make_window(options.window, n);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    Fft fft(n);
    std::vector<std::complex<double>> in(n), scratch;
    for (std::size_t start = 0; start + n <= rec.size(); start += spec.hop) {
        Frame frame;
        frame.first_sample = start;
        frame.t_center = rec.t0 + (static_cast<double>(start) + 0.5 * static_cast<double>(n - 1)) / rec.sample_rate;
        for (std::size_t j = 0; j < n; ++j) in[j] = w[j] * rec.samples[start + j];
        shifted_magnitudes(fft, in, sum, scratch, lo, hi, frame.magnitude);
        spec.frames.push_back(std::move(frame));
    }
    return spec;
}

PeakEstimate interpolate_peak(double left, double centre, double right) {
    constexpr double tiny = 1e-300;
    const double a = std::log(std::max(left, tiny));
    const double b = std::log(std::max(centre, tiny));
    const double c = std::log(std::max(right, tiny));
    const double denom = a - 2.0 * b + c;
    if (!(denom < 0.0)) return {0.0, centre};
    const double p = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    return {p, std::exp(b - 0.25 * (a - c) * p)};
}

double BandTrace::frequency_at(double t) const {
    if (points.empty()) throw DomainError("empty band trace");
    if (t <= points.front().t_center) return smoothed.front();
    if (t >= points.back().t_center) return smoothed.back();
    const auto it = std::upper_bound(points.begin(), points.end(), t,
                                     [](double v, const TracePoint& p) { return v < p.t_center; });
    const auto i = static_cast<std::size_t>(it - points.begin());
    const double w = (t - points[i - 1].t_center) / (points[i].t_center - points[i - 1].t_center);
    return smoothed[i - 1] + w * (smoothed[i] - smoothed[i - 1]);
}

std::size_t BandTrace::gaps() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.gap; }));
}

namespace {

struct Peak {
    double frequency;
    double magnitude;
};

Peak refine(const Spectrogram& spec, std::span<const double> mags, std::size_t j) {
    if (j == 0 || j + 1 >= mags.size()) return {spec.frequency(j), mags[j]};
    const auto p = interpolate_peak(mags[j - 1], mags[j], mags[j + 1]);
    return {spec.frequency(j) + p.offset * spec.bin_width, p.magnitude};
}

// Strongest local maximum within [f - reach, f + reach].
std::optional<Peak> strongest_near(const Spectrogram& spec, std::span<const double> mags, double f, double reach) {
    const double lo_f = f - reach;
    const double hi_f = f + reach;
    if (hi_f < spec.frequency(0) || lo_f > spec.frequency(mags.size() - 1)) return std::nullopt;
    const std::size_t lo = spec.bin_of(lo_f);
    const std::size_t hi = spec.bin_of(hi_f);
    std::size_t best = lo;
    for (std::size_t j = lo; j <= hi; ++j) {
        if (mags[j] > mags[best]) best = j;
    }
    return refine(spec, mags, best);
}

double power_centroid(const Spectrogram& spec, std::span<const double> mags, double mx) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        if (mags[j] < 1e-2 * mx) continue;
        const double p = mags[j] * mags[j];
        num += p * spec.frequency(j);
        den += p;
    }
    return num / den;
}

double trend_prediction(const std::vector<TracePoint>& pts) {
    const std::size_t n = std::min<std::size_t>(3, pts.size());
    if (n == 1) return pts.back().frequency;
    // Least-squares slope per frame through the last n points.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = static_cast<double>(k);
        const double y = pts[pts.size() - n + k].frequency;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / dn;
    return intercept + slope * dn;
}

} // namespace

BandTrace trace_central_band(const Spectrogram& spec, const TraceOptions& options) {
    if (spec.frames.empty() || spec.bins() < 3) throw DomainError("cannot trace an empty spectrogram");
    if (!(options.continuity_limit > 0.0)) throw DomainError("continuity limit must be positive");

    BandTrace trace;
    const double fexc = options.excitation_hz;
    for (std::size_t i = 0; i < spec.frames.size(); ++i) {
        const auto& mags = spec.frames[i].magnitude;
        const double mx = *std::max_element(mags.begin(), mags.end());
        const double predicted = i == 0 ? power_centroid(spec, mags, mx) : trend_prediction(trace.points);

        TracePoint pt;
        pt.t_center = spec.frames[i].t_center;
        std::optional<Peak> chosen;
        for (std::size_t j = 1; j + 1 < mags.size(); ++j) {
            if (mags[j] < options.relative_threshold * mx) continue;
            if (!(mags[j] >= mags[j - 1] && mags[j] > mags[j + 1])) continue;
            const Peak p = refine(spec, mags, j);
            if (std::abs(p.frequency - predicted) > options.continuity_limit) continue;
            if (!chosen || std::abs(p.frequency - predicted) < std::abs(chosen->frequency - predicted)) chosen = p;
        }

        if (!chosen && fexc > 0.0) {
            // Carrier suppressed: the strongest symmetric sideband pair brackets it.
            const double reach = std::max(2.0 * spec.bin_width, 0.25 * fexc);
            double best_score = options.relative_threshold * mx;
            const int n_pairs = static_cast<int>(std::min(64.0, 0.5 * spec.bins() * spec.bin_width / fexc));
            for (int n = 1; n <= n_pairs; ++n) {
                const auto left = strongest_near(spec, mags, predicted - n * fexc, reach);
                const auto right = strongest_near(spec, mags, predicted + n * fexc, reach);
                if (!left || !right) continue;
                const double score = std::min(left->magnitude, right->magnitude);
                if (score > best_score) {
                    const double mid = 0.5 * (left->frequency + right->frequency);
                    if (std::abs(mid - predicted) <= options.continuity_limit) {
                        best_score = score;
                        chosen = Peak{mid, mags[spec.bin_of(mid)]};
                        pt.fallback = true;
                    }
                }
            }
        }

        if (chosen) {
            pt.frequency = chosen->frequency;
            pt.amplitude = chosen->magnitude;
        } else {
            pt.frequency = predicted;
            pt.amplitude = mags[spec.bin_of(predicted)];
            pt.gap = true;
        }
        trace.points.push_back(pt);
    }

    const int half = std::max(0, options.smoothing_frames / 2);
    const auto n = static_cast<std::ptrdiff_t>(trace.points.size());
    trace.smoothed.resize(trace.points.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double s = 0.0;
        for (std::ptrdiff_t k = lo; k <= hi; ++k) s += trace.points[static_cast<std::size_t>(k)].frequency;
        trace.smoothed[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo + 1);
    }
    return trace;
}

std::vector<double> sideband_amplitudes(double modulation_hz, double asymmetry, double excitation_hz, int n_max) {
    if (!(excitation_hz > 0.0)) throw DomainError("excitation frequency must be positive");
    // Phase of exp(i psi): psi = a sin(2wt) + b cos(wt).
    const double a = modulation_hz / (4.0 * excitation_hz);
    const double b = -2.0 * modulation_hz * asymmetry / excitation_hz;
    const int ka = static_cast<int>(std::ceil(std::abs(a) + 3.0 * std::cbrt(std::abs(a)) + 12.0));
    const int mb = static_cast<int>(std::ceil(std::abs(b) + 3.0 * std::cbrt(std::abs(b)) + 12.0));
    std::vector<double> ja(2 * ka + 1), jb(2 * mb + 1);
    for (int k = -ka; k <= ka; ++k) ja[static_cast<std::size_t>(k + ka)] = special::bessel_j(k, a);
    for (int m = -mb; m <= mb; ++m) jb[static_cast<std::size_t>(m + mb)] = special::bessel_j(m, b);

    std::vector<double> out(static_cast<std::size_t>(2 * n_max + 1));
    for (int n = -n_max; n <= n_max; ++n) {
        std::complex<double> c{};
        for (int k = -ka; k <= ka; ++k) {
            const int m = n - 2 * k;
            if (m < -mb || m > mb) continue;
            c += ja[static_cast<std::size_t>(k + ka)] * i_power(m) * jb[static_cast<std::size_t>(m + mb)];
        }
        out[static_cast<std::size_t>(n + n_max)] = std::abs(c);
    }
    return out;
}

std::vector<double> model_spectrum(const ModelContext& ctx, double amplitude, double modulation_hz, double asymmetry,
                                   double mean_hz) {
    ModelEvaluator eval(ctx, 0, ctx.window_size - 1);
    auto mags = eval.unit_magnitudes(modulation_hz, asymmetry, mean_hz);
    for (auto& m : mags) m *= amplitude;
    return mags;
}

WindowFit fit_window(std::span<const double> magnitude, double f_start, double bin_width, const ModelContext& ctx,
                     const FitOptions& options) {
    if (magnitude.size() < 8) throw DomainError("spectrum frame too short to fit");
    if (!(ctx.excitation_hz > 0.0)) throw DomainError("excitation frequency must be positive");
    const double df = ctx.sample_rate / static_cast<double>(ctx.window_size);
    if (std::abs(bin_width - df) > 1e-9 * df) throw DomainError("frame bin width does not match the model window");

    const std::size_t nb = magnitude.size();
    const double noise = median(std::vector<double>(magnitude.begin(), magnitude.end()));
    const auto peak_it = std::max_element(magnitude.begin(), magnitude.end());
    const double mx = *peak_it;
    if (!(mx > options.floor_ratio * noise) || !(mx > 0.0)) {
        std::ostringstream os;
        os << "spectral peak " << mx << " V is within " << options.floor_ratio << "x of the noise floor " << noise << " V";
        throw AmplitudeFloorError(os.str());
    }
    const auto freq_of = [&](std::size_t b) { return f_start + static_cast<double>(b) * df; };
    double mu0 = ctx.initial_frequency;
    if (!std::isfinite(mu0) || mu0 < freq_of(0) || mu0 > freq_of(nb - 1)) {
        mu0 = freq_of(static_cast<std::size_t>(peak_it - magnitude.begin()));
    }

    // Occupied half-width around the central band sets the fit band.
    const double occupied_level = std::max(1e-2 * mx, 5.0 * noise);
    double occupied = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        if (magnitude[b] > occupied_level) occupied = std::max(occupied, std::abs(freq_of(b) - mu0));
    }
    const double fexc = ctx.excitation_hz;
    const double half_band = std::max(options.n_max * fexc, occupied + 2.0 * fexc);
    const auto clamp_bin = [&](double f) {
        return static_cast<std::size_t>(std::clamp(std::round((f - f_start) / df), 0.0, static_cast<double>(nb - 1)));
    };
    const std::size_t b_lo = clamp_bin(mu0 - half_band);
    const std::size_t b_hi = clamp_bin(mu0 + half_band);
    const std::span<const double> data = magnitude.subspan(b_lo, b_hi - b_lo + 1);

    const std::size_t h = zero_bin(ctx.window_size);
    const auto first_full = static_cast<std::ptrdiff_t>(std::llround(f_start / df)) + static_cast<std::ptrdiff_t>(h) +
                            static_cast<std::ptrdiff_t>(b_lo);
    if (first_full < 0 || static_cast<std::size_t>(first_full) + data.size() > ctx.window_size) {
        throw DomainError("fit band lies outside the model spectrum");
    }
    ModelEvaluator eval(ctx, static_cast<std::size_t>(first_full), static_cast<std::size_t>(first_full) + data.size() - 1);

    // Coarse (G, Theta) grid on the stationary line model. Lines are drawn with the window
    // kernel; their relative phases are ignored, which is accurate when lines do not overlap.
    const auto& kernel = kernel_for(ctx.window, ctx.window_size);
    const double g_hi = 1.5 * std::max(2.0 * occupied, 4.0 * df) + 1.0;
    const int n_lines = static_cast<int>(std::ceil(half_band / fexc)) + 2;
    std::vector<double> line_model(data.size());
    double best_cost = std::numeric_limits<double>::infinity();
    double g0 = 0.0, theta0 = 0.0;
    constexpr int kGridG = 40;
    constexpr int kGridTheta = 31;
    for (int ig = 0; ig <= kGridG; ++ig) {
        const double frac = static_cast<double>(ig) / kGridG;
        const double g = g_hi * frac * frac;
        for (int it = 0; it < (ig == 0 ? 1 : kGridTheta); ++it) {
            const double theta = 1.5 * static_cast<double>(it) / (kGridTheta - 1);
            const auto lines = sideband_amplitudes(g, theta, fexc, n_lines);
            std::fill(line_model.begin(), line_model.end(), 0.0);
            for (int n = -n_lines; n <= n_lines; ++n) {
                const double amp = lines[static_cast<std::size_t>(n + n_lines)];
                if (amp < 1e-6) continue;
                const double fl = mu0 + n * fexc;
                const double centre = (fl - freq_of(b_lo)) / df;
                const auto lo = static_cast<std::ptrdiff_t>(std::floor(centre)) - kKernelReach;
                const auto hi = static_cast<std::ptrdiff_t>(std::ceil(centre)) + kKernelReach;
                for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, lo);
                     b <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(data.size()) - 1, hi); ++b) {
                    line_model[static_cast<std::size_t>(b)] += 0.5 * amp * kernel(static_cast<double>(b) - centre);
                }
            }
            const double scale = best_scale(data, line_model);
            double cost = 0.0;
            for (std::size_t b = 0; b < data.size(); ++b) {
                const double r = data[b] - scale * line_model[b];
                cost += r * r;
            }
            if (cost < best_cost) {
                best_cost = cost;
                g0 = g;
                theta0 = theta;
            }
        }
    }

    // Full model with A profiled out: parameters (G, Theta, mean frequency).
    std::vector<double> residual_buf(data.size());
    const auto residuals = [&](std::span<const double> x, std::span<double> r) {
        const auto& m = eval.unit_magnitudes(x[0], x[1], x[2]);
        const double scale = best_scale(data, m);
        for (std::size_t b = 0; b < data.size(); ++b) r[b] = data[b] - scale * m[b];
    };
    const auto objective = [&](std::span<const double> x) {
        residuals(x, residual_buf);
        double s = 0.0;
        for (double v : residual_buf) s += v * v;
        return s;
    };

    const optim::Bounds bounds{{0.0, 0.0, mu0 - 0.5 * fexc}, {10.0 * g_hi + 10.0, options.max_asymmetry, mu0 + 0.5 * fexc}};
    const auto simplex = optim::minimize_simplex(
        objective, {g0, theta0, mu0}, {std::max(0.1 * g0, 0.5 * df), 0.1, 0.25 * df}, bounds,
        {.max_iterations = options.simplex_iterations, .size_tolerance = 1e-6});
    const auto refined = optim::least_squares(residuals, simplex.x, data.size(), bounds,
                                              {.max_iterations = options.least_squares_iterations,
                                               .x_tolerance = 1e-10,
                                               .g_tolerance = 1e-14,
                                               .f_tolerance = 1e-14,
                                               .diff_step = 1e-6});
    const auto& best = refined.cost <= simplex.cost ? refined.x : simplex.x;

    WindowFit fit;
    fit.modulation = best[0];
    fit.asymmetry = best[1];
    const auto& m = eval.unit_magnitudes(best[0], best[1], best[2]);
    fit.amplitude = best_scale(data, m);
    double rss = 0.0;
    for (std::size_t b = 0; b < data.size(); ++b) {
        const double r = data[b] - fit.amplitude * m[b];
        rss += r * r;
    }
    fit.residual_norm = std::sqrt(rss);
    fit.mean_frequency = eval.mean_frequency(best[0], best[1], best[2]);
    fit.converged = refined.converged && std::isfinite(fit.residual_norm);
    fit.fit_bins = data.size();
    // First sideband relative to the carrier is about G / (8 f_exc); require it 3x above the
    // per-bin noise relative to the carrier line.
    const double carrier = std::max(0.5 * fit.amplitude, 1e-300);
    fit.modulation_floor = std::max(0.1 * df, 8.0 * fexc * 3.0 * noise / carrier);
    fit.asymmetry_identifiable = fit.modulation > fit.modulation_floor;
    return fit;
}

LineLevels line_levels(const Spectrogram& spec, std::size_t frame, double centre_hz, double excitation_hz,
                       int n_max) {
    if (frame >= spec.frames.size()) throw DomainError("frame index out of range");
    if (!(excitation_hz > 0.0) || n_max < 1) throw DomainError("line levels need f_exc > 0 and n_max >= 1");
    const auto& mags = spec.frames[frame].magnitude;
    const auto level_at = [&](double f) {
        if (f < spec.frequency(0) - spec.bin_width || f > spec.frequency(mags.size() - 1) + spec.bin_width) return 0.0;
        const std::size_t j = spec.bin_of(f);
        double m = mags[j];
        if (j > 0) m = std::max(m, mags[j - 1]);
        if (j + 1 < mags.size()) m = std::max(m, mags[j + 1]);
        return m;
    };
    LineLevels out;
    out.carrier = level_at(centre_hz);
    for (int n = 1; n <= n_max; ++n) {
        const double lo = level_at(centre_hz - n * excitation_hz);
        const double hi = level_at(centre_hz + n * excitation_hz);
        out.lower.push_back(lo);
        out.upper.push_back(hi);
        (n % 2 == 0 ? out.even_energy : out.odd_energy) += lo * lo + hi * hi;
        out.strongest_sideband = std::max({out.strongest_sideband, lo, hi});
    }
    return out;
}

RecordAnalysis analyze_record(const signal::SignalRecord& rec, double excitation_hz, const RecordFitOptions& options) {
    RecordAnalysis out;
    out.spectrogram = spectrogram(rec, options.spectrogram);
    TraceOptions trace_opts = options.trace;
    trace_opts.excitation_hz = excitation_hz;
    out.trace = trace_central_band(out.spectrogram, trace_opts);

    const auto& spec = out.spectrogram;
    std::vector<std::size_t> frames;
    for (std::size_t i = options.first_frame; i < spec.frames.size() && frames.size() < options.max_fits;
         i += std::max<std::size_t>(1, options.frame_stride)) {
        frames.push_back(i);
    }
    out.fits.resize(frames.size());

    const auto fit_one = [&](std::size_t slot) {
        const std::size_t i = frames[slot];
        const auto& frame = spec.frames[i];
        ModelContext ctx;
        ctx.excitation_hz = excitation_hz;
        ctx.sample_rate = rec.sample_rate;
        ctx.window_size = spec.window_size;
        ctx.window = spec.window;
        ctx.initial_frequency = out.trace.points[i].frequency;
        ctx.start_time = rec.time(frame.first_sample);
        ctx.drift_hz.resize(spec.window_size);
        for (std::size_t j = 0; j < spec.window_size; ++j) {
            ctx.drift_hz[j] = out.trace.frequency_at(rec.time(frame.first_sample + j));
        }
        WindowFit fit = fit_window(frame.magnitude, spec.f_start, spec.bin_width, ctx, options.fit);
        fit.t_center = frame.t_center;
        out.fits[slot] = fit;
    };

    unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, frames.size())));
    if (threads <= 1) {
        for (std::size_t s = 0; s < frames.size(); ++s) fit_one(s);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t s = next++; s < frames.size(); s = next++) {
                try {
                    fit_one(s);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<WindowFit> fit_record(const signal::SignalRecord& rec, double excitation_hz, const RecordFitOptions& options) {
    return analyze_record(rec, excitation_hz, options).fits;
}

} // namespace tcopt::spectral
