#include "tcopt/resonance_sweep.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/optimize.hpp"
#include "tcopt/units.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace tcopt::sweep {

namespace {

constexpr double boltzmann_si = 1.380649e-23; // J/K

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Frequency where the response falls to half of `level` walking from `from` in direction `dir`.
std::optional<double> half_level_crossing(std::span<const SweepPoint> pts, std::size_t from, int dir, double level) {
    const double half = 0.5 * level;
    auto i = static_cast<std::ptrdiff_t>(from);
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
    while (i + dir >= 0 && i + dir < n) {
        const auto& a = pts[static_cast<std::size_t>(i)];
        const auto& b = pts[static_cast<std::size_t>(i + dir)];
        if (b.response <= half) {
            const double w = (a.response - half) / (a.response - b.response);
            return a.excitation_hz + w * (b.excitation_hz - a.excitation_hz);
        }
        i += dir;
    }
    return std::nullopt;
}

} // namespace

void SweepPoint::validate() const {
    if (!(excitation_hz > 0.0) || !std::isfinite(excitation_hz)) throw DomainError("sweep frequency must be positive");
    if (!(response >= 0.0) || !std::isfinite(response)) throw DomainError("sweep response G must be non-negative");
    if (!(sigma >= 0.0)) throw DomainError("sweep uncertainty must be non-negative");
}

double squared_lorentzian(double f, double center, double width, double peak) {
    const double d = center * center - f * f;
    const double num = center * width;
    return peak * num * num / (d * d + width * width * f * f);
}

double ResonanceFit::response(double f) const {
    return squared_lorentzian(f, center, width, peak);
}

ResonanceFit fit_resonance(std::span<const SweepPoint> points) {
    if (points.size() < 5) throw DomainError("resonance fit needs at least 5 sweep points");
    for (const auto& p : points) p.validate();

    std::vector<SweepPoint> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.excitation_hz < b.excitation_hz; });
    const auto top = std::max_element(pts.begin(), pts.end(),
                                      [](const auto& a, const auto& b) { return a.response < b.response; });
    const double scale = top->response;
    if (!(scale > 0.0)) throw DomainError("sweep shows no response");
    const bool weighted = std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.sigma > 0.0; });

    // Work in units of the largest response so the fit path is independent of overall scale.
    std::vector<double> f(pts.size()), y(pts.size()), w(pts.size(), 1.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        f[i] = pts[i].excitation_hz;
        y[i] = pts[i].response / scale;
        if (weighted) w[i] = scale / pts[i].sigma;
    }
    const double f_lo = f.front();
    const double f_hi = f.back();

    const auto i_top = static_cast<std::size_t>(top - pts.begin());
    const auto left = half_level_crossing(pts, i_top, -1, scale);
    const auto right = half_level_crossing(pts, i_top, +1, scale);
    const double f0 = top->excitation_hz;
    double width0 = 0.5 * (f_hi - f_lo);
    if (left && right) {
        width0 = *right - *left;
    } else if (left) {
        width0 = 2.0 * (f0 - *left);
    } else if (right) {
        width0 = 2.0 * (*right - f0);
    }
    width0 = std::max(width0, 1e-6 * f0);

    const auto residuals = [&](std::span<const double> x, std::span<double> r) {
        for (std::size_t i = 0; i < f.size(); ++i) r[i] = w[i] * (y[i] - squared_lorentzian(f[i], x[0], x[1], x[2]));
    };
    const optim::Bounds bounds{{1e-9 * f0, 1e-9 * f0, 0.0}, {10.0 * f_hi, 10.0 * (f_hi - f_lo) + f0, 1e6}};
    const auto result = optim::least_squares(residuals, {f0, width0, 1.0}, f.size(), bounds,
                                             {.max_iterations = 200, .x_tolerance = 1e-12, .g_tolerance = 1e-14,
                                              .f_tolerance = 1e-14, .diff_step = 1e-8});

    ResonanceFit fit;
    fit.center = result.x[0];
    fit.width = result.x[1];
    fit.peak = result.x[2] * scale;
    fit.quality_factor = fit.center / fit.width;
    fit.converged = result.converged;
    double rss = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = pts[i].response - fit.response(f[i]);
        rss += r * r;
    }
    fit.residual_norm = std::sqrt(rss);
    fit.extrapolated = fit.center < f_lo || fit.center > f_hi;
    return fit;
}

Regression width_vs_fork_regression(std::span<const WidthPair> pairs) {
    if (pairs.size() < 3) throw DomainError("width regression needs at least 3 pairs");
    const double n = static_cast<double>(pairs.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : pairs) {
        if (!std::isfinite(p.fork_width) || !std::isfinite(p.mode_width)) throw DomainError("non-finite width");
        mx += p.fork_width;
        my += p.mode_width;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : pairs) {
        sxx += (p.fork_width - mx) * (p.fork_width - mx);
        sxy += (p.fork_width - mx) * (p.mode_width - my);
    }
    if (!(sxx > 1e-300) || sxx <= 1e-24 * n * mx * mx) {
        throw DomainError("width regression is rank deficient: fork widths do not vary");
    }
    Regression out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    for (const auto& p : pairs) out.residuals.push_back(p.mode_width - (out.intercept + out.slope * p.fork_width));
    return out;
}

double residual_quality_factor(double q_total, double q_thermal) {
    if (!(q_total > 0.0) || !(q_thermal > q_total)) {
        throw DomainError("need 0 < Q_total < Q_thermal for a positive residual width");
    }
    return 1.0 / (1.0 / q_total - 1.0 / q_thermal);
}

ForkReading fork_thermometry(double fork_width, const ForkReference& reference, double gap, double max_valid_width) {
    if (!(fork_width > 0.0) || !(reference.width > 0.0)) throw DomainError("fork widths must be positive");
    if (!(reference.temperature > 0.0)) throw DomainError("reference temperature must be positive");
    if (!(gap > 0.0)) throw DomainError("gap energy must be positive");
    // ln(ref e^{gap / k T_ref} / width) written so the large exponential never materializes.
    const double inverse = 1.0 / reference.temperature - boltzmann_si / gap * std::log(fork_width / reference.width);
    if (!(inverse > 0.0)) {
        std::ostringstream os;
        os << "fork width " << fork_width << " Hz is beyond the exponential law's infinite-temperature limit";
        throw DomainError(os.str());
    }
    ForkReading reading;
    reading.temperature = 1.0 / inverse;
    if (max_valid_width > 0.0 && fork_width > max_valid_width) {
        std::ostringstream os;
        os << "fork width " << fork_width << " Hz exceeds the ballistic-regime bound " << max_valid_width << " Hz";
        reading.warning = os.str();
    }
    return reading;
}

std::vector<double> linear_frequencies(double first_hz, double last_hz, std::size_t count) {
    if (count < 2) throw DomainError("a sweep needs at least two frequencies");
    if (!(first_hz > 0.0) || !(last_hz > first_hz)) throw DomainError("sweep range must be positive and increasing");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = first_hz + (last_hz - first_hz) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

double injected_response(const PipelineSweep& sweep, double excitation_hz) {
    const double tilt = sweep.resonant_tilt * sweep.mode.relative_response(units::hz_to_rad_s(excitation_hz));
    return sweep.crystal.coupling.hz_per_rad2() * tilt * tilt;
}

std::vector<SweepPoint> run_pipeline_sweep(const PipelineSweep& sweep) {
    if (sweep.excitation_hz.empty()) throw DomainError("sweep has no drive frequencies");
    if (!(sweep.resonant_tilt > 0.0)) throw DomainError("resonant tilt must be positive");
    std::vector<SweepPoint> out(sweep.excitation_hz.size());

    const auto run_one = [&](std::size_t i) {
        const double fexc = sweep.excitation_hz[i];
        const auto drive = signal::drive_for_mode(sweep.mode, units::hz_to_rad_s(fexc), sweep.resonant_tilt);
        signal::NoiseSpec noise = sweep.noise;
        noise.seed += i;
        const auto rec = signal::synthesize(sweep.crystal, drive, noise, sweep.synthesis);
        auto analysis = sweep.analysis;
        analysis.threads = 1;
        const auto fits = spectral::fit_record(rec, fexc, analysis);
        if (fits.empty()) throw DomainError("sweep record too short for a single window");
        std::vector<double> g;
        for (const auto& fit : fits) g.push_back(fit.modulation);
        SweepPoint p;
        p.excitation_hz = fexc;
        p.response = median(g);
        if (g.size() > 1) {
            const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
            double var = 0.0;
            for (double v : g) var += (v - mean) * (v - mean);
            var /= static_cast<double>(g.size() - 1);
            p.sigma = std::sqrt(var / static_cast<double>(g.size()));
        }
        out[i] = p;
    };

    unsigned threads = sweep.threads != 0 ? sweep.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(out.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < out.size(); i = next++) {
            try {
                run_one(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace tcopt::sweep
