#include "tcopt/fft.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/units.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

namespace tcopt {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

Fft::Fft(std::size_t n) : n_(n) {
    if (n == 0) throw DomainError("FFT length must be positive");
    in_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
    out_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (in_ == nullptr || out_ == nullptr) {
        release();
        throw std::bad_alloc();
    }
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in_),
                             reinterpret_cast<fftw_complex*>(out_), FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan_ == nullptr) {
        release();
        throw Error("FFTW could not create a plan");
    }
}

Fft::~Fft() {
    release();
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_), plan_(other.plan_), in_(other.in_), out_(other.out_) {
    other.plan_ = nullptr;
    other.in_ = nullptr;
    other.out_ = nullptr;
}

Fft& Fft::operator=(Fft&& other) noexcept {
    if (this != &other) {
        release();
        n_ = other.n_;
        plan_ = other.plan_;
        in_ = other.in_;
        out_ = other.out_;
        other.plan_ = nullptr;
        other.in_ = nullptr;
        other.out_ = nullptr;
    }
    return *this;
}

void Fft::release() {
    if (plan_ != nullptr) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
        plan_ = nullptr;
    }
    if (in_ != nullptr) fftw_free(in_);
    if (out_ != nullptr) fftw_free(out_);
    in_ = nullptr;
    out_ = nullptr;
}

void Fft::forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    if (in.size() != n_ || out.size() != n_) throw DomainError("FFT buffer length mismatch");
    std::copy(in.begin(), in.end(), in_);
    fftw_execute(static_cast<fftw_plan>(plan_));
    std::copy(out_, out_ + n_, out.begin());
}

double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    auto idx = static_cast<std::ptrdiff_t>(k);
    // Bins at and above n/2 (rounded up for odd n) alias to negative frequencies.
    if (idx >= static_cast<std::ptrdiff_t>(n) - half) idx -= static_cast<std::ptrdiff_t>(n);
    return static_cast<double>(idx) * sample_rate / static_cast<double>(n);
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = units::two_pi * static_cast<double>(i) / denom;
        switch (kind) {
        case WindowKind::rectangular:
            break;
        case WindowKind::hann:
            w[i] = 0.5 - 0.5 * std::cos(x);
            break;
        case WindowKind::blackman_harris:
            w[i] = 0.35875 - 0.48829 * std::cos(x) + 0.14128 * std::cos(2 * x) -
                   0.01168 * std::cos(3 * x);
            break;
        }
    }
    return w;
}

WindowKind parse_window(const std::string& name) {
    if (name == "hann") return WindowKind::hann;
    if (name == "rectangular") return WindowKind::rectangular;
    if (name == "blackman_harris") return WindowKind::blackman_harris;
    throw ConfigError("unknown window function '" + name + "'");
}

std::string window_name(WindowKind kind) {
    switch (kind) {
    case WindowKind::rectangular:
        return "rectangular";
    case WindowKind::hann:
        return "hann";
    case WindowKind::blackman_harris:
        return "blackman_harris";
    }
    return "hann";
}

} // namespace tcopt
