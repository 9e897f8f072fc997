#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tcopt {

/// Forward complex DFT of fixed length backed by FFTW. An instance owns its plan and
/// work buffers, so one instance must not be shared between threads; independent
/// instances are safe to use concurrently.
class Fft {
  public:
    explicit Fft(std::size_t n);
    ~Fft();

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    Fft(Fft&& other) noexcept;
    Fft& operator=(Fft&& other) noexcept;

    [[nodiscard]] std::size_t size() const { return n_; }

    /// out[k] = sum_j in[j] exp(-2 pi i j k / n). Both spans must have length n.
    void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

  private:
    void release();

    std::size_t n_ = 0;
    void* plan_ = nullptr;
    std::complex<double>* in_ = nullptr;
    std::complex<double>* out_ = nullptr;
};

/// Frequency of FFT bin k for a length-n transform, mapped to [-fs/2, fs/2).
[[nodiscard]] double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

/// Symmetric window coefficients.
enum class WindowKind { rectangular, hann, blackman_harris };

[[nodiscard]] std::vector<double> make_window(WindowKind kind, std::size_t n);
[[nodiscard]] WindowKind parse_window(const std::string& name);
[[nodiscard]] std::string window_name(WindowKind kind);

} // namespace tcopt
