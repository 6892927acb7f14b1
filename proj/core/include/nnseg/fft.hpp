#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace nnseg {

using Spectrum = std::vector<std::complex<double>>;

/// 2-D complex DFT of a fixed size, backed by FFTW. Plans are created under a
/// process-wide lock; execution is safe from multiple threads.
class Fft2d {
public:
    Fft2d(int width, int height);
    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;
    Fft2d(Fft2d&&) noexcept;
    Fft2d& operator=(Fft2d&&) noexcept;

    int width() const { return width_; }
    int height() const { return height_; }

    /// Forward transform of a real row-major grid.
    Spectrum forward(const std::vector<double>& real) const;
    /// Inverse transform, normalized by 1/(w*h); returns the real part.
    std::vector<double> inverse_real(const Spectrum& spectrum) const;

private:
    struct Plans;
    int width_ = 0;
    int height_ = 0;
    std::unique_ptr<Plans> plans_;
};

} // namespace nnseg
