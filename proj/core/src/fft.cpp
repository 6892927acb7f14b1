#include "nnseg/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "nnseg/error.hpp"

namespace nnseg {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

struct Fft2d::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    fftw_complex* scratch_in = nullptr;
    fftw_complex* scratch_out = nullptr;

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
        fftw_free(scratch_in);
        fftw_free(scratch_out);
    }
};

Fft2d::Fft2d(int width, int height) : width_(width), height_(height), plans_(std::make_unique<Plans>()) {
    if (width <= 0 || height <= 0) throw ValidationError("fft: non-positive size");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::lock_guard lock(planner_mutex());
    plans_->scratch_in = fftw_alloc_complex(n);
    plans_->scratch_out = fftw_alloc_complex(n);
    plans_->fwd = fftw_plan_dft_2d(height, width, plans_->scratch_in, plans_->scratch_out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->inv = fftw_plan_dft_2d(height, width, plans_->scratch_in, plans_->scratch_out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plans_->fwd || !plans_->inv) throw Error("fft: planning failed");
}

Fft2d::~Fft2d() = default;
Fft2d::Fft2d(Fft2d&&) noexcept = default;
Fft2d& Fft2d::operator=(Fft2d&&) noexcept = default;

Spectrum Fft2d::forward(const std::vector<double>& real) const {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    Spectrum in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = {real[i], 0.0};
    // std::complex<double> is layout-compatible with fftw_complex.
    fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> Fft2d::inverse_real(const Spectrum& spectrum) const {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    Spectrum in = spectrum;
    Spectrum out(n);
    fftw_execute_dft(plans_->inv, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    std::vector<double> real(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) real[i] = out[i].real() * scale;
    return real;
}

} // namespace nnseg
