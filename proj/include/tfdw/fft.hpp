#pragma once
// Thin RAII layer over FFTW's real 3D transforms.
//
// Plan creation in FFTW is not thread-safe, so it is serialized by a process-wide
// mutex; executing distinct plans concurrently is fine.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "tfdw/errors.hpp"

namespace tfdw {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

template <class T>
struct FftwFree {
    void operator()(T* p) const noexcept { fftw_free(p); }
};

} // namespace detail

// Out-of-place forward (r2c) and backward (c2r) transforms of an n0 x n1 x n2
// row-major real array. The backward transform is unnormalized, as in FFTW.
class RealFFT3 {
public:
    RealFFT3(std::size_t n0, std::size_t n1, std::size_t n2)
        : n0_(n0), n1_(n1), n2_(n2), real_size_(n0 * n1 * n2), complex_size_(n0 * n1 * (n2 / 2 + 1)) {
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_size_));
        if (!real_ || !spec_) {
            release();
            throw configuration_error("FFT buffers could not be allocated");
        }
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_dft_r2c_3d(int(n0), int(n1), int(n2), real_, spec_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_3d(int(n0), int(n1), int(n2), spec_, real_, FFTW_ESTIMATE);
        if (!forward_ || !backward_) {
            release_locked();
            throw configuration_error("FFTW could not create a plan");
        }
    }

    RealFFT3(RealFFT3 const&) = delete;
    RealFFT3& operator=(RealFFT3 const&) = delete;

    ~RealFFT3() { release(); }

    std::size_t real_size() const noexcept { return real_size_; }
    std::size_t complex_size() const noexcept { return complex_size_; }
    std::size_t n2_complex() const noexcept { return n2_ / 2 + 1; }

    std::span<double> real() noexcept { return {real_, real_size_}; }
    std::span<std::complex<double>> spectrum() noexcept {
        return {reinterpret_cast<std::complex<double>*>(spec_), complex_size_};
    }

    // real() -> spectrum()
    void forward() noexcept { fftw_execute(forward_); }
    // spectrum() -> real(); destroys spectrum()
    void backward() noexcept { fftw_execute(backward_); }

private:
    void release() noexcept {
        std::lock_guard lock(detail::fftw_planner_mutex());
        release_locked();
    }
    void release_locked() noexcept {
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
        forward_ = backward_ = nullptr;
        if (real_) fftw_free(real_);
        if (spec_) fftw_free(spec_);
        real_ = nullptr;
        spec_ = nullptr;
    }

    std::size_t n0_, n1_, n2_;
    std::size_t real_size_, complex_size_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

} // namespace tfdw
