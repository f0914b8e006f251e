#include "abcsim/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "abcsim/errors.hpp"

namespace abc {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

RealFFT::RealFFT(int n) : n_(n) {
    if (n < 2) throw ParameterError("RealFFT: length must be at least 2");
    std::lock_guard<std::mutex> lock(plan_mutex());
    rbuf_ = fftw_alloc_real(static_cast<std::size_t>(n));
    cbuf_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    auto* c = static_cast<fftw_complex*>(cbuf_);
    fwd_ = fftw_plan_dft_r2c_1d(n, rbuf_, c, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, c, rbuf_, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw NumericalError("RealFFT: plan creation failed");
}

RealFFT::~RealFFT() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_));
    fftw_free(rbuf_);
    fftw_free(cbuf_);
}

void RealFFT::forward(const double* x, cplx* X) {
    std::memcpy(rbuf_, x, sizeof(double) * n_);
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::memcpy(static_cast<void*>(X), cbuf_, sizeof(fftw_complex) * spectrum_size());
}

void RealFFT::inverse(const cplx* X, double* x) {
    std::memcpy(cbuf_, static_cast<const void*>(X), sizeof(fftw_complex) * spectrum_size());
    fftw_execute(static_cast<fftw_plan>(inv_));
    const double s = 1.0 / n_;
    for (int i = 0; i < n_; ++i) x[i] = rbuf_[i] * s;
}

std::vector<cplx> correlation_spectrum(RealFFT& fft, const std::vector<double>& weights, int half) {
    const int n = fft.size();
    // (k ⋆ g) = k_rev * g with k_rev[(−r) mod n] = k(r)
    std::vector<double> rev(n, 0.0);
    for (int r = -half; r <= half; ++r) {
        int idx = ((-r) % n + n) % n;
        rev[idx] += weights[r + half];
    }
    std::vector<cplx> spec(fft.spectrum_size());
    fft.forward(rev.data(), spec.data());
    return spec;
}

void correlate(RealFFT& fft, const std::vector<cplx>& kspec, const double* g, double* out, std::vector<cplx>& work) {
    work.resize(fft.spectrum_size());
    fft.forward(g, work.data());
    for (std::size_t k = 0; k < work.size(); ++k) work[k] *= kspec[k];
    fft.inverse(work.data(), out);
}

} // namespace abc
