#pragma once

#include <complex>
#include <vector>

namespace abc {

using cplx = std::complex<double>;

// Real-to-complex FFT of fixed length on the torus (FFTW, estimate plans).
// Not thread-safe per instance; give each worker its own.
class RealFFT {
  public:
    explicit RealFFT(int n);
    ~RealFFT();
    RealFFT(const RealFFT&) = delete;
    RealFFT& operator=(const RealFFT&) = delete;

    int size() const { return n_; }
    int spectrum_size() const { return n_ / 2 + 1; }

    // X_k = Σ_x x[x] e^{-2πikx/n}
    void forward(const double* x, cplx* X);
    // inverse including the 1/n factor
    void inverse(const cplx* X, double* x);

  private:
    int n_;
    double* rbuf_;
    void* cbuf_;
    void* fwd_;
    void* inv_;
};

// Spectrum of the correlation g ↦ (k ⋆ g)(x) = Σ_r k(r) g(x+r) on a torus of length n.
// `weights` gives k(r) for r = −half..half (index r + half); entries with |r| > n/2 fold onto the torus.
std::vector<cplx> correlation_spectrum(RealFFT& fft, const std::vector<double>& weights, int half);

// out = k ⋆ g given k's correlation spectrum.
void correlate(RealFFT& fft, const std::vector<cplx>& kspec, const double* g, double* out, std::vector<cplx>& work);

} // namespace abc
