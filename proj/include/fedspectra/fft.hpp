#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fedspectra/tensor.hpp"

namespace fedspectra {

using cplx = std::complex<double>;

/// Dense complex matrix stored as separate row-major real and imaginary planes.
struct ComplexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> re;
    std::vector<double> im;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c);

    cplx at(std::size_t r, std::size_t c) const { return {re[r * cols + c], im[r * cols + c]}; }
    void set(std::size_t r, std::size_t c, cplx v) {
        re[r * cols + c] = v.real();
        im[r * cols + c] = v.imag();
    }
    std::size_t size() const noexcept { return re.size(); }
};

/// Precomputed 1-D transform of a fixed length. Power-of-two lengths use an
/// iterative radix-2 kernel; every other length goes through Bluestein's chirp-z
/// reformulation on a padded power-of-two grid.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t length() const noexcept { return n_; }

    /// In-place unnormalised transform; forward uses exp(-2*pi*i*k*n/N).
    void forward(std::span<cplx> data) const;
    /// In-place unnormalised inverse (positive exponent, no 1/N scaling).
    void inverse(std::span<cplx> data) const;

private:
    void radix2(std::span<cplx> data, bool inverse) const;
    void bluestein(std::span<cplx> data, bool inverse) const;

    std::size_t n_;
    bool pow2_;
    std::vector<cplx> twiddles_;        // radix-2 twiddles for n_ (or padded length)
    std::vector<std::size_t> bitrev_;
    std::size_t padded_ = 0;            // Bluestein only
    std::vector<cplx> chirp_;           // exp(-i*pi*k^2/n)
    std::vector<cplx> chirp_filter_fft_;  // FFT of conj chirp, padded
};

/// 2-D forward DFT of a real matrix (rows, then columns). Rows and columns are
/// transformed in parallel when OpenMP is available.
ComplexMatrix fft2d(const Tensor& m);
/// Single-threaded reference path of fft2d; bit-identical results.
ComplexMatrix fft2d_serial(const Tensor& m);

/// Inverse 2-D DFT scaled by 1/(rows*cols). Returns the full complex result.
ComplexMatrix ifft2d_complex(const ComplexMatrix& f, bool parallel = true);
/// Real part of ifft2d_complex.
Tensor ifft2d(const ComplexMatrix& f);
Tensor ifft2d_serial(const ComplexMatrix& f);

/// Amplitude (>= 0) and phase in (-pi, pi]; phase of an exact zero is 0.
std::pair<Tensor, Tensor> to_amplitude_phase(const ComplexMatrix& f);
ComplexMatrix from_amplitude_phase(const Tensor& amplitude, const Tensor& phase);

}  // namespace fedspectra
