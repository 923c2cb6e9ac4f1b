#include "fedspectra/fft.hpp"

#include <cmath>
#include <numbers>

#include "fedspectra/errors.hpp"

namespace fedspectra {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<std::size_t> bit_reversal(std::size_t n) {
    std::vector<std::size_t> rev(n, 0);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
        rev[i] = r;
    }
    return rev;
}

void require_matrix(const Tensor& m) {
    if (m.ndim() != 2 || m.empty()) {
        throw ShapeError("fft2d: expected a non-empty matrix, got " + shape_to_string(m.shape()));
    }
}

void transform_axes(ComplexMatrix& f, bool inverse, bool parallel) {
    const std::size_t rows = f.rows, cols = f.cols;
    const FftPlan row_plan(cols);
    const FftPlan col_plan(rows);
    const auto nrows = static_cast<std::ptrdiff_t>(rows);
    const auto ncols = static_cast<std::ptrdiff_t>(cols);

#pragma omp parallel for schedule(static) if (parallel && rows > 1)
    for (std::ptrdiff_t r = 0; r < nrows; ++r) {
        std::vector<cplx> buf(cols);
        for (std::size_t c = 0; c < cols; ++c) buf[c] = f.at(static_cast<std::size_t>(r), c);
        inverse ? row_plan.inverse(buf) : row_plan.forward(buf);
        for (std::size_t c = 0; c < cols; ++c) f.set(static_cast<std::size_t>(r), c, buf[c]);
    }

#pragma omp parallel for schedule(static) if (parallel && cols > 1)
    for (std::ptrdiff_t c = 0; c < ncols; ++c) {
        std::vector<cplx> buf(rows);
        for (std::size_t r = 0; r < rows; ++r) buf[r] = f.at(r, static_cast<std::size_t>(c));
        inverse ? col_plan.inverse(buf) : col_plan.forward(buf);
        for (std::size_t r = 0; r < rows; ++r) f.set(r, static_cast<std::size_t>(c), buf[r]);
    }
}

ComplexMatrix forward_2d(const Tensor& m, bool parallel) {
    require_matrix(m);
    ComplexMatrix f(m.dim(0), m.dim(1));
    std::copy(m.data().begin(), m.data().end(), f.re.begin());
    transform_axes(f, false, parallel);
    return f;
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), re(r * c, 0.0), im(r * c, 0.0) {
    if (r == 0 || c == 0) throw ShapeError("ComplexMatrix: empty shape");
}

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
    if (n == 0) throw ShapeError("FftPlan: zero length");
    const std::size_t m = pow2_ ? n : next_pow2(2 * n - 1);
    twiddles_.resize(m / 2);
    for (std::size_t k = 0; k < m / 2; ++k) {
        twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
    }
    bitrev_ = bit_reversal(m);
    if (pow2_) return;

    padded_ = m;
    chirp_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const std::size_t k2 = (k * k) % (2 * n);
        chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
    }
    chirp_filter_fft_.assign(m, cplx{});
    chirp_filter_fft_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
        chirp_filter_fft_[k] = std::conj(chirp_[k]);
        chirp_filter_fft_[m - k] = std::conj(chirp_[k]);
    }
    radix2(chirp_filter_fft_, false);
}

void FftPlan::forward(std::span<cplx> data) const {
    if (data.size() != n_) throw ShapeError("FftPlan: length mismatch");
    if (n_ == 1) return;
    pow2_ ? radix2(data, false) : bluestein(data, false);
}

void FftPlan::inverse(std::span<cplx> data) const {
    if (data.size() != n_) throw ShapeError("FftPlan: length mismatch");
    if (n_ == 1) return;
    pow2_ ? radix2(data, true) : bluestein(data, true);
}

void FftPlan::radix2(std::span<cplx> data, bool inverse) const {
    const std::size_t n = data.size();
    const std::size_t table = twiddles_.size() * 2;  // transform length the twiddles were built for
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = bitrev_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = table / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx w = twiddles_[k * stride];
                if (inverse) w = std::conj(w);
                const cplx u = data[start + k];
                const cplx v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
    }
}

void FftPlan::bluestein(std::span<cplx> data, bool inverse) const {
    // The inverse transform is conj(forward(conj(x))).
    std::vector<cplx> a(padded_, cplx{});
    for (std::size_t k = 0; k < n_; ++k) {
        const cplx x = inverse ? std::conj(data[k]) : data[k];
        a[k] = x * chirp_[k];
    }
    radix2(a, false);
    for (std::size_t k = 0; k < padded_; ++k) a[k] *= chirp_filter_fft_[k];
    radix2(a, true);
    const double inv_m = 1.0 / static_cast<double>(padded_);
    for (std::size_t k = 0; k < n_; ++k) {
        const cplx y = a[k] * inv_m * chirp_[k];
        data[k] = inverse ? std::conj(y) : y;
    }
}

ComplexMatrix fft2d(const Tensor& m) { return forward_2d(m, true); }

ComplexMatrix fft2d_serial(const Tensor& m) { return forward_2d(m, false); }

ComplexMatrix ifft2d_complex(const ComplexMatrix& f, bool parallel) {
    if (f.rows == 0 || f.cols == 0) throw ShapeError("ifft2d: empty spectrum");
    ComplexMatrix out = f;
    transform_axes(out, true, parallel);
    const double inv = 1.0 / static_cast<double>(f.rows * f.cols);
    for (auto& v : out.re) v *= inv;
    for (auto& v : out.im) v *= inv;
    return out;
}

Tensor ifft2d(const ComplexMatrix& f) {
    auto out = ifft2d_complex(f, true);
    return Tensor({f.rows, f.cols}, std::move(out.re));
}

Tensor ifft2d_serial(const ComplexMatrix& f) {
    auto out = ifft2d_complex(f, false);
    return Tensor({f.rows, f.cols}, std::move(out.re));
}

std::pair<Tensor, Tensor> to_amplitude_phase(const ComplexMatrix& f) {
    std::vector<double> amp(f.size()), phase(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double re = f.re[i], im = f.im[i];
        amp[i] = std::hypot(re, im);
        if (re == 0.0 && im == 0.0) {
            phase[i] = 0.0;
        } else {
            double p = std::atan2(im, re);
            if (p <= -std::numbers::pi) p = std::numbers::pi;
            phase[i] = p;
        }
    }
    return {Tensor({f.rows, f.cols}, std::move(amp)), Tensor({f.rows, f.cols}, std::move(phase))};
}

ComplexMatrix from_amplitude_phase(const Tensor& amplitude, const Tensor& phase) {
    require_same_shape(amplitude, phase, "from_amplitude_phase");
    if (amplitude.ndim() != 2) throw ShapeError("from_amplitude_phase: expected matrices");
    ComplexMatrix f(amplitude.dim(0), amplitude.dim(1));
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.re[i] = amplitude[i] * std::cos(phase[i]);
        f.im[i] = amplitude[i] * std::sin(phase[i]);
    }
    return f;
}

}  // namespace fedspectra
