#pragma once

#include <complex>
#include <vector>

#include "cs2/common.hpp"

namespace cs2 {

using cdouble = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 Cooley-Tukey.
inline void fft_pow2(std::vector<cdouble>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI /
                           static_cast<double>(len);
        const cdouble wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble u = a[i + k];
                const cdouble v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

// Bluestein's algorithm: arbitrary-size DFT as a convolution of pow2 FFTs.
inline void fft_bluestein(std::vector<cdouble>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cdouble> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n avoids precision loss for large k
        const std::size_t k2 = static_cast<std::size_t>(
            (static_cast<unsigned long long>(k) * k) % (2 * n));
        const double ang = sign * M_PI * static_cast<double>(k2) /
                           static_cast<double>(n);
        w[k] = cdouble(std::cos(ang), std::sin(ang));
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cdouble> fa(m, cdouble(0.0, 0.0));
    std::vector<cdouble> fb(m, cdouble(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * w[k];
    fb[0] = std::conj(w[0]);
    for (std::size_t k = 1; k < n; ++k)
        fb[k] = fb[m - k] = std::conj(w[k]);
    fft_pow2(fa, false);
    fft_pow2(fb, false);
    for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
    fft_pow2(fa, true);
    for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * w[k];
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

}  // namespace detail

// Forward DFT (no normalization), any size >= 1.
inline void fft(std::vector<cdouble>& a) {
    if (a.empty()) fail(ErrorKind::Computation, "fft", "empty input");
    if (a.size() == 1) return;
    if (detail::is_pow2(a.size())) detail::fft_pow2(a, false);
    else detail::fft_bluestein(a, false);
}

// Inverse DFT (1/N normalization), any size >= 1.
inline void ifft(std::vector<cdouble>& a) {
    if (a.empty()) fail(ErrorKind::Computation, "ifft", "empty input");
    if (a.size() == 1) return;
    if (detail::is_pow2(a.size())) detail::fft_pow2(a, true);
    else detail::fft_bluestein(a, true);
}

inline std::vector<cdouble> fft_real(const std::vector<double>& x,
                                     std::size_t pad_to = 0) {
    std::vector<cdouble> a(std::max(pad_to, x.size()), cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = cdouble(x[i], 0.0);
    fft(a);
    return a;
}

}  // namespace cs2
