#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "rffp/errors.hpp"

// Minimal forward DFT used by the time-frequency transforms. Power-of-two
// sizes take the iterative radix-2 path; anything else falls back to a direct
// O(n^2) evaluation, which is fine at the frame sizes this project uses.

namespace rffp::fft {

namespace detail {

inline void radix2_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& in) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t u = 0; u < n; ++u) {
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>(k * u) / static_cast<double>(n);
            acc += in[u] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace detail

// Forward DFT: out[k] = sum_u in[u] * exp(-i 2 pi k u / n).
inline std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in) {
    if (in.empty()) errors::parameter("FFT input must be non-empty");
    if (std::has_single_bit(in.size())) {
        std::vector<std::complex<double>> a = in;
        detail::radix2_inplace(a);
        return a;
    }
    return detail::direct_dft(in);
}

}  // namespace rffp::fft
