#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/fft.hpp"
#include "rffp/signal.hpp"

// Time-frequency transforms: the short-time Fourier transform and the general
// linear chirplet transform built on top of it.
//
// Conventions. Frames start at f*hop and span `w` window taps; the DFT over a
// frame is sum_u win[u] * s[f*hop+u] * exp(-i 2 pi k u / fft_bins). The
// chirplet demodulator for angle alpha multiplies the frame-local samples by
//   exp(-i * (tan(alpha) * fs / (2 Ts)) * tau^2),   tau = (u - w/2) * Ts,
// which in sample units reduces to exp(-i * (tan(alpha)/2) * (u - w/2)^2):
// centering tau on the frame makes the demodulator symmetric and the alpha=0
// candidate identical to the plain STFT. A linear chirp with instantaneous
// angular frequency w0 + 2*c*tau (c in rad/s^2) is flattened exactly by the
// candidate whose angle satisfies tan(alpha) = 2 Ts c / fs.

namespace rffp {

struct ChirpletParams {
    int n_chirplets = 9;          // N in the alpha grid; must be odd for glct
    std::vector<double> window;   // analysis window taps
    std::size_t hop = 16;
    std::size_t fft_bins = 64;    // >= window length
};

struct TimeFrequencyGrid {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<cplx> values;           // row-major frames x bins
    std::vector<double> selected_alpha; // winning alpha per cell (radians)
    std::vector<double> frame_times_s;
    std::vector<double> bin_freqs_hz;

    std::size_t index(std::size_t f, std::size_t k) const { return f * bins + k; }
    const cplx& at(std::size_t f, std::size_t k) const { return values[index(f, k)]; }
    double magnitude(std::size_t f, std::size_t k) const { return std::abs(at(f, k)); }
    double alpha_at(std::size_t f, std::size_t k) const { return selected_alpha[index(f, k)]; }
};

// Periodic Hann window, the default analysis window.
inline std::vector<double> hann_window(std::size_t w) {
    if (w == 0) errors::parameter("window length must be positive");
    std::vector<double> taps(w);
    for (std::size_t n = 0; n < w; ++n)
        taps[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                       static_cast<double>(w));
    return taps;
}

inline std::vector<double> rectangular_window(std::size_t w) {
    if (w == 0) errors::parameter("window length must be positive");
    return std::vector<double>(w, 1.0);
}

// The N chirplet angles alpha_k = -pi/2 + k * pi / (N + 1), k = 1..N.
// Strictly increasing, all inside (-pi/2, pi/2); odd N puts 0 on the grid.
inline std::vector<double> alpha_grid(int n_chirplets) {
    if (n_chirplets < 1) errors::parameter("n_chirplets must be >= 1");
    std::vector<double> grid(static_cast<std::size_t>(n_chirplets));
    for (int k = 1; k <= n_chirplets; ++k)
        grid[static_cast<std::size_t>(k - 1)] =
            -std::numbers::pi / 2.0 +
            static_cast<double>(k) * std::numbers::pi / static_cast<double>(n_chirplets + 1);
    // The middle entry of an odd grid is exactly zero by symmetry; pin it so
    // the alpha=0 candidate is the unmodified STFT down to the last bit.
    if (n_chirplets % 2 == 1) grid[static_cast<std::size_t>(n_chirplets / 2)] = 0.0;
    return grid;
}

// Maps a chirp rate c (rad/s^2) to its chirplet angle per tan(alpha) = 2 Ts c / fs.
inline double alpha_from_chirp_rate(double chirp_rate_rad_s2, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0)) errors::parameter("sample_rate_hz must be > 0");
    return std::atan(2.0 * chirp_rate_rad_s2 / (sample_rate_hz * sample_rate_hz));
}

namespace detail {

inline void validate_tfr_params(const IQSequence& signal, const ChirpletParams& params) {
    if (params.window.empty()) errors::parameter("window must be non-empty");
    bool any_nonzero = false;
    for (double t : params.window) {
        if (!std::isfinite(t)) errors::parameter("window taps must be finite");
        if (t != 0.0) any_nonzero = true;
    }
    if (!any_nonzero) errors::parameter("window must not be all zero");
    if (params.hop < 1) errors::parameter("hop must be >= 1");
    if (params.fft_bins < params.window.size())
        errors::parameter("fft_bins must be >= window length");
    if (signal.samples.size() < params.window.size())
        errors::parameter("signal shorter than the analysis window");
}

// Demodulation chirp for one alpha: exp(-i * (tan(alpha)/2) * (u - w/2)^2).
inline std::vector<cplx> demod_chirp(double alpha, std::size_t w) {
    std::vector<cplx> chirp(w);
    const double rate = std::tan(alpha) / 2.0;
    for (std::size_t u = 0; u < w; ++u) {
        const double tau = static_cast<double>(u) - static_cast<double>(w) / 2.0;
        const double phase = -rate * tau * tau;
        chirp[u] = cplx(std::cos(phase), std::sin(phase));
    }
    return chirp;
}

inline TimeFrequencyGrid make_grid_shell(const IQSequence& signal, const ChirpletParams& params) {
    const std::size_t w = params.window.size();
    const std::size_t frames = (signal.samples.size() - w) / params.hop + 1;
    TimeFrequencyGrid grid;
    grid.frames = frames;
    grid.bins = params.fft_bins;
    grid.values.assign(frames * params.fft_bins, cplx(0.0, 0.0));
    grid.selected_alpha.assign(frames * params.fft_bins, 0.0);
    grid.frame_times_s.resize(frames);
    grid.bin_freqs_hz.resize(params.fft_bins);
    const double ts = 1.0 / signal.sample_rate_hz;
    for (std::size_t f = 0; f < frames; ++f)
        grid.frame_times_s[f] =
            (static_cast<double>(f * params.hop) + static_cast<double>(w) / 2.0) * ts;
    for (std::size_t k = 0; k < params.fft_bins; ++k)
        grid.bin_freqs_hz[k] = static_cast<double>(k) * signal.sample_rate_hz /
                               static_cast<double>(params.fft_bins);
    return grid;
}

}  // namespace detail

// Plain STFT. Output cell (f, k) = sum_u win[u] * s[f*hop+u] * e^(-i 2 pi k u / fft_bins);
// frames = floor((len - w) / hop) + 1. selected_alpha is all zeros.
inline TimeFrequencyGrid stft(const IQSequence& signal, const ChirpletParams& params) {
    detail::validate_tfr_params(signal, params);
    const std::size_t w = params.window.size();
    TimeFrequencyGrid grid = detail::make_grid_shell(signal, params);

    std::vector<cplx> frame(params.fft_bins);
    for (std::size_t f = 0; f < grid.frames; ++f) {
        std::fill(frame.begin(), frame.end(), cplx(0.0, 0.0));
        const std::size_t base = f * params.hop;
        for (std::size_t u = 0; u < w; ++u)
            frame[u] = params.window[u] * signal.samples[base + u];
        const std::vector<cplx> spectrum = fft::forward(frame);
        std::copy(spectrum.begin(), spectrum.end(), grid.values.begin() + grid.index(f, 0));
    }
    return grid;
}

// General linear chirplet transform. For every angle in alpha_grid(N) the
// frame is demodulated and transformed; each output cell keeps the candidate
// of largest magnitude and records the winning angle. Ties resolve toward the
// angle closest to zero, then the negative one, so results do not depend on
// evaluation order.
inline TimeFrequencyGrid glct(const IQSequence& signal, const ChirpletParams& params) {
    detail::validate_tfr_params(signal, params);
    if (params.n_chirplets % 2 == 0)
        errors::parameter("n_chirplets must be odd so alpha = 0 is on the grid");

    const std::size_t w = params.window.size();
    const std::vector<double> alphas = alpha_grid(params.n_chirplets);
    std::vector<std::vector<cplx>> chirps;
    chirps.reserve(alphas.size());
    for (double a : alphas) chirps.push_back(detail::demod_chirp(a, w));

    TimeFrequencyGrid grid = detail::make_grid_shell(signal, params);
    std::vector<double> best_mag(grid.values.size(), -1.0);

    std::vector<cplx> windowed(w), frame(params.fft_bins);
    for (std::size_t f = 0; f < grid.frames; ++f) {
        const std::size_t base = f * params.hop;
        for (std::size_t u = 0; u < w; ++u)
            windowed[u] = params.window[u] * signal.samples[base + u];

        for (std::size_t a = 0; a < alphas.size(); ++a) {
            std::fill(frame.begin(), frame.end(), cplx(0.0, 0.0));
            for (std::size_t u = 0; u < w; ++u) frame[u] = windowed[u] * chirps[a][u];
            const std::vector<cplx> spectrum = fft::forward(frame);
            const double alpha = alphas[a];
            for (std::size_t k = 0; k < params.fft_bins; ++k) {
                const std::size_t cell = grid.index(f, k);
                const double mag = std::abs(spectrum[k]);
                const double incumbent = grid.selected_alpha[cell];
                const bool wins =
                    mag > best_mag[cell] ||
                    (mag == best_mag[cell] &&
                     (std::abs(alpha) < std::abs(incumbent) ||
                      (std::abs(alpha) == std::abs(incumbent) && alpha < incumbent)));
                if (wins) {
                    best_mag[cell] = mag;
                    grid.values[cell] = spectrum[k];
                    grid.selected_alpha[cell] = alpha;
                }
            }
        }
    }
    return grid;
}

}  // namespace rffp
