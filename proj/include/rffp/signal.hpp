#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/rng.hpp"

// Core signal types, the synthetic nine-device emitter fleet, RMS power
// normalization and AWGN injection at a target SNR.
//
// All operations are pure functions of their inputs plus an explicit seed,
// so they are safe to call concurrently.

namespace rffp {

using cplx = std::complex<double>;

inline constexpr double kDefaultSampleRateHz = 1.0e7;

// Sentinel SNR meaning "no noise applied".
inline constexpr double kCleanSnrDb = std::numeric_limits<double>::infinity();

inline bool is_clean_snr(double snr_db) {
    return std::isinf(snr_db) && snr_db > 0.0;
}

struct IQSequence {
    std::vector<cplx> samples;
    double sample_rate_hz = kDefaultSampleRateHz;
};

// Per-device hardware signature knobs. The turn-on envelope is
//   A(t) = (1 - e^(-t/rise)) * (1 + overshoot * e^(-t/(3 rise)) * cos(2 pi f_ring t))
// and the carrier has quadratic phase (linear frequency sweep) at
// chirp_rate_hz_per_s. IQ gain/phase imbalance is applied last.
struct DeviceProfile {
    int device_id = 0;                    // [0, 8]
    double rise_time_s = 1e-6;            // > 0
    double ring_freq_hz = 1e6;
    double chirp_rate_hz_per_s = 0.0;     // slope of instantaneous frequency
    double overshoot = 0.0;               // >= 0
    double iq_gain_imbalance = 0.0;       // relative gain error on I
    double iq_phase_imbalance_rad = 0.0;  // quadrature skew
    double jitter_std_s = 0.0;            // std dev of burst start-time jitter
};

struct BurstRecord {
    IQSequence signal;
    int device_id = 0;
    int burst_index = 0;
    double snr_db = kCleanSnrDb;
};

inline double mean_power(const IQSequence& signal) {
    double acc = 0.0;
    for (const cplx& z : signal.samples) acc += std::norm(z);
    return signal.samples.empty() ? 0.0 : acc / static_cast<double>(signal.samples.size());
}

inline double rms_level(const IQSequence& signal) { return std::sqrt(mean_power(signal)); }

namespace detail {

inline void validate_profile(const DeviceProfile& p) {
    const double fields[] = {p.rise_time_s,  p.ring_freq_hz,
                             p.chirp_rate_hz_per_s, p.overshoot,
                             p.iq_gain_imbalance,   p.iq_phase_imbalance_rad,
                             p.jitter_std_s};
    for (double f : fields) {
        if (!std::isfinite(f)) errors::invalid_profile("non-finite field in device profile");
    }
    if (p.rise_time_s <= 0.0) errors::invalid_profile("rise_time_s must be > 0");
    if (p.overshoot < 0.0) errors::invalid_profile("overshoot must be >= 0");
    if (p.jitter_std_s < 0.0) errors::invalid_profile("jitter_std_s must be >= 0");
    if (p.device_id < 0 || p.device_id > 8) errors::invalid_profile("device_id outside [0, 8]");
}

}  // namespace detail

// Synthesizes one turn-on burst for a device. Deterministic given
// (profile, duration_s, seed); the caller is expected to derive per-burst
// seeds via rng::derive_stream(master_seed, {device_id, burst_index}).
//
// The burst is silent for a lead-in of 10% of the duration, perturbed by
// Gaussian start-time jitter of std jitter_std_s; the carrier phase offset is
// drawn uniformly per burst. burst_index is carried as metadata only.
inline BurstRecord synthesize_emission(const DeviceProfile& profile, double duration_s,
                                       std::uint64_t seed,
                                       double sample_rate_hz = kDefaultSampleRateHz,
                                       int burst_index = 0) {
    detail::validate_profile(profile);
    if (!(duration_s > 0.0)) errors::parameter("duration_s must be > 0");
    const auto len = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz));
    if (len < 64) errors::parameter("duration_s * sample_rate must cover at least 64 samples");

    rng::Xoshiro256pp gen(seed);
    const double jitter = profile.jitter_std_s * gen.gaussian();
    const double phase0 = 2.0 * std::numbers::pi * gen.uniform01();

    double start_s = 0.1 * duration_s + jitter;
    start_s = std::clamp(start_s, 0.0, 0.5 * duration_s);
    const auto start_n = static_cast<std::size_t>(std::llround(start_s * sample_rate_hz));

    const double cos_skew = std::cos(profile.iq_phase_imbalance_rad);
    const double sin_skew = std::sin(profile.iq_phase_imbalance_rad);
    const double gain_i = 1.0 + profile.iq_gain_imbalance;

    BurstRecord burst;
    burst.device_id = profile.device_id;
    burst.burst_index = burst_index;
    burst.snr_db = kCleanSnrDb;
    burst.signal.sample_rate_hz = sample_rate_hz;
    burst.signal.samples.assign(len, cplx(0.0, 0.0));

    for (std::size_t n = start_n; n < len; ++n) {
        const double t = static_cast<double>(n - start_n) / sample_rate_hz;
        double envelope = 1.0 - std::exp(-t / profile.rise_time_s);
        envelope *= 1.0 + profile.overshoot * std::exp(-t / (3.0 * profile.rise_time_s)) *
                              std::cos(2.0 * std::numbers::pi * profile.ring_freq_hz * t);
        // Instantaneous frequency c*t Hz integrates to pi*c*t^2 radians.
        const double phase =
            phase0 + std::numbers::pi * profile.chirp_rate_hz_per_s * t * t;
        const double i_ideal = envelope * std::cos(phase);
        const double q_ideal = envelope * std::sin(phase);
        burst.signal.samples[n] =
            cplx(gain_i * i_ideal, q_ideal * cos_skew + i_ideal * sin_skew);
    }
    return burst;
}

// Scales the burst so its total RMS level is 1. Pure rescale: sample phases
// are untouched, and the operation is idempotent.
inline BurstRecord rms_normalize(const BurstRecord& burst) {
    if (burst.signal.samples.empty()) errors::degenerate_signal("empty burst");
    const double rms = rms_level(burst.signal);
    if (!(rms > 0.0)) errors::degenerate_signal("burst has zero RMS level");
    BurstRecord out = burst;
    const double inv = 1.0 / rms;
    for (cplx& z : out.signal.samples) z *= inv;
    return out;
}

// Adds complex white Gaussian noise with total power signal_power / 10^(snr/10),
// split equally between I and Q. The clean sentinel (+inf dB) returns the input
// unchanged. Length and sample rate are preserved exactly.
inline IQSequence add_awgn(const IQSequence& signal, double snr_db, std::uint64_t seed) {
    if (is_clean_snr(snr_db)) return signal;
    const double power = mean_power(signal);
    if (!(power > 0.0)) errors::degenerate_signal("zero-power signal");
    const double noise_power = power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_power / 2.0);

    rng::Xoshiro256pp gen(seed);
    IQSequence out = signal;
    for (cplx& z : out.samples) {
        const double ni = sigma * gen.gaussian();
        const double nq = sigma * gen.gaussian();
        z += cplx(ni, nq);
    }
    return out;
}

// The stand-in for the nine-device fleet: profiles spread across rise time,
// ring frequency, chirp slope, overshoot and IQ imbalance so each device has a
// distinct transient signature.
inline std::vector<DeviceProfile> default_fleet() {
    std::vector<DeviceProfile> fleet;
    fleet.reserve(9);
    for (int d = 0; d < 9; ++d) {
        DeviceProfile p;
        p.device_id = d;
        p.rise_time_s = (0.6 + 0.35 * d) * 1e-6;
        p.ring_freq_hz = (0.4 + 0.25 * d) * 1e6;
        p.chirp_rate_hz_per_s = (d - 4) * 7.5e9;
        p.overshoot = 0.15 + 0.04 * d;
        p.iq_gain_imbalance = 0.01 * (d - 4);
        p.iq_phase_imbalance_rad = 0.03 * (d - 4);
        p.jitter_std_s = 1.5e-7 + 2e-8 * d;
        fleet.push_back(p);
    }
    return fleet;
}

}  // namespace rffp
