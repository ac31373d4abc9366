#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "rffp/rng.hpp"
#include "rffp/signal.hpp"

using namespace rffp;

namespace {

// Independent RMS recomputation used as the oracle for rms_normalize.
double oracle_rms(const std::vector<cplx>& samples) {
    double acc = 0.0;
    for (const cplx& z : samples) acc += z.real() * z.real() + z.imag() * z.imag();
    return std::sqrt(acc / static_cast<double>(samples.size()));
}

BurstRecord random_burst(std::uint64_t seed, std::size_t n) {
    rng::Xoshiro256pp gen(seed);
    BurstRecord b;
    b.signal.sample_rate_hz = 1e6;
    b.signal.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        b.signal.samples.emplace_back(gen.gaussian(), gen.gaussian());
    return b;
}

}  // namespace

TEST_CASE("synthesize_emission is deterministic") {
    const DeviceProfile p = default_fleet()[3];
    const BurstRecord a = synthesize_emission(p, 1e-4, 99);
    const BurstRecord b = synthesize_emission(p, 1e-4, 99);
    REQUIRE(a.signal.samples.size() == b.signal.samples.size());
    for (std::size_t i = 0; i < a.signal.samples.size(); ++i)
        REQUIRE(a.signal.samples[i] == b.signal.samples[i]);
    const BurstRecord c = synthesize_emission(p, 1e-4, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.signal.samples.size(); ++i)
        any_diff |= (a.signal.samples[i] != c.signal.samples[i]);
    REQUIRE(any_diff);
}

TEST_CASE("plain exponential rise has a monotone envelope") {
    DeviceProfile p;
    p.device_id = 0;
    p.rise_time_s = 2e-6;
    p.ring_freq_hz = 1e6;  // irrelevant with overshoot 0
    p.chirp_rate_hz_per_s = 0.0;
    p.overshoot = 0.0;
    p.jitter_std_s = 0.0;
    p.iq_gain_imbalance = 0.02;
    p.iq_phase_imbalance_rad = 0.05;
    const BurstRecord b = synthesize_emission(p, 1e-4, 5);
    double prev = -1.0;
    for (const cplx& z : b.signal.samples) {
        const double mag = std::abs(z);
        REQUIRE(mag >= prev - 1e-12);
        prev = mag;
    }
}

TEST_CASE("rise time separates mean envelopes well beyond within-device spread") {
    // Monte-Carlo oracle over the generator: 100 bursts per profile.
    DeviceProfile fast = default_fleet()[0];
    fast.rise_time_s = 1e-6;
    fast.jitter_std_s = 5e-8;
    DeviceProfile slow = fast;
    slow.rise_time_s = 5e-6;

    const int bursts = 100;
    const double duration = 5e-5;
    const std::size_t len = static_cast<std::size_t>(duration * kDefaultSampleRateHz);

    auto envelopes = [&](const DeviceProfile& p) {
        std::vector<std::vector<double>> env(bursts);
        for (int i = 0; i < bursts; ++i) {
            const auto seed = rng::derive_stream(1234, {static_cast<std::uint64_t>(p.rise_time_s * 1e9),
                                                        static_cast<std::uint64_t>(i)});
            const BurstRecord b = synthesize_emission(p, duration, seed);
            env[i].resize(len);
            for (std::size_t n = 0; n < len; ++n) env[i][n] = std::abs(b.signal.samples[n]);
        }
        return env;
    };

    auto mean_and_std = [&](const std::vector<std::vector<double>>& env) {
        std::vector<double> mean(len, 0.0);
        for (const auto& e : env)
            for (std::size_t n = 0; n < len; ++n) mean[n] += e[n];
        for (double& m : mean) m /= bursts;
        double var_acc = 0.0;
        for (const auto& e : env)
            for (std::size_t n = 0; n < len; ++n) {
                const double d = e[n] - mean[n];
                var_acc += d * d;
            }
        const double within_std = std::sqrt(var_acc / (static_cast<double>(bursts) * len));
        return std::pair{mean, within_std};
    };

    const auto [mean_fast, std_fast] = mean_and_std(envelopes(fast));
    const auto [mean_slow, std_slow] = mean_and_std(envelopes(slow));

    double dist2 = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
        const double d = mean_fast[n] - mean_slow[n];
        dist2 += d * d;
    }
    const double rms_distance = std::sqrt(dist2 / static_cast<double>(len));
    REQUIRE(rms_distance > 3.0 * std::max(std_fast, std_slow));
}

TEST_CASE("invalid profile fields are rejected") {
    DeviceProfile p = default_fleet()[0];
    p.ring_freq_hz = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(synthesize_emission(p, 1e-4, 1), Error);
    try {
        synthesize_emission(p, 1e-4, 1);
    } catch (const Error& e) {
        REQUIRE(e.kind() == "invalid-profile");
    }
}

TEST_CASE("rms_normalize scales constant samples to magnitude 1") {
    BurstRecord b;
    b.signal.samples.assign(256, cplx(2.0, 0.0));
    const BurstRecord out = rms_normalize(b);
    for (const cplx& z : out.signal.samples) {
        REQUIRE(std::abs(z.real() - 1.0) < 1e-12);
        REQUIRE(std::abs(z.imag()) < 1e-12);
    }
}

TEST_CASE("rms_normalize yields unit RMS and preserves phase") {
    const BurstRecord b = random_burst(17, 4096);
    const BurstRecord out = rms_normalize(b);
    REQUIRE(std::abs(oracle_rms(out.signal.samples) - 1.0) < 1e-12);
    for (std::size_t i = 0; i < b.signal.samples.size(); ++i) {
        const double before = std::arg(b.signal.samples[i]);
        const double after = std::arg(out.signal.samples[i]);
        REQUIRE(std::abs(before - after) < 1e-12);
    }
}

TEST_CASE("rms_normalize is idempotent and scale invariant") {
    const BurstRecord b = random_burst(23, 2048);
    const BurstRecord once = rms_normalize(b);
    const BurstRecord twice = rms_normalize(once);
    for (std::size_t i = 0; i < once.signal.samples.size(); ++i)
        REQUIRE(std::abs(once.signal.samples[i] - twice.signal.samples[i]) < 1e-12);

    BurstRecord scaled = b;
    for (cplx& z : scaled.signal.samples) z *= 7.25;
    const BurstRecord from_scaled = rms_normalize(scaled);
    for (std::size_t i = 0; i < once.signal.samples.size(); ++i)
        REQUIRE(std::abs(once.signal.samples[i] - from_scaled.signal.samples[i]) < 1e-12);
}

TEST_CASE("rms_normalize rejects an all-zero burst") {
    BurstRecord b;
    b.signal.samples.assign(128, cplx(0.0, 0.0));
    try {
        rms_normalize(b);
        FAIL("expected degenerate-signal error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == "degenerate-signal");
    }
}

TEST_CASE("add_awgn at 0 dB injects noise power equal to signal power") {
    IQSequence s;
    s.samples.assign(100000, cplx(1.0, 0.0));
    const IQSequence noisy = add_awgn(s, 0.0, 31);
    double noise_acc = 0.0;
    for (std::size_t i = 0; i < s.samples.size(); ++i)
        noise_acc += std::norm(noisy.samples[i] - s.samples[i]);
    const double measured = noise_acc / static_cast<double>(s.samples.size());
    REQUIRE(std::abs(measured - 1.0) < 0.05);
}

TEST_CASE("clean sentinel leaves the signal untouched") {
    const BurstRecord b = random_burst(41, 512);
    const IQSequence out = add_awgn(b.signal, kCleanSnrDb, 1);
    for (std::size_t i = 0; i < b.signal.samples.size(); ++i)
        REQUIRE(out.samples[i] == b.signal.samples[i]);
}

TEST_CASE("10 dB noise power on a unit-power signal is 0.1") {
    // Monte-Carlo estimate of the injected noise power over 1e6 samples.
    IQSequence s;
    s.samples.assign(1000000, cplx(0.0, 0.0));
    rng::Xoshiro256pp gen(55);
    for (cplx& z : s.samples) {
        const double a = 2.0 * 3.14159265358979 * gen.uniform01();
        z = cplx(std::cos(a), std::sin(a));  // unit power exactly
    }
    const IQSequence noisy = add_awgn(s, 10.0, 77);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.samples.size(); ++i) acc += std::norm(noisy.samples[i] - s.samples[i]);
    const double measured = acc / static_cast<double>(s.samples.size());
    REQUIRE(std::abs(measured - 0.1) < 0.003);
}

TEST_CASE("add_awgn preserves length and sample rate, is deterministic") {
    const BurstRecord b = random_burst(43, 777);
    const IQSequence n1 = add_awgn(b.signal, 12.0, 5);
    const IQSequence n2 = add_awgn(b.signal, 12.0, 5);
    REQUIRE(n1.samples.size() == b.signal.samples.size());
    REQUIRE(n1.sample_rate_hz == b.signal.sample_rate_hz);
    for (std::size_t i = 0; i < n1.samples.size(); ++i) REQUIRE(n1.samples[i] == n2.samples[i]);
}

TEST_CASE("add_awgn rejects zero-power input") {
    IQSequence s;
    s.samples.assign(64, cplx(0.0, 0.0));
    try {
        add_awgn(s, 10.0, 1);
        FAIL("expected degenerate-signal error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == "degenerate-signal");
    }
}

TEST_CASE("default fleet covers nine distinct devices") {
    const auto fleet = default_fleet();
    REQUIRE(fleet.size() == 9);
    for (int d = 0; d < 9; ++d) REQUIRE(fleet[d].device_id == d);
    for (int d = 1; d < 9; ++d) {
        REQUIRE(fleet[d].rise_time_s != fleet[d - 1].rise_time_s);
        REQUIRE(fleet[d].chirp_rate_hz_per_s != fleet[d - 1].chirp_rate_hz_per_s);
    }
}
