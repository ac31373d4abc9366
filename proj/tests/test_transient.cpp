#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "rffp/rng.hpp"
#include "rffp/signal.hpp"
#include "rffp/transient.hpp"

using namespace rffp;

namespace {

// Brute-force population variance of one window, used as the oracle.
double oracle_variance(const std::vector<double>& x, std::size_t begin, std::size_t len) {
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += x[begin + i];
    mean /= static_cast<double>(len);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double d = x[begin + i] - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(len);
}

std::vector<TransientSegment> make_segments(std::initializer_list<std::vector<cplx>> lists) {
    std::vector<TransientSegment> out;
    for (const auto& samples : lists) {
        TransientSegment s;
        s.samples = samples;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("moving variance of a constant sequence is zero") {
    const std::vector<double> x(50, 3.25);
    for (std::size_t w : {1u, 5u, 50u}) {
        const auto mv = moving_variance(x, w);
        REQUIRE(mv.size() == x.size() - w + 1);
        for (double v : mv) REQUIRE(v == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("moving variance matches the hand-computed step case") {
    const std::vector<double> x = {0.0, 0.0, 2.0, 2.0};
    const auto mv = moving_variance(x, 2);
    REQUIRE(mv.size() == 3);
    REQUIRE(mv[0] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(mv[1] == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(mv[2] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("full-length window equals the population variance") {
    rng::Xoshiro256pp gen(9);
    std::vector<double> x(37);
    for (double& v : x) v = gen.uniform(-2.0, 5.0);
    const auto mv = moving_variance(x, x.size());
    REQUIRE(mv.size() == 1);
    REQUIRE(mv[0] == Catch::Approx(oracle_variance(x, 0, x.size())).epsilon(1e-12));
}

TEST_CASE("moving variance is invariant under adding a constant") {
    rng::Xoshiro256pp gen(13);
    std::vector<double> x(200), shifted(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = gen.gaussian();
        shifted[i] = x[i] + 17.5;
    }
    const auto a = moving_variance(x, 16);
    const auto b = moving_variance(shifted, 16);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i] >= 0.0);
        REQUIRE(a[i] == Catch::Approx(b[i]).margin(1e-9));
    }
}

TEST_CASE("moving variance rejects out-of-range windows") {
    const std::vector<double> x(10, 1.0);
    REQUIRE_THROWS_AS(moving_variance(x, 0), Error);
    REQUIRE_THROWS_AS(moving_variance(x, 11), Error);
}

TEST_CASE("detect_transient finds an amplitude step near its onset") {
    BurstRecord b;
    b.signal.samples.assign(2000, cplx(0.0, 0.0));
    for (std::size_t i = 500; i < 2000; ++i) b.signal.samples[i] = cplx(1.0, 0.0);

    const TransientSegment seg = detect_transient(b, 32, 0.5, 1024);
    // Brute-force scan oracle: first window touching the step already carries
    // half the peak variance, so the onset lands in [469, 500].
    REQUIRE(seg.start_index >= 469);
    REQUIRE(seg.start_index <= 500);
    REQUIRE_FALSE(seg.degenerate);
    REQUIRE(seg.pad_count == 0);
    REQUIRE(seg.samples.size() == 1024);
}

TEST_CASE("transient at sample zero is found at zero") {
    BurstRecord b;
    b.signal.samples.assign(600, cplx(0.0, 0.0));
    // Rapid rise right at the start, then settle.
    for (std::size_t i = 0; i < 600; ++i) {
        const double t = static_cast<double>(i);
        b.signal.samples[i] = cplx(1.0 - std::exp(-t / 4.0), 0.0);
    }
    const TransientSegment seg = detect_transient(b, 16, 0.4, 256);
    REQUIRE(seg.start_index == 0);
}

TEST_CASE("constant envelope reports the degenerate flag") {
    BurstRecord b;
    b.signal.samples.assign(512, cplx(0.7, 0.7));
    const TransientSegment seg = detect_transient(b, 32, 0.2, 256);
    REQUIRE(seg.degenerate);
    REQUIRE(seg.max_variance == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("all-zero burst raises degenerate-signal") {
    BurstRecord b;
    b.signal.samples.assign(512, cplx(0.0, 0.0));
    try {
        detect_transient(b, 32, 0.2, 256);
        FAIL("expected degenerate-signal error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == "degenerate-signal");
    }
}

TEST_CASE("detection is scale invariant") {
    const DeviceProfile p = default_fleet()[2];
    BurstRecord b = synthesize_emission(p, 2e-4, 77);
    const TransientSegment ref = detect_transient(b, 32, 0.2, 1024);
    for (cplx& z : b.signal.samples) z *= 123.0;
    const TransientSegment scaled = detect_transient(b, 32, 0.2, 1024);
    REQUIRE(ref.start_index == scaled.start_index);
}

TEST_CASE("tail padding is recorded") {
    BurstRecord b;
    b.signal.samples.assign(300, cplx(0.0, 0.0));
    for (std::size_t i = 250; i < 300; ++i) b.signal.samples[i] = cplx(1.0, 0.0);
    const TransientSegment seg = detect_transient(b, 8, 0.5, 128);
    REQUIRE(seg.start_index > 200);
    REQUIRE(seg.pad_count == seg.start_index + 128 - 300);
    for (std::size_t i = 128 - seg.pad_count; i < 128; ++i)
        REQUIRE(seg.samples[i] == cplx(0.0, 0.0));
}

TEST_CASE("aligning a segment against itself keeps it unchanged") {
    rng::Xoshiro256pp gen(21);
    std::vector<cplx> a(128);
    for (cplx& z : a) z = cplx(gen.gaussian(), gen.gaussian());
    auto segs = make_segments({a, a});
    const auto aligned = align_by_xcorr(segs, 0, 16);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(aligned[0].samples[i] == a[i]);
        REQUIRE(aligned[1].samples[i] == a[i]);
    }
}

TEST_CASE("a 7-sample delay is recovered and undone") {
    rng::Xoshiro256pp gen(33);
    const std::size_t len = 256;
    std::vector<cplx> ref(len);
    for (cplx& z : ref) z = cplx(gen.gaussian(), gen.gaussian());

    // Brute-force check over all lags confirms the peak is at -7; the aligned
    // output must equal the reference again.
    std::vector<cplx> delayed(len);
    for (std::size_t n = 0; n < len; ++n) delayed[n] = ref[(n + len - 7) % len];

    auto segs = make_segments({ref, delayed});
    const auto aligned = align_by_xcorr(segs, 0, 16);
    for (std::size_t n = 0; n < len; ++n)
        REQUIRE(std::abs(aligned[1].samples[n] - ref[n]) < 1e-12);
}

TEST_CASE("alignment conserves segment energy") {
    rng::Xoshiro256pp gen(55);
    const std::size_t len = 200;
    std::vector<cplx> ref(len), other(len);
    for (cplx& z : ref) z = cplx(gen.gaussian(), gen.gaussian());
    for (std::size_t n = 0; n < len; ++n) other[n] = ref[(n + 13) % len] + cplx(0.01 * gen.gaussian(), 0.0);

    auto segs = make_segments({ref, other});
    double before = 0.0;
    for (const cplx& z : other) before += std::norm(z);
    const auto aligned = align_by_xcorr(segs, 0, 32);
    double after = 0.0;
    for (const cplx& z : aligned[1].samples) after += std::norm(z);
    REQUIRE(after == Catch::Approx(before).epsilon(1e-12));
}

TEST_CASE("empty segment list is rejected") {
    std::vector<TransientSegment> none;
    REQUIRE_THROWS_AS(align_by_xcorr(none, 0, 4), Error);
}
