#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rffp/features.hpp"
#include "rffp/rng.hpp"
#include "rffp/signal.hpp"
#include "rffp/tfr.hpp"

using namespace rffp;

namespace {

TimeFrequencyGrid grid_from_magnitudes(const std::vector<double>& mag, std::size_t frames,
                                       std::size_t bins) {
    TimeFrequencyGrid g;
    g.frames = frames;
    g.bins = bins;
    g.values.resize(frames * bins);
    for (std::size_t i = 0; i < mag.size(); ++i) g.values[i] = cplx(mag[i], 0.0);
    g.selected_alpha.assign(frames * bins, 0.0);
    g.frame_times_s.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) g.frame_times_s[f] = static_cast<double>(f);
    g.bin_freqs_hz.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) g.bin_freqs_hz[k] = static_cast<double>(k);
    return g;
}

// Independent bilinear resampler (align-corners), plus min-max normalization.
std::vector<double> oracle_features(const std::vector<double>& mag, std::size_t rows_in,
                                    std::size_t cols_in, std::size_t rows_out,
                                    std::size_t cols_out) {
    std::vector<double> out(rows_out * cols_out);
    for (std::size_t r = 0; r < rows_out; ++r) {
        const double y = rows_out > 1 ? static_cast<double>(r) * (rows_in - 1.0) / (rows_out - 1.0)
                                      : (rows_in - 1.0) / 2.0;
        for (std::size_t c = 0; c < cols_out; ++c) {
            const double x = cols_out > 1 ? static_cast<double>(c) * (cols_in - 1.0) / (cols_out - 1.0)
                                          : (cols_in - 1.0) / 2.0;
            const auto y0 = static_cast<std::size_t>(std::floor(y));
            const auto x0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t y1 = std::min(y0 + 1, rows_in - 1);
            const std::size_t x1 = std::min(x0 + 1, cols_in - 1);
            const double fy = y - static_cast<double>(y0);
            const double fx = x - static_cast<double>(x0);
            out[r * cols_out + c] =
                mag[y0 * cols_in + x0] * (1 - fy) * (1 - fx) + mag[y0 * cols_in + x1] * (1 - fy) * fx +
                mag[y1 * cols_in + x0] * fy * (1 - fx) + mag[y1 * cols_in + x1] * fy * fx;
        }
    }
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    const double span = *hi - *lo;
    for (double& v : out) v = span > 0.0 ? (v - *lo) / span : 0.0;
    return out;
}

}  // namespace

TEST_CASE("exact 30x30 grid maps through untouched up to normalization") {
    rng::Xoshiro256pp gen(3);
    std::vector<double> mag(900);
    for (double& m : mag) m = gen.uniform(0.0, 10.0);
    const TimeFrequencyGrid g = grid_from_magnitudes(mag, 30, 30);
    const FeatureVector fv = tf_to_features(g);

    const auto [lo, hi] = std::minmax_element(mag.begin(), mag.end());
    for (std::size_t i = 0; i < 900; ++i)
        REQUIRE(fv.values[i] == Catch::Approx((mag[i] - *lo) / (*hi - *lo)).margin(1e-12));
}

TEST_CASE("constant grid yields the all-zero feature vector") {
    const TimeFrequencyGrid g = grid_from_magnitudes(std::vector<double>(40 * 50, 3.0), 40, 50);
    const FeatureVector fv = tf_to_features(g);
    REQUIRE(fv.values.size() == kFeatureLength);
    for (double v : fv.values) REQUIRE(v == 0.0);
}

TEST_CASE("hot cell in a 60x60 grid lands at flattened index 160") {
    std::vector<double> mag(3600, 0.0);
    mag[10 * 60 + 20] = 1.0;
    const TimeFrequencyGrid g = grid_from_magnitudes(mag, 60, 60);
    const FeatureVector fv = tf_to_features(g);
    const auto argmax =
        static_cast<std::size_t>(std::max_element(fv.values.begin(), fv.values.end()) -
                                 fv.values.begin());
    REQUIRE(argmax == 160);

    // Full agreement with the independent resampling oracle.
    const auto expect = oracle_features(mag, 60, 60, 30, 30);
    for (std::size_t i = 0; i < 900; ++i)
        REQUIRE(fv.values[i] == Catch::Approx(expect[i]).margin(1e-12));
}

TEST_CASE("features stay in [0,1] and are scale invariant") {
    rng::Xoshiro256pp gen(11);
    std::vector<double> mag(25 * 70);
    for (double& m : mag) m = gen.uniform(0.0, 4.0);
    const FeatureVector a = tf_to_features(grid_from_magnitudes(mag, 25, 70));
    for (double& m : mag) m *= 9.0;
    const FeatureVector b = tf_to_features(grid_from_magnitudes(mag, 25, 70));
    for (std::size_t i = 0; i < 900; ++i) {
        REQUIRE(a.values[i] >= 0.0);
        REQUIRE(a.values[i] <= 1.0);
        REQUIRE(a.values[i] == Catch::Approx(b.values[i]).margin(1e-12));
    }
}

TEST_CASE("feature length must match rows*cols") {
    const TimeFrequencyGrid g = grid_from_magnitudes(std::vector<double>(100, 1.0), 10, 10);
    REQUIRE_THROWS_AS(tf_to_features(g, 10, 10), Error);
}

TEST_CASE("dataset assembly keeps order and labels") {
    ChirpletParams params;
    params.n_chirplets = 3;
    params.window = hann_window(32);
    params.hop = 16;
    params.fft_bins = 32;

    std::vector<TransientSegment> segs;
    rng::Xoshiro256pp gen(8);
    for (int d : {4, 0, 7}) {
        TransientSegment s;
        s.device_id = d;
        s.samples.resize(128);
        for (cplx& z : s.samples) z = cplx(gen.gaussian(), gen.gaussian());
        segs.push_back(std::move(s));
    }
    const LabeledDataset ds = build_dataset(segs, params);
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.labels == std::vector<int>{4, 0, 7});
    REQUIRE(ds.class_names.size() == 9);
    for (const auto& row : ds.features) {
        REQUIRE(row.size() == kFeatureLength);
        for (double v : row) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

TEST_CASE("single segment gives a 1x900 dataset") {
    ChirpletParams params;
    params.n_chirplets = 1;
    params.window = hann_window(16);
    params.hop = 8;
    params.fft_bins = 16;
    TransientSegment s;
    s.device_id = 2;
    s.samples.assign(64, cplx(1.0, 0.5));
    s.samples[10] = cplx(3.0, 0.0);
    const LabeledDataset ds = build_dataset({s}, params);
    REQUIRE(ds.size() == 1);
    REQUIRE(ds.labels[0] == 2);
    REQUIRE(ds.features[0].size() == 900);
}

TEST_CASE("empty input and bad labels are rejected") {
    ChirpletParams params;
    params.window = hann_window(16);
    params.fft_bins = 16;
    REQUIRE_THROWS_AS(build_dataset({}, params), Error);

    TransientSegment s;
    s.device_id = 9;
    s.samples.assign(64, cplx(1.0, 0.0));
    try {
        build_dataset({s}, params);
        FAIL("expected label error");
    } catch (const Error& e) {
        REQUIRE(e.kind() == "label");
    }
}

TEST_CASE("build_dataset is deterministic") {
    ChirpletParams params;
    params.n_chirplets = 3;
    params.window = hann_window(16);
    params.hop = 8;
    params.fft_bins = 16;
    TransientSegment s;
    s.device_id = 1;
    s.samples.resize(96);
    rng::Xoshiro256pp gen(31);
    for (cplx& z : s.samples) z = cplx(gen.gaussian(), gen.gaussian());
    const LabeledDataset a = build_dataset({s, s}, params);
    const LabeledDataset b = build_dataset({s, s}, params);
    REQUIRE(a.features == b.features);
    REQUIRE(a.features[0] == a.features[1]);
}
