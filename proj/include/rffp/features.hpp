#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/tfr.hpp"
#include "rffp/transient.hpp"

// Conversion of time-frequency grids into fixed-length feature vectors and
// assembly of the labeled dataset.

namespace rffp {

inline constexpr std::size_t kFeatureLength = 900;
inline constexpr int kNumClasses = 9;

struct FeatureVector {
    std::vector<double> values;  // kFeatureLength reals in [0, 1]
    int label = -1;              // device id, -1 while unlabeled
};

struct LabeledDataset {
    std::vector<std::vector<double>> features;  // N x kFeatureLength
    std::vector<int> labels;                    // N device ids
    std::vector<std::string> class_names;       // kNumClasses entries

    std::size_t size() const { return features.size(); }
};

inline std::vector<std::string> default_class_names() {
    std::vector<std::string> names;
    for (int d = 0; d < kNumClasses; ++d) names.push_back("device-" + std::to_string(d));
    return names;
}

namespace detail {

// Bilinear resample of a row-major matrix to rows_out x cols_out using the
// align-corners convention, so equal sizes reproduce the input exactly.
inline std::vector<double> bilinear_resample(const std::vector<double>& in, std::size_t rows_in,
                                             std::size_t cols_in, std::size_t rows_out,
                                             std::size_t cols_out) {
    std::vector<double> out(rows_out * cols_out);
    auto src_coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        if (n_out <= 1) return (static_cast<double>(n_in) - 1.0) / 2.0;
        return static_cast<double>(i) * (static_cast<double>(n_in) - 1.0) /
               (static_cast<double>(n_out) - 1.0);
    };
    for (std::size_t r = 0; r < rows_out; ++r) {
        const double y = src_coord(r, rows_out, rows_in);
        const std::size_t y0 = static_cast<std::size_t>(std::floor(y));
        const std::size_t y1 = std::min(y0 + 1, rows_in - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t c = 0; c < cols_out; ++c) {
            const double x = src_coord(c, cols_out, cols_in);
            const std::size_t x0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t x1 = std::min(x0 + 1, cols_in - 1);
            const double fx = x - static_cast<double>(x0);
            const double top = in[y0 * cols_in + x0] * (1.0 - fx) + in[y0 * cols_in + x1] * fx;
            const double bot = in[y1 * cols_in + x0] * (1.0 - fx) + in[y1 * cols_in + x1] * fx;
            out[r * cols_out + c] = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

}  // namespace detail

// Resamples the magnitude grid to rows x cols, flattens row-major, and applies
// per-sample min-max normalization into [0, 1]. A constant grid maps to the
// all-zero vector.
inline FeatureVector tf_to_features(const TimeFrequencyGrid& grid, std::size_t rows = 30,
                                    std::size_t cols = 30) {
    if (grid.frames == 0 || grid.bins == 0) errors::parameter("empty time-frequency grid");
    if (rows * cols != kFeatureLength)
        errors::parameter("rows * cols must equal the configured feature length");

    std::vector<double> mag(grid.values.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(grid.values[i]);

    FeatureVector fv;
    fv.values = detail::bilinear_resample(mag, grid.frames, grid.bins, rows, cols);

    double lo = fv.values[0], hi = fv.values[0];
    for (double v : fv.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) {
        std::fill(fv.values.begin(), fv.values.end(), 0.0);
    } else {
        for (double& v : fv.values) v = (v - lo) / span;
    }
    return fv;
}

// Extracts one feature row per transient segment, preserving input order.
// Labels are the plain integer device ids (no one-hot encoding).
inline LabeledDataset build_dataset(const std::vector<TransientSegment>& segments,
                                    const ChirpletParams& params, std::size_t rows = 30,
                                    std::size_t cols = 30) {
    if (segments.empty()) errors::parameter("no segments to featurize");
    LabeledDataset ds;
    ds.class_names = default_class_names();
    ds.features.reserve(segments.size());
    ds.labels.reserve(segments.size());
    for (const TransientSegment& seg : segments) {
        if (seg.device_id < 0 || seg.device_id >= kNumClasses)
            errors::label("device_id outside [0, 8]");
        IQSequence s;
        s.samples = seg.samples;
        s.sample_rate_hz = kDefaultSampleRateHz;
        const TimeFrequencyGrid grid = glct(s, params);
        FeatureVector fv = tf_to_features(grid, rows, cols);
        ds.features.push_back(std::move(fv.values));
        ds.labels.push_back(seg.device_id);
    }
    return ds;
}

}  // namespace rffp
