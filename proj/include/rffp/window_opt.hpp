#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/transient.hpp"

// Analysis-window-size selection for the chirplet transform. The time-domain
// criterion: smooth each transient's amplitude with a moving average, slide a
// window of candidate size w across it, take the maximum standard deviation
// over positions, and average that maximum over all transients. The candidate
// with the largest score wins.

namespace rffp {

struct WindowScore {
    std::size_t window_size = 0;
    double score = 0.0;
};

// Equal-weight moving average; output length = len(x) - k + 1.
inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t k) {
    if (k < 1 || k > x.size()) errors::parameter("moving_average k out of range");
    const std::size_t count = x.size() - k + 1;
    std::vector<double> out(count);
    const double inv = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < count; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += x[i + j];
        out[i] = acc * inv;
    }
    return out;
}

// Standard deviation of each stride-spaced window of width w, with the
// population (1/N) denominator.
inline std::vector<double> windowed_std(const std::vector<double>& x, std::size_t w,
                                        std::size_t stride) {
    if (w < 2 || w > x.size()) errors::parameter("windowed_std w out of range");
    if (stride < 1) errors::parameter("stride must be >= 1");
    std::vector<double> out;
    const double inv = 1.0 / static_cast<double>(w);
    for (std::size_t i = 0; i + w <= x.size(); i += stride) {
        double mean = 0.0;
        for (std::size_t j = 0; j < w; ++j) mean += x[i + j];
        mean *= inv;
        double acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double d = x[i + j] - mean;
            acc += d * d;
        }
        out.push_back(std::sqrt(acc * inv));
    }
    return out;
}

inline std::size_t default_stride_for(std::size_t w) { return (w + 3) / 4; }

// Scores every candidate window size. score(w) = mean over transients of the
// max windowed_std of the smoothed amplitude envelope. stride == 0 picks the
// default ceil(w/4) per candidate.
inline std::vector<WindowScore> score_windows(const std::vector<TransientSegment>& transients,
                                              const std::vector<std::size_t>& candidate_ws,
                                              std::size_t smooth_k, std::size_t stride = 0) {
    if (transients.empty()) errors::parameter("no transients to score");
    if (candidate_ws.empty()) errors::parameter("no candidate window sizes");

    std::vector<std::vector<double>> smoothed;
    smoothed.reserve(transients.size());
    for (const TransientSegment& t : transients) {
        std::vector<double> amp(t.samples.size());
        for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::abs(t.samples[i]);
        smoothed.push_back(moving_average(amp, smooth_k));
    }

    std::vector<WindowScore> scores;
    scores.reserve(candidate_ws.size());
    for (std::size_t w : candidate_ws) {
        for (const auto& s : smoothed)
            if (w > s.size()) errors::parameter("candidate window exceeds smoothed transient length");
        const std::size_t step = stride == 0 ? default_stride_for(w) : stride;
        double acc = 0.0;
        for (const auto& s : smoothed) {
            double best = 0.0;
            for (double sd : windowed_std(s, w, step)) best = std::max(best, sd);
            acc += best;
        }
        scores.push_back({w, acc / static_cast<double>(transients.size())});
    }
    return scores;
}

// Returns the best-scoring candidate; ties go to the smallest window.
inline WindowScore optimize_window(const std::vector<TransientSegment>& transients,
                                   const std::vector<std::size_t>& candidate_ws,
                                   std::size_t smooth_k, std::size_t stride = 0) {
    const std::vector<WindowScore> scores = score_windows(transients, candidate_ws, smooth_k, stride);
    WindowScore best = scores.front();
    for (const WindowScore& s : scores) {
        if (s.score > best.score || (s.score == best.score && s.window_size < best.window_size))
            best = s;
    }
    return best;
}

}  // namespace rffp
