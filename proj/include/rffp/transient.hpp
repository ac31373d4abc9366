#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/signal.hpp"

// Turn-on transient location via moving variance of the amplitude envelope,
// and alignment of extracted segments via circular cross-correlation.

namespace rffp {

struct TransientSegment {
    std::vector<cplx> samples;
    std::size_t start_index = 0;  // offset into the source burst
    int device_id = 0;
    int source_burst = 0;
    std::size_t pad_count = 0;    // zero samples appended when the burst ended early
    double max_variance = 0.0;    // peak of the detection statistic
    bool degenerate = false;      // no variability found (constant envelope)
};

// Population variance of every length-window_len slice of x.
// Output length is len(x) - window_len + 1.
inline std::vector<double> moving_variance(const std::vector<double>& x,
                                           std::size_t window_len) {
    if (window_len < 1 || window_len > x.size())
        errors::parameter("moving_variance window_len out of range");
    const std::size_t count = x.size() - window_len + 1;
    std::vector<double> out(count);
    const double inv = 1.0 / static_cast<double>(window_len);
    for (std::size_t i = 0; i < count; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < window_len; ++j) mean += x[i + j];
        mean *= inv;
        double acc = 0.0;
        for (std::size_t j = 0; j < window_len; ++j) {
            const double d = x[i + j] - mean;
            acc += d * d;
        }
        out[i] = acc * inv;
    }
    return out;
}

inline std::vector<double> amplitude_envelope(const IQSequence& signal) {
    std::vector<double> amp(signal.samples.size());
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::abs(signal.samples[i]);
    return amp;
}

// Finds the transient onset: the first index where the moving variance of the
// amplitude envelope reaches threshold_ratio of its maximum. The returned
// segment holds segment_len samples from that index, zero-padded at the tail
// if the burst ends early (pad_count records how many).
//
// Detection is scale invariant: both the statistic and the threshold scale
// with the square of the amplitude.
inline TransientSegment detect_transient(const BurstRecord& burst, std::size_t var_window,
                                         double threshold_ratio, std::size_t segment_len) {
    const std::size_t n = burst.signal.samples.size();
    if (n == 0) errors::degenerate_signal("empty burst");
    if (segment_len == 0 || segment_len > n)
        errors::parameter("segment_len must be in [1, burst length]");
    if (!(threshold_ratio > 0.0 && threshold_ratio < 1.0))
        errors::parameter("threshold_ratio must be in (0, 1)");

    const std::vector<double> amp = amplitude_envelope(burst.signal);
    bool all_zero = true;
    for (double a : amp)
        if (a != 0.0) { all_zero = false; break; }
    if (all_zero) errors::degenerate_signal("all-zero burst");

    const std::vector<double> mv = moving_variance(amp, var_window);
    double peak = 0.0;
    for (double v : mv) peak = std::max(peak, v);

    TransientSegment seg;
    seg.device_id = burst.device_id;
    seg.source_burst = burst.burst_index;
    seg.max_variance = peak;

    // Constant envelope: no transient to find. Report the degenerate flag and
    // fall back to the start of the burst.
    const double mean_sq = mean_power(burst.signal);
    seg.degenerate = peak <= 1e-12 * mean_sq;

    std::size_t start = 0;
    if (!seg.degenerate) {
        const double threshold = threshold_ratio * peak;
        for (std::size_t i = 0; i < mv.size(); ++i) {
            if (mv[i] >= threshold) {
                start = i;
                break;
            }
        }
    }
    seg.start_index = start;
    seg.samples.assign(segment_len, cplx(0.0, 0.0));
    const std::size_t avail = std::min(segment_len, n - start);
    for (std::size_t i = 0; i < avail; ++i) seg.samples[i] = burst.signal.samples[start + i];
    seg.pad_count = segment_len - avail;
    return seg;
}

namespace detail {

// Circular shift: out[n] = in[(n - shift) mod L]. Positive shift delays.
inline std::vector<cplx> circular_shift(const std::vector<cplx>& in, long shift) {
    const long len = static_cast<long>(in.size());
    std::vector<cplx> out(in.size());
    for (long n = 0; n < len; ++n) {
        long src = (n - shift) % len;
        if (src < 0) src += len;
        out[static_cast<std::size_t>(n)] = in[static_cast<std::size_t>(src)];
    }
    return out;
}

}  // namespace detail

// Aligns every segment to the reference by circularly shifting it by the lag
// (|lag| <= max_lag) that maximizes the magnitude of the complex circular
// cross-correlation. Ties resolve toward the smallest |lag|, then the negative
// one. The reference itself is returned unchanged.
inline std::vector<TransientSegment> align_by_xcorr(const std::vector<TransientSegment>& segments,
                                                    std::size_t reference_index,
                                                    std::size_t max_lag) {
    if (segments.empty()) errors::parameter("align_by_xcorr needs at least one segment");
    if (reference_index >= segments.size()) errors::parameter("reference_index out of range");
    const std::size_t len = segments[reference_index].samples.size();
    for (const TransientSegment& s : segments)
        if (s.samples.size() != len) errors::parameter("segments must share one length");
    if (max_lag >= len) errors::parameter("max_lag must be smaller than the segment length");

    const std::vector<cplx>& ref = segments[reference_index].samples;
    std::vector<TransientSegment> out = segments;

    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (s == reference_index) continue;
        const std::vector<cplx>& seg = segments[s].samples;

        long best_lag = 0;
        double best_mag = -1.0;
        const long lag_bound = static_cast<long>(max_lag);
        for (long lag = -lag_bound; lag <= lag_bound; ++lag) {
            cplx corr(0.0, 0.0);
            for (std::size_t n = 0; n < len; ++n) {
                long src = (static_cast<long>(n) - lag) % static_cast<long>(len);
                if (src < 0) src += static_cast<long>(len);
                corr += seg[static_cast<std::size_t>(src)] * std::conj(ref[n]);
            }
            const double mag = std::abs(corr);
            const bool better =
                mag > best_mag ||
                (mag == best_mag &&
                 (std::labs(lag) < std::labs(best_lag) ||
                  (std::labs(lag) == std::labs(best_lag) && lag < best_lag)));
            if (better) {
                best_mag = mag;
                best_lag = lag;
            }
        }
        out[s].samples = detail::circular_shift(seg, best_lag);
    }
    return out;
}

}  // namespace rffp
