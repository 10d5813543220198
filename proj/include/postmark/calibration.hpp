#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "postmark/errors.hpp"

namespace postmark {

inline constexpr std::size_t kMinCalibrationSamples = 100;

// Threshold for a target false-positive rate over null (unwatermarked)
// scores. With m = floor(n x fpr), the (m+1)-th largest null score must fall
// below the threshold; since detection compares with inclusive >=, the
// threshold is placed strictly between order statistics (midpoint to the
// next distinct value above, or halfway to value+1 when none exists), so the
// achieved FPR on the calibration set is <= target by construction.
inline double calibrate_threshold(std::vector<double> null_scores, double target_fpr) {
    const std::size_t n = null_scores.size();
    if (!(target_fpr > 0.0 && target_fpr <= 0.5)) {
        throw InputError("target FPR must be in (0, 0.5]");
    }
    if (n < kMinCalibrationSamples) {
        throw InputError("calibration needs at least " + std::to_string(kMinCalibrationSamples) +
                         " null scores, got " + std::to_string(n));
    }
    if (static_cast<double>(n) * target_fpr < 1.0) {
        throw InputError("too few samples to resolve target FPR (need n >= 1/fpr)");
    }
    const std::size_t allowed =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * target_fpr + 1e-9));

    std::sort(null_scores.begin(), null_scores.end(), std::greater<>());
    const double boundary = null_scores[allowed];  // must end up below the threshold

    // Next distinct value above the boundary, if any.
    double above = boundary + 1.0;
    for (std::size_t i = allowed; i-- > 0;) {
        if (null_scores[i] > boundary) {
            above = null_scores[i];
            break;
        }
    }
    return (boundary + above) / 2.0;
}

struct TprResult {
    double tpr = 0.0;
    double threshold = 0.0;
    double achieved_fpr = 0.0;
};

inline double fraction_at_or_above(const std::vector<double>& scores, double threshold) {
    if (scores.empty()) return 0.0;
    std::size_t n = 0;
    for (double s : scores) {
        if (s >= threshold) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(scores.size());
}

// True-positive rate at a threshold calibrated on the negative scores.
inline TprResult tpr_at_fpr(const std::vector<double>& positive_scores,
                            const std::vector<double>& negative_scores, double target_fpr) {
    TprResult result;
    result.threshold = calibrate_threshold(negative_scores, target_fpr);
    result.tpr = fraction_at_or_above(positive_scores, result.threshold);
    result.achieved_fpr = fraction_at_or_above(negative_scores, result.threshold);
    return result;
}

}  // namespace postmark
