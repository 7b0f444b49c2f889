#pragma once

#include "thermopol/image.hpp"
#include "thermopol/normal_estimation.hpp"

namespace thermopol {

/// Angular error statistics over a set of pixels, in degrees and percent.
struct ErrorReport {
    double mean = 0.0;
    double median = 0.0;
    double rmse = 0.0;
    double accuracy_11_25 = 0.0;
    double accuracy_22_5 = 0.0;
    double accuracy_30 = 0.0;
    std::size_t n_pixels = 0;
};

/// acos(clamp(est . gt, -1, 1)) in degrees; 0 outside the mask.
/// Throws std::invalid_argument on space-tag or shape mismatch.
Image angular_error_map(const NormalMap& est, const NormalMap& gt, const Mask& mask);

/// Statistics over masked pixels. The median of an even-sized sample is the
/// lower middle order statistic. Throws std::invalid_argument on an empty mask.
ErrorReport summarize(const Image& errors, const Mask& mask);

}  // namespace thermopol
