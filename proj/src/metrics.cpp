#include "thermopol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace thermopol {

namespace {

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

Image angular_error_map(const NormalMap& est, const NormalMap& gt, const Mask& mask) {
    if (est.space != gt.space) {
        throw std::invalid_argument("angular_error_map: normal spaces differ (" + to_string(est.space) + " vs " +
                                    to_string(gt.space) + ")");
    }
    if (est.width() != gt.width() || est.height() != gt.height() || mask.width() != est.width() ||
        mask.height() != est.height()) {
        throw std::invalid_argument("angular_error_map: shape mismatch, estimate " + dims(est.width(), est.height()) +
                                    ", ground truth " + dims(gt.width(), gt.height()) + ", mask " +
                                    dims(mask.width(), mask.height()));
    }
    if (est.normals.channels() != 3 || gt.normals.channels() != 3) {
        throw std::invalid_argument("angular_error_map: normal maps need 3 channels");
    }
    Image err(est.width(), est.height());
    for (int y = 0; y < est.height(); ++y) {
        for (int x = 0; x < est.width(); ++x) {
            if (!mask(x, y)) continue;
            double dot = 0.0;
            for (int c = 0; c < 3; ++c) dot += est.normals.at(x, y, c) * gt.normals.at(x, y, c);
            err.at(x, y) = rad2deg(std::acos(std::clamp(dot, -1.0, 1.0)));
        }
    }
    return err;
}

ErrorReport summarize(const Image& errors, const Mask& mask) {
    if (!mask.same_shape(errors)) throw std::invalid_argument("summarize: mask and error map shapes differ");
    std::vector<double> v;
    v.reserve(mask.count());
    for (int y = 0; y < errors.height(); ++y)
        for (int x = 0; x < errors.width(); ++x)
            if (mask(x, y)) v.push_back(errors.at(x, y));
    if (v.empty()) throw std::invalid_argument("summarize: empty mask");

    ErrorReport r;
    r.n_pixels = v.size();
    double sum = 0.0, sum_sq = 0.0;
    std::size_t below_11 = 0, below_22 = 0, below_30 = 0;
    for (double e : v) {
        sum += e;
        sum_sq += e * e;
        below_11 += e < 11.25;
        below_22 += e < 22.5;
        below_30 += e < 30.0;
    }
    const double n = static_cast<double>(v.size());
    r.mean = sum / n;
    r.rmse = std::sqrt(sum_sq / n);
    r.accuracy_11_25 = 100.0 * below_11 / n;
    r.accuracy_22_5 = 100.0 * below_22 / n;
    r.accuracy_30 = 100.0 * below_30 / n;

    const auto mid = v.begin() + (v.size() - 1) / 2;
    std::nth_element(v.begin(), mid, v.end());
    r.median = *mid;
    return r;
}

}  // namespace thermopol
