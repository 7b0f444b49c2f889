#include "thermopol/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace thermopol {

namespace {

constexpr double kAngleTolerance = 1e-12;

double apply_sensor(double value, const CameraModel& cam) {
    if (!cam.quantize) return value;
    const double max_dn = std::ldexp(1.0, cam.bit_depth) - 1.0;
    return std::clamp(std::round(value), 0.0, max_dn);
}

}  // namespace

void CameraModel::validate() const {
    if (!(c > 0.0)) throw std::domain_error("CameraModel: gain c must be > 0");
    if (!(k > 0.0 && k <= 1.0)) throw std::domain_error("CameraModel: response factor k must lie in (0, 1]");
    if (!(noise_sigma >= 0.0)) throw std::domain_error("CameraModel: noise_sigma must be >= 0");
    if (quantize && (bit_depth < 1 || bit_depth > 32)) throw std::domain_error("CameraModel: bad bit depth");
}

double CameraModel::offset(double psi) const { return offset_base + offset_pol * std::cos(2.0 * psi + offset_phase); }

MuellerMatrix polarizer_mueller(double psi) {
    const double c2 = std::cos(2.0 * psi);
    const double s2 = std::sin(2.0 * psi);
    MuellerMatrix m;
    m << 1.0, c2, s2,
         c2, c2 * c2, s2 * c2,
         s2, s2 * c2, s2 * s2;
    return 0.5 * m;
}

MuellerMatrix camera_mueller(double k) {
    if (!(k > 0.0 && k <= 1.0)) {
        throw std::domain_error("camera_mueller: k must lie in (0, 1], got " + std::to_string(k));
    }
    MuellerMatrix m;
    m << 1.0 + k, 1.0 - k, 0.0,
         1.0 - k, 1.0 + k, 0.0,
         0.0, 0.0, 2.0 * std::sqrt(k);
    return 0.5 * m;
}

Eigen::RowVector3d response_row(double psi, const CameraModel& cam) {
    const Eigen::RowVector3d gain(cam.c, 0.0, 0.0);
    return gain * camera_mueller(cam.k) * polarizer_mueller(psi);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double simulate_raw(const StokesVector& stokes, double psi, const CameraModel& cam, bool with_noise,
                    std::uint64_t rng_seed) {
    cam.validate();
    double value = response_row(psi, cam).dot(to_vec(stokes)) + cam.offset(psi);
    if (with_noise && cam.noise_sigma > 0.0) {
        std::mt19937_64 rng(rng_seed);
        std::normal_distribution<double> noise(0.0, cam.noise_sigma);
        value += noise(rng);
    }
    return apply_sensor(value, cam);
}

RawImage simulate_raw_image(const StokesMap& stokes, double psi, const CameraModel& cam, bool with_noise,
                            std::uint64_t rng_seed, int timestamp_index) {
    cam.validate();
    RawImage raw;
    raw.psi = psi;
    raw.timestamp_index = timestamp_index;
    raw.pixels = Image(stokes.width(), stokes.height());

    const Eigen::RowVector3d row = response_row(psi, cam);
    const double offset = cam.offset(psi);
    const bool noisy = with_noise && cam.noise_sigma > 0.0;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> noise(0.0, noisy ? cam.noise_sigma : 1.0);

    for (int y = 0; y < stokes.height(); ++y) {
        for (int x = 0; x < stokes.width(); ++x) {
            double v = row[0] * stokes.s0.at(x, y) + row[1] * stokes.s1.at(x, y) + row[2] * stokes.s2.at(x, y) + offset;
            if (noisy) v += noise(rng);
            raw.pixels.at(x, y) = apply_sensor(v, cam);
        }
    }
    return raw;
}

Image polarizer_image(const StokesMap& stokes, double psi) {
    const double c2 = std::cos(2.0 * psi);
    const double s2 = std::sin(2.0 * psi);
    Image out(stokes.width(), stokes.height());
    for (int y = 0; y < stokes.height(); ++y)
        for (int x = 0; x < stokes.width(); ++x)
            out.at(x, y) = 0.5 * (stokes.s0.at(x, y) + stokes.s1.at(x, y) * c2 + stokes.s2.at(x, y) * s2);
    return out;
}

Image difference_image(const RawImage& b, const RawImage& a) {
    if (!b.pixels.same_shape(a.pixels)) {
        throw std::invalid_argument("difference_image: shape mismatch " + b.pixels.shape_string() + " vs " +
                                    a.pixels.shape_string());
    }
    const double dpsi = std::abs(wrap_angle(b.psi - a.psi + kHalfPi, kPi) - kHalfPi);
    if (dpsi > kAngleTolerance) {
        throw std::invalid_argument("difference_image: polarizer angles differ (" + std::to_string(rad2deg(b.psi)) +
                                    " vs " + std::to_string(rad2deg(a.psi)) + " deg)");
    }
    Image out(b.width(), b.height());
    auto& o = out.data();
    const auto& bd = b.pixels.data();
    const auto& ad = a.pixels.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = bd[i] - ad[i];
    return out;
}

}  // namespace thermopol
