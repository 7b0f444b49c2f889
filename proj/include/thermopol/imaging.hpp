/**
 * @file imaging.hpp
 * @brief Forward model of a thermal camera behind a rotating linear polarizer.
 *
 *   I(psi, s) = c^T M_cam M_pol(psi) s + I_off(psi)
 *
 * with c = [c, 0, 0]^T, M_cam a partial linear polarizer describing the
 * microbolometer's polarization-dependent gain, and I_off(psi) a slowly
 * drifting offset (sensor thermal noise plus polarizer self-emission).
 */

#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "thermopol/image.hpp"
#include "thermopol/polarization.hpp"

namespace thermopol {

using MuellerMatrix = Eigen::Matrix3d;

inline Eigen::Vector3d to_vec(const StokesVector& s) { return {s.s0, s.s1, s.s2}; }
inline StokesVector to_stokes(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

inline StokesVector apply(const MuellerMatrix& m, const StokesVector& s) { return to_stokes(m * to_vec(s)); }

struct CameraModel {
    double c = 1.0;            // gain, DN per radiance unit
    double k = 1.0;            // polarimetric response factor, gain at psi = 90 deg
    double offset_base = 0.0;  // DN
    double offset_pol = 0.0;   // DN, amplitude of the psi-dependent offset
    double offset_phase = 0.0; // rad
    double noise_sigma = 0.0;  // DN
    bool quantize = false;     // round to integer DN and clip to the sensor range
    int bit_depth = 12;

    void validate() const;

    /// I_off(psi) = offset_base + offset_pol * cos(2 psi + offset_phase).
    double offset(double psi) const;
};

/// Per-pixel Stokes vectors with a validity mask.
struct StokesMap {
    Image s0, s1, s2;
    Mask mask;

    StokesMap() = default;
    StokesMap(int width, int height, bool mask_fill = true)
        : s0(width, height), s1(width, height), s2(width, height), mask(width, height, mask_fill) {}

    int width() const { return s0.width(); }
    int height() const { return s0.height(); }

    StokesVector at(int x, int y) const { return {s0.at(x, y), s1.at(x, y), s2.at(x, y)}; }
    void set(int x, int y, const StokesVector& s) {
        s0.at(x, y) = s.s0;
        s1.at(x, y) = s.s1;
        s2.at(x, y) = s.s2;
    }
};

/// Raw sensor frame in digital numbers at one polarizer angle.
struct RawImage {
    double psi = 0.0;
    int timestamp_index = 0;
    Image pixels;

    int width() const { return pixels.width(); }
    int height() const { return pixels.height(); }
};

/// Ideal linear polarizer with transmission axis at psi.
MuellerMatrix polarizer_mueller(double psi);

/// Partial linear polarizer model of the sensor. Throws for k outside (0, 1].
MuellerMatrix camera_mueller(double k);

/// c^T M_cam M_pol(psi): maps a scene Stokes vector to offset-free DN.
Eigen::RowVector3d response_row(double psi, const CameraModel& cam);

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Single raw pixel value. Deterministic for a given rng_seed.
double simulate_raw(const StokesVector& stokes, double psi, const CameraModel& cam, bool with_noise,
                    std::uint64_t rng_seed);

/// Full raw frame. Every pixel of the map is simulated regardless of its mask.
/// Noise for the frame is drawn from a single stream seeded by rng_seed.
RawImage simulate_raw_image(const StokesMap& stokes, double psi, const CameraModel& cam, bool with_noise,
                            std::uint64_t rng_seed, int timestamp_index = 0);

/// Radiance seen through an ideal polarizer at psi: (s0 + s1 cos 2psi + s2 sin 2psi) / 2.
Image polarizer_image(const StokesMap& stokes, double psi);

/// b - a, removing the offset shared by both captures.
/// Throws std::invalid_argument on dimension or polarizer-angle mismatch.
Image difference_image(const RawImage& b, const RawImage& a);

}  // namespace thermopol
