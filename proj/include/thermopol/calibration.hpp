/**
 * @file calibration.hpp
 * @brief Blackbody calibration of the camera gain c and polarimetric response k.
 *
 * Every measurement is a difference image between two targets captured at the
 * same polarizer angle, so the offset I_off(psi) drops out and
 *
 *   mean(I_diff) = c/4 * [(1 + k) + (1 - k) cos 2psi] * u,
 *   u = ds0 + ds1 cos 2psi + ds2 sin 2psi,
 *
 * where ds is the known Stokes difference between the two targets. The bracket
 * is twice the per-angle gain factor m(psi), which is 1 at psi = 0 and k at
 * psi = 90 deg.
 */

#pragma once

#include <string>
#include <vector>

#include "thermopol/image.hpp"
#include "thermopol/imaging.hpp"

namespace thermopol {

/// Difference image of target beta minus target alpha at polarizer angle psi.
/// Blackbody targets are unpolarized (source_dolp = 0). A polarized reference
/// source sets source_dolp / source_aolp on the beta - alpha difference.
struct CalibrationShot {
    double psi = 0.0;
    double tau_alpha = 0.0;
    double tau_beta = 0.0;
    Image diff;
    double source_dolp = 0.0;
    double source_aolp = 0.0;

    /// Known Stokes difference s_beta - s_alpha.
    StokesVector delta_stokes() const;
    bool polarized() const { return source_dolp > 0.0; }
};

enum class CalibrationMethod { Composite, PolarizedSource };

std::string to_string(CalibrationMethod m);
CalibrationMethod calibration_method_from_string(const std::string& s);

/// [sigma tau^4, 0, 0]
StokesVector blackbody_stokes(double tau);

struct GainFit {
    /// Composite gain g = c (1 + k) / 4, the psi-averaged response to unpolarized input.
    double composite_gain = 0.0;
    double r2 = 0.0;
    int n_pairs = 0;
};

/// c from the composite gain once k is known.
inline double gain_from_composite(double composite_gain, double k) { return 4.0 * composite_gain / (1.0 + k); }

/// Fits mean(I_diff) against the blackbody radiance difference. Shots of one
/// temperature pair are averaged over their polarizer angles first, which
/// cancels the cos 2psi term when the angles are uniformly spaced on [0, pi).
/// Throws std::invalid_argument with fewer than 2 distinct temperature pairs
/// or when every radiance difference is zero.
GainFit calibrate_gain(const std::vector<CalibrationShot>& shots);

struct AngleGain {
    double psi = 0.0;
    double m = 0.0;  // gain factor relative to psi = 0
};

struct ResponseFit {
    double c = 0.0;
    double k = 0.0;
    double r2 = 0.0;
    int iterations = 0;
    bool converged = false;
    /// k was clipped into (0, 1].
    bool k_clamped = false;
    std::vector<AngleGain> gain_factors;
};

struct ResponseOptions {
    int max_iterations = 100;
    double tolerance = 1e-9;
};

/// Closed-form least squares for (c, k). The model is linear in
/// a = c(1+k)/4 and b = c(1-k)/4, so this is a two-parameter linear fit.
ResponseFit solve_response_linear(const std::vector<CalibrationShot>& shots);

/// Per-angle gains m(psi) are fitted first and give an initial (c, k); the pair
/// is then refined jointly on all shots by alternating least squares.
/// Throws std::invalid_argument when fewer than 3 distinct angles mod pi are present.
ResponseFit calibrate_response(const std::vector<CalibrationShot>& shots, const ResponseOptions& options = {});

struct CalibrationResult {
    double c = 1.0;
    double k = 1.0;
    double r2 = 0.0;
    CalibrationMethod method = CalibrationMethod::Composite;
};

/// Full calibration: composite-gain fit (diagnostic R^2) followed by the joint (c, k) fit.
CalibrationResult calibrate(const std::vector<CalibrationShot>& shots);

/// Noiseless or noisy synthetic shot of a uniform target pair seen through the camera model.
CalibrationShot simulate_calibration_shot(double psi, double tau_alpha, double tau_beta, const CameraModel& cam,
                                          int width, int height, bool with_noise, std::uint64_t seed,
                                          double source_dolp = 0.0, double source_aolp = 0.0);

}  // namespace thermopol
