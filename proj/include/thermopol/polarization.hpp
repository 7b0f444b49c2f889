/**
 * @file polarization.hpp
 * @brief Polarization of the combined emitted and reflected LWIR ray.
 *
 * A smooth dielectric surface at temperature tau_obj inside an environment at
 * tau_env. The ray leaving the surface toward the camera is the sum of the
 * internally generated (emitted) radiance transmitted through the interface
 * and the environment radiance reflected off it. Both sources are unpolarized;
 * the Fresnel coefficients make the sum partially linearly polarized.
 *
 * All angles are radians.
 */

#pragma once

#include <numbers>
#include <vector>

namespace thermopol {

/// SI Stefan-Boltzmann constant [W m^-2 K^-4].
inline constexpr double kStefanBoltzmann = 5.670374419e-8;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline constexpr double celsius_to_kelvin(double c) { return c + 273.15; }

/// Refractive index and the two temperatures that set emitted and reflected radiance.
struct MaterialEnv {
    double eta = 1.8;
    double tau_obj = 323.15;  // kelvin
    double tau_env = 296.15;  // kelvin
    /// Graybody multiplier on the emitted radiance (1 = ideal internal source).
    double emissivity = 1.0;

    /// Throws std::domain_error when an invariant is violated.
    void validate() const;

    /// Emitted radiance L_E.
    double emitted_radiance() const;
    /// Reflected (environment) radiance L_R.
    double reflected_radiance() const;
    /// L_R / L_E.
    double ratio() const;

    /// Material whose object temperature is chosen so that L_R / L_E == ratio.
    static MaterialEnv from_ratio(double eta, double tau_env, double ratio);
};

struct FresnelPair {
    double p = 0.0;
    double s = 0.0;
};

struct RadiancePair {
    double p = 0.0;
    double s = 0.0;
};

struct PolarizationState {
    double dolp = 0.0;
    /// In [0, pi); only meaningful when valid.
    double aolp = 0.0;
    bool valid = false;
};

/// Linear Stokes vector [s0, s1, s2]. Circular polarization is not modeled.
struct StokesVector {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;

    double linear_magnitude() const;
    /// sqrt(s1^2 + s2^2) <= s0 * (1 + slack)
    bool realizable(double slack = 0.0) const;

    friend bool operator==(const StokesVector&, const StokesVector&) = default;
};

StokesVector operator+(const StokesVector& a, const StokesVector& b);
StokesVector operator-(const StokesVector& a, const StokesVector& b);
StokesVector operator*(double k, const StokesVector& a);

/// Polarization state carried by a Stokes vector. Undefined AoLP (valid=false)
/// when the linear part is exactly zero. Throws std::domain_error when s0 <= 0.
PolarizationState polarization_state(const StokesVector& s);

/// Internal refraction angle for an emergent angle theta (Snell's law).
double snell_refract(double theta, double eta);

/// Reflectances R_p, R_s for the emergent angle theta.
FresnelPair fresnel_reflectance(double theta, double eta);

/// Transmittances T_p = 1 - R_p, T_s = 1 - R_s.
FresnelPair fresnel_transmittance(double theta, double eta);

/// sigma * tau^4.
double blackbody_radiance(double tau);

/// p/s radiance of the combined emitted + reflected ray at zenith theta.
RadiancePair combined_radiance(double theta, const MaterialEnv& env);

/// DoLP and AoLP for the p/s radiance pair of a surface patch with azimuth phi.
/// Throws std::domain_error when the total radiance is zero.
PolarizationState polarization_state(const RadiancePair& rad, double phi);

/// Stokes vector of the ray leaving a surface patch with normal zenith theta
/// and azimuth phi. Reference axis is the x-axis of the frame phi is measured in.
StokesVector surface_stokes(double theta, double phi, const MaterialEnv& env);

/// DoLP of the combined ray as a function of zenith only; scale-free in the
/// radiances, so it depends on eta and L_R / L_E alone.
double dolp_at(double theta, double eta, double ratio);

/// Sampled zenith-to-DoLP relationship and its peak.
struct DolpCurve {
    double eta = 0.0;
    double ratio = 0.0;
    std::vector<double> theta;  // uniform on [0, pi/2)
    std::vector<double> rho;
    double theta_peak = 0.0;
    double rho_peak = 0.0;
    /// ratio == 1: emitted and reflected polarization cancel, no information.
    bool degenerate = false;

    /// Closed-form DoLP for this curve's parameters.
    double evaluate(double theta) const { return dolp_at(theta, eta, ratio); }
};

inline constexpr int kDefaultCurveSamples = 4096;

/// Throws std::domain_error for eta <= 1, ratio < 0 or n_samples < 256.
DolpCurve build_dolp_curve(double eta, double ratio, int n_samples = kDefaultCurveSamples);

/// Wraps an angle into [0, period).
double wrap_angle(double a, double period);

}  // namespace thermopol
