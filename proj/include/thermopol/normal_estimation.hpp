/**
 * @file normal_estimation.hpp
 * @brief Model-based surface normals from a reconstructed Stokes map.
 *
 * Zenith comes from inverting the zenith-to-DoLP curve on its rising branch
 * (below the peak). Azimuth comes from the AoLP up to a pi ambiguity, which is
 * resolved by assuming outward-pointing normals on the silhouette and
 * propagating inward while keeping the azimuth field smooth.
 */

#pragma once

#include <string>
#include <utility>

#include "thermopol/image.hpp"
#include "thermopol/imaging.hpp"
#include "thermopol/polarization.hpp"
#include "thermopol/simulator.hpp"

namespace thermopol {

enum class EmissionMode {
    /// Heated object, L_p > L_s: AoLP is the azimuth mod pi.
    EmissionDominant,
    /// Cooled object, L_p < L_s: AoLP is offset from the azimuth by pi/2.
    ReflectionDominant,
};

std::string to_string(EmissionMode m);
EmissionMode emission_mode_from_string(const std::string& s);

enum class NormalSpace { ViewVector, Camera };

std::string to_string(NormalSpace s);

struct NormalMap {
    Image normals;  // 3 channels
    Mask mask;
    NormalSpace space = NormalSpace::Camera;

    int width() const { return normals.width(); }
    int height() const { return normals.height(); }
};

struct EstimationParams {
    DolpCurve curve;
    EmissionMode mode = EmissionMode::EmissionDominant;
    /// DoLP below this carries no usable azimuth.
    double dolp_floor = 0.005;
    /// Base weight of every informative resolved neighbor, added to its DoLP excess over the floor.
    double smoothness_weight = 1e-3;

    void validate() const;
};

/// Zenith on the rising branch [0, theta_peak] whose DoLP equals rho.
/// rho above the peak clamps to theta_peak. Throws on a degenerate curve.
double invert_zenith(double rho, const DolpCurve& curve);

/// The two azimuths compatible with an AoLP, each in [0, 2pi).
std::pair<double, double> azimuth_candidates(double aolp, EmissionMode mode);

/// Direction (radians, counterclockwise from +x, y up) pointing out of the mask
/// at pixel (x, y), from the non-mask pixels in its 5x5 neighborhood. Falls back
/// to the direction away from the mask centroid, then to 0.
double silhouette_outward(const Mask& mask, int x, int y);

struct AzimuthField {
    Image azimuth;        // [0, 2pi), valid on mask
    Mask low_confidence;  // DoLP below the floor; azimuth inherited from neighbors
};

/// Resolves the pi ambiguity pixel by pixel in breadth-first order from the
/// mask boundary. Throws std::invalid_argument for an empty mask.
AzimuthField resolve_azimuth(const Image& aolp, const Image& dolp, const Mask& mask, const EstimationParams& params);

struct NormalEstimate {
    NormalMap view;    // view-vector space
    NormalMap camera;  // camera space
    Image confidence;  // 1 confident, 0 low-confidence
    Image dolp;
    Image aolp;
    Image zenith;
    Image azimuth;
};

/// Full model-based estimate. DoLP above 1 from noise is clipped here; the
/// Stokes map itself is not modified.
NormalEstimate estimate_normals(const StokesMap& stokes, const EstimationParams& params, const ProjectionModel& proj);

}  // namespace thermopol
