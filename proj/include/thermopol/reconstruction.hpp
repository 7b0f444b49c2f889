#pragma once

#include <Eigen/Core>
#include <span>
#include <stdexcept>
#include <vector>

#include "thermopol/image.hpp"
#include "thermopol/imaging.hpp"

namespace thermopol {

/// Thrown when the polarizer angles cannot determine a 3-component Stokes vector.
class RankDeficientError : public std::invalid_argument {
public:
    RankDeficientError(const std::string& what, std::vector<double> angles)
        : std::invalid_argument(what), angles_(std::move(angles)) {}
    const std::vector<double>& angles() const { return angles_; }

private:
    std::vector<double> angles_;
};

/// Scene-minus-reference-blackbody difference at one polarizer angle.
struct DifferenceFrame {
    double psi = 0.0;
    Image diff;
};

struct CaptureSession {
    std::vector<DifferenceFrame> diffs;
    double tau_ref = 0.0;  // kelvin
    CameraModel cam;
    Mask mask;

    std::vector<double> angles() const;
    /// Throws std::invalid_argument on shape mismatch or fewer than 3 frames.
    void validate() const;
};

/// Rows c^T M_cam M_pol(psi_j). Throws RankDeficientError when fewer than
/// 3 distinct angles remain after reduction mod pi.
Eigen::MatrixX3d design_matrix(std::span<const double> angles, const CameraModel& cam);

struct Reconstruction {
    StokesMap stokes;
    /// Condition number of K^T K.
    double condition_number = 0.0;
    bool ill_conditioned = false;
};

inline constexpr double kConditionWarning = 1e6;

/// Least-squares Stokes recovery s = (K^T K)^-1 K^T I + s_b(tau_ref) for every
/// pixel in the session mask. Pixels outside the mask stay zero.
Reconstruction reconstruct_stokes(const CaptureSession& session);

}  // namespace thermopol
