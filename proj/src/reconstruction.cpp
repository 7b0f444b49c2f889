#include "thermopol/reconstruction.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "thermopol/calibration.hpp"
#include "thermopol/parallel.hpp"

namespace thermopol {

namespace {

constexpr double kDistinctAngle = 1e-9;

std::string format_angles(std::span<const double> angles) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < angles.size(); ++i) os << (i ? ", " : "") << rad2deg(angles[i]);
    os << "} deg";
    return os.str();
}

}  // namespace

std::vector<double> CaptureSession::angles() const {
    std::vector<double> out;
    out.reserve(diffs.size());
    for (const auto& d : diffs) out.push_back(d.psi);
    return out;
}

void CaptureSession::validate() const {
    if (diffs.size() < 3) {
        throw std::invalid_argument("CaptureSession: need >= 3 difference images, got " + std::to_string(diffs.size()));
    }
    const Image& first = diffs.front().diff;
    for (const auto& d : diffs) {
        if (d.diff.channels() != 1 || !d.diff.same_shape(first)) {
            throw std::invalid_argument("CaptureSession: difference image shape " + d.diff.shape_string() +
                                        " does not match " + first.shape_string());
        }
    }
    if (!mask.same_shape(first)) {
        throw std::invalid_argument("CaptureSession: mask " + std::to_string(mask.width()) + "x" +
                                    std::to_string(mask.height()) + " does not match images " + first.shape_string());
    }
    cam.validate();
}

Eigen::MatrixX3d design_matrix(std::span<const double> angles, const CameraModel& cam) {
    std::vector<double> distinct;
    for (double a : angles) {
        const double r = wrap_angle(a, kPi);
        bool seen = false;
        for (double d : distinct) {
            if (std::abs(wrap_angle(r - d + kHalfPi, kPi) - kHalfPi) < kDistinctAngle) seen = true;
        }
        if (!seen) distinct.push_back(r);
    }
    if (distinct.size() < 3) {
        throw RankDeficientError("design_matrix: rank deficient, only " + std::to_string(distinct.size()) +
                                     " distinct polarizer angle(s) mod 180 deg in " + format_angles(angles),
                                 std::vector<double>(angles.begin(), angles.end()));
    }
    Eigen::MatrixX3d k(angles.size(), 3);
    for (std::size_t j = 0; j < angles.size(); ++j) k.row(j) = response_row(angles[j], cam);
    return k;
}

Reconstruction reconstruct_stokes(const CaptureSession& session) {
    session.validate();
    const auto angles = session.angles();
    const Eigen::MatrixX3d k = design_matrix(angles, session.cam);
    const Eigen::Matrix3d normal = k.transpose() * k;

    Reconstruction out;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    out.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    out.ill_conditioned = out.condition_number > kConditionWarning;

    // 3 x N pseudo-inverse, shared by every pixel.
    const Eigen::Matrix<double, 3, Eigen::Dynamic> pinv = normal.inverse() * k.transpose();
    const StokesVector ref = blackbody_stokes(session.tau_ref);

    const int w = session.diffs.front().diff.width();
    const int h = session.diffs.front().diff.height();
    const std::size_t n = session.diffs.size();
    out.stokes = StokesMap(w, h, false);
    out.stokes.mask = session.mask;

    parallel_for(h, [&](int y) {
        Eigen::VectorXd stack(n);
        for (int x = 0; x < w; ++x) {
            if (!session.mask(x, y)) continue;
            for (std::size_t j = 0; j < n; ++j) stack[j] = session.diffs[j].diff.at(x, y);
            const Eigen::Vector3d s = pinv * stack;
            out.stokes.set(x, y, {s[0] + ref.s0, s[1] + ref.s1, s[2] + ref.s2});
        }
    });
    return out;
}

}  // namespace thermopol
