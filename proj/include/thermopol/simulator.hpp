/**
 * @file simulator.hpp
 * @brief Single-bounce ray-cast renderer for synthetic capture sessions.
 *
 * Camera space: x to the right, y up, z toward the viewer; the camera looks
 * down -z. Image row 0 is the top row. Angles in the image plane (AoLP,
 * azimuth, polarizer psi) are measured counterclockwise from +x.
 *
 * Per-pixel polarization is expressed in view-vector space: the frame whose
 * z-axis is the view vector (toward the camera), obtained from camera space by
 * the minimal rotation taking +z onto the view vector. Under orthographic
 * projection view-vector space equals camera space.
 */

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "thermopol/image.hpp"
#include "thermopol/imaging.hpp"
#include "thermopol/mesh.hpp"
#include "thermopol/polarization.hpp"
#include "thermopol/reconstruction.hpp"

namespace thermopol {

enum class ProjectionKind { Orthographic, Pinhole };

struct ProjectionModel {
    ProjectionKind kind = ProjectionKind::Orthographic;
    /// Pinhole focal length in pixels.
    double focal_length = 0.0;
    /// Orthographic world units per pixel.
    double pixel_size = 1.0;
    /// Principal point in pixels; NaN selects the image center.
    double cx = std::numeric_limits<double>::quiet_NaN();
    double cy = std::numeric_limits<double>::quiet_NaN();

    void validate() const;

    static ProjectionModel orthographic(double pixel_size);
    static ProjectionModel pinhole(double focal_length);

    /// Primary ray through the center of pixel (u, v). Orthographic rays start on
    /// the plane z = origin_z.
    Ray ray(int u, int v, int width, int height, double origin_z = 0.0) const;
    /// Unit vector from the surface toward the camera for pixel (u, v).
    Eigen::Vector3d view_vector(int u, int v, int width, int height) const;
    /// Rotation from view-vector space to camera space for pixel (u, v).
    Eigen::Matrix3d view_to_camera(int u, int v, int width, int height) const;
};

/// Minimal rotation taking +z onto the unit vector `view` (view.z > -1).
Eigen::Matrix3d rotation_from_z(const Eigen::Vector3d& view);

struct Sphere {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
};

/// Regular grid of heights z = h(i, j) on the local x-y plane, centered at the
/// origin: x = (i - (nx-1)/2) * spacing, y = (j - (ny-1)/2) * spacing.
struct HeightField {
    int nx = 0;
    int ny = 0;
    double spacing = 1.0;
    std::vector<double> heights;  // j * nx + i

    double at(int i, int j) const { return heights[static_cast<std::size_t>(j) * nx + i]; }
    /// Central-difference normal at grid node (i, j), one-sided at borders.
    Eigen::Vector3d node_normal(int i, int j) const;
    TriangleMesh to_mesh() const;

    /// Gaussian bump amplitude * exp(-r^2 / (2 sigma^2)) sampled on an n x n grid.
    static HeightField gaussian_bump(int n, double spacing, double amplitude, double sigma);
};

struct MeshGeometry {
    std::string path;
    TriangleMesh mesh;
};

using Geometry = std::variant<Sphere, HeightField, MeshGeometry>;

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Rotations applied about x, then y, then z (degrees).
    static RigidTransform from_euler_deg(double rx, double ry, double rz, const Eigen::Vector3d& t);
};

struct SceneSpec {
    Geometry geometry = Sphere{};
    MaterialEnv material;
    RigidTransform pose;
    int width = 64;
    int height = 64;
    bool use_bvh = true;

    void validate() const;
};

struct GroundTruth {
    Image normals;       // camera space, 3 channels
    Image view_normals;  // view-vector space, 3 channels
    Mask mask;
    Image zenith;        // radians
    Image azimuth;       // radians in [0, 2pi), view-vector space
};

/// First-hit geometry per pixel. mask(x, y) is set exactly when the primary ray hits.
GroundTruth render_ground_truth(const SceneSpec& scene, const ProjectionModel& proj);

/// Polarized radiance leaving the scene toward each pixel, in view-vector space.
/// Background pixels see the unpolarized environment s_b(tau_env).
StokesMap render_stokes(const SceneSpec& scene, const GroundTruth& gt);

struct RenderOptions {
    bool with_noise = true;
    /// Session mask covers only object pixels; otherwise every pixel.
    bool object_mask_only = true;
};

struct SimulatedSession {
    CaptureSession session;
    GroundTruth truth;
    StokesMap stokes;  // rendered scene Stokes vectors
    std::vector<RawImage> scene_raw;
    std::vector<RawImage> reference_raw;
};

/// Renders the scene, images it through the camera at every polarizer angle,
/// images the reference blackbody at tau_ref at the same angles, and assembles
/// the scene-minus-reference difference session.
SimulatedSession render_session(const SceneSpec& scene, const ProjectionModel& proj, const CameraModel& cam,
                                const std::vector<double>& angles, double tau_ref, std::uint64_t seed,
                                const RenderOptions& options = {});

/// Image rotated by 90 degrees counterclockwise (as displayed, y up).
Image rot90(const Image& img);
Mask rot90(const Mask& mask);

}  // namespace thermopol
