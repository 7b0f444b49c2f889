#include "thermopol/simulator.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "thermopol/calibration.hpp"
#include "thermopol/parallel.hpp"

namespace thermopol {

namespace {

// Zenith angles are kept strictly below grazing so the Fresnel model stays in its domain.
constexpr double kMaxZenith = kHalfPi - 1e-9;

struct PixelCenter {
    double x, y;  // offsets from the principal point, y up
};

PixelCenter pixel_center(const ProjectionModel& p, int u, int v, int width, int height) {
    const double cx = std::isnan(p.cx) ? 0.5 * width : p.cx;
    const double cy = std::isnan(p.cy) ? 0.5 * height : p.cy;
    return {u + 0.5 - cx, cy - (v + 0.5)};
}

std::optional<double> intersect_sphere(const Ray& ray, const Sphere& s) {
    const Eigen::Vector3d oc = ray.origin - s.center;
    const double b = oc.dot(ray.dir);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t0 = -b - root;
    if (t0 > 1e-9) return t0;
    const double t1 = -b + root;
    if (t1 > 1e-9) return t1;
    return std::nullopt;
}

// Scene geometry placed in camera space.
struct PreparedScene {
    std::optional<Sphere> sphere;
    std::optional<MeshIntersector> mesh;
    double z_max = 0.0;
};

PreparedScene prepare(const SceneSpec& scene) {
    PreparedScene out;
    const auto& pose = scene.pose;
    if (const auto* s = std::get_if<Sphere>(&scene.geometry)) {
        Sphere placed{pose.rotation * s->center + pose.translation, s->radius};
        out.z_max = placed.center.z() + placed.radius;
        out.sphere = placed;
        return out;
    }
    TriangleMesh mesh;
    if (const auto* hf = std::get_if<HeightField>(&scene.geometry)) {
        mesh = hf->to_mesh();
    } else {
        mesh = std::get<MeshGeometry>(scene.geometry).mesh;
    }
    mesh.transform(pose.rotation, pose.translation);
    out.z_max = -std::numeric_limits<double>::infinity();
    for (const auto& v : mesh.vertices) out.z_max = std::max(out.z_max, v.z());
    out.mesh.emplace(std::move(mesh), scene.use_bvh);
    return out;
}

}  // namespace

void ProjectionModel::validate() const {
    if (kind == ProjectionKind::Pinhole && !(focal_length > 0.0)) {
        throw std::domain_error("ProjectionModel: pinhole focal length must be > 0");
    }
    if (kind == ProjectionKind::Orthographic && !(pixel_size > 0.0)) {
        throw std::domain_error("ProjectionModel: orthographic pixel size must be > 0");
    }
}

ProjectionModel ProjectionModel::orthographic(double pixel_size) {
    ProjectionModel p;
    p.kind = ProjectionKind::Orthographic;
    p.pixel_size = pixel_size;
    return p;
}

ProjectionModel ProjectionModel::pinhole(double focal_length) {
    ProjectionModel p;
    p.kind = ProjectionKind::Pinhole;
    p.focal_length = focal_length;
    return p;
}

Ray ProjectionModel::ray(int u, int v, int width, int height, double origin_z) const {
    const PixelCenter pc = pixel_center(*this, u, v, width, height);
    if (kind == ProjectionKind::Orthographic) {
        return {Eigen::Vector3d(pc.x * pixel_size, pc.y * pixel_size, origin_z), Eigen::Vector3d(0.0, 0.0, -1.0)};
    }
    return {Eigen::Vector3d::Zero(), Eigen::Vector3d(pc.x, pc.y, -focal_length).normalized()};
}

Eigen::Vector3d ProjectionModel::view_vector(int u, int v, int width, int height) const {
    return -ray(u, v, width, height).dir;
}

Eigen::Matrix3d ProjectionModel::view_to_camera(int u, int v, int width, int height) const {
    if (kind == ProjectionKind::Orthographic) return Eigen::Matrix3d::Identity();
    return rotation_from_z(view_vector(u, v, width, height));
}

Eigen::Matrix3d rotation_from_z(const Eigen::Vector3d& view) {
    // R = I + [a]x + [a]x^2 / (1 + c), a = z x view, c = z . view
    const double c = view.z();
    if (c <= -1.0 + 1e-12) throw std::domain_error("rotation_from_z: view vector points away from the camera");
    Eigen::Matrix3d ax;
    ax << 0.0, 0.0, view.x(),
          0.0, 0.0, view.y(),
          -view.x(), -view.y(), 0.0;
    return Eigen::Matrix3d::Identity() + ax + ax * ax / (1.0 + c);
}

Eigen::Vector3d HeightField::node_normal(int i, int j) const {
    const int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, nx - 1);
    const int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, ny - 1);
    const double dhdx = (at(i1, j) - at(i0, j)) / ((i1 - i0) * spacing);
    const double dhdy = (at(i, j1) - at(i, j0)) / ((j1 - j0) * spacing);
    return Eigen::Vector3d(-dhdx, -dhdy, 1.0).normalized();
}

TriangleMesh HeightField::to_mesh() const {
    TriangleMesh mesh;
    const double ox = 0.5 * (nx - 1) * spacing;
    const double oy = 0.5 * (ny - 1) * spacing;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            mesh.vertices.emplace_back(i * spacing - ox, j * spacing - oy, at(i, j));
            mesh.normals.push_back(node_normal(i, j));
        }
    }
    auto id = [&](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            mesh.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    mesh.face_normals = mesh.faces;
    return mesh;
}

HeightField HeightField::gaussian_bump(int n, double spacing, double amplitude, double sigma) {
    HeightField hf;
    hf.nx = hf.ny = n;
    hf.spacing = spacing;
    hf.heights.resize(static_cast<std::size_t>(n) * n);
    const double o = 0.5 * (n - 1) * spacing;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double x = i * spacing - o, y = j * spacing - o;
            hf.heights[static_cast<std::size_t>(j) * n + i] = amplitude * std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
        }
    }
    return hf;
}

RigidTransform RigidTransform::from_euler_deg(double rx, double ry, double rz, const Eigen::Vector3d& t) {
    RigidTransform tf;
    tf.rotation = (Eigen::AngleAxisd(deg2rad(rz), Eigen::Vector3d::UnitZ()) *
                   Eigen::AngleAxisd(deg2rad(ry), Eigen::Vector3d::UnitY()) *
                   Eigen::AngleAxisd(deg2rad(rx), Eigen::Vector3d::UnitX()))
                      .toRotationMatrix();
    tf.translation = t;
    return tf;
}

void SceneSpec::validate() const {
    material.validate();
    if (width <= 0 || height <= 0) throw std::invalid_argument("SceneSpec: resolution must be positive");
    if (const auto* s = std::get_if<Sphere>(&geometry)) {
        if (!(s->radius > 0.0)) throw std::invalid_argument("SceneSpec: sphere radius must be > 0");
    } else if (const auto* hf = std::get_if<HeightField>(&geometry)) {
        if (hf->nx < 2 || hf->ny < 2) throw std::invalid_argument("SceneSpec: height field needs at least 2x2 nodes");
        if (hf->heights.size() != static_cast<std::size_t>(hf->nx) * hf->ny) {
            throw std::invalid_argument("SceneSpec: height field grid incomplete");
        }
        if (!(hf->spacing > 0.0)) throw std::invalid_argument("SceneSpec: height field spacing must be > 0");
    } else {
        const auto& mesh = std::get<MeshGeometry>(geometry).mesh;
        if (mesh.faces.empty()) throw std::invalid_argument("SceneSpec: mesh is empty");
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& t = mesh.faces[f];
            const double area2 =
                (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
            if (!(area2 > 0.0)) throw std::invalid_argument("SceneSpec: degenerate mesh triangle " + std::to_string(f));
        }
    }
}

GroundTruth render_ground_truth(const SceneSpec& scene, const ProjectionModel& proj) {
    scene.validate();
    proj.validate();
    const PreparedScene prepared = prepare(scene);
    const int w = scene.width, h = scene.height;
    const double origin_z = prepared.z_max + 1.0;

    GroundTruth gt;
    gt.normals = Image(w, h, 3);
    gt.view_normals = Image(w, h, 3);
    gt.mask = Mask(w, h);
    gt.zenith = Image(w, h);
    gt.azimuth = Image(w, h);

    parallel_for(h, [&](int v) {
        for (int u = 0; u < w; ++u) {
            const Ray ray = proj.ray(u, v, w, h, origin_z);
            Eigen::Vector3d n;
            if (prepared.sphere) {
                const auto t = intersect_sphere(ray, *prepared.sphere);
                if (!t) continue;
                n = (ray.origin + *t * ray.dir - prepared.sphere->center).normalized();
            } else {
                const auto hit = prepared.mesh->intersect(ray);
                if (!hit) continue;
                n = prepared.mesh->normal_at(*hit);
            }

            const Eigen::Matrix3d to_cam = proj.view_to_camera(u, v, w, h);
            Eigen::Vector3d nv = to_cam.transpose() * n;
            double zenith = std::atan2(std::hypot(nv.x(), nv.y()), nv.z());
            const double azimuth = wrap_angle(std::atan2(nv.y(), nv.x()), 2.0 * kPi);
            if (zenith > kMaxZenith) {
                // Silhouette or back-facing interpolated normal: pull onto the visible hemisphere.
                zenith = kMaxZenith;
                nv = Eigen::Vector3d(std::sin(zenith) * std::cos(azimuth), std::sin(zenith) * std::sin(azimuth),
                                     std::cos(zenith));
                n = to_cam * nv;
            }

            gt.mask.set(u, v, true);
            gt.zenith.at(u, v) = zenith;
            gt.azimuth.at(u, v) = azimuth;
            for (int c = 0; c < 3; ++c) {
                gt.normals.at(u, v, c) = n[c];
                gt.view_normals.at(u, v, c) = nv[c];
            }
        }
    });
    return gt;
}

StokesMap render_stokes(const SceneSpec& scene, const GroundTruth& gt) {
    const int w = gt.mask.width(), h = gt.mask.height();
    StokesMap map(w, h, true);
    const StokesVector background = blackbody_stokes(scene.material.tau_env);
    parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            map.set(x, y, gt.mask(x, y) ? surface_stokes(gt.zenith.at(x, y), gt.azimuth.at(x, y), scene.material)
                                        : background);
        }
    });
    return map;
}

SimulatedSession render_session(const SceneSpec& scene, const ProjectionModel& proj, const CameraModel& cam,
                                const std::vector<double>& angles, double tau_ref, std::uint64_t seed,
                                const RenderOptions& options) {
    cam.validate();
    if (angles.size() < 3) throw std::invalid_argument("render_session: need >= 3 polarizer angles");
    if (!(tau_ref >= 0.0)) throw std::domain_error("render_session: tau_ref must be >= 0 K");

    SimulatedSession out;
    out.truth = render_ground_truth(scene, proj);
    out.stokes = render_stokes(scene, out.truth);

    const int w = scene.width, h = scene.height;
    StokesMap reference(w, h, true);
    const StokesVector ref = blackbody_stokes(tau_ref);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) reference.set(x, y, ref);

    const int n = static_cast<int>(angles.size());
    out.scene_raw.resize(n);
    out.reference_raw.resize(n);
    parallel_for(2 * n, [&](int i) {
        const int j = i / 2;
        if (i % 2 == 0) {
            out.scene_raw[j] = simulate_raw_image(out.stokes, angles[j], cam, options.with_noise, derive_seed(seed, i), j);
        } else {
            out.reference_raw[j] =
                simulate_raw_image(reference, angles[j], cam, options.with_noise, derive_seed(seed, i), n + j);
        }
    });

    out.session.tau_ref = tau_ref;
    out.session.cam = cam;
    out.session.mask = options.object_mask_only ? out.truth.mask : Mask(w, h, true);
    for (int j = 0; j < n; ++j) {
        out.session.diffs.push_back({angles[j], difference_image(out.scene_raw[j], out.reference_raw[j])});
    }
    return out;
}

Image rot90(const Image& img) {
    const int w = img.width(), h = img.height();
    Image out(h, w, img.channels());
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            for (int c = 0; c < img.channels(); ++c) out.at(v, w - 1 - u, c) = img.at(u, v, c);
    return out;
}

Mask rot90(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    Mask out(h, w);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) out.set(v, w - 1 - u, mask(u, v));
    return out;
}

}  // namespace thermopol
