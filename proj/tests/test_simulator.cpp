#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "thermopol/mesh.hpp"
#include "thermopol/simulator.hpp"

using namespace thermopol;

namespace {

SceneSpec sphere_scene(int n, double tau_obj = 323.15) {
    SceneSpec s;
    s.geometry = Sphere{Eigen::Vector3d(0, 0, -10), 1.0};
    s.material = MaterialEnv{1.8, tau_obj, 296.15};
    s.width = n;
    s.height = n;
    return s;
}

}  // namespace

TEST(Obj, SingleTriangle) {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    const TriangleMesh m = parse_obj(in);
    EXPECT_EQ(m.vertices.size(), 3u);
    EXPECT_EQ(m.faces.size(), 1u);
    ASSERT_EQ(m.normals.size(), 3u);
    EXPECT_NEAR(m.normals[0].z(), 1.0, 1e-12);
}

TEST(Obj, QuadFanTriangulated) {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n");
    const TriangleMesh m = parse_obj(in);
    EXPECT_EQ(m.faces.size(), 2u);
    EXPECT_EQ(m.faces[1], (std::array<int, 3>{0, 2, 3}));
}

TEST(Obj, NegativeIndicesAndTexcoords) {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf -3/1 -2/1 -1/1\n");
    EXPECT_EQ(parse_obj(in).faces[0], (std::array<int, 3>{0, 1, 2}));
}

TEST(Obj, Errors) {
    auto line_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_obj(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("v 0 0 0\nv 1 0 0\nf 1 2 7\n"), 3);
    EXPECT_EQ(line_of("v 0 0 0\nv 1 0 0\nf 1 2\n"), 3);
    EXPECT_EQ(line_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n"), 4);
    EXPECT_EQ(line_of("v 0 0 x\n"), 1);
    std::istringstream empty("v 0 0 0\n");
    EXPECT_THROW(parse_obj(empty), ParseError);
}

TEST(Icosphere, NormalsMatchSphere) {
    TriangleMesh m = make_icosphere(4);
    m.compute_vertex_normals();
    double worst = 0.0;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        worst = std::max(worst, (m.normals[i] - m.vertices[i].normalized()).norm());
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(Icosphere, ObjRoundTrip) {
    const TriangleMesh m = make_icosphere(2);
    std::stringstream obj;
    write_obj(m, obj);
    const TriangleMesh r = parse_obj(obj);
    ASSERT_EQ(r.vertices.size(), m.vertices.size());
    ASSERT_EQ(r.faces.size(), m.faces.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_TRUE(r.vertices[i].isApprox(m.vertices[i], 1e-9));
}

TEST(Intersector, BvhMatchesBruteForce) {
    TriangleMesh m = make_icosphere(3);
    const MeshIntersector brute(m, false), bvh(m, true);
    EXPECT_TRUE(bvh.has_bvh());
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    int hits = 0;
    for (int i = 0; i < 3000; ++i) {
        const Ray ray{Eigen::Vector3d(u(rng), u(rng), 5.0), Eigen::Vector3d(0.1 * u(rng), 0.1 * u(rng), -1).normalized()};
        const auto a = brute.intersect(ray), b = bvh.intersect(ray);
        ASSERT_EQ(a.has_value(), b.has_value());
        if (a) {
            ++hits;
            EXPECT_NEAR(a->t, b->t, 1e-12);
            EXPECT_EQ(a->face, b->face);
        }
    }
    EXPECT_GT(hits, 1000);
}

TEST(Intersector, Miss) {
    const MeshIntersector bvh(make_icosphere(1), true);
    EXPECT_FALSE(bvh.intersect({Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(0, 0, -1)}).has_value());
}

TEST(RotationFromZ, MapsZToView) {
    const Eigen::Vector3d v = Eigen::Vector3d(0.2, -0.3, 0.9).normalized();
    const Eigen::Matrix3d r = rotation_from_z(v);
    EXPECT_TRUE((r * Eigen::Vector3d::UnitZ()).isApprox(v, 1e-12));
    EXPECT_TRUE((r.transpose() * r).isIdentity(1e-12));
    EXPECT_TRUE(rotation_from_z(Eigen::Vector3d::UnitZ()).isIdentity(1e-15));
}

TEST(GroundTruth, SphereCenterAndLimb) {
    const SceneSpec s = sphere_scene(65);
    const GroundTruth gt = render_ground_truth(s, ProjectionModel::orthographic(2.0 / 64));
    EXPECT_TRUE(gt.mask(32, 32));
    EXPECT_NEAR(gt.zenith.at(32, 32), 0.0, 1e-12);
    EXPECT_FALSE(gt.mask(0, 0));
    double limb = 0.0;
    for (int x = 0; x < 65; ++x)
        if (gt.mask(x, 32)) limb = std::max(limb, gt.zenith.at(x, 32));
    EXPECT_GT(rad2deg(limb), 80.0);
    // rightmost pixel normal points to +x, top pixel normal to +y
    EXPECT_GT(gt.normals.at(62, 32, 0), 0.9);
    EXPECT_GT(gt.normals.at(32, 2, 1), 0.9);
}

TEST(GroundTruth, FlatHeightFieldFacesCamera) {
    SceneSpec s;
    HeightField hf;
    hf.nx = hf.ny = 9;
    hf.spacing = 0.5;
    hf.heights.assign(81, 0.0);
    s.geometry = hf;
    s.width = s.height = 16;
    const GroundTruth gt = render_ground_truth(s, ProjectionModel::orthographic(0.1));
    EXPECT_EQ(gt.mask.count(), 256u);
    for (double z : gt.zenith.data()) EXPECT_NEAR(z, 0.0, 1e-12);
}

TEST(GroundTruth, PinholeZenithMatchesAnalytic) {
    SceneSpec s = sphere_scene(48);
    const ProjectionModel pin = ProjectionModel::pinhole(200.0);
    const GroundTruth gt = render_ground_truth(s, pin);
    const Eigen::Vector3d c(0, 0, -10);
    int checked = 0;
    for (int v = 0; v < 48; ++v)
        for (int u = 0; u < 48; ++u) {
            const Eigen::Vector3d d = Eigen::Vector3d(u + 0.5 - 24, 24 - v - 0.5, -200.0).normalized();
            const double b = d.dot(c), disc = b * b - (c.squaredNorm() - 1.0);
            ASSERT_EQ(disc > 0, gt.mask(u, v)) << u << "," << v;
            if (disc <= 0) continue;
            const Eigen::Vector3d n = (d * (b - std::sqrt(disc)) - c).normalized();
            const double zen = std::acos(std::clamp(n.dot(-d), -1.0, 1.0));
            if (zen > kHalfPi - 1e-6) continue;
            EXPECT_NEAR(gt.zenith.at(u, v), zen, 1e-9);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(gt.normals.at(u, v, k), n[k], 1e-9);
            ++checked;
        }
    EXPECT_GT(checked, 200);
}

TEST(GroundTruth, MeshSphereCloseToAnalytic) {
    SceneSpec analytic = sphere_scene(40);
    SceneSpec meshed = analytic;
    TriangleMesh m = make_icosphere(4);
    m.transform(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -10));
    meshed.geometry = MeshGeometry{"", m};
    const ProjectionModel proj = ProjectionModel::orthographic(2.2 / 40);
    const GroundTruth a = render_ground_truth(analytic, proj), b = render_ground_truth(meshed, proj);
    int n = 0;
    for (int v = 0; v < 40; ++v)
        for (int u = 0; u < 40; ++u) {
            if (!a.mask(u, v) || !b.mask(u, v) || a.zenith.at(u, v) > deg2rad(70)) continue;
            Eigen::Vector3d na(a.normals.at(u, v, 0), a.normals.at(u, v, 1), a.normals.at(u, v, 2));
            Eigen::Vector3d nb(b.normals.at(u, v, 0), b.normals.at(u, v, 1), b.normals.at(u, v, 2));
            EXPECT_LT(std::acos(std::min(1.0, na.dot(nb))), deg2rad(1.0));
            ++n;
        }
    EXPECT_GT(n, 500);
}

TEST(RenderStokes, EqualTemperatureNoPolarization) {
    const SceneSpec s = sphere_scene(32, 296.15);
    const GroundTruth gt = render_ground_truth(s, ProjectionModel::orthographic(2.2 / 32));
    const StokesMap m = render_stokes(s, gt);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) EXPECT_LT(m.at(x, y).linear_magnitude() / m.at(x, y).s0, 1e-12);
}

TEST(RenderStokes, DolpRisesOutward) {
    const SceneSpec s = sphere_scene(65);
    const GroundTruth gt = render_ground_truth(s, ProjectionModel::orthographic(2.0 / 64));
    const StokesMap m = render_stokes(s, gt);
    double prev = -1.0;
    for (int x = 32; x < 60; ++x) {
        const double rho = m.at(x, 32).linear_magnitude() / m.at(x, 32).s0;
        EXPECT_GT(rho, prev);
        prev = rho;
    }
}

TEST(RenderSession, Deterministic) {
    CameraModel cam;
    cam.noise_sigma = 0.5;
    const SceneSpec s = sphere_scene(16);
    const auto proj = ProjectionModel::orthographic(0.15);
    const auto a = render_session(s, proj, cam, {0, 1, 2}, 300.0, 17);
    const auto b = render_session(s, proj, cam, {0, 1, 2}, 300.0, 17);
    const auto c = render_session(s, proj, cam, {0, 1, 2}, 300.0, 18);
    EXPECT_EQ(a.session.diffs[1].diff.data(), b.session.diffs[1].diff.data());
    EXPECT_NE(a.session.diffs[1].diff.data(), c.session.diffs[1].diff.data());
}

TEST(Rot90, Mapping) {
    Image img(3, 2);
    img.at(2, 0) = 5.0;
    const Image r = rot90(img);
    EXPECT_EQ(r.width(), 2);
    EXPECT_EQ(r.height(), 3);
    EXPECT_EQ(r.at(0, 0), 5.0);
}
