/**
 * @file mesh.hpp
 * @brief Triangle meshes: Wavefront OBJ loading and ray intersection.
 */

#pragma once

#include <Eigen/Core>
#include <array>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermopol {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, const std::string& message)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct Ray {
    Eigen::Vector3d origin;
    Eigen::Vector3d dir;  // unit length
};

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3d> normals;
    /// Vertex indices per face.
    std::vector<std::array<int, 3>> faces;
    /// Normal indices per face corner, parallel to faces.
    std::vector<std::array<int, 3>> face_normals;

    /// Replaces normals with Max-weighted averages of incident face normals.
    void compute_vertex_normals();
    void transform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);
};

/// Parses the v / vn / f subset of OBJ. Polygons are fan-triangulated; negative
/// (relative) indices are accepted; other statements are ignored. Throws
/// ParseError naming the line, or when the mesh has no faces.
TriangleMesh parse_obj(std::istream& in, const std::string& source_name = "<obj>");
TriangleMesh load_mesh(const std::string& path);

struct MeshHit {
    double t = 0.0;
    int face = -1;
    double b1 = 0.0, b2 = 0.0;  // barycentrics of vertices 1 and 2
};

/// Ray caster over a mesh: brute-force triangle loop, or a bounding volume
/// hierarchy when use_bvh is set. Both report the nearest hit with t > t_min.
class MeshIntersector {
public:
    MeshIntersector(TriangleMesh mesh, bool use_bvh);
    ~MeshIntersector();
    MeshIntersector(MeshIntersector&&) noexcept;
    MeshIntersector& operator=(MeshIntersector&&) noexcept;

    std::optional<MeshHit> intersect(const Ray& ray, double t_min = 1e-9) const;
    /// Interpolated shading normal at a hit, unit length.
    Eigen::Vector3d normal_at(const MeshHit& hit) const;

    const TriangleMesh& mesh() const { return mesh_; }
    bool has_bvh() const { return bvh_ != nullptr; }

private:
    struct Bvh;
    TriangleMesh mesh_;
    std::unique_ptr<Bvh> bvh_;
};

/// Icosahedron subdivided `levels` times and projected onto the unit sphere.
TriangleMesh make_icosphere(int levels);

void write_obj(const TriangleMesh& mesh, std::ostream& out);

}  // namespace thermopol
