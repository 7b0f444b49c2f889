#include "thermopol/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace thermopol {

namespace {

// Resolves a 1-based (or negative, relative) OBJ index against `count` elements.
int resolve_index(const std::string& token, int count, const std::string& source, int line) {
    int idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
        throw ParseError(source, line, "bad index '" + token + "'");
    }
    const int resolved = idx > 0 ? idx - 1 : count + idx;
    if (idx == 0 || resolved < 0 || resolved >= count) {
        throw ParseError(source, line, "index " + token + " out of range (" + std::to_string(count) + " defined)");
    }
    return resolved;
}

Eigen::Vector3d read_vec3(std::istringstream& ls, const std::string& source, int line) {
    Eigen::Vector3d v;
    if (!(ls >> v[0] >> v[1] >> v[2])) throw ParseError(source, line, "expected three coordinates");
    return v;
}

bool ray_triangle(const Ray& ray, const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                  double t_min, double t_max, MeshHit& hit) {
    // Moller-Trumbore
    const Eigen::Vector3d e1 = p1 - p0;
    const Eigen::Vector3d e2 = p2 - p0;
    const Eigen::Vector3d pv = ray.dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-300) return false;
    const double inv = 1.0 / det;
    const Eigen::Vector3d tv = ray.origin - p0;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) return false;
    const Eigen::Vector3d qv = tv.cross(e1);
    const double v = ray.dir.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = e2.dot(qv) * inv;
    if (t <= t_min || t >= t_max) return false;
    hit.t = t;
    hit.b1 = u;
    hit.b2 = v;
    return true;
}

struct Aabb {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());

    void grow(const Eigen::Vector3d& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void grow(const Aabb& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }

    bool hit(const Ray& ray, const Eigen::Vector3d& inv_dir, double t_max) const {
        double t0 = 0.0, t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            double tn = (lo[a] - ray.origin[a]) * inv_dir[a];
            double tf = (hi[a] - ray.origin[a]) * inv_dir[a];
            if (tn > tf) std::swap(tn, tf);
            if (std::isnan(tn) || std::isnan(tf)) continue;  // ray parallel to and on a slab plane
            t0 = std::max(t0, tn);
            t1 = std::min(t1, tf);
            if (t0 > t1) return false;
        }
        return true;
    }
};

}  // namespace

void TriangleMesh::compute_vertex_normals() {
    normals.assign(vertices.size(), Eigen::Vector3d::Zero());
    // Max's weights: each corner adds e1 x e2 / (|e1|^2 |e2|^2), exact for vertices on a sphere.
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d e1 = vertices[f[(k + 1) % 3]] - vertices[f[k]];
            const Eigen::Vector3d e2 = vertices[f[(k + 2) % 3]] - vertices[f[k]];
            const double d = e1.squaredNorm() * e2.squaredNorm();
            if (d > 0.0) normals[f[k]] += e1.cross(e2) / d;
        }
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0.0, 0.0, 1.0);
    }
    face_normals = faces;
}

void TriangleMesh::transform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
    for (auto& v : vertices) v = rotation * v + translation;
    for (auto& n : normals) n = rotation * n;
}

TriangleMesh parse_obj(std::istream& in, const std::string& source_name) {
    TriangleMesh mesh;
    bool all_corners_have_normals = true;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::string tag;
        if (!(ls >> tag)) continue;

        if (tag == "v") {
            mesh.vertices.push_back(read_vec3(ls, source_name, line));
        } else if (tag == "vn") {
            Eigen::Vector3d n = read_vec3(ls, source_name, line);
            if (n.norm() == 0.0) throw ParseError(source_name, line, "zero-length vertex normal");
            mesh.normals.push_back(n.normalized());
        } else if (tag == "f") {
            std::vector<int> vi, ni;
            std::string corner;
            while (ls >> corner) {
                const auto s1 = corner.find('/');
                vi.push_back(resolve_index(corner.substr(0, s1), static_cast<int>(mesh.vertices.size()), source_name, line));
                int normal = -1;
                if (s1 != std::string::npos) {
                    const auto s2 = corner.find('/', s1 + 1);
                    if (s2 != std::string::npos && s2 + 1 < corner.size()) {
                        normal = resolve_index(corner.substr(s2 + 1), static_cast<int>(mesh.normals.size()),
                                               source_name, line);
                    }
                }
                if (normal < 0) all_corners_have_normals = false;
                ni.push_back(normal);
            }
            if (vi.size() < 3) throw ParseError(source_name, line, "face needs at least 3 vertices");
            for (std::size_t i = 1; i + 1 < vi.size(); ++i) {
                const std::array<int, 3> f{vi[0], vi[i], vi[i + 1]};
                if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
                    throw ParseError(source_name, line, "degenerate face (repeated vertex)");
                }
                mesh.faces.push_back(f);
                mesh.face_normals.push_back({ni[0], ni[i], ni[i + 1]});
            }
        }
    }
    if (mesh.faces.empty()) throw ParseError(source_name, line, "mesh has no faces");
    if (!all_corners_have_normals || mesh.normals.empty()) mesh.compute_vertex_normals();
    return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
    return parse_obj(in, path);
}

struct MeshIntersector::Bvh {
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int first = 0, count = 0;  // leaf range in order
    };
    std::vector<Node> nodes;
    std::vector<int> order;

    int build(const TriangleMesh& mesh, const std::vector<Eigen::Vector3d>& centroids, int first, int count) {
        Node node;
        for (int i = first; i < first + count; ++i)
            for (int v : mesh.faces[order[i]]) node.box.grow(mesh.vertices[v]);
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(node);
        if (count <= 4) {
            nodes[id].first = first;
            nodes[id].count = count;
            return id;
        }
        Aabb cbox;
        for (int i = first; i < first + count; ++i) cbox.grow(centroids[order[i]]);
        int axis = 0;
        const Eigen::Vector3d ext = cbox.hi - cbox.lo;
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        const int mid = first + count / 2;
        std::nth_element(order.begin() + first, order.begin() + mid, order.begin() + first + count,
                         [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
        const int l = build(mesh, centroids, first, mid - first);
        const int r = build(mesh, centroids, mid, first + count - mid);
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
    }
};

MeshIntersector::MeshIntersector(TriangleMesh mesh, bool use_bvh) : mesh_(std::move(mesh)) {
    if (!use_bvh) return;
    bvh_ = std::make_unique<Bvh>();
    std::vector<Eigen::Vector3d> centroids;
    centroids.reserve(mesh_.faces.size());
    for (const auto& f : mesh_.faces)
        centroids.push_back((mesh_.vertices[f[0]] + mesh_.vertices[f[1]] + mesh_.vertices[f[2]]) / 3.0);
    bvh_->order.resize(mesh_.faces.size());
    std::iota(bvh_->order.begin(), bvh_->order.end(), 0);
    bvh_->build(mesh_, centroids, 0, static_cast<int>(mesh_.faces.size()));
}

MeshIntersector::~MeshIntersector() = default;
MeshIntersector::MeshIntersector(MeshIntersector&&) noexcept = default;
MeshIntersector& MeshIntersector::operator=(MeshIntersector&&) noexcept = default;

std::optional<MeshHit> MeshIntersector::intersect(const Ray& ray, double t_min) const {
    MeshHit best;
    double t_max = std::numeric_limits<double>::infinity();
    auto test = [&](int f) {
        const auto& face = mesh_.faces[f];
        MeshHit h;
        if (ray_triangle(ray, mesh_.vertices[face[0]], mesh_.vertices[face[1]], mesh_.vertices[face[2]], t_min, t_max, h)) {
            h.face = f;
            best = h;
            t_max = h.t;
        }
    };

    if (!bvh_) {
        for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) test(f);
    } else {
        const Eigen::Vector3d inv_dir = ray.dir.cwiseInverse();
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const auto& node = bvh_->nodes[stack.back()];
            stack.pop_back();
            if (!node.box.hit(ray, inv_dir, t_max)) continue;
            if (node.left < 0) {
                for (int i = node.first; i < node.first + node.count; ++i) test(bvh_->order[i]);
            } else {
                stack.push_back(node.left);
                stack.push_back(node.right);
            }
        }
    }
    if (best.face < 0) return std::nullopt;
    return best;
}

Eigen::Vector3d MeshIntersector::normal_at(const MeshHit& hit) const {
    const auto& fn = mesh_.face_normals[hit.face];
    const double b0 = 1.0 - hit.b1 - hit.b2;
    const Eigen::Vector3d n = b0 * mesh_.normals[fn[0]] + hit.b1 * mesh_.normals[fn[1]] + hit.b2 * mesh_.normals[fn[2]];
    const double len = n.norm();
    if (len > 0.0) return n / len;
    const auto& f = mesh_.faces[hit.face];
    return (mesh_.vertices[f[1]] - mesh_.vertices[f[0]]).cross(mesh_.vertices[f[2]] - mesh_.vertices[f[0]]).normalized();
}

TriangleMesh make_icosphere(int levels) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                     {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : mesh.vertices) v.normalize();
    mesh.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                  {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                  {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int level = 0; level < levels; ++level) {
        std::map<std::pair<int, int>, int> midpoints;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
            mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
            const int id = static_cast<int>(mesh.vertices.size()) - 1;
            midpoints.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : mesh.faces) {
            const int a = midpoint(f[0], f[1]);
            const int b = midpoint(f[1], f[2]);
            const int c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        mesh.faces = std::move(next);
    }
    mesh.compute_vertex_normals();
    return mesh;
}

void write_obj(const TriangleMesh& mesh, std::ostream& out) {
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace thermopol
