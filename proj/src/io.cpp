#include "thermopol/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace thermopol {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string(what) + ": invalid JSON: " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const char* key, const char* context) {
    if (!j.contains(key)) throw DataError(std::string(context) + ": missing field '" + key + "'");
    return get_or<T>(j, key, T{});
}

Eigen::Vector3d vec3(const json& j, const char* key, const Eigen::Vector3d& fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = get_or<std::vector<double>>(j, key, {});
    if (v.size() != 3) throw DataError(std::string("field '") + key + "' must have 3 elements");
    return {v[0], v[1], v[2]};
}

json camera_json(const CameraModel& cam) {
    return {{"c", cam.c},
            {"k", cam.k},
            {"offset_base", cam.offset_base},
            {"offset_pol", cam.offset_pol},
            {"offset_phase_deg", rad2deg(cam.offset_phase)},
            {"noise_sigma", cam.noise_sigma},
            {"quantize", cam.quantize},
            {"bit_depth", cam.bit_depth}};
}

CameraModel camera_parse(const json& j) {
    CameraModel cam;
    cam.c = get_or(j, "c", cam.c);
    cam.k = get_or(j, "k", cam.k);
    cam.offset_base = get_or(j, "offset_base", cam.offset_base);
    cam.offset_pol = get_or(j, "offset_pol", cam.offset_pol);
    cam.offset_phase = deg2rad(get_or(j, "offset_phase_deg", 0.0));
    cam.noise_sigma = get_or(j, "noise_sigma", cam.noise_sigma);
    cam.quantize = get_or(j, "quantize", cam.quantize);
    cam.bit_depth = get_or(j, "bit_depth", cam.bit_depth);
    try {
        cam.validate();
    } catch (const std::domain_error& e) {
        throw DataError(e.what());
    }
    return cam;
}

json projection_json(const ProjectionModel& p) {
    json j;
    if (p.kind == ProjectionKind::Orthographic) {
        j = {{"kind", "orthographic"}, {"pixel_size", p.pixel_size}};
    } else {
        j = {{"kind", "pinhole"}, {"focal_length", p.focal_length}};
    }
    if (!std::isnan(p.cx)) j["cx"] = p.cx;
    if (!std::isnan(p.cy)) j["cy"] = p.cy;
    return j;
}

ProjectionModel projection_parse(const json& j) {
    const std::string kind = get_or<std::string>(j, "kind", "orthographic");
    ProjectionModel p;
    if (kind == "orthographic") {
        p = ProjectionModel::orthographic(get_or(j, "pixel_size", 1.0));
    } else if (kind == "pinhole") {
        p = ProjectionModel::pinhole(require<double>(j, "focal_length", "projection"));
    } else {
        throw DataError("projection: unknown kind '" + kind + "'");
    }
    if (j.contains("cx")) p.cx = get_or(j, "cx", 0.0);
    if (j.contains("cy")) p.cy = get_or(j, "cy", 0.0);
    try {
        p.validate();
    } catch (const std::domain_error& e) {
        throw DataError(e.what());
    }
    return p;
}

json calibration_json(const CalibrationResult& c) {
    return {{"c", c.c}, {"k", c.k}, {"r2", c.r2}, {"method", to_string(c.method)}};
}

CalibrationResult calibration_parse(const json& j) {
    CalibrationResult c;
    c.c = require<double>(j, "c", "calibration");
    c.k = require<double>(j, "k", "calibration");
    c.r2 = get_or(j, "r2", 0.0);
    try {
        c.method = calibration_method_from_string(get_or<std::string>(j, "method", "composite"));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    return c;
}

Geometry geometry_parse(const json& g, const fs::path& base_dir) {
    const std::string type = require<std::string>(g, "type", "geometry");
    if (type == "sphere") {
        return Sphere{vec3(g, "center", Eigen::Vector3d::Zero()), require<double>(g, "radius", "sphere")};
    }
    if (type == "heightfield") {
        if (g.contains("generator")) {
            const auto gen = get_or<std::string>(g, "generator", "");
            if (gen != "gaussian_bump") throw DataError("heightfield: unknown generator '" + gen + "'");
            return HeightField::gaussian_bump(require<int>(g, "n", "heightfield"), get_or(g, "spacing", 1.0),
                                              require<double>(g, "amplitude", "heightfield"),
                                              require<double>(g, "sigma", "heightfield"));
        }
        HeightField hf;
        hf.nx = require<int>(g, "nx", "heightfield");
        hf.ny = require<int>(g, "ny", "heightfield");
        hf.spacing = get_or(g, "spacing", 1.0);
        hf.heights = require<std::vector<double>>(g, "heights", "heightfield");
        return hf;
    }
    if (type == "mesh") {
        const auto rel = require<std::string>(g, "path", "mesh");
        const fs::path path = fs::path(rel).is_absolute() ? fs::path(rel) : base_dir / rel;
        try {
            return MeshGeometry{rel, load_mesh(path.string())};
        } catch (const ParseError& e) {
            throw DataError(e.what());
        } catch (const std::runtime_error& e) {
            throw DataError(e.what());
        }
    }
    throw DataError("geometry: unknown type '" + type + "'");
}

}  // namespace

SceneFile parse_scene_json(const std::string& text, const fs::path& base_dir) {
    const json j = parse(text, "scene");
    SceneFile out;
    if (!j.contains("geometry")) throw DataError("scene: missing field 'geometry'");
    out.scene.geometry = geometry_parse(j.at("geometry"), base_dir);

    MaterialEnv& m = out.scene.material;
    m.eta = require<double>(j, "eta", "scene");
    m.tau_env = celsius_to_kelvin(require<double>(j, "tau_env_c", "scene"));
    m.emissivity = get_or(j, "emissivity", 1.0);
    if (j.contains("tau_obj_c")) {
        m.tau_obj = celsius_to_kelvin(get_or(j, "tau_obj_c", 0.0));
    } else if (j.contains("ratio")) {
        try {
            const double e = m.emissivity;
            m = MaterialEnv::from_ratio(m.eta, m.tau_env, get_or(j, "ratio", 0.0) * e);
            m.emissivity = e;
        } catch (const std::domain_error& e) {
            throw DataError(std::string("scene: ") + e.what());
        }
    } else {
        throw DataError("scene: need 'tau_obj_c' or 'ratio'");
    }

    if (j.contains("pose")) {
        const json& p = j.at("pose");
        const Eigen::Vector3d r = vec3(p, "rotation_deg", Eigen::Vector3d::Zero());
        out.scene.pose = RigidTransform::from_euler_deg(r[0], r[1], r[2], vec3(p, "translation", Eigen::Vector3d::Zero()));
    }
    const auto res = require<std::vector<int>>(j, "resolution", "scene");
    if (res.size() != 2) throw DataError("scene: 'resolution' must be [width, height]");
    out.scene.width = res[0];
    out.scene.height = res[1];
    out.scene.use_bvh = get_or(j, "use_bvh", true);
    out.projection = j.contains("projection") ? projection_parse(j.at("projection")) : ProjectionModel{};

    if (j.contains("camera")) out.camera = camera_parse(j.at("camera"));
    if (j.contains("angles_deg")) {
        std::vector<double> a;
        for (double d : get_or<std::vector<double>>(j, "angles_deg", {})) a.push_back(deg2rad(d));
        out.angles = a;
    }
    if (j.contains("tau_ref_c")) out.tau_ref = celsius_to_kelvin(get_or(j, "tau_ref_c", 0.0));
    if (j.contains("seed")) out.seed = get_or<std::uint64_t>(j, "seed", 0);

    try {
        out.scene.validate();
    } catch (const std::exception& e) {
        throw DataError(std::string("scene: ") + e.what());
    }
    return out;
}

SceneFile load_scene(const fs::path& path) {
    return parse_scene_json(read_text_file(path), path.parent_path());
}

std::string camera_to_json(const CameraModel& cam) { return camera_json(cam).dump(2); }
CameraModel camera_from_json(const std::string& text) { return camera_parse(parse(text, "camera")); }

std::string calibration_to_json(const CalibrationResult& cal) { return calibration_json(cal).dump(2); }
CalibrationResult calibration_from_json(const std::string& text) {
    return calibration_parse(parse(text, "calibration"));
}

std::string projection_to_json(const ProjectionModel& proj) { return projection_json(proj).dump(2); }
ProjectionModel projection_from_json(const std::string& text) { return projection_parse(parse(text, "projection")); }

const std::vector<std::string>& SessionManifest::role(const std::string& name, std::size_t expected) const {
    const auto it = files.find(name);
    if (it == files.end()) throw DataError("manifest: no '" + name + "' files recorded");
    if (expected > 0 && it->second.size() != expected) {
        throw DataError("manifest: role '" + name + "' has " + std::to_string(it->second.size()) +
                        " files, expected " + std::to_string(expected));
    }
    return it->second;
}

void SessionManifest::validate_counts() const {
    if (auto it = files.find("raw"); it != files.end() && it->second.size() != angles_deg.size()) {
        throw DataError("manifest: " + std::to_string(angles_deg.size()) + " angles but " +
                        std::to_string(it->second.size()) + " raw images");
    }
    if (auto it = files.find("diff"); it != files.end() && it->second.size() != angles_deg.size()) {
        throw DataError("manifest: " + std::to_string(angles_deg.size()) + " angles but " +
                        std::to_string(it->second.size()) + " difference images");
    }
}

std::string manifest_to_json(const SessionManifest& m) {
    json j;
    j["version"] = m.version;
    j["scene"] = m.scene;
    j["camera"] = camera_json(m.camera);
    j["projection"] = projection_json(m.projection);
    j["angles_deg"] = m.angles_deg;
    j["tau_ref_k"] = m.tau_ref;
    j["seed"] = m.seed;
    if (m.calibration) j["calibration"] = calibration_json(*m.calibration);
    if (m.condition_number) j["condition_number"] = *m.condition_number;
    j["files"] = m.files;
    return j.dump(2);
}

SessionManifest manifest_from_json(const std::string& text) {
    const json j = parse(text, "manifest");
    SessionManifest m;
    m.version = require<int>(j, "version", "manifest");
    if (m.version != 1) throw DataError("manifest: unsupported version " + std::to_string(m.version));
    m.scene = get_or<std::string>(j, "scene", "");
    m.camera = j.contains("camera") ? camera_parse(j.at("camera")) : CameraModel{};
    m.projection = j.contains("projection") ? projection_parse(j.at("projection")) : ProjectionModel{};
    m.angles_deg = require<std::vector<double>>(j, "angles_deg", "manifest");
    m.tau_ref = require<double>(j, "tau_ref_k", "manifest");
    m.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("calibration")) m.calibration = calibration_parse(j.at("calibration"));
    if (j.contains("condition_number")) m.condition_number = get_or(j, "condition_number", 0.0);
    m.files = get_or<std::map<std::string, std::vector<std::string>>>(j, "files", {});
    m.validate_counts();
    return m;
}

SessionManifest load_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    if (!fs::exists(path)) throw DataError("no manifest.json in '" + dir.string() + "'");
    SessionManifest m = manifest_from_json(read_text_file(path));
    for (const auto& [role, list] : m.files) {
        for (const auto& f : list) {
            if (!fs::exists(dir / f)) throw DataError("manifest: " + role + " file '" + f + "' does not exist");
        }
    }
    return m;
}

void save_manifest(const SessionManifest& m, const fs::path& dir) {
    write_text_file(dir / "manifest.json", manifest_to_json(m) + "\n");
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

void write_normal_png(const NormalMap& normals, const fs::path& path) {
    const int w = normals.width(), h = normals.height();
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw DataError("cannot write '" + path.string() + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("PNG encoding failed for '" + path.string() + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = normals.mask(x, y) ? normals.normals.at(x, y, c) * 0.5 + 0.5 : 0.0;
                row[static_cast<std::size_t>(x) * 3 + c] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

std::string error_report_to_json(const ErrorReport& r) {
    const json j = {{"mean", r.mean},
                    {"median", r.median},
                    {"rmse", r.rmse},
                    {"accuracy_11_25", r.accuracy_11_25},
                    {"accuracy_22_5", r.accuracy_22_5},
                    {"accuracy_30", r.accuracy_30},
                    {"n_pixels", r.n_pixels}};
    return j.dump(2);
}

}  // namespace thermopol
