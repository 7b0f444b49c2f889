/**
 * @file io.hpp
 * @brief JSON documents (scene, calibration, session manifest) and PNG previews.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermopol/calibration.hpp"
#include "thermopol/imaging.hpp"
#include "thermopol/metrics.hpp"
#include "thermopol/normal_estimation.hpp"
#include "thermopol/simulator.hpp"

namespace thermopol {

/// Malformed or inconsistent input data (as opposed to command-line misuse).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scene file plus the optional acquisition settings it may carry.
struct SceneFile {
    SceneSpec scene;
    ProjectionModel projection;
    std::optional<CameraModel> camera;
    std::optional<std::vector<double>> angles;  // radians
    std::optional<double> tau_ref;              // kelvin
    std::optional<std::uint64_t> seed;
};

/// Parses the scene JSON. Temperatures are given in Celsius ("tau_obj_c",
/// "tau_env_c", "tau_ref_c") and converted to kelvin. Mesh paths are resolved
/// relative to base_dir. Throws DataError.
SceneFile parse_scene_json(const std::string& text, const std::filesystem::path& base_dir = {});
SceneFile load_scene(const std::filesystem::path& path);

std::string camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const std::string& text);

/// {"c": float, "k": float, "r2": float, "method": "composite"|"polarized-source"}
std::string calibration_to_json(const CalibrationResult& cal);
CalibrationResult calibration_from_json(const std::string& text);

std::string projection_to_json(const ProjectionModel& proj);
ProjectionModel projection_from_json(const std::string& text);

/// Session directory index. File references are relative to the manifest directory.
struct SessionManifest {
    int version = 1;
    std::string scene;
    CameraModel camera;
    ProjectionModel projection;
    std::vector<double> angles_deg;
    double tau_ref = 0.0;  // kelvin
    std::uint64_t seed = 0;
    std::optional<CalibrationResult> calibration;
    std::optional<double> condition_number;
    /// Role -> file list. Roles: raw, reference, diff, mask, gt_normals, gt_mask,
    /// gt_zenith, gt_stokes, stokes, stokes_mask, normals, confidence, normals_png.
    std::map<std::string, std::vector<std::string>> files;

    /// Throws DataError when a role is missing or holds the wrong number of files.
    const std::vector<std::string>& role(const std::string& name, std::size_t expected = 0) const;
    /// Throws DataError when the angle count does not match the raw image count.
    void validate_counts() const;
};

std::string manifest_to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const std::string& text);

/// Reads the manifest and checks that every referenced file exists.
SessionManifest load_manifest(const std::filesystem::path& dir);
void save_manifest(const SessionManifest& m, const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// 8-bit RGB preview with channel = n * 0.5 + 0.5; pixels outside the mask are black.
void write_normal_png(const NormalMap& normals, const std::filesystem::path& path);

/// Report as a JSON object with the ErrorReport field names.
std::string error_report_to_json(const ErrorReport& r);

}  // namespace thermopol
