#include "thermopol/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "thermopol/calibration.hpp"
#include "thermopol/io.hpp"
#include "thermopol/metrics.hpp"
#include "thermopol/normal_estimation.hpp"
#include "thermopol/pfm.hpp"
#include "thermopol/reconstruction.hpp"
#include "thermopol/simulator.hpp"

namespace thermopol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string indexed(const std::string& stem, std::size_t i) {
    std::ostringstream os;
    os << stem << '_' << std::setw(3) << std::setfill('0') << i << ".pfm";
    return os.str();
}

Image read_single_channel(const fs::path& path) {
    Image img = pfm_read(path.string());
    if (img.channels() != 1) throw DataError("'" + path.string() + "' must be a 1-channel PFM");
    return img;
}

std::vector<double> parse_angle_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(deg2rad(std::stod(tok)));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--angles", "bad angle '" + tok + "'");
        }
    }
    return out;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string scene;
    std::string out;
    std::string angles;
    std::optional<double> tau_ref_c;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise;
    bool calibration_shots = false;
};

void write_calibration_shots(const CameraModel& cam, std::uint64_t seed, const fs::path& dir, SessionManifest& m) {
    fs::create_directories(dir / "calibration");
    json index = json::array();
    const double tau_alpha = celsius_to_kelvin(23.0);
    const std::vector<double> betas_c = {20.0, 35.0, 50.0, 65.0, 80.0};
    const std::vector<double> psis_deg = {0.0, 30.0, 60.0, 90.0, 120.0, 150.0};
    std::vector<std::string> files;
    std::size_t n = 0;
    for (double beta_c : betas_c) {
        for (double psi_deg : psis_deg) {
            const CalibrationShot shot = simulate_calibration_shot(deg2rad(psi_deg), tau_alpha, celsius_to_kelvin(beta_c),
                                                                   cam, 32, 32, true, derive_seed(seed, 1000 + n));
            const std::string rel = "calibration/" + indexed("shot", n);
            pfm_write(shot.diff, (dir / rel).string());
            files.push_back(rel);
            index.push_back({{"file", indexed("shot", n)},
                             {"psi_deg", psi_deg},
                             {"tau_alpha_c", 23.0},
                             {"tau_beta_c", beta_c}});
            ++n;
        }
    }
    write_text_file(dir / "calibration" / "shots.json", json{{"shots", index}}.dump(2) + "\n");
    m.files["calibration_shots"] = files;
    m.files["calibration_index"] = {"calibration/shots.json"};
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    SceneFile sf = load_scene(a.scene);
    CameraModel cam = sf.camera.value_or(CameraModel{});
    if (a.noise) cam.noise_sigma = *a.noise;
    std::vector<double> angles = sf.angles.value_or(std::vector<double>{0.0, kPi / 4, kPi / 2, 3 * kPi / 4});
    if (!a.angles.empty()) angles = parse_angle_list(a.angles);
    const double tau_ref = a.tau_ref_c ? celsius_to_kelvin(*a.tau_ref_c) : sf.tau_ref.value_or(celsius_to_kelvin(30.0));
    const std::uint64_t seed = a.seed ? *a.seed : sf.seed.value_or(0);

    const SimulatedSession sim = render_session(sf.scene, sf.projection, cam, angles, tau_ref, seed);

    const fs::path dir(a.out);
    for (const char* sub : {"raw", "diff", "gt"}) fs::create_directories(dir / sub);
    SessionManifest m;
    m.scene = fs::absolute(a.scene).string();
    m.camera = cam;
    m.projection = sf.projection;
    m.tau_ref = tau_ref;
    m.seed = seed;
    for (double psi : angles) m.angles_deg.push_back(rad2deg(psi));

    auto put = [&](const std::string& role, const std::string& rel, const Image& img) {
        pfm_write(img, (dir / rel).string());
        m.files[role].push_back(rel);
    };
    for (std::size_t j = 0; j < angles.size(); ++j) {
        put("raw", "raw/" + indexed("scene", j), sim.scene_raw[j].pixels);
        put("reference", "raw/" + indexed("reference", j), sim.reference_raw[j].pixels);
        put("diff", "diff/" + indexed("diff", j), sim.session.diffs[j].diff);
    }
    put("mask", "mask.pfm", sim.session.mask.to_image());
    put("gt_normals", "gt/normals.pfm", sim.truth.normals);
    put("gt_mask", "gt/mask.pfm", sim.truth.mask.to_image());
    put("gt_zenith", "gt/zenith.pfm", sim.truth.zenith);
    put("gt_stokes", "gt/stokes_s0.pfm", sim.stokes.s0);
    put("gt_stokes", "gt/stokes_s1.pfm", sim.stokes.s1);
    put("gt_stokes", "gt/stokes_s2.pfm", sim.stokes.s2);
    if (a.calibration_shots) write_calibration_shots(cam, seed, dir, m);
    save_manifest(m, dir);
    out << "wrote session with " << angles.size() << " polarizer angles to " << dir.string() << "\n";
    return kExitOk;
}

// --- calibrate -------------------------------------------------------------

int run_calibrate(const std::string& shots_dir, const std::string& out_path, std::ostream& out) {
    const fs::path dir(shots_dir);
    const json index = json::parse(read_text_file(dir / "shots.json"), nullptr, false);
    if (index.is_discarded() || !index.contains("shots")) throw DataError("shots.json: expected {\"shots\": [...]}");
    std::vector<CalibrationShot> shots;
    for (const auto& e : index.at("shots")) {
        CalibrationShot s;
        try {
            s.psi = deg2rad(e.at("psi_deg").get<double>());
            s.tau_alpha = celsius_to_kelvin(e.at("tau_alpha_c").get<double>());
            s.tau_beta = celsius_to_kelvin(e.at("tau_beta_c").get<double>());
            s.source_dolp = e.value("source_dolp", 0.0);
            s.source_aolp = deg2rad(e.value("source_aolp_deg", 0.0));
            s.diff = read_single_channel(dir / e.at("file").get<std::string>());
        } catch (const json::exception& ex) {
            throw DataError(std::string("shots.json: ") + ex.what());
        }
        shots.push_back(std::move(s));
    }
    const CalibrationResult cal = calibrate(shots);
    const std::string text = calibration_to_json(cal) + "\n";
    if (out_path.empty()) {
        out << text;
    } else {
        write_text_file(out_path, text);
        out << "c = " << cal.c << ", k = " << cal.k << " (" << to_string(cal.method) << ", R^2 = " << cal.r2 << ")\n";
    }
    return kExitOk;
}

// --- reconstruct -----------------------------------------------------------

int run_reconstruct(const std::string& session_dir, const std::string& calibration_path, std::ostream& out,
                    std::ostream& err) {
    const fs::path dir(session_dir);
    SessionManifest m = load_manifest(dir);
    const CalibrationResult cal = calibration_from_json(read_text_file(calibration_path));

    CaptureSession session;
    session.tau_ref = m.tau_ref;
    session.cam = m.camera;
    session.cam.c = cal.c;
    session.cam.k = cal.k;
    const auto& diffs = m.role("diff", m.angles_deg.size());
    for (std::size_t j = 0; j < diffs.size(); ++j) {
        session.diffs.push_back({deg2rad(m.angles_deg[j]), read_single_channel(dir / diffs[j])});
    }
    session.mask = Mask::from_image(read_single_channel(dir / m.role("mask", 1).front()));

    Reconstruction rec;
    try {
        rec = reconstruct_stokes(session);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (rec.ill_conditioned) {
        err << "warning: condition number of K^T K is " << rec.condition_number << "\n";
    }

    fs::create_directories(dir / "stokes");
    m.files["stokes"].clear();
    for (const auto& [name, img] : {std::pair{"stokes/s0.pfm", &rec.stokes.s0}, std::pair{"stokes/s1.pfm", &rec.stokes.s1},
                                    std::pair{"stokes/s2.pfm", &rec.stokes.s2}}) {
        pfm_write(*img, (dir / name).string());
        m.files["stokes"].push_back(name);
    }
    pfm_write(rec.stokes.mask.to_image(), (dir / "stokes/mask.pfm").string());
    m.files["stokes_mask"] = {"stokes/mask.pfm"};
    m.calibration = cal;
    m.condition_number = rec.condition_number;
    save_manifest(m, dir);
    out << "reconstructed Stokes map (condition number " << rec.condition_number << ")\n";
    return kExitOk;
}

// --- estimate --------------------------------------------------------------

struct EstimateArgs {
    std::string session;
    double eta = 1.8;
    double ratio = 0.7;
    std::string mode = "emission";
    double dolp_floor = 0.005;
    int samples = kDefaultCurveSamples;
};

int run_estimate(const EstimateArgs& a, std::ostream& out) {
    const fs::path dir(a.session);
    SessionManifest m = load_manifest(dir);
    const auto& files = m.role("stokes", 3);
    StokesMap stokes;
    stokes.s0 = read_single_channel(dir / files[0]);
    stokes.s1 = read_single_channel(dir / files[1]);
    stokes.s2 = read_single_channel(dir / files[2]);
    stokes.mask = Mask::from_image(read_single_channel(dir / m.role("stokes_mask", 1).front()));
    if (!stokes.s0.same_shape(stokes.s1) || !stokes.s0.same_shape(stokes.s2) || !stokes.mask.same_shape(stokes.s0)) {
        throw DataError("Stokes images differ in shape");
    }

    EstimationParams params;
    params.mode = emission_mode_from_string(a.mode);
    params.dolp_floor = a.dolp_floor;
    NormalEstimate est;
    try {
        params.curve = build_dolp_curve(a.eta, a.ratio, a.samples);
        est = estimate_normals(stokes, params, m.projection);
    } catch (const std::domain_error& e) {
        throw DataError(e.what());
    }

    fs::create_directories(dir / "normals");
    pfm_write(est.camera.normals, (dir / "normals/normals.pfm").string());
    pfm_write(est.confidence, (dir / "normals/confidence.pfm").string());
    write_normal_png(est.camera, dir / "normals/normals.png");
    m.files["normals"] = {"normals/normals.pfm"};
    m.files["confidence"] = {"normals/confidence.pfm"};
    m.files["normals_png"] = {"normals/normals.png"};
    save_manifest(m, dir);
    out << "estimated normals for " << stokes.mask.count() << " pixels\n";
    return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
    std::string session;
    std::string est;
    std::string gt;
    std::string mask;
    std::string json_out;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    fs::path est_path(a.est), gt_path(a.gt), mask_path(a.mask);
    if (!a.session.empty()) {
        const fs::path dir(a.session);
        const SessionManifest m = load_manifest(dir);
        if (est_path.empty()) est_path = dir / m.role("normals", 1).front();
        if (gt_path.empty()) gt_path = dir / m.role("gt_normals", 1).front();
        if (mask_path.empty()) mask_path = dir / m.role("gt_mask", 1).front();
    }
    if (est_path.empty() || gt_path.empty()) throw CLI::RequiredError("--est and --gt (or --session)");

    const NormalMap est{pfm_read(est_path.string()), {}, NormalSpace::Camera};
    const NormalMap gt{pfm_read(gt_path.string()), {}, NormalSpace::Camera};
    if (est.normals.channels() != 3 || gt.normals.channels() != 3) throw DataError("normal maps must be 3-channel PFMs");
    if (est.width() != gt.width() || est.height() != gt.height()) {
        throw DataError("shape mismatch: estimate is " + std::to_string(est.width()) + "x" + std::to_string(est.height()) +
                        ", ground truth is " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    }
    const Mask mask = mask_path.empty() ? Mask(est.width(), est.height(), true)
                                        : Mask::from_image(read_single_channel(mask_path));
    ErrorReport r;
    try {
        r = summarize(angular_error_map(est, gt, mask), mask);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }

    const std::string text = error_report_to_json(r) + "\n";
    if (!a.json_out.empty()) write_text_file(a.json_out, text);
    else out << text;

    out << std::fixed << std::setprecision(2);
    out << "  pixels   mean  median    rmse  <11.25  <22.5    <30\n";
    out << std::setw(8) << r.n_pixels << std::setw(7) << r.mean << std::setw(8) << r.median << std::setw(8) << r.rmse
        << std::setw(8) << r.accuracy_11_25 << std::setw(7) << r.accuracy_22_5 << std::setw(7) << r.accuracy_30 << "\n";
    return kExitOk;
}

// --- curve -----------------------------------------------------------------

int run_curve(double eta, double ratio, int samples, const std::string& out_path, std::ostream& out) {
    DolpCurve curve;
    try {
        curve = build_dolp_curve(eta, ratio, samples);
    } catch (const std::domain_error& e) {
        throw DataError(e.what());
    }
    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "theta_deg,dolp\n";
    for (std::size_t i = 0; i < curve.theta.size(); ++i) csv << rad2deg(curve.theta[i]) << ',' << curve.rho[i] << '\n';
    if (curve.degenerate) {
        csv << "# theta_peak_deg=undefined\n";
    } else {
        csv << "# theta_peak_deg=" << rad2deg(curve.theta_peak) << '\n';
    }
    if (out_path.empty()) out << csv.str();
    else write_text_file(out_path, csv.str());
    return kExitOk;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LWIR shape-from-polarization pipeline", "thermopol"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Render a scene into a capture session directory");
    simulate->add_option("--scene", sim.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out, "Output session directory")->required();
    simulate->add_option("--angles", sim.angles, "Comma-separated polarizer angles in degrees");
    simulate->add_option("--tau-ref-c", sim.tau_ref_c, "Reference blackbody temperature (Celsius)");
    simulate->add_option("--seed", sim.seed, "Noise seed");
    simulate->add_option("--noise", sim.noise, "Sensor noise sigma (DN)")->check(CLI::NonNegativeNumber);
    simulate->add_flag("--calibration-shots", sim.calibration_shots, "Also write blackbody calibration shots");

    std::string shots_dir, cal_out;
    auto* calib = app.add_subcommand("calibrate", "Estimate camera gain and polarimetric response");
    calib->add_option("--shots", shots_dir, "Directory holding shots.json and shot images")
        ->required()
        ->check(CLI::ExistingDirectory);
    calib->add_option("--out", cal_out, "Calibration JSON output (stdout when omitted)");

    std::string rec_session, rec_cal;
    auto* recon = app.add_subcommand("reconstruct", "Least-squares Stokes reconstruction");
    recon->add_option("--session", rec_session, "Session directory")->required()->check(CLI::ExistingDirectory);
    recon->add_option("--calibration", rec_cal, "Calibration JSON")->required()->check(CLI::ExistingFile);

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Model-based normal estimation from the Stokes map");
    estimate->add_option("--session", est.session, "Session directory")->required()->check(CLI::ExistingDirectory);
    estimate->add_option("--eta", est.eta, "Refractive index")->capture_default_str();
    estimate->add_option("--ratio", est.ratio, "Reflected to emitted radiance ratio L_R/L_E")->capture_default_str();
    estimate->add_option("--mode", est.mode, "emission or reflection")
        ->check(CLI::IsMember({"emission", "reflection", "emission-dominant", "reflection-dominant"}))
        ->capture_default_str();
    estimate->add_option("--dolp-floor", est.dolp_floor, "Minimum informative DoLP")->capture_default_str();
    estimate->add_option("--samples", est.samples, "DoLP curve samples")->capture_default_str();

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Angular error of estimated against ground-truth normals");
    evaluate->add_option("--session", ev.session, "Session directory (supplies defaults for the files)");
    evaluate->add_option("--est", ev.est, "Estimated normals PFM");
    evaluate->add_option("--gt", ev.gt, "Ground-truth normals PFM");
    evaluate->add_option("--mask", ev.mask, "Evaluation mask PFM");
    evaluate->add_option("--json", ev.json_out, "Write the report JSON here instead of stdout");

    double c_eta = 0.0, c_ratio = 0.0;
    int c_samples = kDefaultCurveSamples;
    std::string c_out;
    auto* curve = app.add_subcommand("curve", "Emit the zenith-to-DoLP curve as CSV");
    curve->add_option("--eta", c_eta, "Refractive index")->required();
    curve->add_option("--ratio", c_ratio, "Reflected to emitted radiance ratio L_R/L_E")->required();
    curve->add_option("--samples", c_samples, "Number of samples")->capture_default_str();
    curve->add_option("--out", c_out, "CSV output (stdout when omitted)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return run_simulate(sim, out);
        if (*calib) return run_calibrate(shots_dir, cal_out, out);
        if (*recon) return run_reconstruct(rec_session, rec_cal, out, err);
        if (*estimate) return run_estimate(est, out);
        if (*evaluate) return run_evaluate(ev, out);
        if (*curve) return run_curve(c_eta, c_ratio, c_samples, c_out, out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace thermopol
