// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thermopol/calibration.hpp"
#include "thermopol/metrics.hpp"
#include "thermopol/normal_estimation.hpp"
#include "thermopol/pfm.hpp"
#include "thermopol/reconstruction.hpp"
#include "thermopol/simulator.hpp"

using namespace thermopol;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + (v.size() - 1) / 2, v.end());
    return v[(v.size() - 1) / 2];
}

SceneSpec sphere_scene(int n, const MaterialEnv& material) {
    SceneSpec s;
    s.geometry = Sphere{Eigen::Vector3d(0, 0, -10), 1.0};
    s.material = material;
    s.width = s.height = n;
    return s;
}

ProjectionModel sphere_projection(int n) { return ProjectionModel::orthographic(2.2 / n); }

CameraModel test_camera() {
    CameraModel cam;
    cam.c = 1.7;
    cam.k = 0.95;
    cam.offset_base = 120.0;
    cam.offset_pol = 6.0;
    cam.offset_phase = 0.4;
    return cam;
}

const std::vector<double> kFourAngles = {0.0, kPi / 4, kPi / 2, 3 * kPi / 4};

std::vector<double> uniform_angles(int n) {
    std::vector<double> a;
    for (int i = 0; i < n; ++i) a.push_back(i * kPi / n);
    return a;
}

// Full pipeline: render raw frames, reconstruct with the true calibration, estimate.
struct PipelineRun {
    SimulatedSession sim;
    Reconstruction rec;
    NormalEstimate est;
};

PipelineRun run_pipeline(const SceneSpec& scene, const ProjectionModel& proj, const CameraModel& cam,
                         const std::vector<double>& angles, bool noise, std::uint64_t seed, double ratio,
                         EmissionMode mode) {
    PipelineRun r;
    RenderOptions opt;
    opt.with_noise = noise;
    r.sim = render_session(scene, proj, cam, angles, celsius_to_kelvin(30.0), seed, opt);
    r.rec = reconstruct_stokes(r.sim.session);
    EstimationParams p;
    p.curve = build_dolp_curve(1.8, ratio);
    p.mode = mode;
    r.est = estimate_normals(r.rec.stokes, p, proj);
    return r;
}

// Pixels with theta_gt <= 70 degrees and estimated DoLP >= 0.005.
Mask evaluation_mask(const PipelineRun& r) {
    const GroundTruth& gt = r.sim.truth;
    Mask m(gt.mask.width(), gt.mask.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            m.set(x, y, gt.mask(x, y) && gt.zenith.at(x, y) <= deg2rad(70.0) && r.est.dolp.at(x, y) >= 0.005);
    return m;
}

ErrorReport normal_report(const PipelineRun& r, const Mask& m) {
    const NormalMap gt{r.sim.truth.normals, r.sim.truth.mask, NormalSpace::Camera};
    return summarize(angular_error_map(r.est.camera, gt, m), m);
}

double azimuth_correct_fraction(const PipelineRun& r, const Mask& m) {
    std::size_t good = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m(x, y)) continue;
            const double d = std::remainder(r.est.azimuth.at(x, y) - r.sim.truth.azimuth.at(x, y), 2 * kPi);
            good += std::abs(d) < kHalfPi;
        }
    return static_cast<double>(good) / m.count();
}

// ---------------------------------------------------------------------------

Outcome energy_conservation() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> th(0.0, deg2rad(89.9)), et(1.3, 2.5);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double t = th(rng), e = et(rng);
        const FresnelPair r = fresnel_reflectance(t, e), tr = fresnel_transmittance(t, e);
        worst = std::max({worst, std::abs(r.p + tr.p - 1.0), std::abs(r.s + tr.s - 1.0)});
    }
    const double dt = seconds_since(t0);
    return {worst < 1e-12 && dt < 1.0, fmt("max |R+T-1| = %.3g (< 1e-12), %.3f s (< 1 s)", worst, dt)};
}

Outcome curve_peak() {
    const auto t0 = Clock::now();
    const DolpCurve c = build_dolp_curve(1.8, 0.7);
    bool monotone = true;
    for (std::size_t i = 1; i < c.theta.size() && c.theta[i] <= c.theta_peak; ++i) monotone &= c.rho[i] > c.rho[i - 1];
    const double dt = seconds_since(t0);
    const double peak = rad2deg(c.theta_peak);
    const bool in_band = std::abs(peak - 79.0) <= 2.0;
    std::string detail = fmt("ratio L_R/L_E = 0.7: theta_peak = %.3f deg (79 +/- 2), monotone below peak: %s, %.3f s",
                             peak, monotone ? "yes" : "no", dt);
    if (!in_band) {
        const DolpCurve alt = build_dolp_curve(1.8, 1.0 / 0.7);
        detail += fmt("; alternate ratio 1/0.7 gives %.3f deg", rad2deg(alt.theta_peak));
    }
    return {in_band && monotone && dt < 1.0, detail};
}

Outcome cancellation() {
    const int n = 128;
    const SceneSpec s = sphere_scene(n, MaterialEnv{1.8, 296.15, 296.15});
    const GroundTruth gt = render_ground_truth(s, sphere_projection(n));
    const StokesMap m = render_stokes(s, gt);
    double worst = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (gt.mask(x, y)) worst = std::max(worst, m.at(x, y).linear_magnitude() / m.at(x, y).s0);
    return {worst < 1e-12, fmt("max DoLP over %zu sphere pixels = %.3g (< 1e-12)", gt.mask.count(), worst)};
}

Outcome stokes_round_trip() {
    const int n = 256;
    const auto t0 = Clock::now();
    RenderOptions opt;
    opt.with_noise = false;
    opt.object_mask_only = false;
    const SimulatedSession sim = render_session(sphere_scene(n, MaterialEnv{1.8, 323.15, 296.15}), sphere_projection(n),
                                                test_camera(), kFourAngles, celsius_to_kelvin(30.0), 1, opt);
    const Reconstruction rec = reconstruct_stokes(sim.session);
    const double dt = seconds_since(t0);
    double worst = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const StokesVector a = rec.stokes.at(x, y), b = sim.stokes.at(x, y);
            const double err = std::max({std::abs(a.s0 - b.s0), std::abs(a.s1 - b.s1), std::abs(a.s2 - b.s2)});
            worst = std::max(worst, err / b.s0);
        }
    return {worst < 1e-9 && dt < 10.0,
            fmt("256x256, offsets %.0f/%.0f DN: max relative error = %.3g (< 1e-9), %.2f s (< 10 s)",
                test_camera().offset_base, test_camera().offset_pol, worst, dt)};
}

std::vector<CalibrationShot> calibration_series(const CameraModel& cam, bool noise, std::uint64_t seed) {
    std::vector<CalibrationShot> shots;
    std::uint64_t i = 0;
    for (double beta : {20.0, 35.0, 50.0, 65.0, 80.0})
        for (double psi : {0.0, 30.0, 60.0, 90.0, 120.0, 150.0})
            shots.push_back(simulate_calibration_shot(deg2rad(psi), celsius_to_kelvin(23.0), celsius_to_kelvin(beta),
                                                      cam, 32, 32, noise, derive_seed(seed, i++)));
    return shots;
}

Outcome calibration_recovery() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uc(0.5, 3.0), uk(0.5, 1.0);
    double worst_c = 0.0, worst_k = 0.0;
    for (int i = 0; i < 100; ++i) {
        CameraModel cam;
        cam.c = uc(rng);
        cam.k = uk(rng);
        cam.offset_base = 50.0;
        cam.offset_pol = 2.0;
        const CalibrationResult r = calibrate(calibration_series(cam, false, i));
        worst_c = std::max(worst_c, std::abs(r.c - cam.c) / cam.c);
        worst_k = std::max(worst_k, std::abs(r.k - cam.k) / cam.k);
    }

    CameraModel cam = test_camera();
    double lo = 1e300, hi = -1e300;
    for (const CalibrationShot& s : calibration_series(cam, false, 0)) {
        const double v = s.diff.data().front();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    cam.noise_sigma = 0.01 * (hi - lo);
    std::vector<double> ec, ek;
    for (std::uint64_t seed = 0; seed < 32; ++seed) {
        const CalibrationResult r = calibrate(calibration_series(cam, true, 1000 + seed));
        ec.push_back(std::abs(r.c - cam.c) / cam.c);
        ek.push_back(std::abs(r.k - cam.k));
    }
    const double mc = median(ec), mk = median(ek);
    const bool pass = worst_c < 1e-6 && worst_k < 1e-6 && mc < 0.005 && mk < 0.005;
    return {pass, fmt("noiseless max rel err c = %.2g, k = %.2g (< 1e-6); sigma = %.3g DN (1%% of span): "
                      "median |dc|/c = %.4f%% (< 0.5%%), median |dk| = %.5f (< 0.005)",
                      worst_c, worst_k, cam.noise_sigma, 100 * mc, mk)};
}

Outcome closed_loop_normals() {
    const int n = 256;
    const auto t0 = Clock::now();
    const PipelineRun r = run_pipeline(sphere_scene(n, MaterialEnv::from_ratio(1.8, 296.15, 0.7)), sphere_projection(n),
                                       test_camera(), kFourAngles, false, 1, 0.7, EmissionMode::EmissionDominant);
    const double dt = seconds_since(t0);
    const Mask m = evaluation_mask(r);
    const ErrorReport rep = normal_report(r, m);
    const double az = azimuth_correct_fraction(r, m);
    return {rep.mean < 2.0 && az >= 0.99 && dt < 30.0,
            fmt("%zu pixels: MAE = %.4f deg (< 2), azimuth correct = %.2f%% (>= 99%%), %.2f s (< 30 s)", rep.n_pixels,
                rep.mean, 100 * az, dt)};
}

Outcome image_count_trend() {
    const int n = 64;
    const SceneSpec scene = sphere_scene(n, MaterialEnv::from_ratio(1.8, 296.15, 0.7));
    const ProjectionModel proj = sphere_projection(n);
    CameraModel cam = test_camera();
    cam.noise_sigma = 2.0;
    const std::vector<int> counts = {4, 12, 30, 60};
    std::vector<double> stokes_err;
    std::vector<double> mae;
    for (int count : counts) {
        std::vector<double> per_seed, per_seed_mae;
        for (std::uint64_t seed = 0; seed < 32; ++seed) {
            const PipelineRun r = run_pipeline(scene, proj, cam, uniform_angles(count), true, 500 + seed, 0.7,
                                               EmissionMode::EmissionDominant);
            std::vector<double> rel;
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    if (!r.sim.truth.mask(x, y)) continue;
                    const StokesVector d = r.rec.stokes.at(x, y) - r.sim.stokes.at(x, y);
                    rel.push_back(std::sqrt(d.s0 * d.s0 + d.s1 * d.s1 + d.s2 * d.s2) / r.sim.stokes.at(x, y).s0);
                }
            per_seed.push_back(median(rel));
            const Mask m = evaluation_mask(r);
            per_seed_mae.push_back(normal_report(r, m).mean);
        }
        stokes_err.push_back(median(per_seed));
        mae.push_back(median(per_seed_mae));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < stokes_err.size(); ++i) decreasing &= stokes_err[i] < stokes_err[i - 1];
    std::string detail = fmt("sigma = %.1f DN, median relative Stokes error N=4/12/30/60: %.3g%% %.3g%% %.3g%% %.3g%% "
                             "(strictly decreasing: %s); normal MAE N=4 %.3f deg vs N=60 %.3f deg, gap %.3f deg",
                             cam.noise_sigma, 100 * stokes_err[0], 100 * stokes_err[1], 100 * stokes_err[2],
                             100 * stokes_err[3], decreasing ? "yes" : "no", mae[0], mae[3], mae[0] - mae[3]);
    return {decreasing, detail};
}

Outcome reflection_mode() {
    const int n = 256;
    const ProjectionModel proj = sphere_projection(n);
    const PipelineRun cool = run_pipeline(sphere_scene(n, MaterialEnv::from_ratio(1.8, 296.15, 1.4)), proj,
                                          test_camera(), kFourAngles, false, 1, 1.4, EmissionMode::ReflectionDominant);
    const PipelineRun heat = run_pipeline(sphere_scene(n, MaterialEnv::from_ratio(1.8, 296.15, 0.7)), proj,
                                          test_camera(), kFourAngles, false, 1, 0.7, EmissionMode::EmissionDominant);
    const Mask m = evaluation_mask(cool);
    const ErrorReport rep = normal_report(cool, m);
    std::vector<double> diffs;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!m(x, y) || heat.est.dolp.at(x, y) < 0.005) continue;
            // AoLP is pi-periodic, so the circular difference lives in [0, pi/2]
            diffs.push_back(std::abs(std::remainder(cool.est.aolp.at(x, y) - heat.est.aolp.at(x, y), kPi)));
        }
    const double md = median(diffs);
    return {rep.mean < 3.0 && std::abs(md - kHalfPi) <= 0.05,
            fmt("ratio 1.4, reflection-dominant: MAE = %.4f deg (< 3) over %zu pixels; median |AoLP_cool - AoLP_heated| "
                "= %.4f rad (pi/2 +/- 0.05)",
                rep.mean, rep.n_pixels, md)};
}

bool report_matches(const ErrorReport& r, const ErrorReport& want) {
    return r.mean == want.mean && r.median == want.median && r.rmse == want.rmse &&
           r.accuracy_11_25 == want.accuracy_11_25 && r.accuracy_22_5 == want.accuracy_22_5 &&
           r.accuracy_30 == want.accuracy_30 && r.n_pixels == want.n_pixels;
}

std::string pfm_bytes(const Image& img) {
    std::ostringstream os;
    pfm_write(img, os);
    return os.str();
}

Outcome metrics_and_formats() {
    // Constructed error maps with hand-computed reports.
    const Image constant(8, 8, 1, 5.0);
    const bool a = report_matches(summarize(constant, Mask(8, 8, true)), {5.0, 5.0, 5.0, 100.0, 100.0, 100.0, 64});
    Image half(4, 1);
    half.at(1, 0) = 20.0;
    half.at(3, 0) = 20.0;
    const bool b = report_matches(summarize(half, Mask(4, 1, true)), {10.0, 0.0, std::sqrt(200.0), 50.0, 100.0, 100.0, 4});
    Image spread(4, 1);
    spread.at(0, 0) = 3.0;
    spread.at(1, 0) = 12.0;
    spread.at(2, 0) = 24.0;
    spread.at(3, 0) = 45.0;
    const bool c = report_matches(summarize(spread, Mask(4, 1, true)),
                                  {21.0, 12.0, std::sqrt((9.0 + 144.0 + 576.0 + 2025.0) / 4.0), 25.0, 50.0, 75.0, 4});
    NormalMap n1{Image(2, 1, 3), Mask(2, 1, true), NormalSpace::Camera};
    NormalMap n2 = n1;
    n1.normals.at(0, 0, 2) = n1.normals.at(1, 0, 2) = 1.0;
    n2.normals.at(0, 0, 2) = 1.0;
    n2.normals.at(1, 0, 0) = 1.0;
    const Image ang = angular_error_map(n1, n2, n1.mask);
    const bool d = ang.at(0, 0) == 0.0 && std::abs(ang.at(1, 0) - 90.0) < 1e-12;
    const bool metrics_ok = a && b && c && d;

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(-1e4f, 1e4f);
    Image img(33, 17, 3);
    for (double& v : img.data()) v = u(rng);
    std::istringstream in(pfm_bytes(img));
    const bool pfm_ok = pfm_read(in).data() == img.data();

    const int n = 48;
    CameraModel cam = test_camera();
    cam.noise_sigma = 1.5;
    auto render = [&] {
        return render_session(sphere_scene(n, MaterialEnv{}), sphere_projection(n), cam, kFourAngles, 303.15, 42);
    };
    const SimulatedSession s1 = render(), s2 = render();
    bool det_ok = true;
    for (std::size_t j = 0; j < kFourAngles.size(); ++j) {
        det_ok &= pfm_bytes(s1.scene_raw[j].pixels) == pfm_bytes(s2.scene_raw[j].pixels);
        det_ok &= pfm_bytes(s1.session.diffs[j].diff) == pfm_bytes(s2.session.diffs[j].diff);
    }

    return {metrics_ok && pfm_ok && det_ok,
            fmt("hand-computed reports exact: %s; PFM round trip bit-exact: %s; seeded re-run byte-identical: %s",
                metrics_ok ? "yes" : "no", pfm_ok ? "yes" : "no", det_ok ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"energy conservation", energy_conservation},
        {"DoLP curve peak", curve_peak},
        {"polarization cancellation", cancellation},
        {"Stokes round trip", stokes_round_trip},
        {"calibration recovery", calibration_recovery},
        {"closed-loop normal estimation", closed_loop_normals},
        {"image-count trend", image_count_trend},
        {"reflection-dominant mode", reflection_mode},
        {"metrics and formats", metrics_and_formats},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
