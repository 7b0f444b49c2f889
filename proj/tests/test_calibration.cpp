#include <gtest/gtest.h>

#include <cmath>

#include "thermopol/calibration.hpp"

using namespace thermopol;

namespace {

std::vector<CalibrationShot> blackbody_series(const CameraModel& cam, bool noise, std::uint64_t seed,
                                              const std::vector<double>& psis_deg = {0, 30, 60, 90, 120, 150}) {
    std::vector<CalibrationShot> shots;
    std::uint64_t n = 0;
    for (double beta : {20.0, 40.0, 60.0, 80.0})
        for (double psi : psis_deg)
            shots.push_back(simulate_calibration_shot(deg2rad(psi), celsius_to_kelvin(23.0), celsius_to_kelvin(beta), cam,
                                                      16, 16, noise, derive_seed(seed, n++)));
    return shots;
}

}  // namespace

TEST(BlackbodyStokes, Values) {
    const StokesVector s = blackbody_stokes(300.0);
    EXPECT_NEAR(s.s0, 459.30, 0.01);
    EXPECT_EQ(s.s1, 0.0);
    EXPECT_EQ(s.s2, 0.0);
    EXPECT_EQ(blackbody_stokes(0.0).s0, 0.0);
}

TEST(CalibrateGain, NoiselessRecoversC) {
    CameraModel cam;
    cam.c = 1.7;
    cam.k = 0.95;
    cam.offset_base = 30.0;
    cam.offset_pol = 2.0;
    const GainFit g = calibrate_gain(blackbody_series(cam, false, 0));
    EXPECT_NEAR(gain_from_composite(g.composite_gain, cam.k), 1.7, 1.7e-6);
    EXPECT_GE(g.r2, 0.999);
    EXPECT_EQ(g.n_pairs, 4);
}

TEST(CalibrateGain, NeedsTwoPairs) {
    CameraModel cam;
    std::vector<CalibrationShot> shots = {
        simulate_calibration_shot(0.0, 296.15, 320.0, cam, 4, 4, false, 0)};
    EXPECT_THROW(calibrate_gain(shots), std::invalid_argument);
}

TEST(CalibrateResponse, NoiselessRecoversK) {
    CameraModel cam;
    cam.c = 1.7;
    cam.k = 0.95;
    const ResponseFit f = calibrate_response(blackbody_series(cam, false, 0));
    EXPECT_NEAR(f.k, 0.95, 1e-9);
    EXPECT_NEAR(f.c, 1.7, 1e-8);
    EXPECT_FALSE(f.k_clamped);
    const ResponseFit lin = solve_response_linear(blackbody_series(cam, false, 0));
    EXPECT_NEAR(lin.k, 0.95, 1e-9);
    EXPECT_NEAR(lin.c, 1.7, 1e-8);
}

TEST(CalibrateResponse, IdealSensorFlatGain) {
    CameraModel cam;
    cam.c = 2.0;
    const ResponseFit f = calibrate_response(blackbody_series(cam, false, 0));
    ASSERT_EQ(f.gain_factors.size(), 6u);
    for (const AngleGain& g : f.gain_factors) EXPECT_NEAR(g.m, 1.0, 1e-9);
}

TEST(CalibrateResponse, GainFactorShape) {
    CameraModel cam;
    cam.k = 0.9;
    const ResponseFit f = calibrate_response(blackbody_series(cam, false, 0));
    for (const AngleGain& g : f.gain_factors) {
        EXPECT_NEAR(g.m, ((1 + 0.9) + (1 - 0.9) * std::cos(2 * g.psi)) / 2, 1e-9);
    }
}

TEST(CalibrateResponse, NoisyWithinTolerance) {
    CameraModel cam;
    cam.c = 1.7;
    cam.k = 0.95;
    cam.noise_sigma = 0.5;
    const ResponseFit f = calibrate_response(blackbody_series(cam, true, 42));
    EXPECT_NEAR(f.k, 0.95, 0.005);
    EXPECT_NEAR(f.c, 1.7, 1.7 * 0.005);
}

TEST(CalibrateResponse, NeedsAngleDiversity) {
    CameraModel cam;
    EXPECT_THROW(calibrate_response(blackbody_series(cam, false, 0, {0, 180})), std::invalid_argument);
}

TEST(Calibrate, PolarizedSource) {
    CameraModel cam;
    cam.c = 1.2;
    cam.k = 0.92;
    std::vector<CalibrationShot> shots;
    std::uint64_t n = 0;
    for (double psi : {0.0, 45.0, 90.0, 135.0})
        shots.push_back(simulate_calibration_shot(deg2rad(psi), 296.15, 340.0, cam, 8, 8, false, n++, 0.8, 0.0));
    const CalibrationResult r = calibrate(shots);
    EXPECT_EQ(r.method, CalibrationMethod::PolarizedSource);
    EXPECT_NEAR(r.c, 1.2, 1e-8);
    EXPECT_NEAR(r.k, 0.92, 1e-8);
}

TEST(Calibrate, MethodNames) {
    EXPECT_EQ(to_string(CalibrationMethod::Composite), "composite");
    EXPECT_EQ(calibration_method_from_string("polarized-source"), CalibrationMethod::PolarizedSource);
    EXPECT_THROW(calibration_method_from_string("nope"), std::invalid_argument);
}
