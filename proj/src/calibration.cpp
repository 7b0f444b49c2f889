#include "thermopol/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace thermopol {

namespace {

constexpr double kSameAngle = 1e-9;
constexpr double kSameTemperature = 1e-9;

double image_mean(const Image& img) {
    if (img.empty()) throw std::invalid_argument("calibration: empty difference image");
    const auto& d = img.data();
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

bool same_angle(double a, double b) {
    return std::abs(wrap_angle(a - b + kHalfPi, kPi) - kHalfPi) < kSameAngle;
}

struct Sample {
    double psi;
    double cos2;
    double u;  // predicted radiance seen through the polarizer, before camera gain
    double y;  // measured mean difference
};

std::vector<Sample> make_samples(const std::vector<CalibrationShot>& shots) {
    std::vector<Sample> out;
    out.reserve(shots.size());
    for (const auto& shot : shots) {
        const StokesVector ds = shot.delta_stokes();
        const double c2 = std::cos(2.0 * shot.psi);
        const double s2 = std::sin(2.0 * shot.psi);
        out.push_back({shot.psi, c2, ds.s0 + ds.s1 * c2 + ds.s2 * s2, image_mean(shot.diff)});
    }
    return out;
}

std::vector<double> distinct_angles(const std::vector<Sample>& samples) {
    std::vector<double> angles;
    for (const auto& s : samples) {
        const bool seen = std::any_of(angles.begin(), angles.end(), [&](double a) { return same_angle(a, s.psi); });
        if (!seen) angles.push_back(wrap_angle(s.psi, kPi));
    }
    return angles;
}

double model_value(const Sample& s, double c, double k) { return 0.25 * c * ((1.0 + s.cos2) + k * (1.0 - s.cos2)) * s.u; }

double r_squared(const std::vector<Sample>& samples, double c, double k) {
    double mean_y = 0.0;
    for (const auto& s : samples) mean_y += s.y;
    mean_y /= static_cast<double>(samples.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& s : samples) {
        const double r = s.y - model_value(s, c, k);
        ss_res += r * r;
        ss_tot += (s.y - mean_y) * (s.y - mean_y);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

void require_angle_diversity(const std::vector<Sample>& samples) {
    if (distinct_angles(samples).size() < 3) {
        throw std::invalid_argument("calibrate_response: need shots at >= 3 distinct polarizer angles mod pi");
    }
}

// c(1+k)/4 = a, c(1-k)/4 = b
void ck_from_ab(double a, double b, double& c, double& k) {
    c = 2.0 * (a + b);
    if (!(c > 0.0)) throw std::invalid_argument("calibrate_response: fitted gain is not positive");
    k = (a - b) / (a + b);
}

}  // namespace

StokesVector CalibrationShot::delta_stokes() const {
    const double ds0 = blackbody_radiance(tau_beta) - blackbody_radiance(tau_alpha);
    return {ds0, ds0 * source_dolp * std::cos(2.0 * source_aolp), ds0 * source_dolp * std::sin(2.0 * source_aolp)};
}

std::string to_string(CalibrationMethod m) {
    return m == CalibrationMethod::Composite ? "composite" : "polarized-source";
}

CalibrationMethod calibration_method_from_string(const std::string& s) {
    if (s == "composite") return CalibrationMethod::Composite;
    if (s == "polarized-source") return CalibrationMethod::PolarizedSource;
    throw std::invalid_argument("unknown calibration method '" + s + "'");
}

StokesVector blackbody_stokes(double tau) { return {blackbody_radiance(tau), 0.0, 0.0}; }

GainFit calibrate_gain(const std::vector<CalibrationShot>& shots) {
    struct Pair {
        double tau_alpha, tau_beta;
        double sum_y = 0.0;
        int n = 0;
    };
    std::vector<Pair> pairs;
    for (const auto& shot : shots) {
        if (shot.polarized()) continue;
        if (std::abs(shot.tau_alpha - shot.tau_beta) < kSameTemperature) {
            throw std::invalid_argument("calibrate_gain: shot with tau_alpha == tau_beta");
        }
        auto it = std::find_if(pairs.begin(), pairs.end(), [&](const Pair& p) {
            return std::abs(p.tau_alpha - shot.tau_alpha) < kSameTemperature &&
                   std::abs(p.tau_beta - shot.tau_beta) < kSameTemperature;
        });
        if (it == pairs.end()) {
            pairs.push_back({shot.tau_alpha, shot.tau_beta});
            it = pairs.end() - 1;
        }
        it->sum_y += image_mean(shot.diff);
        ++it->n;
    }
    if (pairs.size() < 2) {
        throw std::invalid_argument("calibrate_gain: need >= 2 distinct blackbody temperature pairs, got " +
                                    std::to_string(pairs.size()));
    }

    std::vector<double> x, y;
    for (const auto& p : pairs) {
        x.push_back(blackbody_radiance(p.tau_beta) - blackbody_radiance(p.tau_alpha));
        y.push_back(p.sum_y / p.n);
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (sxx == 0.0) throw std::invalid_argument("calibrate_gain: singular design (zero radiance differences)");

    GainFit fit;
    fit.composite_gain = sxy / sxx;
    fit.n_pairs = static_cast<int>(pairs.size());
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.composite_gain * x[i];
        ss_res += r * r;
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r2 = ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return fit;
}

ResponseFit solve_response_linear(const std::vector<CalibrationShot>& shots) {
    const auto samples = make_samples(shots);
    require_angle_diversity(samples);

    Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (const auto& s : samples) {
        const Eigen::Vector2d row(s.u, s.cos2 * s.u);
        normal += row * row.transpose();
        rhs += row * s.y;
    }
    if (std::abs(normal.determinant()) <= 1e-300) throw std::invalid_argument("solve_response_linear: singular design");
    const Eigen::Vector2d ab = normal.inverse() * rhs;

    ResponseFit fit;
    ck_from_ab(ab[0], ab[1], fit.c, fit.k);
    fit.r2 = r_squared(samples, fit.c, fit.k);
    fit.converged = true;
    return fit;
}

ResponseFit calibrate_response(const std::vector<CalibrationShot>& shots, const ResponseOptions& options) {
    const auto samples = make_samples(shots);
    require_angle_diversity(samples);

    // Per-angle gain G(psi) = (c/2) m(psi), slope of y against u at that angle.
    const auto angles = distinct_angles(samples);
    std::vector<double> gains;
    for (double psi : angles) {
        double suu = 0.0, suy = 0.0;
        for (const auto& s : samples) {
            if (!same_angle(s.psi, psi)) continue;
            suu += s.u * s.u;
            suy += s.u * s.y;
        }
        if (suu == 0.0) throw std::invalid_argument("calibrate_response: no signal at one polarizer angle");
        gains.push_back(suy / suu);
    }

    // G(psi) = a + b cos 2psi
    Eigen::MatrixX2d design(angles.size(), 2);
    Eigen::VectorXd g(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = std::cos(2.0 * angles[i]);
        g[i] = gains[i];
    }
    const Eigen::Vector2d ab = (design.transpose() * design).ldlt().solve(design.transpose() * g);

    ResponseFit fit;
    double c = 0.0, k = 0.0;
    ck_from_ab(ab[0], ab[1], c, k);

    // Alternating least squares on the raw shots: the model is linear in c for
    // fixed k and linear in k for fixed c.
    for (int it = 0; it < options.max_iterations; ++it) {
        double shh = 0.0, shy = 0.0;
        for (const auto& s : samples) {
            const double h = 0.25 * ((1.0 + s.cos2) + k * (1.0 - s.cos2)) * s.u;
            shh += h * h;
            shy += h * s.y;
        }
        const double c_new = shy / shh;

        double sqq = 0.0, sqr = 0.0;
        for (const auto& s : samples) {
            const double q = 0.25 * c_new * (1.0 - s.cos2) * s.u;
            const double r = s.y - 0.25 * c_new * (1.0 + s.cos2) * s.u;
            sqq += q * q;
            sqr += q * r;
        }
        const double k_new = sqq > 0.0 ? sqr / sqq : k;

        const double change = std::abs(c_new - c) / std::abs(c) + std::abs(k_new - k);
        c = c_new;
        k = k_new;
        fit.iterations = it + 1;
        if (change < options.tolerance) {
            fit.converged = true;
            break;
        }
    }

    if (k > 1.0 || k <= 0.0) {
        k = std::clamp(k, 1e-6, 1.0);
        fit.k_clamped = true;
        double shh = 0.0, shy = 0.0;
        for (const auto& s : samples) {
            const double h = 0.25 * ((1.0 + s.cos2) + k * (1.0 - s.cos2)) * s.u;
            shh += h * h;
            shy += h * s.y;
        }
        c = shy / shh;
    }

    fit.c = c;
    fit.k = k;
    fit.r2 = r_squared(samples, c, k);
    for (std::size_t i = 0; i < angles.size(); ++i) fit.gain_factors.push_back({angles[i], 2.0 * gains[i] / c});
    return fit;
}

CalibrationResult calibrate(const std::vector<CalibrationShot>& shots) {
    CalibrationResult result;
    const bool any_polarized = std::any_of(shots.begin(), shots.end(), [](const auto& s) { return s.polarized(); });
    result.method = any_polarized ? CalibrationMethod::PolarizedSource : CalibrationMethod::Composite;

    const ResponseFit response = calibrate_response(shots);
    result.c = response.c;
    result.k = response.k;
    result.r2 = response.r2;

    const auto unpolarized = std::count_if(shots.begin(), shots.end(), [](const auto& s) { return !s.polarized(); });
    if (unpolarized > 0) {
        try {
            result.r2 = calibrate_gain(shots).r2;
        } catch (const std::invalid_argument&) {
            // a single temperature pair still calibrates through the joint fit
        }
    }
    return result;
}

CalibrationShot simulate_calibration_shot(double psi, double tau_alpha, double tau_beta, const CameraModel& cam,
                                          int width, int height, bool with_noise, std::uint64_t seed,
                                          double source_dolp, double source_aolp) {
    auto target = [&](double tau) {
        const double l = blackbody_radiance(tau);
        StokesMap map(width, height);
        const StokesVector s{l, l * source_dolp * std::cos(2.0 * source_aolp),
                             l * source_dolp * std::sin(2.0 * source_aolp)};
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) map.set(x, y, s);
        return map;
    };
    const RawImage a = simulate_raw_image(target(tau_alpha), psi, cam, with_noise, derive_seed(seed, 0), 0);
    const RawImage b = simulate_raw_image(target(tau_beta), psi, cam, with_noise, derive_seed(seed, 1), 1);

    CalibrationShot shot;
    shot.psi = psi;
    shot.tau_alpha = tau_alpha;
    shot.tau_beta = tau_beta;
    shot.diff = difference_image(b, a);
    shot.source_dolp = source_dolp;
    shot.source_aolp = source_aolp;
    return shot;
}

}  // namespace thermopol
