#include "thermopol/normal_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "thermopol/parallel.hpp"

namespace thermopol {

namespace {

constexpr int kNeighborDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kNeighborDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

double circular_distance(double a, double b) { return std::abs(wrap_angle(a - b + kPi, 2.0 * kPi) - kPi); }

bool is_boundary(const Mask& mask, int x, int y) {
    constexpr int dx[4] = {-1, 1, 0, 0};
    constexpr int dy[4] = {0, 0, -1, 1};
    for (int i = 0; i < 4; ++i) {
        const int nx = x + dx[i], ny = y + dy[i];
        if (!mask.inside(nx, ny) || !mask(nx, ny)) return true;
    }
    return false;
}

double closer_to(double target, const std::pair<double, double>& cand) {
    return circular_distance(cand.first, target) <= circular_distance(cand.second, target) ? cand.first : cand.second;
}

}  // namespace

std::string to_string(EmissionMode m) {
    return m == EmissionMode::EmissionDominant ? "emission" : "reflection";
}

EmissionMode emission_mode_from_string(const std::string& s) {
    if (s == "emission" || s == "emission-dominant") return EmissionMode::EmissionDominant;
    if (s == "reflection" || s == "reflection-dominant") return EmissionMode::ReflectionDominant;
    throw std::invalid_argument("unknown mode '" + s + "' (expected emission or reflection)");
}

std::string to_string(NormalSpace s) { return s == NormalSpace::Camera ? "camera" : "view-vector"; }

void EstimationParams::validate() const {
    if (curve.degenerate) throw std::domain_error("EstimationParams: DoLP curve is degenerate (ratio = 1)");
    if (!(dolp_floor >= 0.0 && dolp_floor < curve.rho_peak)) {
        throw std::domain_error("EstimationParams: dolp_floor must lie in [0, rho_peak)");
    }
    if (!(smoothness_weight >= 0.0)) throw std::domain_error("EstimationParams: smoothness_weight must be >= 0");
}

double invert_zenith(double rho, const DolpCurve& curve) {
    if (curve.degenerate || curve.theta.empty()) {
        throw std::domain_error("invert_zenith: degenerate DoLP curve carries no zenith information");
    }
    if (!(rho >= 0.0)) throw std::domain_error("invert_zenith: rho must be >= 0");
    if (rho >= curve.rho_peak) return curve.theta_peak;
    if (rho <= curve.rho.front()) return curve.theta.front();

    // Rising branch: samples strictly below the peak, closed by the peak itself.
    const auto branch_end = std::lower_bound(curve.theta.begin(), curve.theta.end(), curve.theta_peak);
    const std::size_t n = static_cast<std::size_t>(branch_end - curve.theta.begin());
    auto theta_at = [&](std::size_t i) { return i < n ? curve.theta[i] : curve.theta_peak; };
    auto rho_at = [&](std::size_t i) { return i < n ? curve.rho[i] : curve.rho_peak; };

    std::size_t lo = 0, hi = n;  // rho_at(lo) <= rho < rho_at(hi)
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (rho_at(mid) <= rho ? lo : hi) = mid;
    }

    double a = theta_at(lo), b = theta_at(hi);
    // Linear interpolation gives the table answer; bisection on the closed form
    // refines it inside the bracket.
    const double guess = a + (b - a) * (rho - rho_at(lo)) / (rho_at(hi) - rho_at(lo));
    if (std::abs(curve.evaluate(guess) - rho) == 0.0) return guess;
    while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        (curve.evaluate(mid) < rho ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

std::pair<double, double> azimuth_candidates(double aolp, EmissionMode mode) {
    const double base = mode == EmissionMode::EmissionDominant ? aolp : aolp + kHalfPi;
    return {wrap_angle(base, 2.0 * kPi), wrap_angle(base + kPi, 2.0 * kPi)};
}

double silhouette_outward(const Mask& mask, int x, int y) {
    double ox = 0.0, oy = 0.0;
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (mask.inside(nx, ny) && mask(nx, ny)) continue;
            const double len = std::hypot(dx, dy);
            ox += dx / len;
            oy -= dy / len;  // image rows grow downward
        }
    }
    if (std::hypot(ox, oy) > 1e-9) return wrap_angle(std::atan2(oy, ox), 2.0 * kPi);

    double cx = 0.0, cy = 0.0;
    std::size_t count = 0;
    for (int j = 0; j < mask.height(); ++j)
        for (int i = 0; i < mask.width(); ++i)
            if (mask(i, j)) {
                cx += i;
                cy += j;
                ++count;
            }
    if (count > 0) {
        const double vx = x - cx / count;
        const double vy = -(y - cy / count);
        if (std::hypot(vx, vy) > 1e-9) return wrap_angle(std::atan2(vy, vx), 2.0 * kPi);
    }
    return 0.0;
}

AzimuthField resolve_azimuth(const Image& aolp, const Image& dolp, const Mask& mask, const EstimationParams& params) {
    if (mask.count() == 0) throw std::invalid_argument("resolve_azimuth: empty mask");
    if (!mask.same_shape(aolp) || !mask.same_shape(dolp)) {
        throw std::invalid_argument("resolve_azimuth: AoLP, DoLP and mask shapes differ");
    }
    const int w = mask.width(), h = mask.height();
    AzimuthField out{Image(w, h), Mask(w, h)};
    Mask resolved(w, h);
    std::vector<double> source_outward(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<std::uint8_t> queued(static_cast<std::size_t>(w) * h, 0);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y) || !is_boundary(mask, x, y)) continue;
            source_outward[idx(x, y)] = silhouette_outward(mask, x, y);
            queued[idx(x, y)] = 1;
            queue.emplace_back(x, y);
        }
    }

    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        const double outward = source_outward[idx(x, y)];
        const bool informative = dolp.at(x, y) >= params.dolp_floor;
        const auto cand = azimuth_candidates(aolp.at(x, y), params.mode);

        // Resolved neighbors, weighted by how far their DoLP clears the floor.
        double sum_w = 0.0, score_a = 0.0, score_b = 0.0, mean_s = 0.0, mean_c = 0.0;
        int n_resolved = 0;
        for (int k = 0; k < 8; ++k) {
            const int nx = x + kNeighborDx[k], ny = y + kNeighborDy[k];
            if (!mask.inside(nx, ny) || !resolved(nx, ny)) continue;
            const double phi = out.azimuth.at(nx, ny);
            mean_s += std::sin(phi);
            mean_c += std::cos(phi);
            ++n_resolved;
            // inherited azimuths carry no evidence
            if (out.low_confidence(nx, ny)) continue;
            const double wgt = dolp.at(nx, ny) - params.dolp_floor + params.smoothness_weight;
            score_a += wgt * circular_distance(cand.first, phi);
            score_b += wgt * circular_distance(cand.second, phi);
            sum_w += wgt;
        }

        double phi;
        if (!informative) {
            phi = n_resolved > 0 && std::hypot(mean_s, mean_c) > 1e-12 ? wrap_angle(std::atan2(mean_s, mean_c), 2.0 * kPi)
                                                                       : outward;
            out.low_confidence.set(x, y, true);
        } else if (sum_w <= 0.0) {
            phi = closer_to(outward, cand);
        } else {
            score_a /= sum_w;
            score_b /= sum_w;
            if (std::abs(score_a - score_b) < 1e-12) {
                phi = closer_to(outward, cand);
            } else {
                phi = score_a < score_b ? cand.first : cand.second;
            }
        }
        out.azimuth.at(x, y) = phi;
        resolved.set(x, y, true);

        for (int k = 0; k < 8; ++k) {
            const int nx = x + kNeighborDx[k], ny = y + kNeighborDy[k];
            if (!mask.inside(nx, ny) || !mask(nx, ny) || queued[idx(nx, ny)]) continue;
            queued[idx(nx, ny)] = 1;
            source_outward[idx(nx, ny)] = outward;
            queue.emplace_back(nx, ny);
        }
    }

    // Mask components without any boundary pixel cannot occur: every finite
    // component touches its own silhouette.
    return out;
}

NormalEstimate estimate_normals(const StokesMap& stokes, const EstimationParams& params, const ProjectionModel& proj) {
    params.validate();
    proj.validate();
    const int w = stokes.width(), h = stokes.height();
    const Mask& mask = stokes.mask;

    NormalEstimate est;
    est.dolp = Image(w, h);
    est.aolp = Image(w, h);
    est.zenith = Image(w, h);
    est.confidence = Image(w, h);
    Mask unusable(w, h);

    parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const StokesVector s = stokes.at(x, y);
            if (!(s.s0 > 0.0)) {
                unusable.set(x, y, true);
                continue;
            }
            const PolarizationState st = polarization_state(s);
            est.dolp.at(x, y) = st.dolp;
            est.aolp.at(x, y) = st.aolp;
            est.zenith.at(x, y) = invert_zenith(st.dolp, params.curve);
        }
    });

    const AzimuthField field = resolve_azimuth(est.aolp, est.dolp, mask, params);
    est.azimuth = field.azimuth;

    est.view = {Image(w, h, 3), mask, NormalSpace::ViewVector};
    est.camera = {Image(w, h, 3), mask, NormalSpace::Camera};
    parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const double theta = est.zenith.at(x, y);
            const double phi = est.azimuth.at(x, y);
            const Eigen::Vector3d nv(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
            const Eigen::Vector3d nc = proj.view_to_camera(x, y, w, h) * nv;
            for (int c = 0; c < 3; ++c) {
                est.view.normals.at(x, y, c) = nv[c];
                est.camera.normals.at(x, y, c) = nc[c];
            }
            est.confidence.at(x, y) = field.low_confidence(x, y) || unusable(x, y) ? 0.0 : 1.0;
        }
    });
    return est;
}

}  // namespace thermopol
