#include "thermopol/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace thermopol {

namespace {

void check_emergent_angle(double theta, double eta) {
    if (!(theta >= 0.0 && theta < kHalfPi)) {
        throw std::domain_error("emergent angle must lie in [0, pi/2), got " + std::to_string(theta));
    }
    if (!(eta > 1.0)) {
        throw std::domain_error("refractive index must exceed 1, got " + std::to_string(eta));
    }
}

// Amplitude coefficients in cosine form. Equivalent to the tan/sin ratios of
// the Fresnel equations but free of 0/0 at normal emergence.
FresnelPair reflectance_unchecked(double theta, double eta) {
    const double cos_i = std::cos(theta);
    const double sin_t = std::sin(theta) / eta;
    const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin_t * sin_t));
    const double rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    const double rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    return {rp * rp, rs * rs};
}

}  // namespace

double wrap_angle(double a, double period) {
    double r = std::fmod(a, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;  // fmod of tiny negatives
    return r;
}

void MaterialEnv::validate() const {
    if (!(eta > 1.0)) throw std::domain_error("MaterialEnv: eta must exceed 1");
    if (!(tau_obj >= 0.0)) throw std::domain_error("MaterialEnv: tau_obj must be >= 0 K");
    if (!(tau_env >= 0.0)) throw std::domain_error("MaterialEnv: tau_env must be >= 0 K");
    if (!(emissivity >= 0.0)) throw std::domain_error("MaterialEnv: emissivity must be >= 0");
}

double MaterialEnv::emitted_radiance() const { return emissivity * blackbody_radiance(tau_obj); }

double MaterialEnv::reflected_radiance() const { return blackbody_radiance(tau_env); }

double MaterialEnv::ratio() const {
    const double le = emitted_radiance();
    if (le <= 0.0) throw std::domain_error("MaterialEnv: emitted radiance is zero, ratio undefined");
    return reflected_radiance() / le;
}

MaterialEnv MaterialEnv::from_ratio(double eta, double tau_env, double ratio) {
    if (!(ratio > 0.0)) throw std::domain_error("MaterialEnv::from_ratio: ratio must be > 0");
    MaterialEnv env;
    env.eta = eta;
    env.tau_env = tau_env;
    env.tau_obj = tau_env * std::pow(1.0 / ratio, 0.25);
    env.validate();
    return env;
}

double StokesVector::linear_magnitude() const { return std::hypot(s1, s2); }

bool StokesVector::realizable(double slack) const {
    return s0 >= 0.0 && linear_magnitude() <= s0 * (1.0 + slack);
}

StokesVector operator+(const StokesVector& a, const StokesVector& b) {
    return {a.s0 + b.s0, a.s1 + b.s1, a.s2 + b.s2};
}

StokesVector operator-(const StokesVector& a, const StokesVector& b) {
    return {a.s0 - b.s0, a.s1 - b.s1, a.s2 - b.s2};
}

StokesVector operator*(double k, const StokesVector& a) { return {k * a.s0, k * a.s1, k * a.s2}; }

PolarizationState polarization_state(const StokesVector& s) {
    if (!(s.s0 > 0.0)) throw std::domain_error("polarization_state: s0 must be positive");
    PolarizationState st;
    const double lin = s.linear_magnitude();
    st.dolp = std::min(1.0, lin / s.s0);
    if (lin > 0.0) {
        st.valid = true;
        st.aolp = wrap_angle(0.5 * std::atan2(s.s2, s.s1), kPi);
    }
    return st;
}

double snell_refract(double theta, double eta) {
    check_emergent_angle(theta, eta);
    return std::asin(std::sin(theta) / eta);
}

FresnelPair fresnel_reflectance(double theta, double eta) {
    check_emergent_angle(theta, eta);
    return reflectance_unchecked(theta, eta);
}

FresnelPair fresnel_transmittance(double theta, double eta) {
    const FresnelPair r = fresnel_reflectance(theta, eta);
    return {1.0 - r.p, 1.0 - r.s};
}

double blackbody_radiance(double tau) {
    if (!(tau >= 0.0)) throw std::domain_error("blackbody_radiance: temperature must be >= 0 K");
    const double t2 = tau * tau;
    return kStefanBoltzmann * t2 * t2;
}

RadiancePair combined_radiance(double theta, const MaterialEnv& env) {
    env.validate();
    check_emergent_angle(theta, env.eta);
    const FresnelPair r = reflectance_unchecked(theta, env.eta);
    const double le = env.emitted_radiance();
    const double lr = env.reflected_radiance();
    return {0.5 * (r.p * lr + (1.0 - r.p) * le), 0.5 * (r.s * lr + (1.0 - r.s) * le)};
}

PolarizationState polarization_state(const RadiancePair& rad, double phi) {
    const double total = rad.p + rad.s;
    if (!(total > 0.0)) throw std::domain_error("polarization_state: total radiance is zero");
    PolarizationState st;
    st.dolp = std::abs(rad.p - rad.s) / total;
    if (rad.p > rad.s) {
        st.valid = true;
        st.aolp = wrap_angle(phi, kPi);
    } else if (rad.p < rad.s) {
        st.valid = true;
        st.aolp = wrap_angle(phi + kHalfPi, kPi);
    }
    return st;
}

StokesVector surface_stokes(double theta, double phi, const MaterialEnv& env) {
    const RadiancePair rad = combined_radiance(theta, env);
    StokesVector s;
    s.s0 = rad.p + rad.s;
    if (s.s0 <= 0.0) return s;
    const PolarizationState st = polarization_state(rad, phi);
    if (!st.valid) return s;
    const double lin = s.s0 * st.dolp;
    s.s1 = lin * std::cos(2.0 * st.aolp);
    s.s2 = lin * std::sin(2.0 * st.aolp);
    return s;
}

double dolp_at(double theta, double eta, double ratio) {
    const FresnelPair r = reflectance_unchecked(theta, eta);
    // L_E normalized to 1, L_R = ratio; the common factor 1/2 cancels.
    const double lp = r.p * ratio + (1.0 - r.p);
    const double ls = r.s * ratio + (1.0 - r.s);
    return std::abs(lp - ls) / (lp + ls);
}

DolpCurve build_dolp_curve(double eta, double ratio, int n_samples) {
    if (!(eta > 1.0)) throw std::domain_error("build_dolp_curve: eta must exceed 1");
    if (!(ratio >= 0.0)) throw std::domain_error("build_dolp_curve: ratio must be >= 0");
    if (n_samples < 256) throw std::domain_error("build_dolp_curve: need at least 256 samples");

    DolpCurve c;
    c.eta = eta;
    c.ratio = ratio;
    c.theta.resize(n_samples);
    c.rho.resize(n_samples);
    const double step = kHalfPi / n_samples;
    std::size_t best = 0;
    for (int i = 0; i < n_samples; ++i) {
        c.theta[i] = i * step;
        c.rho[i] = dolp_at(c.theta[i], eta, ratio);
        if (c.rho[i] > c.rho[best]) best = i;
    }

    if (c.rho[best] < 1e-12) {
        c.degenerate = true;
        return c;
    }

    // Golden-section refinement of the maximum inside the bracketing samples.
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = best > 0 ? c.theta[best - 1] : 0.0;
    double hi = best + 1 < c.theta.size() ? c.theta[best + 1] : kHalfPi - 1e-9;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = dolp_at(x1, eta, ratio);
    double f2 = dolp_at(x2, eta, ratio);
    while (hi - lo > 1e-9) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = dolp_at(x2, eta, ratio);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = dolp_at(x1, eta, ratio);
        }
    }
    c.theta_peak = 0.5 * (lo + hi);
    c.rho_peak = dolp_at(c.theta_peak, eta, ratio);
    if (c.rho[best] > c.rho_peak) {
        c.theta_peak = c.theta[best];
        c.rho_peak = c.rho[best];
    }
    return c;
}

}  // namespace thermopol
