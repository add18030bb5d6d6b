#pragma once

// GKP displacement-noise model: fiber loss -> additive Gaussian displacement
// noise (amplified-loss convention), analog error likelihoods, and the
// distance-dependent discard window used at resource-state preparation.
//
// Units: shot-noise units with vacuum variance 1/2 throughout.

#include <algorithm>
#include <cmath>
#include <random>

#include "gkps/common.hpp"

namespace gkps {

struct NoiseParams {
    double alpha_db_per_km = 0.2;
    double sigma2_prep = 0.06;
    // nu_override < 0 means "auto": resolve per distance via discard_window_for.
    double nu_override = -1.0;
    int n_max = 10;

    void validate() const {
        require(alpha_db_per_km > 0.0, "NoiseParams: alpha_db_per_km must be > 0");
        require(sigma2_prep > 0.0, "NoiseParams: sigma2_prep must be > 0");
        require(nu_override < kSqrtPi / 2.0, "NoiseParams: nu must be < sqrt(pi)/2");
        require(n_max >= 5, "NoiseParams: n_max must be >= 5");
    }
};

inline double transmissivity(double l_km, double alpha_db_per_km) {
    require(l_km >= 0.0, "transmissivity: negative distance");
    return std::pow(10.0, -alpha_db_per_km * l_km / 10.0);
}

// Pure loss followed by quantum-limited amplification of gain 1/eta.
inline double channel_variance(double l_km, const NoiseParams& params) {
    const double eta = transmissivity(l_km, params.alpha_db_per_km);
    return (1.0 - eta) / eta;
}

// P(flip | remainder t) for a Gaussian displacement of variance sigma2,
// truncated periodic sums over |n| <= n_max. Evaluated on |t| so the result
// is exactly even in t and exactly 1/2 on the folding boundary.
inline double error_likelihood(double t, double sigma2, int n_max = 10) {
    require(sigma2 > 0.0, "error_likelihood: sigma2 must be > 0");
    const double a = std::fabs(t);
    const double inv = 1.0 / (2.0 * sigma2);
    double even = 0.0, odd = 0.0;
    for (int n = -n_max; n <= n_max; ++n) {
        const double de = a - 2.0 * n * kSqrtPi;
        const double doo = a - (2.0 * n + 1.0) * kSqrtPi;
        const double ee = de * de * inv;
        const double eo = doo * doo * inv;
        if (ee < 700.0) even += std::exp(-ee);
        if (eo < 700.0) odd += std::exp(-eo);
    }
    if (even + odd == 0.0) return 0.5;
    return odd / (even + odd);
}

struct DiscardWindow {
    double nu = 0.0;
    bool extrapolated = false;  // distance outside the tabulated range, clamped
};

// Tabulated window sizes {7,6,5,4,3}*sqrt(pi)/20 at {0.5,1,2,2.5,5} km,
// piecewise-linear in the multiplier between table points.
inline DiscardWindow discard_window_for(double l_km) {
    require(l_km > 0.0, "discard_window_for: distance must be > 0");
    static constexpr double kL[] = {0.5, 1.0, 2.0, 2.5, 5.0};
    static constexpr double kM[] = {7.0, 6.0, 5.0, 4.0, 3.0};
    const double unit = kSqrtPi / 20.0;
    if (l_km <= kL[0]) return {kM[0] * unit, l_km < kL[0]};
    if (l_km >= kL[4]) return {kM[4] * unit, l_km > kL[4]};
    int i = 0;
    while (l_km > kL[i + 1]) ++i;
    const double f = (l_km - kL[i]) / (kL[i + 1] - kL[i]);
    return {(kM[i] + f * (kM[i + 1] - kM[i])) * unit, false};
}

inline double resolved_nu(const NoiseParams& params, double l_km) {
    return params.nu_override >= 0.0 ? params.nu_override : discard_window_for(l_km).nu;
}

// Preparation noise: folded Gaussian, redrawn until |t| <= sqrt(pi)/2 - nu.
template <class Rng>
double sample_prepared_remainder(double sigma2, double nu, Rng& rng) {
    require(nu >= 0.0 && nu < kSqrtPi / 2.0, "sample_prepared_remainder: nu out of range");
    const double w = kSqrtPi / 2.0 - nu;
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
    for (;;) {
        const double t = fold_remainder(gauss(rng));
        if (std::fabs(t) <= w) return t;
    }
}

}  // namespace gkps
