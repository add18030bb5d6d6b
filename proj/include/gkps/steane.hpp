#pragma once

// [[7,1,3]] Steane decoding of the inner (encoded) leaves. The CSS structure
// reduces each family to [7,4] Hamming decoding: syndrome of a flip mask is
// the XOR of (i+1) over set bits i, a nonzero syndrome points at the qubit to
// correct, and the logical operator is supported on all seven qubits.

#include <array>
#include <bit>
#include <cstdint>
#include <random>

#include "gkps/noise.hpp"
#include "gkps/rng.hpp"

namespace gkps {

struct ErrorPattern {
    std::uint8_t x_flips = 0;  // 7-bit masks
    std::uint8_t z_flips = 0;
};

struct SteaneDecodeResult {
    int s_x = 0, s_z = 0;  // binary syndrome flags
    int logical_x_flip = 0, logical_z_flip = 0;
};

inline int hamming_syndrome(std::uint8_t mask) {
    int s = 0;
    for (int i = 0; i < 7; ++i)
        if (mask >> i & 1) s ^= i + 1;
    return s;
}

inline SteaneDecodeResult steane_decode(const ErrorPattern& pattern) {
    SteaneDecodeResult out;
    const auto decode_family = [](std::uint8_t mask, int& s, int& flip) {
        const int syn = hamming_syndrome(mask);
        s = syn != 0 ? 1 : 0;
        const std::uint8_t corrected =
            syn != 0 ? static_cast<std::uint8_t>(mask ^ (1u << (syn - 1))) : mask;
        flip = std::popcount(corrected) & 1;
    };
    decode_family(pattern.x_flips & 0x7f, out.s_x, out.logical_x_flip);
    decode_family(pattern.z_flips & 0x7f, out.s_z, out.logical_z_flip);
    return out;
}

struct InnerLeafStats {
    double t_x = 0.0, t_z = 0.0;               // P(s=1) per family
    std::array<double, 2> q_inner_x{0.0, 0.0};  // conditional logical error by s
    std::array<double, 2> q_inner_z{0.0, 0.0};
};

namespace detail {

// One family: 7 remainders (truncated prep + storage channel), each converted
// to a flip with its analog likelihood, then Hamming-decoded.
template <class Rng>
void accumulate_family(const NoiseParams& params, double sigma2_ch, double sigma2_eff,
                       double nu, long samples, Rng& rng, double& t_out,
                       std::array<double, 2>& q_out) {
    std::normal_distribution<double> channel(0.0, std::sqrt(sigma2_ch));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    long n_s[2] = {0, 0};
    long n_flip[2] = {0, 0};
    for (long i = 0; i < samples; ++i) {
        std::uint8_t mask = 0;
        for (int qubit = 0; qubit < 7; ++qubit) {
            const double prep = sample_prepared_remainder(params.sigma2_prep, nu, rng);
            const double t = fold_remainder(prep + channel(rng));
            if (unif(rng) < error_likelihood(t, sigma2_eff, params.n_max))
                mask |= static_cast<std::uint8_t>(1u << qubit);
        }
        const int syn = hamming_syndrome(mask);
        const std::uint8_t corrected =
            syn != 0 ? static_cast<std::uint8_t>(mask ^ (1u << (syn - 1))) : mask;
        const int s = syn != 0 ? 1 : 0;
        ++n_s[s];
        n_flip[s] += std::popcount(corrected) & 1;
    }
    t_out = static_cast<double>(n_s[1]) / static_cast<double>(samples);
    for (int s = 0; s < 2; ++s)
        q_out[s] = n_s[s] > 0 ? static_cast<double>(n_flip[s]) / static_cast<double>(n_s[s]) : 0.0;
}

}  // namespace detail

inline constexpr long kMinInnerSamples = 10000;

template <class Rng>
InnerLeafStats estimate_inner_stats(double l_storage_km, const NoiseParams& params,
                                    long samples, Rng& rng) {
    params.validate();
    require(l_storage_km > 0.0, "estimate_inner_stats: distance must be > 0");
    if (samples < kMinInnerSamples)
        throw config_error("estimate_inner_stats: samples below minimum 10^4");
    const double sigma2_ch = channel_variance(l_storage_km, params);
    const double sigma2_eff = params.sigma2_prep + sigma2_ch;
    const double nu = resolved_nu(params, l_storage_km);
    InnerLeafStats stats;
    detail::accumulate_family(params, sigma2_ch, sigma2_eff, nu, samples, rng, stats.t_x,
                              stats.q_inner_x);
    detail::accumulate_family(params, sigma2_ch, sigma2_eff, nu, samples, rng, stats.t_z,
                              stats.q_inner_z);
    return stats;
}

// Deterministic stream wrapper so callers that only have a master seed get
// reproducible stats independent of evaluation order.
inline InnerLeafStats estimate_inner_stats_seeded(double l_storage_km, const NoiseParams& params,
                                                  long samples, std::uint64_t master_seed,
                                                  std::uint64_t lane = 0) {
    auto rng = make_stream(master_seed, {kStreamSteane, distance_key(l_storage_km), lane});
    return estimate_inner_stats(l_storage_km, params, samples, rng);
}

}  // namespace gkps
