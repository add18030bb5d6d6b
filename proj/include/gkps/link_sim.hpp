#pragma once

// Multiplexed elementary-link generation: GKP Bell measurements on the outer
// leaves, ranking by P_no-error, and rank-wise expected error profiles.
//
// Profiles for different multiplexing counts k at the same distance share
// one pooled sample: trial row r holds up to k_max links, and the profile
// for k is the ranked first-k prefix of every row. Each (row, slot) link has
// its own derived substream, so results do not depend on pool growth,
// evaluation order, or thread count. Marginally the first k links of a row
// are k independent BSMs; across k the common rows act as common random
// numbers, which keeps allocation comparisons stable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gkps/noise.hpp"
#include "gkps/rng.hpp"

namespace gkps {

struct BsmOutcome {
    double p0 = 0.0, q0 = 0.0;  // folded quadrature remainders
    double qx_outer = 0.0, qz_outer = 0.0;
    double p_no_error = 1.0;
};

inline double bsm_total_variance(double l_km, const NoiseParams& params) {
    return 2.0 * params.sigma2_prep + 2.0 * channel_variance(l_km / 2.0, params);
}

// Two truncated preparation draws per quadrature meet at the midpoint BSM
// after each traverses l/2 of fiber; the beam splitter sums the displacement
// noises into each measured quadrature.
template <class Rng>
BsmOutcome simulate_bsm(double l_km, const NoiseParams& params, Rng& rng) {
    require(l_km > 0.0, "simulate_bsm: distance must be > 0");
    const double nu = resolved_nu(params, l_km);
    const double sigma2_tot = bsm_total_variance(l_km, params);
    const double sigma2_ch2 = 2.0 * channel_variance(l_km / 2.0, params);
    std::normal_distribution<double> channel(0.0, std::sqrt(sigma2_ch2));
    BsmOutcome out;
    const double pa = sample_prepared_remainder(params.sigma2_prep, nu, rng);
    const double pb = sample_prepared_remainder(params.sigma2_prep, nu, rng);
    const double qa = sample_prepared_remainder(params.sigma2_prep, nu, rng);
    const double qb = sample_prepared_remainder(params.sigma2_prep, nu, rng);
    out.p0 = fold_remainder(pa + pb + channel(rng));
    out.q0 = fold_remainder(qa + qb + channel(rng));
    out.qx_outer = error_likelihood(out.p0, sigma2_tot, params.n_max);
    out.qz_outer = error_likelihood(out.q0, sigma2_tot, params.n_max);
    out.p_no_error = (1.0 - out.qx_outer) * (1.0 - out.qz_outer);
    return out;
}

// Descending by p_no_error, stable: ties keep original link index order.
inline void rank_outcomes(std::vector<BsmOutcome>& outcomes) {
    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const BsmOutcome& a, const BsmOutcome& b) {
                         return a.p_no_error > b.p_no_error;
                     });
}

template <class Rng>
std::vector<BsmOutcome> simulate_round(double l_km, int k, const NoiseParams& params, Rng& rng) {
    require(k >= 1, "simulate_round: k must be >= 1");
    std::vector<BsmOutcome> outcomes;
    outcomes.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) outcomes.push_back(simulate_bsm(l_km, params, rng));
    rank_outcomes(outcomes);
    return outcomes;
}

struct RankedLinkProfile {
    int client_id = 0;
    double l_km = 0.0;
    int k = 0;
    std::vector<double> q_outer_x;  // expected error at rank j (descending p_no_error)
    std::vector<double> q_outer_z;
    std::vector<double> p_no_error_mean;
};

inline constexpr long kMinProfileTrials = 1000;

// All rank profiles for k = 1..k_max at one distance, from one pooled sample.
class RankedFamily {
  public:
    RankedFamily() = default;

    RankedFamily(double l_km, int k_max, const NoiseParams& params, long trials,
                 std::uint64_t master_seed, std::uint64_t lane = 0)
        : l_km_(l_km), k_max_(k_max), trials_(trials) {
        params.validate();
        require(k_max >= 1, "RankedFamily: k_max must be >= 1");
        if (trials < kMinProfileTrials)
            throw config_error("RankedFamily: trials below minimum 10^3");
        sum_qx_.resize(static_cast<std::size_t>(k_max) + 1);
        sum_qz_.resize(static_cast<std::size_t>(k_max) + 1);
        sum_pno_.resize(static_cast<std::size_t>(k_max) + 1);
        for (int k = 1; k <= k_max; ++k) {
            sum_qx_[k].assign(static_cast<std::size_t>(k), 0.0);
            sum_qz_[k].assign(static_cast<std::size_t>(k), 0.0);
            sum_pno_[k].assign(static_cast<std::size_t>(k), 0.0);
        }
        const std::uint64_t dkey = distance_key(l_km);
        std::vector<double> qx(static_cast<std::size_t>(k_max));
        std::vector<double> qz(static_cast<std::size_t>(k_max));
        std::vector<double> pno(static_cast<std::size_t>(k_max));
        for (long row = 0; row < trials; ++row) {
            for (int slot = 0; slot < k_max; ++slot) {
                auto rng = make_stream(master_seed,
                                       {kStreamLinkSim, dkey, lane,
                                        static_cast<std::uint64_t>(row),
                                        static_cast<std::uint64_t>(slot)});
                const BsmOutcome o = simulate_bsm(l_km, params, rng);
                // insert into the sorted prefix (descending p_no_error, stable)
                int pos = slot;
                while (pos > 0 && pno[pos - 1] < o.p_no_error) {
                    qx[pos] = qx[pos - 1];
                    qz[pos] = qz[pos - 1];
                    pno[pos] = pno[pos - 1];
                    --pos;
                }
                qx[pos] = o.qx_outer;
                qz[pos] = o.qz_outer;
                pno[pos] = o.p_no_error;
                const int k = slot + 1;
                for (int j = 0; j < k; ++j) {
                    sum_qx_[k][j] += qx[j];
                    sum_qz_[k][j] += qz[j];
                    sum_pno_[k][j] += pno[j];
                }
            }
        }
    }

    double l_km() const { return l_km_; }
    int k_max() const { return k_max_; }
    long trials() const { return trials_; }

    RankedLinkProfile profile(int k, int client_id = 0) const {
        require(k >= 1 && k <= k_max_, "RankedFamily::profile: k out of range");
        RankedLinkProfile p;
        p.client_id = client_id;
        p.l_km = l_km_;
        p.k = k;
        p.q_outer_x.resize(static_cast<std::size_t>(k));
        p.q_outer_z.resize(static_cast<std::size_t>(k));
        p.p_no_error_mean.resize(static_cast<std::size_t>(k));
        const double inv = 1.0 / static_cast<double>(trials_);
        for (int j = 0; j < k; ++j) {
            p.q_outer_x[j] = sum_qx_[k][j] * inv;
            p.q_outer_z[j] = sum_qz_[k][j] * inv;
            p.p_no_error_mean[j] = sum_pno_[k][j] * inv;
        }
        return p;
    }

  private:
    double l_km_ = 0.0;
    int k_max_ = 0;
    long trials_ = 0;
    std::vector<std::vector<double>> sum_qx_, sum_qz_, sum_pno_;
};

// Direct estimator over independent rounds; the pooled family is the
// production path, this is the plain-reading reference.
template <class Rng>
RankedLinkProfile estimate_ranked_profile(double l_km, int k, const NoiseParams& params,
                                          long trials, Rng& rng) {
    params.validate();
    if (trials < kMinProfileTrials)
        throw config_error("estimate_ranked_profile: trials below minimum 10^3");
    RankedLinkProfile p;
    p.l_km = l_km;
    p.k = k;
    p.q_outer_x.assign(static_cast<std::size_t>(k), 0.0);
    p.q_outer_z.assign(static_cast<std::size_t>(k), 0.0);
    p.p_no_error_mean.assign(static_cast<std::size_t>(k), 0.0);
    for (long trial = 0; trial < trials; ++trial) {
        const auto round = simulate_round(l_km, k, params, rng);
        for (int j = 0; j < k; ++j) {
            p.q_outer_x[j] += round[j].qx_outer;
            p.q_outer_z[j] += round[j].qz_outer;
            p.p_no_error_mean[j] += round[j].p_no_error;
        }
    }
    const double inv = 1.0 / static_cast<double>(trials);
    for (int j = 0; j < k; ++j) {
        p.q_outer_x[j] *= inv;
        p.q_outer_z[j] *= inv;
        p.p_no_error_mean[j] *= inv;
    }
    return p;
}

}  // namespace gkps
