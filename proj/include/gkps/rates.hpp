#pragma once

// Rate calculus: leaf error combination, syndrome-vector probabilities,
// end-to-end error per rank, secret fraction, per-connection rate, switch
// rate, and the fairness measure.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gkps/common.hpp"
#include "gkps/link_sim.hpp"
#include "gkps/steane.hpp"

namespace gkps {

enum class PauliFamily { X, Z };

// One serviced connection: the matched link count, the storage-leaf stats at
// each endpoint, and each endpoint's ranked outer profile covering ranks
// 1..k_main.
struct ConnectionStats {
    int k_main = 0;
    std::array<InnerLeafStats, 2> inner{};
    std::array<RankedLinkProfile, 2> outer{};

    void validate() const {
        require(k_main >= 1, "ConnectionStats: k_main must be >= 1");
        for (const auto& prof : outer) {
            require(static_cast<int>(prof.q_outer_x.size()) >= k_main &&
                        static_cast<int>(prof.q_outer_z.size()) >= k_main,
                    "ConnectionStats: outer profile shorter than k_main");
        }
    }
};

inline double combine_leaf_error(double q_inner, double q_outer) {
    require(q_inner >= 0.0 && q_inner <= 1.0 && q_outer >= 0.0 && q_outer <= 1.0,
            "combine_leaf_error: probabilities must lie in [0, 1]");
    return q_inner * (1.0 - q_outer) + (1.0 - q_inner) * q_outer;
}

// Error probability of the j-th-ranked end-to-end link given the syndrome
// bits m = (m_1, m_2) at the two endpoints. Equivalent to XOR-composing the
// two endpoint errors.
inline double end_to_end_error(const std::array<int, 2>& m, int j, const ConnectionStats& conn,
                               PauliFamily family) {
    conn.validate();
    require(j >= 1 && j <= conn.k_main, "end_to_end_error: rank out of bounds");
    require((m[0] == 0 || m[0] == 1) && (m[1] == 0 || m[1] == 1),
            "end_to_end_error: syndrome bits must be 0 or 1");
    double prod = 1.0;
    for (int i = 0; i < 2; ++i) {
        const auto& inner = conn.inner[static_cast<std::size_t>(i)];
        const auto& outer = conn.outer[static_cast<std::size_t>(i)];
        const std::size_t mi = static_cast<std::size_t>(m[static_cast<std::size_t>(i)]);
        const std::size_t rank = static_cast<std::size_t>(j - 1);
        const double q_in = family == PauliFamily::X ? inner.q_inner_x[mi] : inner.q_inner_z[mi];
        const double q_out = family == PauliFamily::X ? outer.q_outer_x[rank] : outer.q_outer_z[rank];
        prod *= 1.0 - 2.0 * combine_leaf_error(q_in, q_out);
    }
    return 0.5 * (1.0 - prod);
}

// Probability of syndrome vector m when endpoint i trips with probability
// t_i. Written for general length so longer chains reuse it unchanged.
inline double syndrome_prob(const std::vector<int>& m, const std::vector<double>& t) {
    require(m.size() == t.size(), "syndrome_prob: length mismatch");
    double p = 1.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        require(m[i] == 0 || m[i] == 1, "syndrome_prob: syndrome bits must be 0 or 1");
        require(t[i] >= 0.0 && t[i] <= 1.0, "syndrome_prob: probabilities must lie in [0, 1]");
        p *= m[i] == 1 ? t[i] : 1.0 - t[i];
    }
    return p;
}

// Hashing-bound secret fraction for independent X/Z flips, floored at zero.
inline double secret_fraction(double q_x, double q_z) {
    require(q_x >= 0.0 && q_x <= 0.5 && q_z >= 0.0 && q_z <= 0.5,
            "secret_fraction: error probabilities must lie in [0, 1/2]");
    const double r = 1.0 - h2(q_x) - h2(q_z);
    return r > 0.0 ? r : 0.0;
}

// Per-connection rate in ebits/round: ranks 1..k_main, each averaged over
// the 16 joint Steane syndrome outcomes of the two endpoints and families.
inline double rate_e2e(const ConnectionStats& conn) {
    conn.validate();
    const std::vector<double> t_x = {conn.inner[0].t_x, conn.inner[1].t_x};
    const std::vector<double> t_z = {conn.inner[0].t_z, conn.inner[1].t_z};
    std::array<std::array<int, 2>, 4> ms;
    std::array<double, 4> p_x, p_z;
    for (int b = 0; b < 4; ++b) {
        ms[b] = {b >> 1, b & 1};
        p_x[b] = syndrome_prob({ms[b][0], ms[b][1]}, t_x);
        p_z[b] = syndrome_prob({ms[b][0], ms[b][1]}, t_z);
    }
    double rate = 0.0;
    for (int j = 1; j <= conn.k_main; ++j)
        for (int bx = 0; bx < 4; ++bx) {
            const double qx = end_to_end_error(ms[bx], j, conn, PauliFamily::X);
            for (int bz = 0; bz < 4; ++bz) {
                const double qz = end_to_end_error(ms[bz], j, conn, PauliFamily::Z);
                rate += p_x[bx] * p_z[bz] * secret_fraction(qx, qz);
            }
        }
    return rate;
}

inline double switch_rate(const std::vector<double>& per_connection_rates) {
    double s = 0.0;
    for (double r : per_connection_rates) {
        require(r >= 0.0, "switch_rate: rates must be nonnegative");
        s += r;
    }
    return s;
}

struct FairnessResult {
    double f = 0.0;
    bool degenerate = false;  // all rates zero: F is undefined, reported as 0
};

inline FairnessResult fairness(const std::vector<double>& rates) {
    require(rates.size() >= 2, "fairness: needs at least two rates");
    double mean = 0.0;
    for (double r : rates) {
        require(r >= 0.0, "fairness: rates must be nonnegative");
        mean += r;
    }
    mean /= static_cast<double>(rates.size());
    if (mean <= 0.0) return {0.0, true};
    double d2 = 0.0;
    for (double a : rates)
        for (double b : rates) d2 += (a - b) * (a - b);
    d2 *= 0.5;
    return {std::sqrt(d2) / mean, false};
}

struct RateReport {
    std::vector<double> per_connection_rates;
    double switch_rate = 0.0;
    double fairness = 0.0;
    bool fairness_degenerate = false;
    double per_mode_rate = 0.0;  // 2 R / k_total
};

inline RateReport make_rate_report(const std::vector<double>& per_connection_rates, int k_total) {
    RateReport report;
    report.per_connection_rates = per_connection_rates;
    report.switch_rate = switch_rate(per_connection_rates);
    if (per_connection_rates.size() >= 2) {
        const FairnessResult f = fairness(per_connection_rates);
        report.fairness = f.f;
        report.fairness_degenerate = f.degenerate;
    }
    if (k_total > 0) report.per_mode_rate = 2.0 * report.switch_rate / static_cast<double>(k_total);
    return report;
}

}  // namespace gkps
