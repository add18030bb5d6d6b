#pragma once

// Integer allocation search over multiplexed link budgets: the two-client
// program, switch placement, the fairness-constrained data-center program,
// and the dominant-client sweep. All searches are exhaustive at desk scale;
// Monte Carlo work is shared through a concurrent at-most-once cache of
// ranked profiles and inner-leaf stats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "gkps/common.hpp"
#include "gkps/germ.hpp"
#include "gkps/link_sim.hpp"
#include "gkps/rates.hpp"
#include "gkps/steane.hpp"

namespace gkps {

struct SimInputs {
    NoiseParams params{};
    long profile_trials = 10000;
    long inner_samples = 100000;
    std::uint64_t seed = 1;

    void validate() const {
        params.validate();
        if (profile_trials < kMinProfileTrials)
            throw config_error("SimInputs: profile_trials below minimum 10^3");
        if (inner_samples < kMinInnerSamples)
            throw config_error("SimInputs: inner_samples below minimum 10^4");
    }
};

// Insert-or-get with at-most-once computation per key; safe for concurrent
// callers. Losers of the insert race wait on the winner's future.
template <class Key, class Value>
class OnceCache {
  public:
    template <class Fn>
    std::shared_ptr<const Value> get_or_compute(const Key& key, Fn&& fn) {
        std::promise<std::shared_ptr<const Value>> promise;
        std::shared_future<std::shared_ptr<const Value>> future;
        bool owner = false;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it == map_.end()) {
                future = promise.get_future().share();
                map_.emplace(key, future);
                owner = true;
            } else {
                future = it->second;
            }
        }
        if (owner) {
            try {
                promise.set_value(std::make_shared<const Value>(fn()));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return future.get();
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }

  private:
    mutable std::mutex mu_;
    std::map<Key, std::shared_future<std::shared_ptr<const Value>>> map_;
};

// Shared Monte Carlo state for one experiment: ranked-profile families per
// (distance, lane) and inner-leaf stats per (storage distance, lane). All
// profiles for k <= k_cap at a distance come from one pooled family, so
// every allocation comparison at that distance sees common random numbers.
class SimCache {
  public:
    SimCache(const SimInputs& inputs, int k_cap) : inputs_(inputs), k_cap_(k_cap) {
        inputs_.validate();
        require(k_cap >= 1, "SimCache: k_cap must be >= 1");
    }

    SimCache(const SimCache&) = delete;
    SimCache& operator=(const SimCache&) = delete;

    const SimInputs& inputs() const { return inputs_; }
    int k_cap() const { return k_cap_; }

    std::shared_ptr<const RankedFamily> family(double l_km, std::uint64_t lane = 0) {
        const Key key{distance_key(l_km), lane};
        return families_.get_or_compute(key, [&] {
            return RankedFamily(l_km, k_cap_, inputs_.params, inputs_.profile_trials,
                                inputs_.seed, lane);
        });
    }

    RankedLinkProfile profile(double l_km, int k, std::uint64_t lane = 0) {
        require(k >= 1 && k <= k_cap_, "SimCache::profile: k out of cache range");
        return family(l_km, lane)->profile(k);
    }

    InnerLeafStats inner(double l_storage_km, std::uint64_t lane = 0) {
        const Key key{distance_key(l_storage_km), lane};
        return *inner_.get_or_compute(key, [&] {
            return estimate_inner_stats_seeded(l_storage_km, inputs_.params,
                                               inputs_.inner_samples, inputs_.seed, lane);
        });
    }

  private:
    using Key = std::pair<std::uint64_t, std::uint64_t>;
    SimInputs inputs_;
    int k_cap_;
    OnceCache<Key, RankedFamily> families_;
    OnceCache<Key, InnerLeafStats> inner_;
};

struct Topology {
    std::vector<double> client_distances;  // indexed by id; includes the data center
    int datacenter_id = -1;
    ConnectionSet connections;
    int k_total = 0;

    bool has_datacenter() const { return datacenter_id >= 0; }
    int n_ids() const { return static_cast<int>(client_distances.size()); }

    std::vector<int> client_ids() const {
        std::vector<int> ids;
        for (int i = 0; i < n_ids(); ++i)
            if (i != datacenter_id) ids.push_back(i);
        return ids;
    }

    double l_storage() const {
        double l = 0.0;
        for (double d : client_distances) l = std::max(l, d);
        return l;
    }

    void validate() const {
        require(!client_distances.empty(), "Topology: no clients");
        for (double d : client_distances)
            require(d > 0.0, "Topology: distances must be > 0");
        require(!connections.empty(), "Topology: no required connections");
        for (const auto& [a, b] : connections.pairs())
            require(a < n_ids() && b < n_ids(), "Topology: connection references unknown id");
        for (int i = 0; i < n_ids(); ++i)
            require(connections.mentions(i), "Topology: id not in any connection");
        if (has_datacenter())
            require(datacenter_id < n_ids(), "Topology: data-center id out of range");
        require(k_total >= 2 * static_cast<int>(connections.size()),
                "Topology: k_total below two links per connection");
    }
};

inline Topology two_client_topology(double l1, double l2, int k_total) {
    Topology t;
    t.client_distances = {l1, l2};
    t.k_total = k_total;
    t.connections.add(0, 1);
    return t;
}

inline Topology star_topology(const std::vector<double>& client_ls, double l_d, int k_total) {
    Topology t;
    t.client_distances = client_ls;
    t.client_distances.push_back(l_d);
    t.datacenter_id = static_cast<int>(client_ls.size());
    for (int i = 0; i < static_cast<int>(client_ls.size()); ++i)
        t.connections.add(i, t.datacenter_id);
    t.k_total = k_total;
    return t;
}

struct AllocationResult {
    std::vector<int> allocation;  // per id; data-center entry included when present
    std::vector<int> dc_shares;   // per client; set only by the k_d-enumeration path
    RateReport rates;
    bool feasible = true;
};

namespace detail {

inline ConnectionStats make_connection_stats(double l_a, int k_a, double l_b, int k_b,
                                             double l_storage, SimCache& cache) {
    ConnectionStats conn;
    conn.k_main = std::min(k_a, k_b);
    const InnerLeafStats inner = cache.inner(l_storage);
    conn.inner = {inner, inner};
    conn.outer = {cache.profile(l_a, k_a), cache.profile(l_b, k_b)};
    return conn;
}

// Enumerates x_1 + ... + x_parts = total with every x_i >= 1, in
// lexicographic order.
inline void for_each_composition(int total, int parts,
                                 const std::function<void(const std::vector<int>&)>& fn) {
    require(parts >= 1 && total >= parts, "for_each_composition: infeasible");
    std::vector<int> x(static_cast<std::size_t>(parts), 1);
    std::function<void(int, int)> rec = [&](int idx, int remaining) {
        if (idx == parts - 1) {
            x[static_cast<std::size_t>(idx)] = remaining;
            fn(x);
            return;
        }
        for (int v = 1; v <= remaining - (parts - 1 - idx); ++v) {
            x[static_cast<std::size_t>(idx)] = v;
            rec(idx + 1, remaining - v);
        }
    };
    rec(0, total);
}

inline int imbalance(const std::vector<int>& alloc) {
    const auto [lo, hi] = std::minmax_element(alloc.begin(), alloc.end());
    return *hi - *lo;
}

// Maximization order: objective, then most balanced, then lexicographic.
inline bool improves_max(double obj, const std::vector<int>& alloc, double best_obj,
                         const std::vector<int>& best_alloc) {
    if (best_alloc.empty()) return true;
    if (obj != best_obj) return obj > best_obj;
    const int ia = imbalance(alloc), ib = imbalance(best_alloc);
    if (ia != ib) return ia < ib;
    return alloc < best_alloc;
}

inline bool improves_min(double obj, const std::vector<int>& alloc, double best_obj,
                         const std::vector<int>& best_alloc) {
    if (best_alloc.empty()) return true;
    if (obj != best_obj) return obj < best_obj;
    const int ia = imbalance(alloc), ib = imbalance(best_alloc);
    if (ia != ib) return ia < ib;
    return alloc < best_alloc;
}

}  // namespace detail

// Rates for one concrete allocation. Non-data-center topologies must pair
// clients disjointly; data-center topologies use the star semantics, where
// client i's k_i links meet an equal data-center share, so the client
// entries must sum to the data-center entry.
inline RateReport evaluate_allocation(const Topology& topo, const std::vector<int>& allocation,
                                      SimCache& cache) {
    topo.validate();
    require(static_cast<int>(allocation.size()) == topo.n_ids(),
            "evaluate_allocation: allocation length mismatch");
    int sum = 0;
    for (int k : allocation) {
        require(k >= 1, "evaluate_allocation: every party needs at least one link");
        sum += k;
    }
    require(sum == topo.k_total, "evaluate_allocation: allocation must sum to k_total");

    const double l_store = topo.l_storage();
    std::vector<double> per_connection;
    if (topo.has_datacenter()) {
        const int dc = topo.datacenter_id;
        int client_sum = 0;
        for (int id : topo.client_ids()) client_sum += allocation[static_cast<std::size_t>(id)];
        require(client_sum == allocation[static_cast<std::size_t>(dc)],
                "evaluate_allocation: data-center share must equal the client total");
        for (const auto& [a, b] : topo.connections.pairs()) {
            require(a == dc || b == dc,
                    "evaluate_allocation: data-center topology requires star connections");
            const int i = a == dc ? b : a;
            const int k_i = allocation[static_cast<std::size_t>(i)];
            const ConnectionStats conn = detail::make_connection_stats(
                topo.client_distances[static_cast<std::size_t>(i)], k_i,
                topo.client_distances[static_cast<std::size_t>(dc)], k_i, l_store, cache);
            per_connection.push_back(rate_e2e(conn));
        }
    } else {
        std::vector<char> used(static_cast<std::size_t>(topo.n_ids()), 0);
        for (const auto& [a, b] : topo.connections.pairs()) {
            require(!used[static_cast<std::size_t>(a)] && !used[static_cast<std::size_t>(b)],
                    "evaluate_allocation: clients must pair disjointly");
            used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = 1;
            const ConnectionStats conn = detail::make_connection_stats(
                topo.client_distances[static_cast<std::size_t>(a)],
                allocation[static_cast<std::size_t>(a)],
                topo.client_distances[static_cast<std::size_t>(b)],
                allocation[static_cast<std::size_t>(b)], l_store, cache);
            per_connection.push_back(rate_e2e(conn));
        }
    }
    return make_rate_report(per_connection, topo.k_total);
}

inline AllocationResult optimize_two_client(double l1, double l2, int k_total, SimCache& cache) {
    require(k_total >= 2, "optimize_two_client: k_total must be >= 2");
    const Topology topo = two_client_topology(l1, l2, k_total);
    AllocationResult best;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (int k1 = 1; k1 <= k_total - 1; ++k1) {
        const std::vector<int> alloc{k1, k_total - k1};
        const RateReport report = evaluate_allocation(topo, alloc, cache);
        if (detail::improves_max(report.switch_rate, alloc, best_obj, best.allocation)) {
            best_obj = report.switch_rate;
            best.allocation = alloc;
            best.rates = report;
        }
    }
    best.feasible = true;
    return best;
}

struct PlacementPoint {
    double fraction = 0.0;
    AllocationResult best;
};

struct PlacementResult {
    double best_fraction = 0.0;
    std::vector<PlacementPoint> points;
};

// Switch placement on a two-client line of total length l_total: each grid
// fraction f puts the switch at distances (f l, (1-f) l) and is scored by
// its own optimal allocation.
inline PlacementResult optimize_placement(double l_total, int k_total,
                                          const std::vector<double>& grid, SimCache& cache) {
    require(l_total > 0.0, "optimize_placement: l_total must be > 0");
    require(!grid.empty(), "optimize_placement: empty grid");
    bool covers_half = false;
    for (double f : grid) {
        require(f > 0.0 && f < 1.0, "optimize_placement: fractions must lie in (0, 1)");
        if (std::abs(f - 0.5) < 1e-12) covers_half = true;
    }
    require(covers_half, "optimize_placement: grid must cover 0.5");

    PlacementResult result;
    for (double f : grid) {
        PlacementPoint point;
        point.fraction = f;
        point.best = optimize_two_client(f * l_total, (1.0 - f) * l_total, k_total, cache);
        result.points.push_back(std::move(point));
    }
    const PlacementPoint* winner = nullptr;
    for (const auto& p : result.points) {
        if (winner == nullptr) {
            winner = &p;
            continue;
        }
        const double r = p.best.rates.switch_rate, rb = winner->best.rates.switch_rate;
        if (r > rb) {
            winner = &p;
        } else if (r == rb) {
            const double da = std::abs(p.fraction - 0.5), db = std::abs(winner->fraction - 0.5);
            if (da < db || (da == db && p.fraction < winner->fraction)) winner = &p;
        }
    }
    result.best_fraction = winner->fraction;
    return result;
}

inline constexpr double kDefaultFairnessThreshold = 0.5;

namespace detail {

struct StarRow {
    std::vector<int> allocation;  // per id
    std::vector<int> dc_shares;   // per client (k_d-enumeration only)
    RateReport rates;
};

// Explicit star evaluation with possibly unequal per-connection splits:
// client i contributes c_i links, the data center d_i; rank depth is the
// smaller of the two.
inline RateReport evaluate_star_explicit(const Topology& topo, const std::vector<int>& c,
                                         const std::vector<int>& d, SimCache& cache) {
    const double l_store = topo.l_storage();
    const double l_d = topo.client_distances[static_cast<std::size_t>(topo.datacenter_id)];
    const auto ids = topo.client_ids();
    std::vector<double> per_connection;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ConnectionStats conn = make_connection_stats(
            topo.client_distances[static_cast<std::size_t>(ids[i])], c[i], l_d, d[i], l_store,
            cache);
        per_connection.push_back(rate_e2e(conn));
    }
    return make_rate_report(per_connection, topo.k_total);
}

inline void check_star(const Topology& topo) {
    topo.validate();
    require(topo.has_datacenter(), "star program requires a data-center topology");
    for (const auto& [a, b] : topo.connections.pairs())
        require(a == topo.datacenter_id || b == topo.datacenter_id,
                "star program requires every connection to touch the data center");
}

}  // namespace detail

// Fairness-constrained program on the data-center star. The data center is
// pinned to half the budget and each connection's 2 k_i links split equally,
// so the search space is the compositions of k_total/2 over clients. Among
// allocations with F < F_t the switch rate is maximized; when none qualifies
// the minimum-F allocation is returned flagged infeasible. With
// enumerate_k_d the half-budget pin is dropped and both sides' compositions
// are searched, for checking that the pin is the right one.
inline AllocationResult optimize_multi_fair(const Topology& topo, double f_threshold,
                                            SimCache& cache, bool enumerate_k_d = false) {
    detail::check_star(topo);
    const int n = static_cast<int>(topo.client_ids().size());
    require(topo.k_total % 2 == 0, "optimize_multi_fair: k_total must be even");
    require(topo.k_total / 2 >= 2 * n, "optimize_multi_fair: budget below two links per side");
    require(f_threshold > 0.0, "optimize_multi_fair: threshold must be > 0");

    std::vector<detail::StarRow> rows;
    const auto ids = topo.client_ids();
    auto push_row = [&](const std::vector<int>& c, const std::vector<int>& d) {
        detail::StarRow row;
        row.allocation.assign(static_cast<std::size_t>(topo.n_ids()), 0);
        int k_d = 0;
        for (int share : d) k_d += share;
        for (std::size_t i = 0; i < ids.size(); ++i)
            row.allocation[static_cast<std::size_t>(ids[i])] = c[i];
        row.allocation[static_cast<std::size_t>(topo.datacenter_id)] = k_d;
        if (c != d) row.dc_shares = d;
        row.rates = detail::evaluate_star_explicit(topo, c, d, cache);
        rows.push_back(std::move(row));
    };

    if (!enumerate_k_d) {
        detail::for_each_composition(topo.k_total / 2, n,
                                     [&](const std::vector<int>& c) { push_row(c, c); });
    } else {
        for (int k_d = n; k_d <= topo.k_total - n; ++k_d) {
            detail::for_each_composition(
                topo.k_total - k_d, n, [&](const std::vector<int>& c) {
                    detail::for_each_composition(
                        k_d, n, [&](const std::vector<int>& d) { push_row(c, d); });
                });
        }
    }

    auto tie_key = [](const detail::StarRow& row) {
        std::vector<int> key = row.allocation;
        key.insert(key.end(), row.dc_shares.begin(), row.dc_shares.end());
        return key;
    };

    const detail::StarRow* best = nullptr;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        if (row.rates.fairness_degenerate || row.rates.fairness >= f_threshold) continue;
        if (best == nullptr ||
            detail::improves_max(row.rates.switch_rate, tie_key(row), best_obj, tie_key(*best))) {
            best = &row;
            best_obj = row.rates.switch_rate;
        }
    }
    AllocationResult result;
    if (best != nullptr) {
        result.allocation = best->allocation;
        result.dc_shares = best->dc_shares;
        result.rates = best->rates;
        result.feasible = true;
        return result;
    }
    const detail::StarRow* fallback = nullptr;
    double fallback_obj = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        const double f = row.rates.fairness_degenerate
                             ? std::numeric_limits<double>::infinity()
                             : row.rates.fairness;
        if (fallback == nullptr ||
            detail::improves_min(f, tie_key(row), fallback_obj, tie_key(*fallback))) {
            fallback = &row;
            fallback_obj = f;
        }
    }
    result.allocation = fallback->allocation;
    result.dc_shares = fallback->dc_shares;
    result.rates = fallback->rates;
    result.feasible = false;
    return result;
}

// Minimum-F allocation on the equal-split star, for tracing achievable
// fairness against the budget. Degenerate (all-zero-rate) rows cannot be
// meaningfully ranked and are excluded; if every row is degenerate the most
// balanced one is returned flagged infeasible.
inline AllocationResult fairest_allocation(const Topology& topo, SimCache& cache) {
    detail::check_star(topo);
    const int n = static_cast<int>(topo.client_ids().size());
    require(topo.k_total % 2 == 0, "fairest_allocation: k_total must be even");
    require(topo.k_total / 2 >= n, "fairest_allocation: budget below one link per client");

    const auto ids = topo.client_ids();
    AllocationResult best;
    double best_f = std::numeric_limits<double>::infinity();
    AllocationResult fallback;
    detail::for_each_composition(topo.k_total / 2, n, [&](const std::vector<int>& c) {
        std::vector<int> alloc(static_cast<std::size_t>(topo.n_ids()), 0);
        for (std::size_t i = 0; i < ids.size(); ++i)
            alloc[static_cast<std::size_t>(ids[i])] = c[i];
        alloc[static_cast<std::size_t>(topo.datacenter_id)] = topo.k_total / 2;
        RateReport report = evaluate_allocation(topo, alloc, cache);
        if (report.fairness_degenerate) {
            if (fallback.allocation.empty() ||
                detail::improves_min(0.0, alloc, 0.0, fallback.allocation)) {
                fallback.allocation = alloc;
                fallback.rates = report;
                fallback.feasible = false;
            }
            return;
        }
        if (detail::improves_min(report.fairness, alloc, best_f, best.allocation)) {
            best_f = report.fairness;
            best.allocation = alloc;
            best.rates = report;
            best.feasible = true;
        }
    });
    return best.allocation.empty() ? fallback : best;
}

struct DominantSweepRow {
    std::vector<int> client_allocation;
    double switch_rate = 0.0;
};

struct DominantSweepResult {
    std::vector<DominantSweepRow> rows;
    double mean = 0.0;
    double stddev = 0.0;  // population
    double min_rate = 0.0;
    double max_rate = 0.0;
};

// Every equal-split allocation on a star whose data center is strictly the
// farthest party, with the spread of the resulting switch rates.
inline DominantSweepResult dominant_client_sweep(const Topology& topo, SimCache& cache) {
    detail::check_star(topo);
    const auto ids = topo.client_ids();
    const double l_d = topo.client_distances[static_cast<std::size_t>(topo.datacenter_id)];
    for (int id : ids)
        require(topo.client_distances[static_cast<std::size_t>(id)] < l_d,
                "dominant_client_sweep: data center must be strictly farthest");
    const int n = static_cast<int>(ids.size());
    require(topo.k_total % 2 == 0, "dominant_client_sweep: k_total must be even");
    require(topo.k_total / 2 >= n, "dominant_client_sweep: budget below one link per client");

    DominantSweepResult result;
    detail::for_each_composition(topo.k_total / 2, n, [&](const std::vector<int>& c) {
        std::vector<int> alloc(static_cast<std::size_t>(topo.n_ids()), 0);
        for (std::size_t i = 0; i < ids.size(); ++i)
            alloc[static_cast<std::size_t>(ids[i])] = c[i];
        alloc[static_cast<std::size_t>(topo.datacenter_id)] = topo.k_total / 2;
        const RateReport report = evaluate_allocation(topo, alloc, cache);
        result.rows.push_back({c, report.switch_rate});
    });

    double sum = 0.0, min_r = std::numeric_limits<double>::infinity(), max_r = 0.0;
    for (const auto& row : result.rows) {
        sum += row.switch_rate;
        min_r = std::min(min_r, row.switch_rate);
        max_r = std::max(max_r, row.switch_rate);
    }
    result.mean = sum / static_cast<double>(result.rows.size());
    double ss = 0.0;
    for (const auto& row : result.rows) {
        const double d = row.switch_rate - result.mean;
        ss += d * d;
    }
    result.stddev = std::sqrt(ss / static_cast<double>(result.rows.size()));
    result.min_rate = min_r;
    result.max_rate = max_r;
    return result;
}

}  // namespace gkps
