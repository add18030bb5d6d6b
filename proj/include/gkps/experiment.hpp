#pragma once

// Experiment drivers: one function per experiment kind, each producing a CSV
// table plus a machine-readable summary, and the orchestrator that writes
// both and a run manifest. Identical config and seed give byte-identical
// tables regardless of thread count.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gkps/allocator.hpp"
#include "gkps/config.hpp"
#include "gkps/germ.hpp"

namespace gkps {

inline constexpr const char* kVersion = "0.1.0";

struct RunResult {
    int exit_code = 0;  // 0 success, 2 config error, 3 runtime error
    std::string table_path;
    std::string manifest_path;
    std::string error;
};

namespace detail {

class CsvWriter {
  public:
    explicit CsvWriter(const std::vector<std::string>& header) : cols_(header.size()) {
        append(header);
    }

    void row(const std::vector<std::string>& cells) {
        require(cells.size() == cols_, "CsvWriter: column count mismatch");
        append(cells);
    }

    const std::string& str() const { return buf_; }

  private:
    void append(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += cells[i];
        }
        buf_ += '\n';
    }

    std::string buf_;
    std::size_t cols_;
};

struct ExperimentOutput {
    std::string csv;
    nlohmann::json summary;
};

inline SimInputs sim_inputs(const ScenarioConfig& cfg) {
    SimInputs in;
    in.params = cfg.physics;
    in.profile_trials = cfg.profile_trials;
    in.inner_samples = cfg.inner_samples;
    in.seed = cfg.seed;
    return in;
}

// Builds the cache entries the run will need, farming distinct distances out
// to worker threads. Entries are content-addressed, so this only moves work
// forward in time; results are unchanged.
inline void prebuild_cache(SimCache& cache, const std::vector<double>& profile_ls,
                           double l_storage, int threads) {
    std::map<std::uint64_t, double> unique;
    for (double l : profile_ls) unique[distance_key(l)] = l;
    std::vector<std::function<void()>> jobs;
    for (const auto& [key, l] : unique) {
        (void)key;
        const double dist = l;
        jobs.push_back([&cache, dist] { cache.family(dist); });
    }
    jobs.push_back([&cache, l_storage] { cache.inner(l_storage); });
    if (threads <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) jobs[i]();
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(threads), jobs.size());
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// Most balanced split, ties toward the lexicographically smallest vector.
inline std::vector<int> default_allocation(const Topology& topo) {
    std::vector<int> alloc(static_cast<std::size_t>(topo.n_ids()), 0);
    if (topo.has_datacenter()) {
        if (topo.k_total % 2 != 0)
            throw config_error("allocation: a data-center topology needs an even k_total");
        const int k_d = topo.k_total / 2;
        const auto ids = topo.client_ids();
        const int m = static_cast<int>(ids.size());
        if (k_d < m) throw config_error("allocation: budget below one link per client");
        const int q = k_d / m, r = k_d % m;
        for (int i = 0; i < m; ++i)
            alloc[static_cast<std::size_t>(ids[i])] = q + (i >= m - r ? 1 : 0);
        alloc[static_cast<std::size_t>(topo.datacenter_id)] = k_d;
    } else {
        const int n = topo.n_ids();
        const int q = topo.k_total / n, r = topo.k_total % n;
        if (q < 1) throw config_error("allocation: budget below one link per client");
        for (int i = 0; i < n; ++i)
            alloc[static_cast<std::size_t>(i)] = q + (i >= n - r ? 1 : 0);
    }
    return alloc;
}

inline void check_allocation(const Topology& topo, const std::vector<int>& alloc) {
    if (static_cast<int>(alloc.size()) != topo.n_ids())
        throw config_error("allocation: length must match the id count");
    int sum = 0;
    for (int k : alloc) {
        if (k < 1) throw config_error("allocation: every party needs at least one link");
        sum += k;
    }
    if (sum != topo.k_total) throw config_error("allocation: entries must sum to k_total");
    if (topo.has_datacenter()) {
        int client_sum = 0;
        for (int id : topo.client_ids()) client_sum += alloc[static_cast<std::size_t>(id)];
        if (client_sum != alloc[static_cast<std::size_t>(topo.datacenter_id)])
            throw config_error("allocation: data-center share must equal the client total");
    }
}

inline int max_client_entry(const Topology& topo, const std::vector<int>& alloc) {
    int m = 1;
    for (int id : topo.client_ids()) m = std::max(m, alloc[static_cast<std::size_t>(id)]);
    return m;
}

// 16-term secret rate of one matched link pair from its sampled outer error
// likelihoods and the shared inner-leaf stats.
inline double pair_secret_rate(const BsmOutcome& a, const BsmOutcome& b,
                               const InnerLeafStats& inner) {
    double rate = 0.0;
    for (int mx0 = 0; mx0 <= 1; ++mx0)
        for (int mx1 = 0; mx1 <= 1; ++mx1) {
            const double p_x = (mx0 ? inner.t_x : 1.0 - inner.t_x) *
                               (mx1 ? inner.t_x : 1.0 - inner.t_x);
            const double qa_x = combine_leaf_error(inner.q_inner_x[static_cast<std::size_t>(mx0)],
                                                   a.qx_outer);
            const double qb_x = combine_leaf_error(inner.q_inner_x[static_cast<std::size_t>(mx1)],
                                                   b.qx_outer);
            const double qx = 0.5 * (1.0 - (1.0 - 2.0 * qa_x) * (1.0 - 2.0 * qb_x));
            for (int mz0 = 0; mz0 <= 1; ++mz0)
                for (int mz1 = 0; mz1 <= 1; ++mz1) {
                    const double p_z = (mz0 ? inner.t_z : 1.0 - inner.t_z) *
                                       (mz1 ? inner.t_z : 1.0 - inner.t_z);
                    const double qa_z = combine_leaf_error(
                        inner.q_inner_z[static_cast<std::size_t>(mz0)], a.qz_outer);
                    const double qb_z = combine_leaf_error(
                        inner.q_inner_z[static_cast<std::size_t>(mz1)], b.qz_outer);
                    const double qz = 0.5 * (1.0 - (1.0 - 2.0 * qa_z) * (1.0 - 2.0 * qb_z));
                    rate += p_x * p_z * secret_fraction(std::min(qx, 0.5), std::min(qz, 0.5));
                }
        }
    return rate;
}

// Round-by-round pipeline estimate: simulate every party's links, run the
// greedy matcher, score each matched pair, attribute to its connection.
// Cross-checks the ranked-profile calculation.
inline std::vector<double> roundwise_rates(const Topology& topo, const std::vector<int>& alloc,
                                           const InnerLeafStats& inner, const NoiseParams& params,
                                           long rounds, std::uint64_t seed) {
    std::map<std::pair<int, int>, std::size_t> conn_index;
    for (const auto& pr : topo.connections.pairs())
        conn_index.emplace(pr, conn_index.size());
    std::vector<double> sums(conn_index.size(), 0.0);
    for (long round = 0; round < rounds; ++round) {
        std::vector<std::vector<BsmOutcome>> per_party;
        for (int id = 0; id < topo.n_ids(); ++id) {
            const double l = topo.client_distances[static_cast<std::size_t>(id)];
            auto rng = make_stream(seed, {kStreamRoundwise, distance_key(l),
                                          static_cast<std::uint64_t>(id),
                                          static_cast<std::uint64_t>(round)});
            per_party.push_back(
                simulate_round(l, alloc[static_cast<std::size_t>(id)], params, rng));
        }
        const Matching matching = germ_match(per_party, topo.connections);
        for (const auto& [a, b] : matching.pairs) {
            const auto key = a.client < b.client ? std::make_pair(a.client, b.client)
                                                 : std::make_pair(b.client, a.client);
            sums[conn_index.at(key)] += pair_secret_rate(
                per_party[static_cast<std::size_t>(a.client)][static_cast<std::size_t>(a.link)],
                per_party[static_cast<std::size_t>(b.client)][static_cast<std::size_t>(b.link)],
                inner);
        }
    }
    for (double& s : sums) s /= static_cast<double>(rounds);
    return sums;
}

inline void check_two_client(const ScenarioConfig& cfg, const char* kind) {
    if (cfg.topology.has_datacenter() || cfg.topology.n_ids() != 2)
        throw config_error(std::string("config: experiment '") + kind +
                           "' needs a plain two-client topology");
}

inline void check_star(const ScenarioConfig& cfg, const char* kind) {
    if (!cfg.topology.has_datacenter())
        throw config_error(std::string("config: experiment '") + kind +
                           "' needs a data-center topology");
    if (cfg.topology.k_total % 2 != 0)
        throw config_error(std::string("config: experiment '") + kind + "' needs an even k_total");
}

inline ExperimentOutput run_rate(const ScenarioConfig& cfg, int threads) {
    const Topology& topo = cfg.topology;
    const std::vector<int> alloc =
        cfg.allocation.empty() ? default_allocation(topo) : cfg.allocation;
    check_allocation(topo, alloc);

    SimCache cache(sim_inputs(cfg), max_client_entry(topo, alloc));
    prebuild_cache(cache, topo.client_distances, topo.l_storage(), threads);
    const RateReport report = evaluate_allocation(topo, alloc, cache);

    std::vector<double> roundwise;
    if (cfg.cross_check)
        roundwise = roundwise_rates(topo, alloc, cache.inner(topo.l_storage()), cfg.physics,
                                    cfg.cross_check_rounds, cfg.seed);

    std::vector<std::string> header{"conn_a", "conn_b", "k_main", "r_e2e", "per_mode_rate"};
    if (cfg.cross_check) header.push_back("r_e2e_roundwise");
    header.insert(header.end(), {"switch_rate", "fairness"});
    CsvWriter csv(header);
    std::size_t idx = 0;
    for (const auto& [a, b] : topo.connections.pairs()) {
        const int k_main = topo.has_datacenter()
                               ? alloc[static_cast<std::size_t>(a == topo.datacenter_id ? b : a)]
                               : std::min(alloc[static_cast<std::size_t>(a)],
                                          alloc[static_cast<std::size_t>(b)]);
        const double r = report.per_connection_rates[idx];
        std::vector<std::string> row{std::to_string(a),
                                     std::to_string(b),
                                     std::to_string(k_main),
                                     fmt_double(r),
                                     fmt_double(2.0 * r / topo.k_total)};
        if (cfg.cross_check) row.push_back(fmt_double(roundwise[idx]));
        row.push_back(fmt_double(report.switch_rate));
        row.push_back(fmt_double(report.fairness));
        csv.row(row);
        ++idx;
    }

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"allocation", alloc},
                   {"per_connection_rates", report.per_connection_rates},
                   {"switch_rate", report.switch_rate},
                   {"per_mode_rate", report.per_mode_rate},
                   {"fairness", report.fairness},
                   {"fairness_degenerate", report.fairness_degenerate}};
    if (cfg.cross_check) out.summary["roundwise_rates"] = roundwise;
    return out;
}

inline ExperimentOutput run_optimize_two(const ScenarioConfig& cfg, int threads) {
    check_two_client(cfg, "optimize-two");
    const Topology& topo = cfg.topology;
    const double l1 = topo.client_distances[0], l2 = topo.client_distances[1];

    SimCache cache(sim_inputs(cfg), std::max(1, topo.k_total - 1));
    prebuild_cache(cache, topo.client_distances, topo.l_storage(), threads);
    const AllocationResult best = optimize_two_client(l1, l2, topo.k_total, cache);

    CsvWriter csv({"k_1", "k_2", "r_e2e", "per_mode_rate", "best"});
    for (int k1 = 1; k1 <= topo.k_total - 1; ++k1) {
        const std::vector<int> alloc{k1, topo.k_total - k1};
        const RateReport report = evaluate_allocation(topo, alloc, cache);
        csv.row({std::to_string(k1), std::to_string(topo.k_total - k1),
                 fmt_double(report.switch_rate), fmt_double(report.per_mode_rate),
                 alloc == best.allocation ? "1" : "0"});
    }

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"best_allocation", best.allocation},
                   {"best_rate", best.rates.switch_rate},
                   {"per_mode_rate", best.rates.per_mode_rate}};
    return out;
}

inline ExperimentOutput run_placement(const ScenarioConfig& cfg, int threads) {
    check_two_client(cfg, "placement");
    if (cfg.placement_l_total <= 0.0)
        throw config_error("config: experiment.l_total must be > 0 for placement");
    if (cfg.placement_grid.empty())
        throw config_error("config: experiment.grid required for placement");

    SimCache cache(sim_inputs(cfg), std::max(1, cfg.topology.k_total - 1));
    std::vector<double> distances;
    double l_store = 0.0;
    for (double f : cfg.placement_grid) {
        distances.push_back(f * cfg.placement_l_total);
        distances.push_back((1.0 - f) * cfg.placement_l_total);
        l_store = std::max(l_store, std::max(f, 1.0 - f) * cfg.placement_l_total);
    }
    // storage distances differ per grid point; prebuild the farthest, let the
    // rest fill in lazily
    prebuild_cache(cache, distances, l_store, threads);
    const PlacementResult result =
        optimize_placement(cfg.placement_l_total, cfg.topology.k_total, cfg.placement_grid, cache);

    CsvWriter csv({"fraction", "l_1", "l_2", "k_1", "k_2", "r_e2e", "best"});
    for (const auto& point : result.points) {
        csv.row({fmt_double(point.fraction), fmt_double(point.fraction * cfg.placement_l_total),
                 fmt_double((1.0 - point.fraction) * cfg.placement_l_total),
                 std::to_string(point.best.allocation[0]), std::to_string(point.best.allocation[1]),
                 fmt_double(point.best.rates.switch_rate),
                 point.fraction == result.best_fraction ? "1" : "0"});
    }

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"best_fraction", result.best_fraction}};
    return out;
}

inline ExperimentOutput run_optimize_multi(const ScenarioConfig& cfg, int threads) {
    check_star(cfg, "optimize-multi");
    const Topology& topo = cfg.topology;
    const int n = static_cast<int>(topo.client_ids().size());
    if (topo.k_total / 2 < 2 * n)
        throw config_error("config: optimize-multi needs k_total/2 >= 2n");

    const int k_cap = cfg.enumerate_kd ? std::max(1, topo.k_total - 2 * n + 1)
                                       : std::max(1, topo.k_total / 2 - n + 1);
    SimCache cache(sim_inputs(cfg), k_cap);
    prebuild_cache(cache, topo.client_distances, topo.l_storage(), threads);
    const AllocationResult result =
        optimize_multi_fair(topo, cfg.f_threshold, cache, cfg.enumerate_kd);

    std::vector<std::string> header;
    for (int id : topo.client_ids()) header.push_back("k_" + std::to_string(id));
    header.push_back("k_dc");
    if (cfg.enumerate_kd)
        for (int id : topo.client_ids()) header.push_back("d_" + std::to_string(id));
    for (std::size_t i = 0; i < result.rates.per_connection_rates.size(); ++i)
        header.push_back("r_" + std::to_string(i));
    header.insert(header.end(), {"switch_rate", "fairness", "feasible"});
    CsvWriter csv(header);
    std::vector<std::string> row;
    for (int id : topo.client_ids())
        row.push_back(std::to_string(result.allocation[static_cast<std::size_t>(id)]));
    row.push_back(
        std::to_string(result.allocation[static_cast<std::size_t>(topo.datacenter_id)]));
    if (cfg.enumerate_kd) {
        const std::vector<int>& d = result.dc_shares;
        for (int i = 0; i < n; ++i)
            row.push_back(std::to_string(
                d.empty() ? result.allocation[static_cast<std::size_t>(topo.client_ids()[i])]
                          : d[static_cast<std::size_t>(i)]));
    }
    for (double r : result.rates.per_connection_rates) row.push_back(fmt_double(r));
    row.push_back(fmt_double(result.rates.switch_rate));
    row.push_back(fmt_double(result.rates.fairness));
    row.push_back(result.feasible ? "1" : "0");
    csv.row(row);

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"allocation", result.allocation},
                   {"dc_shares", result.dc_shares},
                   {"switch_rate", result.rates.switch_rate},
                   {"fairness", result.rates.fairness},
                   {"feasible", result.feasible}};
    return out;
}

inline ExperimentOutput run_dominant_sweep(const ScenarioConfig& cfg, int threads) {
    check_star(cfg, "dominant-sweep");
    const Topology& topo = cfg.topology;
    const int n = static_cast<int>(topo.client_ids().size());

    SimCache cache(sim_inputs(cfg), std::max(1, topo.k_total / 2 - n + 1));
    prebuild_cache(cache, topo.client_distances, topo.l_storage(), threads);
    const DominantSweepResult result = dominant_client_sweep(topo, cache);

    std::vector<std::string> header;
    for (int i = 0; i < n; ++i)
        header.push_back("k_" + std::to_string(i + 1) + "_" + std::to_string(topo.n_ids()));
    header.push_back("R_s");
    CsvWriter csv(header);
    for (const auto& row : result.rows) {
        std::vector<std::string> cells;
        for (int k : row.client_allocation) cells.push_back(std::to_string(k));
        cells.push_back(fmt_double(row.switch_rate));
        csv.row(cells);
    }

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"rows", result.rows.size()},
                   {"mean", result.mean},
                   {"stddev", result.stddev},
                   {"min", result.min_rate},
                   {"max", result.max_rate}};
    return out;
}

inline ExperimentOutput run_fairness_sweep(const ScenarioConfig& cfg, int threads) {
    check_star(cfg, "fairness-sweep");
    const Topology& topo = cfg.topology;
    const int n = static_cast<int>(topo.client_ids().size());
    int k_cap = 1;
    for (int kt : cfg.k_totals) {
        if (kt % 2 != 0)
            throw config_error("config: fairness-sweep k_totals entries must be even");
        if (kt / 2 < n)
            throw config_error("config: fairness-sweep budget below one link per client");
        k_cap = std::max(k_cap, kt / 2 - n + 1);
    }

    SimCache cache(sim_inputs(cfg), k_cap);
    prebuild_cache(cache, topo.client_distances, topo.l_storage(), threads);

    std::vector<std::string> header{"k_total"};
    for (int id : topo.client_ids()) header.push_back("k_" + std::to_string(id));
    header.insert(header.end(), {"fairness", "switch_rate", "feasible"});
    CsvWriter csv(header);
    nlohmann::json trace = nlohmann::json::array();
    for (int kt : cfg.k_totals) {
        Topology t = topo;
        t.k_total = kt;
        const AllocationResult best = fairest_allocation(t, cache);
        std::vector<std::string> row{std::to_string(kt)};
        for (int id : topo.client_ids())
            row.push_back(std::to_string(best.allocation[static_cast<std::size_t>(id)]));
        row.push_back(fmt_double(best.rates.fairness));
        row.push_back(fmt_double(best.rates.switch_rate));
        row.push_back(best.feasible ? "1" : "0");
        csv.row(row);
        trace.push_back({{"k_total", kt},
                         {"fairness", best.rates.fairness},
                         {"feasible", best.feasible}});
    }

    ExperimentOutput out;
    out.csv = csv.str();
    out.summary = {{"trace", trace}};
    return out;
}

inline ExperimentOutput dispatch(const ScenarioConfig& cfg, int threads) {
    switch (cfg.experiment) {
        case ExperimentKind::Rate: return run_rate(cfg, threads);
        case ExperimentKind::OptimizeTwo: return run_optimize_two(cfg, threads);
        case ExperimentKind::Placement: return run_placement(cfg, threads);
        case ExperimentKind::OptimizeMulti: return run_optimize_multi(cfg, threads);
        case ExperimentKind::DominantSweep: return run_dominant_sweep(cfg, threads);
        case ExperimentKind::FairnessSweep: return run_fairness_sweep(cfg, threads);
    }
    throw config_error("config: unknown experiment kind");
}

}  // namespace detail

// Runs the configured experiment, writing <kind>.csv and manifest.json under
// out_dir. The manifest is written even when the run fails.
inline RunResult run_experiment(const ScenarioConfig& cfg, const std::string& out_dir,
                                int threads = 1) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult rr;
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["experiment"] = experiment_name(cfg.experiment);
    manifest["seed"] = cfg.seed;
    manifest["threads"] = threads;
    manifest["config"] = render_config(cfg);

    try {
        fs::create_directories(out_dir);
    } catch (const std::exception& e) {
        rr.exit_code = 3;
        rr.error = std::string("cannot create output directory: ") + e.what();
        return rr;
    }
    rr.manifest_path = (fs::path(out_dir) / "manifest.json").string();

    try {
        const detail::ExperimentOutput out = detail::dispatch(cfg, threads);
        const std::string table_name = std::string(experiment_name(cfg.experiment)) + ".csv";
        rr.table_path = (fs::path(out_dir) / table_name).string();
        std::ofstream table(rr.table_path, std::ios::binary);
        table << out.csv;
        if (!table) throw std::runtime_error("failed writing " + rr.table_path);
        manifest["status"] = "ok";
        manifest["table"] = table_name;
        manifest["summary"] = out.summary;
    } catch (const config_error& e) {
        rr.exit_code = 2;
        rr.error = e.what();
        rr.table_path.clear();
        manifest["status"] = "error";
        manifest["error"] = rr.error;
    } catch (const std::exception& e) {
        rr.exit_code = 3;
        rr.error = e.what();
        rr.table_path.clear();
        manifest["status"] = "error";
        manifest["error"] = rr.error;
    }

    const auto t1 = std::chrono::steady_clock::now();
    manifest["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    std::ofstream mf(rr.manifest_path, std::ios::binary);
    mf << manifest.dump(2) << "\n";
    if (!mf && rr.exit_code == 0) {
        rr.exit_code = 3;
        rr.error = "failed writing " + rr.manifest_path;
    }
    return rr;
}

}  // namespace gkps
