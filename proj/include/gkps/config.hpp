#pragma once

// Scenario configuration: a flat dotted-key text format (one `section.key =
// value` per line, `#` comments), parsed with key-path and line diagnostics,
// plus the canonical renderer used for manifests. parse(render(c))
// reproduces c.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gkps/allocator.hpp"
#include "gkps/noise.hpp"

namespace gkps {

enum class ExperimentKind { Rate, OptimizeTwo, Placement, OptimizeMulti, DominantSweep, FairnessSweep };

inline const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Rate: return "rate";
        case ExperimentKind::OptimizeTwo: return "optimize-two";
        case ExperimentKind::Placement: return "placement";
        case ExperimentKind::OptimizeMulti: return "optimize-multi";
        case ExperimentKind::DominantSweep: return "dominant-sweep";
        case ExperimentKind::FairnessSweep: return "fairness-sweep";
    }
    return "rate";
}

struct ScenarioConfig {
    Topology topology;
    std::vector<int> allocation;  // per id; empty = balanced default
    NoiseParams physics{};
    long profile_trials = 10000;
    long inner_samples = 100000;
    std::uint64_t seed = 1;
    ExperimentKind experiment = ExperimentKind::Rate;
    double f_threshold = kDefaultFairnessThreshold;
    bool enumerate_kd = false;
    bool cross_check = false;
    long cross_check_rounds = 200;
    double placement_l_total = 0.0;
    std::vector<double> placement_grid;
    std::vector<int> k_totals;  // fairness-sweep budgets; defaults to {topology.k_total}
    std::string out_path = "results";
    std::string out_format = "csv";
};

namespace detail {

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

[[noreturn]] inline void config_fail(const std::string& key, int line, const std::string& what) {
    std::ostringstream os;
    os << "config line " << line << ", key '" << key << "': " << what;
    throw config_error(os.str());
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    for (char c : key)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return key.find('.') != std::string::npos;
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ',')) parts.push_back(trim(item));
    return parts;
}

class ConfigReader {
  public:
    explicit ConfigReader(const std::string& text) {
        std::istringstream is(text);
        std::string line;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) config_fail(line, line_no, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!valid_key(key)) config_fail(key, line_no, "malformed key");
            if (entries_.count(key)) config_fail(key, line_no, "duplicate key");
            if (value.empty()) config_fail(key, line_no, "empty value");
            entries_[key] = {value, line_no, false};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const RawEntry& fetch(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw config_error("config: missing required key '" + key + "'");
        it->second.used = true;
        return it->second;
    }

    double get_double(const std::string& key) {
        const RawEntry& e = fetch(key);
        return parse_double(key, e.line, e.value);
    }

    double get_double_or(const std::string& key, double fallback) {
        return has(key) ? get_double(key) : fallback;
    }

    long get_long(const std::string& key) {
        const RawEntry& e = fetch(key);
        return parse_long(key, e.line, e.value);
    }

    long get_long_or(const std::string& key, long fallback) {
        return has(key) ? get_long(key) : fallback;
    }

    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const RawEntry& e = fetch(key);
        std::uint64_t out = 0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto res = std::from_chars(first, last, out);
        if (res.ec != std::errc{} || res.ptr != last)
            config_fail(key, e.line, "expected an unsigned 64-bit integer");
        return out;
    }

    bool get_bool_or(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const RawEntry& e = fetch(key);
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        config_fail(key, e.line, "expected 'true' or 'false'");
    }

    std::string get_string(const std::string& key) { return fetch(key).value; }

    std::string get_string_or(const std::string& key, const std::string& fallback) {
        return has(key) ? get_string(key) : fallback;
    }

    std::vector<double> get_doubles(const std::string& key) {
        const RawEntry& e = fetch(key);
        std::vector<double> out;
        for (const auto& part : split_list(e.value)) out.push_back(parse_double(key, e.line, part));
        if (out.empty()) config_fail(key, e.line, "expected a comma-separated list");
        return out;
    }

    std::vector<int> get_ints(const std::string& key) {
        const RawEntry& e = fetch(key);
        std::vector<int> out;
        for (const auto& part : split_list(e.value))
            out.push_back(static_cast<int>(parse_long(key, e.line, part)));
        if (out.empty()) config_fail(key, e.line, "expected a comma-separated list");
        return out;
    }

    // "a-b" unordered id pairs
    std::vector<std::pair<int, int>> get_pairs(const std::string& key) {
        const RawEntry& e = fetch(key);
        std::vector<std::pair<int, int>> out;
        for (const auto& part : split_list(e.value)) {
            const auto dash = part.find('-');
            if (dash == std::string::npos || dash == 0 || dash + 1 == part.size())
                config_fail(key, e.line, "expected pairs like '0-1'");
            out.emplace_back(static_cast<int>(parse_long(key, e.line, part.substr(0, dash))),
                             static_cast<int>(parse_long(key, e.line, part.substr(dash + 1))));
        }
        return out;
    }

    void reject_unused() const {
        for (const auto& [key, entry] : entries_)
            if (!entry.used) config_fail(key, entry.line, "unknown key");
    }

  private:
    static double parse_double(const std::string& key, int line, const std::string& text) {
        if (text.empty()) config_fail(key, line, "expected a number");
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) config_fail(key, line, "expected a number");
        return v;
    }

    static long parse_long(const std::string& key, int line, const std::string& text) {
        long out = 0;
        const auto* first = text.data();
        const auto* last = first + text.size();
        const auto res = std::from_chars(first, last, out);
        if (res.ec != std::errc{} || res.ptr != last) config_fail(key, line, "expected an integer");
        return out;
    }

    std::map<std::string, RawEntry> entries_;
};

inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <class T, class Fmt>
std::string join_list(const std::vector<T>& xs, Fmt&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out;
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
    detail::ConfigReader reader(text);
    ScenarioConfig cfg;

    cfg.topology.client_distances = reader.get_doubles("topology.distances");
    cfg.topology.datacenter_id =
        static_cast<int>(reader.get_long_or("topology.datacenter", -1));
    cfg.topology.k_total = static_cast<int>(reader.get_long("topology.k_total"));
    if (reader.has("topology.connections")) {
        try {
            for (const auto& [a, b] : reader.get_pairs("topology.connections"))
                cfg.topology.connections.add(a, b);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("config, key 'topology.connections': ") + e.what());
        }
    } else if (cfg.topology.has_datacenter()) {
        for (int i = 0; i < cfg.topology.n_ids(); ++i)
            if (i != cfg.topology.datacenter_id)
                cfg.topology.connections.add(i, cfg.topology.datacenter_id);
    } else if (cfg.topology.n_ids() == 2) {
        cfg.topology.connections.add(0, 1);
    } else {
        throw config_error("config: 'topology.connections' required for this topology");
    }

    if (reader.has("topology.allocation")) {
        cfg.allocation = reader.get_ints("topology.allocation");
        if (static_cast<int>(cfg.allocation.size()) != cfg.topology.n_ids())
            throw config_error("config: 'topology.allocation' length must match the id count");
    }

    cfg.physics.alpha_db_per_km = reader.get_double_or("physics.alpha_db_per_km", 0.2);
    cfg.physics.sigma2_prep = reader.get_double_or("physics.sigma2_prep", 0.06);
    if (reader.has("physics.nu")) {
        const std::string nu = reader.get_string("physics.nu");
        cfg.physics.nu_override = nu == "auto" ? -1.0 : reader.get_double("physics.nu");
    }
    cfg.physics.n_max = static_cast<int>(reader.get_long_or("physics.n_max", 10));

    cfg.profile_trials = reader.get_long_or("simulation.profile_trials", 10000);
    cfg.inner_samples = reader.get_long_or("simulation.inner_samples", 100000);
    cfg.seed = reader.get_u64_or("simulation.seed", 1);

    const std::string kind = reader.get_string("experiment.kind");
    if (kind == "rate") cfg.experiment = ExperimentKind::Rate;
    else if (kind == "optimize-two") cfg.experiment = ExperimentKind::OptimizeTwo;
    else if (kind == "placement") cfg.experiment = ExperimentKind::Placement;
    else if (kind == "optimize-multi") cfg.experiment = ExperimentKind::OptimizeMulti;
    else if (kind == "dominant-sweep") cfg.experiment = ExperimentKind::DominantSweep;
    else if (kind == "fairness-sweep") cfg.experiment = ExperimentKind::FairnessSweep;
    else
        throw config_error("config: unknown experiment.kind '" + kind +
                           "' (expected rate | optimize-two | placement | optimize-multi | "
                           "dominant-sweep | fairness-sweep)");

    cfg.f_threshold = reader.get_double_or("experiment.f_threshold", kDefaultFairnessThreshold);
    cfg.enumerate_kd = reader.get_bool_or("experiment.enumerate_kd", false);
    cfg.cross_check = reader.get_bool_or("experiment.cross_check", false);
    cfg.cross_check_rounds = reader.get_long_or("experiment.cross_check_rounds", 200);
    if (cfg.experiment == ExperimentKind::Placement) {
        cfg.placement_l_total = reader.get_double("experiment.l_total");
        cfg.placement_grid = reader.get_doubles("experiment.grid");
    } else {
        cfg.placement_l_total = reader.get_double_or("experiment.l_total", 0.0);
        if (reader.has("experiment.grid")) cfg.placement_grid = reader.get_doubles("experiment.grid");
    }
    if (reader.has("experiment.k_totals")) cfg.k_totals = reader.get_ints("experiment.k_totals");
    else cfg.k_totals = {cfg.topology.k_total};

    cfg.out_path = reader.get_string_or("output.path", "results");
    cfg.out_format = reader.get_string_or("output.format", "csv");
    if (cfg.out_format != "csv") throw config_error("config: output.format must be 'csv'");

    reader.reject_unused();

    try {
        cfg.topology.validate();
        cfg.physics.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (cfg.profile_trials < kMinProfileTrials)
        throw config_error("config: simulation.profile_trials below minimum 10^3");
    if (cfg.inner_samples < kMinInnerSamples)
        throw config_error("config: simulation.inner_samples below minimum 10^4");
    if (cfg.cross_check_rounds < 1)
        throw config_error("config: experiment.cross_check_rounds must be >= 1");
    for (int kt : cfg.k_totals)
        if (kt < 2) throw config_error("config: experiment.k_totals entries must be >= 2");
    return cfg;
}

inline std::string render_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "topology.distances = "
       << detail::join_list(cfg.topology.client_distances, detail::fmt_double) << "\n";
    if (cfg.topology.has_datacenter())
        os << "topology.datacenter = " << cfg.topology.datacenter_id << "\n";
    {
        std::vector<std::string> pairs;
        for (const auto& [a, b] : cfg.topology.connections.pairs())
            pairs.push_back(std::to_string(a) + "-" + std::to_string(b));
        os << "topology.connections = "
           << detail::join_list(pairs, [](const std::string& s) { return s; }) << "\n";
    }
    os << "topology.k_total = " << cfg.topology.k_total << "\n";
    if (!cfg.allocation.empty())
        os << "topology.allocation = "
           << detail::join_list(cfg.allocation, [](int v) { return std::to_string(v); }) << "\n";
    os << "physics.alpha_db_per_km = " << detail::fmt_double(cfg.physics.alpha_db_per_km) << "\n";
    os << "physics.sigma2_prep = " << detail::fmt_double(cfg.physics.sigma2_prep) << "\n";
    os << "physics.nu = "
       << (cfg.physics.nu_override < 0.0 ? std::string("auto")
                                         : detail::fmt_double(cfg.physics.nu_override))
       << "\n";
    os << "physics.n_max = " << cfg.physics.n_max << "\n";
    os << "simulation.profile_trials = " << cfg.profile_trials << "\n";
    os << "simulation.inner_samples = " << cfg.inner_samples << "\n";
    os << "simulation.seed = " << cfg.seed << "\n";
    os << "experiment.kind = " << experiment_name(cfg.experiment) << "\n";
    os << "experiment.f_threshold = " << detail::fmt_double(cfg.f_threshold) << "\n";
    os << "experiment.enumerate_kd = " << (cfg.enumerate_kd ? "true" : "false") << "\n";
    os << "experiment.cross_check = " << (cfg.cross_check ? "true" : "false") << "\n";
    os << "experiment.cross_check_rounds = " << cfg.cross_check_rounds << "\n";
    if (cfg.experiment == ExperimentKind::Placement || !cfg.placement_grid.empty()) {
        os << "experiment.l_total = " << detail::fmt_double(cfg.placement_l_total) << "\n";
        os << "experiment.grid = " << detail::join_list(cfg.placement_grid, detail::fmt_double)
           << "\n";
    }
    os << "experiment.k_totals = "
       << detail::join_list(cfg.k_totals, [](int v) { return std::to_string(v); }) << "\n";
    os << "output.path = " << cfg.out_path << "\n";
    os << "output.format = " << cfg.out_format << "\n";
    return os.str();
}

}  // namespace gkps
