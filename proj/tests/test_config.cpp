#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "gkps/config.hpp"

using namespace gkps;
using Catch::Approx;

namespace {

const char* kMinimalTwoClient =
    "topology.distances = 1, 2\n"
    "topology.k_total = 10\n"
    "experiment.kind = rate\n";

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

template <class Fn>
std::string error_of(Fn&& fn) {
    try {
        fn();
    } catch (const config_error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal config fills defaults", "[config]") {
    const ScenarioConfig cfg = parse_config(kMinimalTwoClient);
    REQUIRE(cfg.topology.client_distances == std::vector<double>{1.0, 2.0});
    REQUIRE(cfg.topology.k_total == 10);
    REQUIRE_FALSE(cfg.topology.has_datacenter());
    REQUIRE(cfg.topology.connections.allowed(0, 1));
    REQUIRE(cfg.physics.alpha_db_per_km == 0.2);
    REQUIRE(cfg.physics.sigma2_prep == 0.06);
    REQUIRE(cfg.physics.nu_override == -1.0);
    REQUIRE(cfg.physics.n_max == 10);
    REQUIRE(cfg.profile_trials == 10000);
    REQUIRE(cfg.inner_samples == 100000);
    REQUIRE(cfg.seed == 1);
    REQUIRE(cfg.experiment == ExperimentKind::Rate);
    REQUIRE(cfg.f_threshold == 0.5);
    REQUIRE_FALSE(cfg.cross_check);
    REQUIRE(cfg.k_totals == std::vector<int>{10});
    REQUIRE(cfg.out_path == "results");
    REQUIRE(cfg.out_format == "csv");
    REQUIRE(cfg.allocation.empty());
}

TEST_CASE("datacenter topologies default to a star", "[config]") {
    const ScenarioConfig cfg = parse_config(
        "topology.distances = 0.5, 1, 2, 5\n"
        "topology.datacenter = 3\n"
        "topology.k_total = 12\n"
        "experiment.kind = dominant-sweep\n");
    REQUIRE(cfg.topology.datacenter_id == 3);
    REQUIRE(cfg.topology.connections.size() == 3);
    REQUIRE(cfg.topology.connections.allowed(0, 3));
    REQUIRE(cfg.topology.connections.allowed(2, 3));
    REQUIRE_FALSE(cfg.topology.connections.allowed(0, 1));
    REQUIRE(cfg.topology.l_storage() == 5.0);
}

TEST_CASE("explicit connections and allocation parse", "[config]") {
    const ScenarioConfig cfg = parse_config(
        "topology.distances = 1, 1, 2\n"
        "topology.datacenter = 2\n"
        "topology.connections = 0-2, 1-2\n"
        "topology.allocation = 3, 3, 6\n"
        "topology.k_total = 12\n"
        "experiment.kind = rate\n");
    REQUIRE(cfg.topology.connections.size() == 2);
    REQUIRE(cfg.allocation == std::vector<int>{3, 3, 6});
}

TEST_CASE("nu accepts auto and numbers", "[config]") {
    const ScenarioConfig autonu = parse_config(
        "topology.distances = 5, 5\n"
        "topology.k_total = 4\n"
        "physics.nu = auto\n"
        "experiment.kind = rate\n");
    REQUIRE(autonu.physics.nu_override == -1.0);
    REQUIRE(resolved_nu(autonu.physics, 5.0) == Approx(3.0 * kSqrtPi / 20.0).epsilon(1e-14));

    const ScenarioConfig fixed = parse_config(
        "topology.distances = 5, 5\n"
        "topology.k_total = 4\n"
        "physics.nu = 0.25\n"
        "experiment.kind = rate\n");
    REQUIRE(fixed.physics.nu_override == 0.25);
    REQUIRE(resolved_nu(fixed.physics, 0.5) == 0.25);
}

TEST_CASE("seeds cover the full unsigned range", "[config]") {
    const ScenarioConfig cfg = parse_config(
        "topology.distances = 1, 1\n"
        "topology.k_total = 4\n"
        "simulation.seed = 18446744073709551615\n"
        "experiment.kind = rate\n");
    REQUIRE(cfg.seed == 18446744073709551615ull);
}

TEST_CASE("diagnostics carry line numbers and key paths", "[config]") {
    REQUIRE(contains(error_of([] { parse_config("topology.distances = 1, 2\nbogus line\n"); }),
                     "line 2"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 10\n"
                             "topology.k_total = 12\n"
                             "experiment.kind = rate\n");
                     }),
                     "duplicate key"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total =\n"
                             "experiment.kind = rate\n");
                     }),
                     "empty value"));
    const std::string unknown = error_of([] {
        parse_config(
            "topology.distances = 1, 2\n"
            "topology.k_total = 10\n"
            "physics.sigma2_squeeze = 0.1\n"
            "experiment.kind = rate\n");
    });
    REQUIRE(contains(unknown, "unknown key"));
    REQUIRE(contains(unknown, "physics.sigma2_squeeze"));
    REQUIRE(contains(unknown, "line 3"));
    REQUIRE(contains(error_of([] { parse_config("seed = 1\n"); }), "malformed key"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, -2\n"
                             "topology.k_total = 10\n"
                             "experiment.kind = rate\n");
                     }),
                     "distances"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 10\n"
                             "experiment.kind = warp\n");
                     }),
                     "experiment.kind"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 10\n"
                             "topology.allocation = 5\n"
                             "experiment.kind = rate\n");
                     }),
                     "allocation"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2, 3\n"
                             "topology.k_total = 10\n"
                             "experiment.kind = rate\n");
                     }),
                     "topology.connections"));
}

TEST_CASE("missing required keys are reported", "[config]") {
    REQUIRE(contains(error_of([] { parse_config("topology.k_total = 4\nexperiment.kind = rate\n"); }),
                     "topology.distances"));
    REQUIRE(contains(error_of([] { parse_config("topology.distances = 1, 2\nexperiment.kind = rate\n"); }),
                     "topology.k_total"));
    REQUIRE(contains(
        error_of([] { parse_config("topology.distances = 1, 2\ntopology.k_total = 4\n"); }),
        "experiment.kind"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 4\n"
                             "experiment.kind = placement\n"
                             "experiment.grid = 0.5\n");
                     }),
                     "experiment.l_total"));
}

TEST_CASE("simulation floors are enforced", "[config]") {
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 4\n"
                             "simulation.profile_trials = 10\n"
                             "experiment.kind = rate\n");
                     }),
                     "profile_trials"));
    REQUIRE(contains(error_of([] {
                         parse_config(
                             "topology.distances = 1, 2\n"
                             "topology.k_total = 4\n"
                             "experiment.k_totals = 4, 1\n"
                             "experiment.kind = rate\n");
                     }),
                     "k_totals"));
}

TEST_CASE("comments and spacing are tolerated", "[config]") {
    const ScenarioConfig cfg = parse_config(
        "# scenario header\n"
        "topology.distances = 1, 2   # two clients\n"
        "\n"
        "  topology.k_total=10\n"
        "experiment.kind   =   rate\n");
    REQUIRE(cfg.topology.k_total == 10);
}

TEST_CASE("render and parse are inverse", "[config]") {
    const std::string text =
        "topology.distances = 0.5, 1, 2.5\n"
        "topology.datacenter = 2\n"
        "topology.connections = 0-2, 1-2\n"
        "topology.allocation = 2, 2, 4\n"
        "topology.k_total = 8\n"
        "physics.sigma2_prep = 0.1\n"
        "physics.nu = 0.2\n"
        "simulation.seed = 7\n"
        "experiment.kind = optimize-multi\n"
        "experiment.f_threshold = 0.3\n"
        "experiment.k_totals = 8, 12\n"
        "output.path = out/run1\n";
    const ScenarioConfig cfg = parse_config(text);
    const std::string rendered = render_config(cfg);
    const ScenarioConfig again = parse_config(rendered);
    REQUIRE(render_config(again) == rendered);
    REQUIRE(again.topology.client_distances == cfg.topology.client_distances);
    REQUIRE(again.topology.datacenter_id == cfg.topology.datacenter_id);
    REQUIRE(again.topology.connections.pairs() == cfg.topology.connections.pairs());
    REQUIRE(again.allocation == cfg.allocation);
    REQUIRE(again.physics.sigma2_prep == cfg.physics.sigma2_prep);
    REQUIRE(again.physics.nu_override == cfg.physics.nu_override);
    REQUIRE(again.seed == cfg.seed);
    REQUIRE(again.experiment == cfg.experiment);
    REQUIRE(again.f_threshold == cfg.f_threshold);
    REQUIRE(again.k_totals == cfg.k_totals);
    REQUIRE(again.out_path == cfg.out_path);

    // placement keeps its grid through the round trip
    const ScenarioConfig placement = parse_config(
        "topology.distances = 1, 1\n"
        "topology.k_total = 6\n"
        "experiment.kind = placement\n"
        "experiment.l_total = 2\n"
        "experiment.grid = 0.25, 0.5, 0.75\n");
    const ScenarioConfig placement2 = parse_config(render_config(placement));
    REQUIRE(placement2.placement_l_total == placement.placement_l_total);
    REQUIRE(placement2.placement_grid == placement.placement_grid);
}
