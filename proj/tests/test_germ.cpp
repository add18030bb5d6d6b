#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "gkps/germ.hpp"
#include "gkps/rng.hpp"

using namespace gkps;

namespace {

std::vector<BsmOutcome> make_round(std::vector<double> p_no) {
    std::sort(p_no.begin(), p_no.end(), std::greater<double>());
    std::vector<BsmOutcome> round(p_no.size());
    for (std::size_t i = 0; i < p_no.size(); ++i) round[i].p_no_error = p_no[i];
    return round;
}

std::vector<std::size_t> sizes_of(const std::vector<std::vector<BsmOutcome>>& rounds) {
    std::vector<std::size_t> sizes;
    for (const auto& r : rounds) sizes.push_back(r.size());
    return sizes;
}

}  // namespace

TEST_CASE("connection set basics", "[germ]") {
    ConnectionSet conn;
    REQUIRE(conn.empty());
    conn.add(0, 1);
    conn.add(2, 1);
    REQUIRE(conn.size() == 2);
    REQUIRE(conn.allowed(1, 0));
    REQUIRE(conn.allowed(1, 2));
    REQUIRE_FALSE(conn.allowed(0, 2));
    REQUIRE_FALSE(conn.allowed(1, 1));
    REQUIRE(conn.mentions(2));
    REQUIRE_FALSE(conn.mentions(3));
    REQUIRE_THROWS_AS(conn.add(1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(conn.add(-1, 0), std::invalid_argument);
}

TEST_CASE("single connection pairs best against best", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    const std::vector<std::vector<BsmOutcome>> rounds = {make_round({0.9, 0.8}),
                                                         make_round({0.7})};
    const auto m = germ_match(rounds, conn);
    REQUIRE(m.pairs.size() == 1);
    REQUIRE(m.pairs[0].first == LinkRef{0, 0});
    REQUIRE(m.pairs[0].second == LinkRef{1, 0});
    REQUIRE(m.unmatched.size() == 1);
    REQUIRE(m.unmatched[0] == LinkRef{0, 1});
    REQUIRE(matching_is_valid(m, sizes_of(rounds), conn));
}

TEST_CASE("pair count is the smaller multiplexing number", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    auto rng = make_stream(1, {kStreamGermFixtures, 10});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const int k0 = 1 + static_cast<int>(rng() % 6);
        const int k1 = 1 + static_cast<int>(rng() % 6);
        std::vector<double> a(k0), b(k1);
        for (auto& x : a) x = unif(rng);
        for (auto& x : b) x = unif(rng);
        const std::vector<std::vector<BsmOutcome>> rounds = {make_round(a), make_round(b)};
        const auto m = germ_match(rounds, conn);
        REQUIRE(m.pairs.size() == static_cast<std::size_t>(std::min(k0, k1)));
        REQUIRE(m.unmatched.size() ==
                static_cast<std::size_t>(std::max(k0, k1) - std::min(k0, k1)));
        REQUIRE(matching_is_valid(m, sizes_of(rounds), conn));
    }
}

TEST_CASE("disconnected clients never pair", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    const std::vector<std::vector<BsmOutcome>> rounds = {make_round({0.9}), make_round({0.8}),
                                                         make_round({0.99})};
    const auto m = germ_match(rounds, conn);
    REQUIRE(m.pairs.size() == 1);
    for (const auto& [a, b] : m.pairs) {
        REQUIRE(a.client != 2);
        REQUIRE(b.client != 2);
    }
    REQUIRE(m.unmatched.size() == 1);
    REQUIRE(m.unmatched[0] == LinkRef{2, 0});
}

TEST_CASE("empty input gives empty matching", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    const auto m = germ_match({}, conn);
    REQUIRE(m.pairs.empty());
    REQUIRE(m.unmatched.empty());
}

TEST_CASE("rounds must arrive ranked", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    std::vector<std::vector<BsmOutcome>> rounds = {make_round({0.5, 0.9}), make_round({0.7})};
    std::swap(rounds[0][0], rounds[0][1]);  // break the ordering
    REQUIRE_THROWS_AS(germ_match(rounds, conn), std::invalid_argument);
}

TEST_CASE("datacenter matching equals the generic matcher on stars", "[germ]") {
    auto rng = make_stream(1, {kStreamGermFixtures, 20});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 3);
        std::vector<std::vector<BsmOutcome>> client_rounds;
        ConnectionSet conn;
        for (int c = 0; c < n; ++c) {
            const int k = static_cast<int>(rng() % 5);  // empty rounds allowed
            std::vector<double> p(k);
            for (auto& x : p) x = unif(rng);
            client_rounds.push_back(make_round(p));
            conn.add(c, n);
        }
        const int k_d = static_cast<int>(rng() % 7);
        std::vector<double> pd(k_d);
        for (auto& x : pd) x = unif(rng);
        const auto dc_round = make_round(pd);

        auto all_rounds = client_rounds;
        all_rounds.push_back(dc_round);
        const auto generic = germ_match(all_rounds, conn);
        const auto special = match_datacenter(dc_round, client_rounds);
        REQUIRE(generic.pairs == special.pairs);
        REQUIRE(generic.unmatched == special.unmatched);
        REQUIRE(matching_is_valid(special, sizes_of(all_rounds), conn));
    }
}

TEST_CASE("datacenter equivalence survives ties", "[germ]") {
    const std::vector<std::vector<BsmOutcome>> client_rounds = {make_round({0.8, 0.8}),
                                                                make_round({0.8, 0.3})};
    const auto dc_round = make_round({0.8, 0.8, 0.8});
    ConnectionSet conn;
    conn.add(0, 2);
    conn.add(1, 2);
    auto all_rounds = client_rounds;
    all_rounds.push_back(dc_round);
    const auto generic = germ_match(all_rounds, conn);
    const auto special = match_datacenter(dc_round, client_rounds);
    REQUIRE(generic.pairs == special.pairs);
    REQUIRE(generic.unmatched == special.unmatched);
}

TEST_CASE("empty datacenter round leaves every client link over", "[germ]") {
    const std::vector<std::vector<BsmOutcome>> client_rounds = {make_round({0.9, 0.2}),
                                                                make_round({0.5})};
    const auto m = match_datacenter({}, client_rounds);
    REQUIRE(m.pairs.empty());
    REQUIRE(m.unmatched.size() == 3);
    // descending quality
    REQUIRE(m.unmatched[0] == LinkRef{0, 0});
    REQUIRE(m.unmatched[1] == LinkRef{1, 0});
    REQUIRE(m.unmatched[2] == LinkRef{0, 1});
}

TEST_CASE("matching is deterministic", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    conn.add(1, 2);
    const std::vector<std::vector<BsmOutcome>> rounds = {
        make_round({0.9, 0.4}), make_round({0.85, 0.6, 0.1}), make_round({0.7})};
    const auto a = germ_match(rounds, conn);
    const auto b = germ_match(rounds, conn);
    REQUIRE(a.pairs == b.pairs);
    REQUIRE(a.unmatched == b.unmatched);
}

TEST_CASE("validity checker rejects malformed matchings", "[germ]") {
    ConnectionSet conn;
    conn.add(0, 1);
    const std::vector<std::size_t> sizes = {2, 1};
    Matching m;
    m.pairs.emplace_back(LinkRef{0, 0}, LinkRef{1, 0});
    m.unmatched.push_back({0, 1});
    REQUIRE(matching_is_valid(m, sizes, conn));

    Matching dup = m;
    dup.unmatched.push_back({0, 1});
    REQUIRE_FALSE(matching_is_valid(dup, sizes, conn));

    Matching range = m;
    range.unmatched[0] = {0, 5};
    REQUIRE_FALSE(matching_is_valid(range, sizes, conn));

    Matching same;
    same.pairs.emplace_back(LinkRef{0, 0}, LinkRef{0, 1});
    same.unmatched.push_back({1, 0});
    REQUIRE_FALSE(matching_is_valid(same, sizes, conn));

    Matching missing = m;
    missing.unmatched.clear();
    REQUIRE_FALSE(matching_is_valid(missing, sizes, conn));
}
