#pragma once

// GERM: merge every client's ranked links into one global list and greedily
// pair from the top, honoring the required-connection set. The data-center
// specialization pairs the merged client ranking against the data center's
// own ranking position by position; with a star connection set the two
// procedures agree.

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "gkps/common.hpp"
#include "gkps/link_sim.hpp"

namespace gkps {

class ConnectionSet {
  public:
    void add(int a, int b) {
        require(a != b, "ConnectionSet: connection must join two distinct clients");
        require(a >= 0 && b >= 0, "ConnectionSet: client ids must be nonnegative");
        allowed_.insert(ordered(a, b));
    }

    bool allowed(int a, int b) const {
        if (a == b) return false;
        return allowed_.count(ordered(a, b)) != 0;
    }

    std::size_t size() const { return allowed_.size(); }
    bool empty() const { return allowed_.empty(); }
    const std::set<std::pair<int, int>>& pairs() const { return allowed_; }

    bool mentions(int id) const {
        for (const auto& [a, b] : allowed_)
            if (a == id || b == id) return true;
        return false;
    }

  private:
    static std::pair<int, int> ordered(int a, int b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }
    std::set<std::pair<int, int>> allowed_;
};

struct LinkRef {
    int client = 0;
    int link = 0;  // index into that client's ranked round

    friend bool operator==(const LinkRef& a, const LinkRef& b) {
        return a.client == b.client && a.link == b.link;
    }
    friend bool operator<(const LinkRef& a, const LinkRef& b) {
        return a.client != b.client ? a.client < b.client : a.link < b.link;
    }
};

struct Matching {
    std::vector<std::pair<LinkRef, LinkRef>> pairs;
    std::vector<LinkRef> unmatched;
};

namespace detail {

struct MergedLink {
    double p_no_error;
    LinkRef ref;
};

// Descending by quality; ties by client id then link index, ascending.
inline bool merged_before(const MergedLink& a, const MergedLink& b) {
    if (a.p_no_error != b.p_no_error) return a.p_no_error > b.p_no_error;
    return a.ref < b.ref;
}

inline void check_sorted_round(const std::vector<BsmOutcome>& round, const char* who) {
    for (std::size_t i = 1; i < round.size(); ++i)
        require(round[i - 1].p_no_error >= round[i].p_no_error, who);
}

}  // namespace detail

// Clients are identified by their index into `rounds`. Repeatedly takes the
// best remaining link and scans down for the first link completing a
// required connection; a head with no remaining partner is set aside, which
// guarantees termination.
inline Matching germ_match(const std::vector<std::vector<BsmOutcome>>& rounds,
                           const ConnectionSet& connections) {
    std::vector<detail::MergedLink> merged;
    for (int c = 0; c < static_cast<int>(rounds.size()); ++c) {
        detail::check_sorted_round(rounds[c], "germ_match: round not sorted descending");
        for (int i = 0; i < static_cast<int>(rounds[c].size()); ++i)
            merged.push_back({rounds[c][i].p_no_error, {c, i}});
    }
    std::sort(merged.begin(), merged.end(), detail::merged_before);

    Matching out;
    std::vector<char> taken(merged.size(), 0);
    for (std::size_t h = 0; h < merged.size(); ++h) {
        if (taken[h]) continue;
        taken[h] = 1;
        bool paired = false;
        for (std::size_t s = h + 1; s < merged.size(); ++s) {
            if (taken[s]) continue;
            if (!connections.allowed(merged[h].ref.client, merged[s].ref.client)) continue;
            taken[s] = 1;
            out.pairs.emplace_back(merged[h].ref, merged[s].ref);
            paired = true;
            break;
        }
        if (!paired) out.unmatched.push_back(merged[h].ref);
    }
    return out;
}

// Data-center topology: the clients' links are merged and ranked separately
// from the data center's, and rank r meets rank r. The data center carries
// id = client_rounds.size() unless overridden.
inline Matching match_datacenter(const std::vector<BsmOutcome>& dc_round,
                                 const std::vector<std::vector<BsmOutcome>>& client_rounds,
                                 int dc_id = -1) {
    if (dc_id < 0) dc_id = static_cast<int>(client_rounds.size());
    detail::check_sorted_round(dc_round, "match_datacenter: data-center round not sorted");

    std::vector<detail::MergedLink> clients;
    for (int c = 0; c < static_cast<int>(client_rounds.size()); ++c) {
        detail::check_sorted_round(client_rounds[c], "match_datacenter: client round not sorted");
        for (int i = 0; i < static_cast<int>(client_rounds[c].size()); ++i)
            clients.push_back({client_rounds[c][i].p_no_error, {c, i}});
    }
    std::sort(clients.begin(), clients.end(), detail::merged_before);

    const std::size_t k_d = dc_round.size();
    const std::size_t n_pairs = std::min(k_d, clients.size());

    Matching out;
    std::vector<detail::MergedLink> leftovers;
    for (std::size_t r = 0; r < n_pairs; ++r) {
        detail::MergedLink dc{dc_round[r].p_no_error, {dc_id, static_cast<int>(r)}};
        if (detail::merged_before(dc, clients[r]))
            out.pairs.emplace_back(dc.ref, clients[r].ref);
        else
            out.pairs.emplace_back(clients[r].ref, dc.ref);
    }
    for (std::size_t r = n_pairs; r < k_d; ++r)
        leftovers.push_back({dc_round[r].p_no_error, {dc_id, static_cast<int>(r)}});
    for (std::size_t r = n_pairs; r < clients.size(); ++r) leftovers.push_back(clients[r]);
    std::sort(leftovers.begin(), leftovers.end(), detail::merged_before);
    for (const auto& l : leftovers) out.unmatched.push_back(l.ref);
    return out;
}

// Structural check used by the property suites and the per-round pipeline.
inline bool matching_is_valid(const Matching& m, const std::vector<std::size_t>& round_sizes,
                              const ConnectionSet& connections) {
    std::set<LinkRef> seen;
    auto track = [&](const LinkRef& ref) {
        if (ref.client < 0 || ref.client >= static_cast<int>(round_sizes.size())) return false;
        if (ref.link < 0 || ref.link >= static_cast<int>(round_sizes[ref.client])) return false;
        return seen.insert(ref).second;
    };
    std::size_t total = 0;
    for (const auto& [a, b] : m.pairs) {
        if (!track(a) || !track(b)) return false;
        if (a.client == b.client) return false;
        if (!connections.allowed(a.client, b.client)) return false;
        total += 2;
    }
    for (const auto& u : m.unmatched) {
        if (!track(u)) return false;
        ++total;
    }
    std::size_t expect = 0;
    for (std::size_t s : round_sizes) expect += s;
    return total == expect;
}

}  // namespace gkps
