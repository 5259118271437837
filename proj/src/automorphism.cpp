#include "pam/anonymity.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>

namespace pam {

namespace {

using PushEntries = std::vector<std::pair<int, Rational>>;
using MatchKey = std::pair<Label, PushEntries>;

PushEntries push_entries(const Distribution& d, const StateMap& m) {
    return d.map([&m](int t) { return m[t]; }).entries();
}

}  // namespace

std::optional<std::string> automorphism_error(const ProbAutomaton& a,
                                              const StateMap& m,
                                              const ObservationMap& omega) {
    const int n = a.num_states;
    if (static_cast<int>(m.size()) != n) return "map size differs from state count";
    std::vector<char> hit(static_cast<size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
        if (m[s] < 0 || m[s] >= n)
            return "image out of range at state " + std::to_string(s);
        if (hit[m[s]]++)
            return "not a bijection: state " + std::to_string(m[s]) + " hit twice";
    }
    if (m[a.init] != a.init) return "initial state not fixed";
    for (int s = 0; s < n; ++s) {
        std::map<MatchKey, int> count;
        for (const auto& tr : a.trans[s])
            ++count[{omega.apply(tr.label), push_entries(tr.dist, m)}];
        for (const auto& tr : a.trans[m[s]]) {
            auto it = count.find({omega.apply(tr.label), tr.dist.entries()});
            if (it == count.end() || it->second == 0)
                return "state " + std::to_string(m[s]) + ": transition " +
                       labels::show(tr.label) + " has no correspondent at state " +
                       std::to_string(s);
            --it->second;
        }
        for (const auto& [key, c] : count)
            if (c != 0)
                return "state " + std::to_string(s) + ": transition " +
                       labels::show(key.first) + " has no correspondent at state " +
                       std::to_string(m[s]);
    }
    return std::nullopt;
}

bool check_automorphism(const ProbAutomaton& a, const StateMap& m,
                        const std::set<Label>& act_o) {
    return !automorphism_error(a, m, ObservationMap::collapse(act_o)).has_value();
}

std::optional<std::string> marker_swap_error(const ProbAutomaton& a,
                                             const StateMap& m,
                                             const ObservationMap& omega,
                                             Label marker_i, Label marker_j) {
    // Within each group of mutually matching transitions (same observed
    // label, same pushforward), i-marked ones at s must be as many as
    // j-marked ones at m(s) and vice versa; any transition correspondence
    // then carries A_i-runs onto A_j-runs measure-preservingly.
    for (int s = 0; s < a.num_states; ++s) {
        std::map<MatchKey, std::pair<int, int>> at_s, at_t;
        for (const auto& tr : a.trans[s]) {
            if (tr.label != marker_i && tr.label != marker_j) continue;
            auto& c = at_s[{omega.apply(tr.label), push_entries(tr.dist, m)}];
            (tr.label == marker_i ? c.first : c.second) += 1;
        }
        for (const auto& tr : a.trans[m[s]]) {
            if (tr.label != marker_i && tr.label != marker_j) continue;
            auto& c = at_t[{omega.apply(tr.label), tr.dist.entries()}];
            (tr.label == marker_i ? c.first : c.second) += 1;
        }
        std::set<MatchKey> keys;
        for (const auto& [k, c] : at_s) keys.insert(k);
        for (const auto& [k, c] : at_t) keys.insert(k);
        for (const auto& k : keys) {
            const auto cs = at_s.count(k) ? at_s.at(k) : std::pair<int, int>{0, 0};
            const auto ct = at_t.count(k) ? at_t.at(k) : std::pair<int, int>{0, 0};
            if (cs.first != ct.second || cs.second != ct.first)
                return "state " + std::to_string(s) +
                       ": marker transitions do not exchange (" +
                       labels::show(marker_i) + " x" + std::to_string(cs.first) +
                       ", " + labels::show(marker_j) + " x" + std::to_string(cs.second) +
                       " vs image " + labels::show(marker_i) + " x" +
                       std::to_string(ct.first) + ", " + labels::show(marker_j) +
                       " x" + std::to_string(ct.second) + ")";
        }
    }
    return std::nullopt;
}

Verdict prove_by_automorphism(const ProbAutomaton& a, const AnonymitySpec& spec,
                              const std::vector<PairMap>& maps) {
    for (int u : spec.users)
        if (!spec.markers.count(u))
            throw Error(ErrorCode::BadInput,
                        "user " + std::to_string(u) + " has no marker action");
    const ObservationMap omega = ObservationMap::collapse(spec.act_o);
    Verdict v;
    for (size_t x = 0; x < spec.users.size(); ++x) {
        for (size_t y = x + 1; y < spec.users.size(); ++y) {
            const int i = spec.users[x], j = spec.users[y];
            const PairMap* pm = nullptr;
            for (const auto& cand : maps)
                if ((cand.user_i == i && cand.user_j == j) ||
                    (cand.user_i == j && cand.user_j == i)) {
                    pm = &cand;
                    break;
                }
            const std::string pair_name =
                "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
            if (pm == nullptr) {
                v.status = VerdictStatus::Inconclusive;
                v.coverage = "no state map supplied for user pair " + pair_name;
                return v;
            }
            if (auto err = automorphism_error(a, pm->map, omega)) {
                v.status = VerdictStatus::Inconclusive;
                v.coverage = "map for pair " + pair_name +
                             " is not an observation-preserving automorphism: " + *err;
                return v;
            }
            if (auto err = marker_swap_error(a, pm->map, omega, spec.markers.at(i),
                                             spec.markers.at(j))) {
                v.status = VerdictStatus::Inconclusive;
                v.coverage =
                    "map for pair " + pair_name + " does not exchange the markers: " + *err;
                return v;
            }
        }
    }
    v.status = VerdictStatus::AnonymousProved;
    v.coverage =
        "observation-preserving marker-exchanging automorphism verified for every "
        "user pair; covers every admissible scheduler at any horizon";
    return v;
}

namespace {

constexpr int kFar = std::numeric_limits<int>::max() / 2;

// Fewest steps from each state to some transition carrying `mark`.
std::vector<int> marker_distances(const ProbAutomaton& a,
                                  const std::vector<std::vector<int>>& preds,
                                  Label mark) {
    std::vector<int> d(static_cast<size_t>(a.num_states), kFar);
    std::deque<int> queue;
    for (int s = 0; s < a.num_states; ++s)
        for (const auto& tr : a.trans[s])
            if (tr.label == mark) {
                d[s] = 0;
                queue.push_back(s);
                break;
            }
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int p : preds[u])
            if (d[p] > d[u] + 1) {
                d[p] = d[u] + 1;
                queue.push_back(p);
            }
    }
    return d;
}

std::vector<int> bfs_order(const ProbAutomaton& a) {
    std::vector<int> order;
    std::vector<char> seen(static_cast<size_t>(a.num_states), 0);
    std::deque<int> queue{a.init};
    seen[a.init] = 1;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        order.push_back(s);
        for (const auto& tr : a.trans[s])
            for (const auto& [t, p] : tr.dist.entries())
                if (!seen[t]) {
                    seen[t] = 1;
                    queue.push_back(t);
                }
    }
    for (int s = 0; s < a.num_states; ++s)
        if (!seen[s]) order.push_back(s);
    return order;
}

}  // namespace

AutomorphismSearch find_automorphism(const ProbAutomaton& a,
                                     const std::set<Label>& act_o, Label marker_i,
                                     Label marker_j,
                                     const std::set<Label>& all_markers,
                                     unsigned long long node_limit) {
    const ObservationMap omega = ObservationMap::collapse(act_o);
    const Partition part = bisimilarity(a, omega);
    const int n = a.num_states;

    std::vector<std::vector<int>> preds(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s)
        for (const auto& tr : a.trans[s])
            for (const auto& [t, p] : tr.dist.entries()) preds[t].push_back(s);
    for (auto& ps : preds) {
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    }

    auto sigma = [&](Label l) {
        return l == marker_i ? marker_j : l == marker_j ? marker_i : l;
    };
    std::map<Label, std::vector<int>> dist;
    for (Label mk : all_markers) dist[mk] = marker_distances(a, preds, mk);

    // Label key under the exchange rule: markers must map exactly per sigma,
    // everything else up to the observation map. Marker labels are tagged
    // invisible actions, distinct from every observed image, so one equality
    // enforces both directions.
    auto kappa_fwd = [&](Label l) { return all_markers.count(l) ? sigma(l) : omega.apply(l); };
    auto kappa_id = [&](Label l) { return all_markers.count(l) ? l : omega.apply(l); };

    const std::vector<int> order = bfs_order(a);
    AutomorphismSearch res;
    StateMap m(static_cast<size_t>(n), -1);
    bool limit_hit = false;

    auto profile_ok = [&](int s, int t) {
        if (!part.same_block(s, t)) return false;
        for (Label mk : all_markers)
            if (dist.at(mk)[s] != dist.at(sigma(mk))[t]) return false;
        return true;
    };
    auto support_assigned = [&](const Distribution& d) {
        for (const auto& [t, p] : d.entries())
            if (m[t] < 0) return false;
        return true;
    };
    // Both directions of the transition correspondence at an assigned pair,
    // restricted to transitions whose successors are all assigned. m is an
    // involution, so it serves as its own inverse for the reverse direction.
    auto partial_ok = [&](int u) {
        const int v = m[u];
        for (const auto& tr : a.trans[u]) {
            if (!support_assigned(tr.dist)) continue;
            const Label want = kappa_fwd(tr.label);
            const PushEntries img = push_entries(tr.dist, m);
            bool found = false;
            for (const auto& tr2 : a.trans[v])
                if (kappa_id(tr2.label) == want && tr2.dist.entries() == img) {
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        for (const auto& tr2 : a.trans[v]) {
            if (!support_assigned(tr2.dist)) continue;
            const Label want = kappa_id(tr2.label);
            const PushEntries pre = push_entries(tr2.dist, m);
            bool found = false;
            for (const auto& tr : a.trans[u])
                if (kappa_fwd(tr.label) == want && tr.dist.entries() == pre) {
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        return true;
    };
    // After pairing s<->t, every already-assigned state whose successor set
    // just became fully assigned gets rechecked.
    auto consistent_after = [&](int s, int t) {
        std::set<int> affected{s, t};
        for (int p : preds[s]) affected.insert(p);
        for (int p : preds[t]) affected.insert(p);
        for (int u : affected)
            if (m[u] >= 0 && !partial_ok(u)) return false;
        return true;
    };

    std::function<bool(size_t)> rec = [&](size_t k) -> bool {
        if (limit_hit) return false;
        if (k == order.size()) {
            return !automorphism_error(a, m, omega) &&
                   !marker_swap_error(a, m, omega, marker_i, marker_j);
        }
        const int s = order[k];
        if (m[s] >= 0) return rec(k + 1);
        for (int t : part.blocks[part.block_of[s]]) {
            if (m[t] >= 0) continue;
            if (!profile_ok(s, t)) continue;
            if (++res.nodes > node_limit) {
                limit_hit = true;
                return false;
            }
            m[s] = t;
            m[t] = s;
            if (consistent_after(s, t) && rec(k + 1)) return true;
            m[s] = -1;
            if (t != s) m[t] = -1;
        }
        return false;
    };
    if (rec(0)) res.map = m;
    res.exhausted = !res.map.has_value() && !limit_hit;
    return res;
}

}  // namespace pam
