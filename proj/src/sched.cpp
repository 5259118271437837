#include "pam/sched.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>

namespace pam {

bool is_cyclic(const ProbAutomaton& a) {
    enum : uint8_t { White, Grey, Black };
    std::vector<uint8_t> color(static_cast<size_t>(a.num_states), White);
    // Iterative DFS; stack holds (state, transition idx, entry idx).
    struct Frame {
        int state;
        size_t tr = 0, ent = 0;
    };
    for (int root = 0; root < a.num_states; ++root) {
        if (color[root] != White) continue;
        std::vector<Frame> stack{{root}};
        color[root] = Grey;
        while (!stack.empty()) {
            Frame& f = stack.back();
            int next = -1;
            while (f.tr < a.trans[f.state].size()) {
                const auto& entries = a.trans[f.state][f.tr].dist.entries();
                if (f.ent < entries.size()) {
                    next = entries[f.ent].first;
                    ++f.ent;
                    break;
                }
                ++f.tr;
                f.ent = 0;
            }
            if (next < 0) {
                color[f.state] = Black;
                stack.pop_back();
                continue;
            }
            if (color[next] == Grey) return true;
            if (color[next] == White) {
                color[next] = Grey;
                stack.push_back({next});
            }
        }
    }
    return false;
}

SchedulerRow SchedulerRow::make(std::vector<std::pair<int, Rational>> choices,
                                Rational halt_mass) {
    SubDistribution sd = SubDistribution::make(std::move(choices), halt_mass);
    SchedulerRow row;
    row.choices = std::move(sd.entries);
    row.halt_mass = std::move(sd.halt_mass);
    return row;
}

const SchedulerRow* Scheduler::lookup(const SchedulerKey& key) const {
    if (kind == Kind::HistoryIndependent) {
        SchedulerKey bare{{}, key.state_class};
        auto it = table.find(bare);
        return it == table.end() ? nullptr : &it->second;
    }
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

namespace {

using BlockMass = std::vector<std::pair<int, Rational>>;

BlockMass block_mass(const Partition& part, const Distribution& d) {
    std::map<int, Rational> m;
    for (const auto& [t, p] : d.entries()) m[part.block_of[t]] += p;
    return BlockMass(m.begin(), m.end());
}

using TransSig = std::pair<Label, BlockMass>;

TransSig trans_sig(const ObservationMap& omega, const Partition& part,
                   const Transition& t) {
    return {omega.apply(t.label), block_mass(part, t.dist)};
}

}  // namespace

ClassChoices make_class_choices(const ProbAutomaton& a, const ObservationMap& omega) {
    ClassChoices cc;
    cc.omega = omega;
    cc.part = bisimilarity(a, omega);
    const int nb = cc.part.num_blocks();
    cc.rep.resize(nb);
    cc.degree.resize(nb);
    for (int b = 0; b < nb; ++b) {
        cc.rep[b] = cc.part.blocks[b][0];
        cc.degree[b] = static_cast<int>(a.trans[cc.rep[b]].size());
    }
    cc.pick.resize(static_cast<size_t>(a.num_states));
    for (int s = 0; s < a.num_states; ++s) {
        const int b = cc.part.block_of[s];
        const int r = cc.rep[b];
        auto& pk = cc.pick[s];
        pk.resize(static_cast<size_t>(cc.degree[b]));
        if (s == r) {
            std::iota(pk.begin(), pk.end(), 0);
            continue;
        }
        std::map<TransSig, std::vector<int>> groups;
        for (int k = 0; k < static_cast<int>(a.trans[s].size()); ++k)
            groups[trans_sig(omega, cc.part, a.trans[s][k])].push_back(k);
        std::map<TransSig, size_t> used;
        for (int c = 0; c < cc.degree[b]; ++c) {
            TransSig sig = trans_sig(omega, cc.part, a.trans[r][c]);
            auto it = groups.find(sig);
            if (it == groups.end())
                throw Error(ErrorCode::BadInput,
                            "bisimilar states disagree on transition signatures");
            size_t& u = used[sig];
            pk[c] = it->second[std::min(u, it->second.size() - 1)];
            ++u;
        }
    }
    return cc;
}

FullyProbAutomaton unfold(const ProbAutomaton& a, const Scheduler& xi, int horizon,
                          const SchedLimits& limits) {
    return unfold(a, xi, horizon, make_class_choices(a, xi.omega), limits);
}

FullyProbAutomaton unfold(const ProbAutomaton& a, const Scheduler& xi, int horizon,
                          const ClassChoices& cc, const SchedLimits& limits) {
    if (horizon != kUnbounded && horizon < 0)
        throw Error(ErrorCode::BadInput, "negative unfolding horizon");
    if (horizon == kUnbounded && is_cyclic(a))
        throw Error(ErrorCode::CyclicNeedsHorizon,
                    "unbounded unfolding of a cyclic automaton");
    if (!(cc.omega == xi.omega))
        throw Error(ErrorCode::BadInput,
                    "choice indexing was built for a different observation map");

    struct Node {
        int state;
        std::vector<Label> observed;
    };
    std::vector<Node> nodes{{a.init, {}}};
    std::vector<FpaStep> steps;
    for (size_t v = 0; v < nodes.size(); ++v) {
        if (nodes.size() > limits.max_unfold_nodes)
            throw Error(ErrorCode::ExplosionGuard, "unfolding exceeded the node bound");
        const Node nd = nodes[v];  // copy: nodes may reallocate below
        FpaStep st;
        if (a.terminating(nd.state)) {
            steps.push_back(std::move(st));
            continue;
        }
        if (horizon != kUnbounded && static_cast<int>(nd.observed.size()) >= horizon) {
            st.truncated = true;
            steps.push_back(std::move(st));
            continue;
        }
        SchedulerKey key{nd.observed, cc.class_of(nd.state)};
        const SchedulerRow* row = xi.lookup(key);
        if (row == nullptr || row->is_halt()) {
            st.halt_mass = 1;
            steps.push_back(std::move(st));
            continue;
        }
        st.halt_mass = row->halt_mass;
        for (const auto& [c, q] : row->choices) {
            if (c < 0 || c >= cc.degree[key.state_class])
                throw Error(ErrorCode::BadInput,
                            "scheduler choice out of range for its class");
            const Transition& tr = a.trans[nd.state][cc.pick[nd.state][c]];
            const Label obs = xi.omega.apply(tr.label);
            for (const auto& [t, p] : tr.dist.entries()) {
                std::vector<Label> h = nd.observed;
                h.push_back(obs);
                const int child = static_cast<int>(nodes.size());
                nodes.push_back({t, std::move(h)});
                st.branches.push_back({tr.label, child, q * p});
            }
        }
        steps.push_back(std::move(st));
    }
    FullyProbAutomaton f = FullyProbAutomaton::empty(
        static_cast<int>(nodes.size()), 0,
        a.name + "[" + (xi.name.empty() ? std::string("sched") : xi.name) + "]");
    f.steps = std::move(steps);
    return f;
}

namespace {

// Equivalence-class image of one scheduled step: observed labels with class
// masses, choice masses merged, plus withheld mass. Two rows are equivalent
// at bisimilar states exactly when these images coincide.
struct RowSig {
    std::map<TransSig, Rational> mass;
    Rational halt{0};

    friend bool operator==(const RowSig&, const RowSig&) = default;
};

RowSig row_sig(const ProbAutomaton& a, int s, const SchedulerRow* row,
               const ClassChoices& cc_xi, const ObservationMap& chk_omega,
               const Partition& chk_part) {
    RowSig rs;
    if (row == nullptr) {
        rs.halt = 1;
        return rs;
    }
    rs.halt = row->halt_mass;
    for (const auto& [c, q] : row->choices) {
        const Transition& tr = a.trans[s][cc_xi.pick[s][c]];
        rs.mass[trans_sig(chk_omega, chk_part, tr)] += q;
    }
    return rs;
}

bool table_well_formed(const Scheduler& xi, const ClassChoices& cc) {
    for (const auto& [key, row] : xi.table) {
        if (key.state_class < 0 || key.state_class >= cc.part.num_blocks())
            return false;
        if (xi.kind == Scheduler::Kind::HistoryIndependent && !key.observed.empty())
            return false;
        if (xi.kind == Scheduler::Kind::TabularDet && !row.is_det() && !row.is_halt())
            return false;
        if (row.halt_mass < 0) return false;
        Rational total = row.halt_mass;
        int prev = -1;
        for (const auto& [c, q] : row.choices) {
            if (q <= 0 || c <= prev || c >= cc.degree[key.state_class]) return false;
            prev = c;
            total += q;
        }
        if (!row.is_halt() && total != 1) return false;
    }
    return true;
}

}  // namespace

bool is_admissible(const ProbAutomaton& a, const Scheduler& xi,
                   const ObservationMap& omega) {
    ClassChoices cc = make_class_choices(a, xi.omega);
    if (!table_well_formed(xi, cc)) return false;
    const Partition chk_part =
        (omega == xi.omega) ? cc.part : bisimilarity(a, omega);

    if (xi.kind == Scheduler::Kind::HistoryIndependent) {
        // Pairs of states reachable via scheduled steps with identical
        // observed histories; finitely many, so this is exact on cyclic
        // automata too.
        std::set<std::pair<int, int>> seen{{a.init, a.init}};
        std::deque<std::pair<int, int>> queue{{a.init, a.init}};
        while (!queue.empty()) {
            auto [s, t] = queue.front();
            queue.pop_front();
            const SchedulerRow* rs =
                a.terminating(s) ? nullptr : xi.lookup({{}, cc.class_of(s)});
            const SchedulerRow* rt =
                a.terminating(t) ? nullptr : xi.lookup({{}, cc.class_of(t)});
            if (s != t && chk_part.same_block(s, t)) {
                const bool s_ends = a.terminating(s), t_ends = a.terminating(t);
                if (s_ends != t_ends) return false;
                if (!s_ends &&
                    !(row_sig(a, s, rs, cc, omega, chk_part) ==
                      row_sig(a, t, rt, cc, omega, chk_part)))
                    return false;
            }
            if (rs == nullptr || rt == nullptr) continue;
            for (const auto& [c1, q1] : rs->choices) {
                const Transition& tr1 = a.trans[s][cc.pick[s][c1]];
                for (const auto& [c2, q2] : rt->choices) {
                    const Transition& tr2 = a.trans[t][cc.pick[t][c2]];
                    if (omega.apply(tr1.label) != omega.apply(tr2.label)) continue;
                    for (const auto& [u1, p1] : tr1.dist.entries())
                        for (const auto& [u2, p2] : tr2.dist.entries())
                            if (seen.insert({u1, u2}).second) queue.push_back({u1, u2});
                }
            }
        }
        return true;
    }

    // Tabular: walk reachable situations. Beyond the longest keyed history
    // every row is the halt fallback, so groups there agree trivially and
    // the walk can stop.
    size_t cap = 0;
    for (const auto& [key, row] : xi.table) cap = std::max(cap, key.observed.size());
    using Situation = std::tuple<int, std::vector<Label>, std::vector<Label>>;
    std::set<Situation> seen;
    std::deque<Situation> queue;
    std::map<std::pair<std::vector<Label>, int>, RowSig> groups;
    queue.emplace_back(a.init, std::vector<Label>{}, std::vector<Label>{});
    seen.insert(queue.front());
    while (!queue.empty()) {
        auto [s, xi_obs, chk_obs] = queue.front();
        queue.pop_front();
        if (a.terminating(s)) continue;
        const SchedulerRow* row = xi.lookup({xi_obs, cc.class_of(s)});
        RowSig sig = row_sig(a, s, row, cc, omega, chk_part);
        auto gk = std::make_pair(chk_obs, chk_part.block_of[s]);
        auto [it, fresh] = groups.emplace(std::move(gk), sig);
        if (!fresh && !(it->second == sig)) return false;
        if (row == nullptr || xi_obs.size() >= cap) continue;
        for (const auto& [c, q] : row->choices) {
            const Transition& tr = a.trans[s][cc.pick[s][c]];
            for (const auto& [t, p] : tr.dist.entries()) {
                Situation child{t, xi_obs, chk_obs};
                std::get<1>(child).push_back(xi.omega.apply(tr.label));
                std::get<2>(child).push_back(omega.apply(tr.label));
                if (seen.insert(child).second) queue.push_back(std::move(child));
            }
        }
    }
    return true;
}

Scheduler synthesize_admissible(const ProbAutomaton& a, const std::set<Label>& act_o) {
    ObservationMap om = ObservationMap::collapse(act_o);
    ClassChoices cc = make_class_choices(a, om);
    Scheduler xi;
    xi.kind = Scheduler::Kind::HistoryIndependent;
    xi.name = "synthesized";
    xi.omega = std::move(om);
    for (int b = 0; b < cc.part.num_blocks(); ++b)
        if (cc.degree[b] > 0) xi.table[{{}, b}] = SchedulerRow::det(0);
    return xi;
}

namespace {

// One breadth-first sweep of the scheduled tree under a partial assignment.
// Stops at the first key without an assigned choice (the canonical next
// decision point); otherwise collects the keys actually consulted.
struct EnumWalk {
    std::optional<SchedulerKey> frontier;
    std::map<SchedulerKey, int> reached;

    EnumWalk(const ProbAutomaton& a, const ClassChoices& cc, int horizon,
             const SchedLimits& limits,
             const std::map<SchedulerKey, int>& assignment) {
        std::set<std::pair<int, std::vector<Label>>> seen;
        std::deque<std::pair<int, std::vector<Label>>> queue;
        queue.emplace_back(a.init, std::vector<Label>{});
        seen.insert(queue.front());
        size_t visited = 0;
        while (!queue.empty()) {
            auto [s, obs] = queue.front();
            queue.pop_front();
            if (++visited > limits.max_unfold_nodes)
                throw Error(ErrorCode::ExplosionGuard,
                            "scheduler walk exceeded the node bound");
            if (a.terminating(s)) continue;
            if (horizon != kUnbounded && static_cast<int>(obs.size()) >= horizon)
                continue;
            SchedulerKey key{obs, cc.part.block_of[s]};
            auto it = assignment.find(key);
            if (it == assignment.end()) {
                frontier = std::move(key);
                return;
            }
            reached.emplace(key, it->second);
            const Transition& tr = a.trans[s][cc.pick[s][it->second]];
            const Label ol = cc.omega.apply(tr.label);
            for (const auto& [t, p] : tr.dist.entries()) {
                std::pair<int, std::vector<Label>> child{t, obs};
                child.second.push_back(ol);
                if (seen.insert(child).second) queue.push_back(std::move(child));
            }
        }
    }
};

Scheduler det_tabular(const ObservationMap& omega, std::string name,
                      const std::map<SchedulerKey, int>& rows) {
    Scheduler xi;
    xi.kind = Scheduler::Kind::TabularDet;
    xi.name = std::move(name);
    xi.omega = omega;
    for (const auto& [k, c] : rows) xi.table[k] = SchedulerRow::det(c);
    return xi;
}

}  // namespace

unsigned long long enumerate_admissible(
    const ProbAutomaton& a, const ObservationMap& omega, int horizon,
    const SchedLimits& limits, const std::function<bool(const Scheduler&)>& fn) {
    if (horizon == kUnbounded && is_cyclic(a))
        throw Error(ErrorCode::CyclicNeedsHorizon,
                    "unbounded enumeration over a cyclic automaton");
    ClassChoices cc = make_class_choices(a, omega);
    std::map<SchedulerKey, int> assignment;
    std::set<SchedulerKey> discovered;
    unsigned long long count = 0;
    bool stopped = false;
    std::function<void()> rec = [&]() {
        if (stopped) return;
        EnumWalk walk(a, cc, horizon, limits, assignment);
        if (!walk.frontier) {
            if (++count > limits.max_schedulers)
                throw Error(ErrorCode::ExplosionGuard,
                            "scheduler enumeration exceeded the bound");
            if (!fn(det_tabular(omega, "det#" + std::to_string(count), walk.reached)))
                stopped = true;
            return;
        }
        const SchedulerKey key = *walk.frontier;
        discovered.insert(key);
        if (discovered.size() > limits.max_keys)
            throw Error(ErrorCode::ExplosionGuard,
                        "scheduler key space exceeded the bound");
        const int d = cc.degree[key.state_class];
        for (int c = 0; c < d && !stopped; ++c) {
            assignment[key] = c;
            rec();
            assignment.erase(key);
        }
    };
    rec();
    return count;
}

Scheduler sample_admissible(const ProbAutomaton& a, const ObservationMap& omega,
                            int horizon, unsigned long long seed,
                            const SchedLimits& limits) {
    if (horizon == kUnbounded && is_cyclic(a))
        throw Error(ErrorCode::CyclicNeedsHorizon,
                    "unbounded sampling over a cyclic automaton");
    ClassChoices cc = make_class_choices(a, omega);
    std::mt19937_64 rng(seed);
    std::map<SchedulerKey, int> assignment;
    for (;;) {
        EnumWalk walk(a, cc, horizon, limits, assignment);
        if (!walk.frontier)
            return det_tabular(omega, "sample#" + std::to_string(seed), walk.reached);
        if (assignment.size() >= limits.max_keys)
            throw Error(ErrorCode::ExplosionGuard,
                        "scheduler key space exceeded the bound");
        const auto d = static_cast<unsigned long long>(
            cc.degree[walk.frontier->state_class]);
        // rng() % d instead of a distribution type: identical draws on every
        // platform for the same seed.
        assignment[*walk.frontier] = static_cast<int>(rng() % d);
    }
}

}  // namespace pam
