#include "pam/anonymity.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace pam {

const char* verdict_name(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::AnonymousProved: return "ANONYMOUS-PROVED";
        case VerdictStatus::AnonymousOnCheckedClass: return "ANONYMOUS-ON-CHECKED-CLASS";
        case VerdictStatus::Violation: return "VIOLATION";
        case VerdictStatus::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

namespace {

std::string show_otrace(const std::vector<Label>& o) {
    std::string s = "[";
    for (size_t i = 0; i < o.size(); ++i) {
        if (i) s += ", ";
        s += labels::show(o[i]);
    }
    return s + "]";
}

// Joint law of (observation, responsible user) over the complete runs.
struct JointDist {
    std::map<std::vector<Label>, Rational> p_o;                  // P[o]
    std::map<int, std::map<std::vector<Label>, Rational>> p_oi;  // P[o and A_i]
    std::map<int, Rational> p_i;                                 // P[A_i]
    Rational p_a{0};                                             // P[A]
    MeasureReport base;                                          // unresolved mass

    static JointDist collect(const FullyProbAutomaton& f, const AnonymitySpec& spec) {
        JointDist jd;
        jd.base = for_each_complete_trace(
            f, [&](const std::vector<Label>& trace, const Rational& p) {
                std::vector<Label> o = otrace(trace, spec.act_o);
                int who = -1;
                for (const auto& [user, mark] : spec.markers) {
                    if (std::find(trace.begin(), trace.end(), mark) == trace.end())
                        continue;
                    if (who != -1)
                        throw Error(ErrorCode::BadInput,
                                    "markers are not mutually exclusive: one run carries "
                                    "users " +
                                        std::to_string(who) + " and " +
                                        std::to_string(user));
                    who = user;
                }
                jd.p_o[o] += p;
                if (who != -1) {
                    jd.p_oi[who][o] += p;
                    jd.p_i[who] += p;
                    jd.p_a += p;
                }
            });
        return jd;
    }

    Rational joint(int user, const std::vector<Label>& o) const {
        auto ui = p_oi.find(user);
        if (ui == p_oi.end()) return 0;
        auto it = ui->second.find(o);
        return it == ui->second.end() ? Rational(0) : it->second;
    }

    Rational marked(int user) const {
        auto it = p_i.find(user);
        return it == p_i.end() ? Rational(0) : it->second;
    }
};

std::string unresolved_note(const MeasureReport& base) {
    std::string s;
    if (base.halt_mass != 0) s += "; withheld mass " + to_string(base.halt_mass);
    if (base.truncated_mass != 0)
        s += "; truncated mass " + to_string(base.truncated_mass);
    return s;
}

void require_markers(const AnonymitySpec& spec) {
    for (int u : spec.users)
        if (!spec.markers.count(u))
            throw Error(ErrorCode::BadInput,
                        "user " + std::to_string(u) + " has no marker action");
}

const char* mode_name(ObservationMap::Mode m) {
    return m == ObservationMap::Mode::Collapse ? "collapse" : "strict";
}

std::string horizon_name(int horizon) {
    return horizon == kUnbounded ? std::string("unbounded")
                                 : std::to_string(horizon);
}

}  // namespace

Verdict check_fpa(const FullyProbAutomaton& f, const AnonymitySpec& spec) {
    require_markers(spec);
    JointDist jd = JointDist::collect(f, spec);
    Verdict v;
    if (jd.p_a == 0) {
        v.status = VerdictStatus::AnonymousOnCheckedClass;
        v.coverage = "vacuous: P[A] = 0 on this unfolding" + unresolved_note(jd.base);
        return v;
    }
    for (const auto& [o, po] : jd.p_o) {
        Rational poa = 0;  // P[o and A]
        for (int i : spec.users) poa += jd.joint(i, o);
        for (int i : spec.users) {
            const Rational poi = jd.joint(i, o);
            const Rational pi = jd.marked(i);
            // P[o and A_i | A] = P[o | A] * P[A_i | A], denominators cleared.
            if (poi * jd.p_a == poa * pi) continue;
            Witness w;
            w.user = i;
            w.observation = o;
            w.lhs = poi / jd.p_a;
            w.rhs = (poa / jd.p_a) * (pi / jd.p_a);
            w.detail = "P[o and A_" + std::to_string(i) + " | A] = " + to_string(w.lhs) +
                       " but P[o | A] * P[A_" + std::to_string(i) + " | A] = " +
                       to_string(w.rhs) + " at o = " + show_otrace(o);
            v.status = VerdictStatus::Violation;
            v.coverage =
                "conditional independence fails on this unfolding" + unresolved_note(jd.base);
            v.witness = std::move(w);
            return v;
        }
    }
    v.status = VerdictStatus::AnonymousOnCheckedClass;
    v.coverage =
        "conditional independence holds on this unfolding" + unresolved_note(jd.base);
    return v;
}

Verdict check_fpa_bp(const FullyProbAutomaton& f, const AnonymitySpec& spec) {
    require_markers(spec);
    JointDist jd = JointDist::collect(f, spec);
    Verdict v;
    if (jd.p_a == 0) {
        v.status = VerdictStatus::AnonymousOnCheckedClass;
        v.coverage = "vacuous: P[A] = 0 on this unfolding" + unresolved_note(jd.base);
        return v;
    }
    for (size_t x = 0; x < spec.users.size(); ++x) {
        for (size_t y = x + 1; y < spec.users.size(); ++y) {
            const int i = spec.users[x], j = spec.users[y];
            const Rational pi = jd.marked(i), pj = jd.marked(j);
            if (pi == 0 || pj == 0) continue;
            for (const auto& [o, po] : jd.p_o) {
                const Rational poi = jd.joint(i, o), poj = jd.joint(j, o);
                // P[o | A_i] = P[o | A_j], denominators cleared.
                if (poi * pj == poj * pi) continue;
                Witness w;
                w.user = i;
                w.other_user = j;
                w.observation = o;
                w.lhs = poi / pi;
                w.rhs = poj / pj;
                w.detail = "P[o | A_" + std::to_string(i) + "] = " + to_string(w.lhs) +
                           " but P[o | A_" + std::to_string(j) + "] = " +
                           to_string(w.rhs) + " at o = " + show_otrace(o);
                v.status = VerdictStatus::Violation;
                v.coverage = "pairwise condition fails on this unfolding" +
                             unresolved_note(jd.base);
                v.witness = std::move(w);
                return v;
            }
        }
    }
    v.status = VerdictStatus::AnonymousOnCheckedClass;
    v.coverage = "pairwise condition holds on this unfolding" + unresolved_note(jd.base);
    return v;
}

Verdict check_pa(const ProbAutomaton& a, const AnonymitySpec& spec,
                 const CheckStrategy& strategy, const SchedLimits& limits) {
    require_markers(spec);
    const ObservationMap omega = strategy.mode == ObservationMap::Mode::Collapse
                                     ? ObservationMap::collapse(spec.act_o)
                                     : ObservationMap::strict();
    auto check_one = [&](const FullyProbAutomaton& f) {
        return strategy.bp_variant ? check_fpa_bp(f, spec) : check_fpa(f, spec);
    };

    switch (strategy.kind) {
        case CheckStrategy::Kind::Enumerate: {
            Verdict violation;
            bool found = false;
            const ClassChoices cc = make_class_choices(a, omega);
            const unsigned long long n = enumerate_admissible(
                a, omega, strategy.horizon, limits, [&](const Scheduler& xi) {
                    Verdict v = check_one(unfold(a, xi, strategy.horizon, cc, limits));
                    if (v.status != VerdictStatus::Violation) return true;
                    v.witness->scheduler_name = xi.name;
                    v.witness->scheduler = xi;
                    violation = std::move(v);
                    found = true;
                    return false;
                });
            if (found) {
                violation.coverage += " (deterministic admissible scheduler, " +
                                      std::string(mode_name(strategy.mode)) +
                                      " mode, horizon " +
                                      horizon_name(strategy.horizon) + ")";
                return violation;
            }
            Verdict v;
            v.status = VerdictStatus::AnonymousOnCheckedClass;
            v.coverage = "exhaustive: " + std::to_string(n) +
                         " deterministic admissible schedulers (" +
                         mode_name(strategy.mode) + " mode, horizon " +
                         horizon_name(strategy.horizon) + ")";
            return v;
        }
        case CheckStrategy::Kind::Sample: {
            const ClassChoices cc = make_class_choices(a, omega);
            for (int k = 0; k < strategy.samples; ++k) {
                Scheduler xi = sample_admissible(a, omega, strategy.horizon,
                                                 strategy.seed + static_cast<unsigned long long>(k),
                                                 limits);
                Verdict v = check_one(unfold(a, xi, strategy.horizon, cc, limits));
                if (v.status == VerdictStatus::Violation) {
                    v.witness->scheduler_name = xi.name;
                    v.witness->scheduler = xi;
                    v.coverage += " (sampled admissible scheduler, seed " +
                                  std::to_string(strategy.seed + static_cast<unsigned long long>(k)) +
                                  ")";
                    return v;
                }
            }
            Verdict v;
            v.status = VerdictStatus::Inconclusive;
            v.coverage = "no violation among " + std::to_string(strategy.samples) +
                         " sampled admissible schedulers (seeds " +
                         std::to_string(strategy.seed) + ".." +
                         std::to_string(strategy.seed +
                                        static_cast<unsigned long long>(strategy.samples) - 1) +
                         ", " + mode_name(strategy.mode) + " mode, horizon " +
                         horizon_name(strategy.horizon) + "); sampling proves nothing";
            return v;
        }
        case CheckStrategy::Kind::Automorphism:
            return prove_by_automorphism(a, spec, strategy.maps);
    }
    return {};
}

std::optional<std::pair<Scheduler, Witness>> find_interfering(
    const ProbAutomaton& a, const AnonymitySpec& spec, int horizon,
    const SchedLimits& limits) {
    require_markers(spec);
    if (horizon == kUnbounded && is_cyclic(a))
        throw Error(ErrorCode::CyclicNeedsHorizon,
                    "unbounded interference search over a cyclic automaton");
    const ObservationMap raw = ObservationMap::strict();
    const ObservationMap coll = ObservationMap::collapse(spec.act_o);
    const ClassChoices cc = make_class_choices(a, raw);

    std::map<SchedulerKey, int> assignment;
    unsigned long long checked = 0;
    std::optional<std::pair<Scheduler, Witness>> found;

    struct WalkResult {
        std::optional<SchedulerKey> frontier;
        std::map<SchedulerKey, int> reached;
    };
    auto walk = [&]() {
        WalkResult wr;
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
                            "interference search walk exceeded the node bound");
            if (a.terminating(s)) continue;
            if (horizon != kUnbounded && static_cast<int>(obs.size()) >= horizon)
                continue;
            SchedulerKey key{obs, cc.part.block_of[s]};
            auto it = assignment.find(key);
            if (it == assignment.end()) {
                wr.frontier = std::move(key);
                return wr;
            }
            wr.reached.emplace(key, it->second);
            const Transition& tr = a.trans[s][cc.pick[s][it->second]];
            for (const auto& [t, p] : tr.dist.entries()) {
                std::pair<int, std::vector<Label>> child{t, obs};
                child.second.push_back(tr.label);  // strict observation
                if (seen.insert(child).second) queue.push_back(std::move(child));
            }
        }
        return wr;
    };

    std::function<void()> rec = [&]() {
        if (found) return;
        WalkResult wr = walk();
        if (!wr.frontier) {
            if (++checked > limits.max_interference_checks)
                throw Error(ErrorCode::ExplosionGuard,
                            "interference search exceeded the candidate bound");
            Scheduler xi;
            xi.kind = Scheduler::Kind::TabularDet;
            xi.omega = raw;
            xi.name = "interfering#" + std::to_string(checked);
            for (const auto& [k, c] : wr.reached) xi.table[k] = SchedulerRow::det(c);
            Verdict v = check_fpa(unfold(a, xi, horizon, cc, limits), spec);
            if (v.status == VerdictStatus::Violation) {
                v.witness->scheduler_name = xi.name;
                v.witness->scheduler = xi;
                found = std::make_pair(std::move(xi), std::move(*v.witness));
            }
            return;
        }
        const SchedulerKey key = *wr.frontier;
        if (assignment.size() >= limits.max_keys)
            throw Error(ErrorCode::ExplosionGuard,
                        "interference search key space exceeded the bound");
        // Difference-first: prefer raw labels nobody picked yet at an
        // observably equal history, so fixed decisions diverge across the
        // invisible contexts the observer cannot separate.
        std::vector<Label> mirror;
        mirror.reserve(key.observed.size());
        for (Label l : key.observed) mirror.push_back(coll.apply(l));
        std::map<Label, int> taken;
        for (const auto& [k2, c2] : assignment) {
            if (k2.observed.size() != key.observed.size()) continue;
            bool same = true;
            for (size_t i = 0; i < mirror.size() && same; ++i)
                same = coll.apply(k2.observed[i]) == mirror[i];
            if (!same) continue;
            const int r2 = cc.rep[k2.state_class];
            ++taken[a.trans[r2][cc.pick[r2][c2]].label];
        }
        const int rep = cc.rep[key.state_class];
        std::vector<std::pair<int, int>> order;  // (score, choice)
        for (int c = 0; c < cc.degree[key.state_class]; ++c) {
            const Label l = a.trans[rep][cc.pick[rep][c]].label;
            auto it = taken.find(l);
            order.emplace_back(it == taken.end() ? 0 : it->second, c);
        }
        std::sort(order.begin(), order.end());
        for (const auto& [score, c] : order) {
            if (found) break;
            assignment[key] = c;
            rec();
            assignment.erase(key);
        }
    };
    rec();
    return found;
}

CrossSchedulerReport cross_scheduler_bp(const ProbAutomaton& a,
                                        const AnonymitySpec& spec,
                                        ObservationMap::Mode mode, int horizon,
                                        const SchedLimits& limits) {
    require_markers(spec);
    const ObservationMap omega = mode == ObservationMap::Mode::Collapse
                                     ? ObservationMap::collapse(spec.act_o)
                                     : ObservationMap::strict();
    CrossSchedulerReport rep;
    struct Entry {
        std::string name;
        std::map<int, std::map<std::vector<Label>, Rational>> cond;  // P[o | A_i]
    };
    std::vector<Entry> entries;
    const ClassChoices cc = make_class_choices(a, omega);
    rep.schedulers =
        enumerate_admissible(a, omega, horizon, limits, [&](const Scheduler& xi) {
            FullyProbAutomaton f = unfold(a, xi, horizon, cc, limits);
            Verdict v = check_fpa_bp(f, spec);
            if (v.status == VerdictStatus::Violation && rep.per_scheduler_ok) {
                rep.per_scheduler_ok = false;
                v.witness->scheduler_name = xi.name;
                rep.per_scheduler_witness = std::move(*v.witness);
            }
            JointDist jd = JointDist::collect(f, spec);
            Entry e;
            e.name = xi.name;
            for (const auto& [i, m] : jd.p_oi)
                for (const auto& [o, poi] : m) e.cond[i][o] = poi / jd.p_i.at(i);
            entries.push_back(std::move(e));
            return true;
        });
    for (size_t x = 0; x < entries.size() && !rep.cross_witness; ++x) {
        for (size_t y = 0; y < entries.size() && !rep.cross_witness; ++y) {
            if (x == y) continue;
            for (int i : spec.users) {
                for (int j : spec.users) {
                    if (i == j) continue;
                    auto ix = entries[x].cond.find(i);
                    auto jy = entries[y].cond.find(j);
                    if (ix == entries[x].cond.end() || jy == entries[y].cond.end())
                        continue;
                    std::set<std::vector<Label>> os;
                    for (const auto& [o, q] : ix->second) os.insert(o);
                    for (const auto& [o, q] : jy->second) os.insert(o);
                    for (const auto& o : os) {
                        auto lv = ix->second.find(o);
                        auto rv = jy->second.find(o);
                        const Rational l = lv == ix->second.end() ? Rational(0) : lv->second;
                        const Rational r = rv == jy->second.end() ? Rational(0) : rv->second;
                        if (l == r) continue;
                        Witness w;
                        w.scheduler_name = entries[x].name + " vs " + entries[y].name;
                        w.user = i;
                        w.other_user = j;
                        w.observation = o;
                        w.lhs = l;
                        w.rhs = r;
                        w.detail = "P[o | A_" + std::to_string(i) + "] under " +
                                   entries[x].name + " = " + to_string(l) +
                                   " but P[o | A_" + std::to_string(j) + "] under " +
                                   entries[y].name + " = " + to_string(r) +
                                   " at o = " + show_otrace(o);
                        rep.cross_witness = std::move(w);
                        break;
                    }
                    if (rep.cross_witness) break;
                }
                if (rep.cross_witness) break;
            }
        }
    }
    return rep;
}

}  // namespace pam
