#include "pam/algebra.hpp"

#include "pam/error.hpp"

#include <algorithm>
#include <deque>
#include <utility>

namespace pam {

namespace {

std::string state_display(const ProbAutomaton& a, int s) {
    if (!a.state_names.empty()) return a.state_names[static_cast<size_t>(s)];
    return std::to_string(s);
}

// Tuple names stay flat across nested composition: "(1,0)" + "2" -> "(1,0,2)".
std::string flatten_pair(const std::string& left, const std::string& right) {
    auto strip = [](const std::string& s) {
        if (s.size() >= 2 && s.front() == '(' && s.back() == ')')
            return s.substr(1, s.size() - 2);
        return s;
    };
    return "(" + strip(left) + "," + strip(right) + ")";
}

uint32_t effective_mask(const Transition& t) { return t.moved ? t.moved : 1u; }

}  // namespace

void CommFunction::set(Label a, Label b, Label result) {
    table_[std::minmax(a, b)] = result;
}

std::optional<Label> CommFunction::sync(Label a, Label b) const {
    auto it = table_.find(std::minmax(a, b));
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

CommFunction CommFunction::handshake(const std::vector<std::string>& channels) {
    CommFunction g;
    for (const auto& c : channels)
        g.set(labels::get(c, Kind::Input), labels::get(c, Kind::Output), labels::tau(c));
    return g;
}

ProbAutomaton compose(const ProbAutomaton& a1, const ProbAutomaton& a2,
                      const CommFunction& gamma, size_t guard) {
    size_t product = static_cast<size_t>(a1.num_states) * static_cast<size_t>(a2.num_states);
    if (product > guard)
        throw Error(ErrorCode::ExplosionGuard,
                    "product has " + std::to_string(product) + " states (guard " +
                        std::to_string(guard) + "); use system elaboration instead");
    int n2 = a2.num_states;
    auto id = [n2](int s1, int s2) { return s1 * n2 + s2; };

    ProbAutomaton out = ProbAutomaton::empty(static_cast<int>(product), id(a1.init, a2.init),
                                             a1.name.empty() || a2.name.empty()
                                                 ? std::string{}
                                                 : a1.name + "||" + a2.name);
    out.components = a1.components + a2.components;
    out.state_names.reserve(product);
    for (int s1 = 0; s1 < a1.num_states; ++s1)
        for (int s2 = 0; s2 < n2; ++s2)
            out.state_names.push_back(
                flatten_pair(state_display(a1, s1), state_display(a2, s2)));

    int shift = a1.components;
    for (int s1 = 0; s1 < a1.num_states; ++s1) {
        for (int s2 = 0; s2 < n2; ++s2) {
            int from = id(s1, s2);
            // left component moves alone
            for (const auto& t : a1.trans[s1])
                out.add(from, t.label, t.dist.map([&](int u) { return id(u, s2); }),
                        effective_mask(t));
            // right component moves alone
            for (const auto& t : a2.trans[s2])
                out.add(from, t.label, t.dist.map([&](int u) { return id(s1, u); }),
                        effective_mask(t) << shift);
            // synchronous joint moves for every pair gamma defines
            for (const auto& t1 : a1.trans[s1]) {
                for (const auto& t2 : a2.trans[s2]) {
                    auto joint = gamma.sync(t1.label, t2.label);
                    if (!joint) continue;
                    std::vector<Distribution::Entry> entries;
                    for (auto& [u1, p1] : t1.dist.entries())
                        for (auto& [u2, p2] : t2.dist.entries())
                            entries.emplace_back(id(u1, u2), p1 * p2);
                    out.add(from, *joint, Distribution::make(std::move(entries)),
                            effective_mask(t1) | (effective_mask(t2) << shift));
                }
            }
        }
    }
    return out;
}

ProbAutomaton compose(const std::vector<const ProbAutomaton*>& parts,
                      const CommFunction& gamma, size_t guard) {
    if (parts.empty()) throw Error(ErrorCode::BadInput, "compose of zero automata");
    ProbAutomaton acc = *parts[0];
    for (size_t i = 1; i < parts.size(); ++i) acc = compose(acc, *parts[i], gamma, guard);
    return acc;
}

ProbAutomaton restrict_actions(const ProbAutomaton& a, const std::set<Label>& labels) {
    ProbAutomaton out = a;
    for (auto& ts : out.trans) {
        std::vector<Transition> kept;
        for (auto& t : ts)
            if (!labels.count(t.label)) kept.push_back(std::move(t));
        ts = std::move(kept);
    }
    return out;
}

ProbAutomaton hide_actions(const ProbAutomaton& a, const std::set<Label>& labels) {
    ProbAutomaton out = a;
    for (auto& ts : out.trans)
        for (auto& t : ts)
            if (labels.count(t.label)) t.label = labels::tau(labels::data(t.label).name);
    return out;
}

ProbAutomaton reachable(const ProbAutomaton& a, std::vector<int>* old_ids) {
    std::vector<int> new_id(static_cast<size_t>(a.num_states), -1);
    std::vector<int> order;
    std::deque<int> queue{a.init};
    new_id[static_cast<size_t>(a.init)] = 0;
    order.push_back(a.init);
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (const auto& t : a.trans[static_cast<size_t>(s)]) {
            for (auto& [u, p] : t.dist.entries()) {
                if (new_id[static_cast<size_t>(u)] == -1) {
                    new_id[static_cast<size_t>(u)] = static_cast<int>(order.size());
                    order.push_back(u);
                    queue.push_back(u);
                }
            }
        }
    }
    ProbAutomaton out = ProbAutomaton::empty(static_cast<int>(order.size()), 0, a.name);
    out.components = a.components;
    if (!a.state_names.empty()) {
        out.state_names.reserve(order.size());
        for (int old : order) out.state_names.push_back(a.state_names[static_cast<size_t>(old)]);
    }
    for (size_t i = 0; i < order.size(); ++i) {
        for (const auto& t : a.trans[static_cast<size_t>(order[i])])
            out.add(static_cast<int>(i), t.label,
                    t.dist.map([&](int u) { return new_id[static_cast<size_t>(u)]; }), t.moved);
    }
    if (old_ids) *old_ids = std::move(order);
    return out;
}

ProbAutomaton seq_reduce(const ProbAutomaton& a) {
    auto lowest_component = [](uint32_t mask) {
        int i = 0;
        while (!(mask & 1u)) {
            mask >>= 1;
            ++i;
        }
        return i;
    };
    ProbAutomaton out = ProbAutomaton::empty(a.num_states, a.init, a.name);
    out.components = a.components;
    out.state_names = a.state_names;
    for (int s = 0; s < a.num_states; ++s) {
        const auto& ts = a.trans[static_cast<size_t>(s)];
        int lead = -1;
        for (const auto& t : ts)
            if (labels::data(t.label).kind == Kind::Internal && t.moved) {
                int c = lowest_component(t.moved);
                if (lead == -1 || c < lead) lead = c;
            }
        for (const auto& t : ts) {
            bool invisible = labels::data(t.label).kind == Kind::Internal && t.moved;
            if (lead == -1 || (invisible && lowest_component(t.moved) == lead))
                out.add(s, t.label, t.dist, t.moved);
        }
    }
    return out;
}

namespace {

// Canonical pipeline shape for fused elaboration:
// seq / hide / restrict / sync wrappers (any order, each any number of times)
// over one compose of atoms (or a single atom).
struct Pipeline {
    std::vector<std::string> atoms;
    std::set<std::string> sync_channels;
    std::set<Label> restricted;
    std::set<Label> hidden;
    bool seq = false;
};

// Fusable shapes are exactly seq?(hide*(restrict*(sync*(compose|atom)))):
// the wrapper order matches what fused_product implements (solo sync halves
// and restricted labels dropped on original labels, then hiding renames).
// `level` enforces the order: 0 seq, 1 hide, 2 restrict, 3 sync, 4 leaf.
bool extract_pipeline(const SystemExpr& e, Pipeline& p, int level = 0) {
    switch (e.op) {
        case SystemExpr::Op::Atom:
            p.atoms.push_back(e.atom);
            return true;
        case SystemExpr::Op::Compose:
            for (const auto& c : e.children)
                if (c.op != SystemExpr::Op::Atom) return false;
            for (const auto& c : e.children) p.atoms.push_back(c.atom);
            return true;
        case SystemExpr::Op::Sync:
            if (level > 3) return false;
            p.sync_channels.insert(e.channels.begin(), e.channels.end());
            return extract_pipeline(e.children.at(0), p, 3);
        case SystemExpr::Op::Restrict:
            if (level > 2) return false;
            p.restricted.insert(e.labels.begin(), e.labels.end());
            return extract_pipeline(e.children.at(0), p, 2);
        case SystemExpr::Op::Hide:
            if (level > 1) return false;
            p.hidden.insert(e.labels.begin(), e.labels.end());
            return extract_pipeline(e.children.at(0), p, 1);
        case SystemExpr::Op::Seq:
            if (level > 0) return false;
            p.seq = true;
            return extract_pipeline(e.children.at(0), p, 1);
    }
    return false;
}

const ProbAutomaton& resolve(const AutomatonLookup& autos, const std::string& name) {
    auto it = autos.find(name);
    if (it == autos.end())
        throw Error(ErrorCode::BadInput, "unknown automaton '" + name + "' in system");
    return *it->second;
}

// Single reachability sweep over tuple states implementing
// hide(restrict(compose(parts, handshake(sync)), solo sync halves + extra), hidden).
// Never materializes intermediate binary products.
ProbAutomaton fused_product(const std::vector<const ProbAutomaton*>& parts,
                            const std::set<std::string>& sync_channels,
                            const std::set<Label>& restricted, const std::set<Label>& hidden,
                            size_t guard) {
    size_t k = parts.size();
    if (k > 31) throw Error(ErrorCode::BadInput, "more than 31 parallel components");

    auto is_sync_half = [&](Label l) {
        const LabelData& d = labels::data(l);
        return (d.kind == Kind::Input || d.kind == Kind::Output) && sync_channels.count(d.name);
    };
    auto out_label = [&](Label l) {
        return hidden.count(l) ? labels::tau(labels::data(l).name) : l;
    };

    std::map<std::vector<int>, int> index;
    std::vector<std::vector<int>> tuples;
    std::vector<int> init(k);
    for (size_t i = 0; i < k; ++i) init[i] = parts[i]->init;
    index[init] = 0;
    tuples.push_back(init);

    struct Move {
        Label label;
        std::vector<std::pair<std::vector<int>, Rational>> dist;
        uint32_t mask;
    };
    std::vector<std::vector<Move>> rows;

    for (size_t qi = 0; qi < tuples.size(); ++qi) {
        if (tuples.size() > guard)
            throw Error(ErrorCode::ExplosionGuard,
                        "elaborated system exceeds " + std::to_string(guard) + " states");
        std::vector<int> st = tuples[qi];
        std::vector<Move> moves;
        // solo moves (restricted labels and lone halves of synced channels drop)
        for (size_t ci = 0; ci < k; ++ci) {
            for (const auto& t : parts[ci]->trans[static_cast<size_t>(st[ci])]) {
                if (is_sync_half(t.label) || restricted.count(t.label)) continue;
                Move m;
                m.label = out_label(t.label);
                m.mask = 1u << ci;
                for (auto& [u, p] : t.dist.entries()) {
                    auto ns = st;
                    ns[ci] = u;
                    m.dist.emplace_back(std::move(ns), p);
                }
                moves.push_back(std::move(m));
            }
        }
        // handshakes: input half in ci, output half in cj, same synced channel
        for (size_t ci = 0; ci < k; ++ci) {
            for (const auto& ti : parts[ci]->trans[static_cast<size_t>(st[ci])]) {
                const LabelData& di = labels::data(ti.label);
                if (di.kind != Kind::Input || !sync_channels.count(di.name)) continue;
                for (size_t cj = 0; cj < k; ++cj) {
                    if (ci == cj) continue;
                    for (const auto& tj : parts[cj]->trans[static_cast<size_t>(st[cj])]) {
                        const LabelData& dj = labels::data(tj.label);
                        if (dj.kind != Kind::Output || dj.name != di.name) continue;
                        Move m;
                        m.label = labels::tau(di.name);
                        m.mask = (1u << ci) | (1u << cj);
                        for (auto& [ui, pi] : ti.dist.entries()) {
                            for (auto& [uj, pj] : tj.dist.entries()) {
                                auto ns = st;
                                ns[ci] = ui;
                                ns[cj] = uj;
                                m.dist.emplace_back(std::move(ns), pi * pj);
                            }
                        }
                        moves.push_back(std::move(m));
                    }
                }
            }
        }
        for (auto& m : moves) {
            for (auto& [ns, p] : m.dist) {
                if (!index.count(ns)) {
                    index[ns] = static_cast<int>(tuples.size());
                    tuples.push_back(ns);
                }
            }
        }
        rows.push_back(std::move(moves));
    }

    ProbAutomaton out = ProbAutomaton::empty(static_cast<int>(tuples.size()), 0);
    out.components = static_cast<int>(k);
    out.state_names.reserve(tuples.size());
    for (auto& tp : tuples) {
        std::string nm = "(";
        for (size_t i = 0; i < tp.size(); ++i) {
            if (i) nm += ',';
            nm += std::to_string(tp[i]);
        }
        nm += ')';
        out.state_names.push_back(std::move(nm));
    }
    for (size_t s = 0; s < rows.size(); ++s) {
        for (auto& m : rows[s]) {
            std::vector<Distribution::Entry> entries;
            entries.reserve(m.dist.size());
            for (auto& [ns, p] : m.dist) entries.emplace_back(index.at(ns), p);
            out.add(static_cast<int>(s), m.label, Distribution::make(std::move(entries)),
                    m.mask);
        }
    }
    return out;
}

ProbAutomaton eval_expr(const SystemExpr& e, const AutomatonLookup& autos, size_t guard) {
    switch (e.op) {
        case SystemExpr::Op::Atom:
            return resolve(autos, e.atom);
        case SystemExpr::Op::Compose: {
            std::vector<ProbAutomaton> elaborated;
            for (const auto& c : e.children) elaborated.push_back(eval_expr(c, autos, guard));
            ProbAutomaton acc = std::move(elaborated[0]);
            CommFunction none;
            for (size_t i = 1; i < elaborated.size(); ++i)
                acc = compose(acc, elaborated[i], none, guard);
            return acc;
        }
        case SystemExpr::Op::Sync: {
            // handshake-compose the children of an inner compose, then drop
            // the unmatched halves of the synced channels
            const SystemExpr& inner = e.children.at(0);
            CommFunction gamma = CommFunction::handshake(e.channels);
            ProbAutomaton acc;
            if (inner.op == SystemExpr::Op::Compose) {
                std::vector<ProbAutomaton> elaborated;
                for (const auto& c : inner.children)
                    elaborated.push_back(eval_expr(c, autos, guard));
                acc = std::move(elaborated[0]);
                for (size_t i = 1; i < elaborated.size(); ++i)
                    acc = compose(acc, elaborated[i], gamma, guard);
            } else {
                acc = eval_expr(inner, autos, guard);
            }
            std::set<Label> halves;
            for (const auto& c : e.channels) {
                halves.insert(labels::get(c, Kind::Input));
                halves.insert(labels::get(c, Kind::Output));
            }
            return restrict_actions(acc, halves);
        }
        case SystemExpr::Op::Restrict:
            return restrict_actions(eval_expr(e.children.at(0), autos, guard),
                                    {e.labels.begin(), e.labels.end()});
        case SystemExpr::Op::Hide:
            return hide_actions(eval_expr(e.children.at(0), autos, guard),
                                {e.labels.begin(), e.labels.end()});
        case SystemExpr::Op::Seq:
            return seq_reduce(eval_expr(e.children.at(0), autos, guard));
    }
    throw Error(ErrorCode::BadInput, "malformed system expression");
}

}  // namespace

SystemExpr SystemExpr::atom_ref(std::string name) {
    SystemExpr e;
    e.op = Op::Atom;
    e.atom = std::move(name);
    return e;
}

SystemExpr SystemExpr::compose_of(std::vector<SystemExpr> parts) {
    SystemExpr e;
    e.op = Op::Compose;
    e.children = std::move(parts);
    return e;
}

SystemExpr SystemExpr::sync_of(SystemExpr inner, std::vector<std::string> channels) {
    SystemExpr e;
    e.op = Op::Sync;
    e.children.push_back(std::move(inner));
    e.channels = std::move(channels);
    return e;
}

SystemExpr SystemExpr::restrict_of(SystemExpr inner, std::vector<Label> labels) {
    SystemExpr e;
    e.op = Op::Restrict;
    e.children.push_back(std::move(inner));
    e.labels = std::move(labels);
    return e;
}

SystemExpr SystemExpr::hide_of(SystemExpr inner, std::vector<Label> labels) {
    SystemExpr e;
    e.op = Op::Hide;
    e.children.push_back(std::move(inner));
    e.labels = std::move(labels);
    return e;
}

SystemExpr SystemExpr::seq_of(SystemExpr inner) {
    SystemExpr e;
    e.op = Op::Seq;
    e.children.push_back(std::move(inner));
    return e;
}

ProbAutomaton elaborate(const SystemExpr& expr, const AutomatonLookup& autos, size_t guard) {
    Pipeline p;
    if (extract_pipeline(expr, p) && !p.atoms.empty()) {
        std::vector<const ProbAutomaton*> parts;
        parts.reserve(p.atoms.size());
        for (const auto& nm : p.atoms) parts.push_back(&resolve(autos, nm));
        ProbAutomaton sys =
            fused_product(parts, p.sync_channels, p.restricted, p.hidden, guard);
        if (p.seq) sys = reachable(seq_reduce(sys));
        return sys;
    }
    return reachable(eval_expr(expr, autos, guard));
}

}  // namespace pam
