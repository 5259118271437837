#include "pam/dc.hpp"

#include "pam/anonymity.hpp"
#include "pam/error.hpp"
#include "pam/sched.hpp"

#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pam::dc {

namespace {

std::string nm(const char* base, int i) { return std::string(base) + "_" + std::to_string(i); }

std::string nm2(const char* base, int i, int j) {
    return std::string(base) + "_" + std::to_string(i) + "_" + std::to_string(j);
}

// Emission labels of master branch k (0-based; k == n is the nobody-pays
// branch): p_{i+1}! for the payer, n_{i+1}! for everyone else. On payer
// branches the payer's own notification goes first — this keeps the payer
// identity out of the (hidden) emission order, which the marker-exchanging
// automorphisms need.
std::vector<Label> branch_labels(int n, int k) {
    std::vector<Label> labs;
    if (k < n) labs.push_back(labels::get(nm("p", k + 1), Kind::Output));
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        labs.push_back(labels::get(nm("n", i + 1), Kind::Output));
    }
    return labs;
}

ProbAutomaton build_master(int n) {
    int branches = n + 1, per = n;
    ProbAutomaton m = ProbAutomaton::empty(1 + branches * per, 0, "Master");
    for (int k = 0; k < branches; ++k) {
        std::vector<Label> labs = branch_labels(n, k);
        int base = 1 + k * per;
        int cur = 0;
        for (int x = 0; x < n; ++x) {
            m.add(cur, labs[static_cast<size_t>(x)], Distribution::dirac(base + x));
            cur = base + x;
        }
    }
    return m;
}

ProbAutomaton build_coin(int n, int i) {
    int im1 = ((i - 2) % n + n) % n + 1;
    ProbAutomaton c = ProbAutomaton::empty(6, 0, nm("Coin", i));
    c.add(0, labels::get(nm("flip", i)), Distribution::make({{1, rat(1, 2)}, {2, rat(1, 2)}}));
    c.add(1, labels::get(nm2("h", i, i), Kind::Output), Distribution::dirac(3));
    c.add(2, labels::get(nm2("t", i, i), Kind::Output), Distribution::dirac(4));
    c.add(3, labels::get(nm2("h", i, im1), Kind::Output), Distribution::dirac(5));
    c.add(4, labels::get(nm2("t", i, im1), Kind::Output), Distribution::dirac(5));
    return c;
}

// States: 0 waiting; 1 paid / 2 not paid; after the own coin, 3 and 4 encode
// "announcement will be disagree resp. agree once the neighbour coin is
// known to match"; 5 disagree / 6 agree pending; 8 done (7 unused).
ProbAutomaton build_crypt(int n, int i) {
    int ip1 = i % n + 1;
    ProbAutomaton c = ProbAutomaton::empty(9, 0, nm("Crypt", i));
    c.add(0, labels::get(nm("p", i), Kind::Input), Distribution::dirac(1));
    c.add(0, labels::get(nm("n", i), Kind::Input), Distribution::dirac(2));
    c.add(1, labels::get(nm2("h", i, i), Kind::Input), Distribution::dirac(3));
    c.add(1, labels::get(nm2("t", i, i), Kind::Input), Distribution::dirac(4));
    c.add(2, labels::get(nm2("h", i, i), Kind::Input), Distribution::dirac(4));
    c.add(2, labels::get(nm2("t", i, i), Kind::Input), Distribution::dirac(3));
    c.add(3, labels::get(nm2("h", ip1, i), Kind::Input), Distribution::dirac(5));
    c.add(3, labels::get(nm2("t", ip1, i), Kind::Input), Distribution::dirac(6));
    c.add(4, labels::get(nm2("h", ip1, i), Kind::Input), Distribution::dirac(6));
    c.add(4, labels::get(nm2("t", ip1, i), Kind::Input), Distribution::dirac(5));
    c.add(5, labels::get(nm("d", i), Kind::Output), Distribution::dirac(8));
    c.add(6, labels::get(nm("a", i), Kind::Output), Distribution::dirac(8));
    return c;
}

// Announcement order: at classes offering announcements, order123 picks the
// lowest cryptographer index. Non-announcement labels sort last, so
// single-choice classes resolve to choice 0.
int announce_index(Label l) {
    const LabelData& d = labels::data(l);
    if (d.kind != Kind::Output || d.name.size() < 3) return std::numeric_limits<int>::max();
    if ((d.name[0] != 'a' && d.name[0] != 'd') || d.name[1] != '_')
        return std::numeric_limits<int>::max();
    int idx = 0;
    for (size_t k = 2; k < d.name.size(); ++k) {
        if (d.name[k] < '0' || d.name[k] > '9') return std::numeric_limits<int>::max();
        idx = idx * 10 + (d.name[k] - '0');
    }
    return idx;
}

// Walks the scheduled part of the system breadth-first, assigning one row
// per discovered key: the master's branch choice (the only multi-choice
// invisible class, at the initial situation) gets the uniform row, every
// other key the canonical choice with the lowest announcement index.
dsl::SchedulerSrc build_order123(const ProbAutomaton& sys, const AnonymitySpec& spec) {
    ObservationMap om = ObservationMap::collapse(spec.act_o);
    ClassChoices cc = make_class_choices(sys, om);

    dsl::SchedulerSrc src;
    src.name = "order123";
    src.mode = ObservationMap::Mode::Collapse;
    src.kind = Scheduler::Kind::TabularRandomized;

    std::map<SchedulerKey, SchedulerRow> table;
    struct Node {
        int state;
        std::vector<Label> observed;
    };
    std::deque<Node> queue;
    std::set<std::pair<int, std::vector<Label>>> seen;
    queue.push_back({sys.init, {}});
    seen.insert({sys.init, {}});
    while (!queue.empty()) {
        Node node = std::move(queue.front());
        queue.pop_front();
        if (sys.terminating(node.state)) continue;
        int cls = cc.class_of(node.state);
        SchedulerKey key{node.observed, cls};
        auto it = table.find(key);
        if (it == table.end()) {
            int deg = cc.degree[static_cast<size_t>(cls)];
            SchedulerRow row;
            if (node.observed.empty() && node.state == sys.init && deg > 1) {
                std::vector<std::pair<int, Rational>> uniform;
                for (int c = 0; c < deg; ++c) uniform.emplace_back(c, rat(1, deg));
                row = SchedulerRow::make(std::move(uniform), 0);
            } else {
                const auto& reps = sys.trans[static_cast<size_t>(
                    cc.rep[static_cast<size_t>(cls)])];
                int best = 0;
                for (int c = 1; c < deg; ++c)
                    if (announce_index(reps[static_cast<size_t>(c)].label) <
                        announce_index(reps[static_cast<size_t>(best)].label))
                        best = c;
                row = SchedulerRow::det(best);
            }
            it = table.emplace(key, std::move(row)).first;
            src.rows.emplace_back(key, it->second);
        }
        for (auto& [c, mass] : it->second.choices) {
            const Transition& t = sys.trans[static_cast<size_t>(node.state)]
                                           [static_cast<size_t>(
                                               cc.pick[static_cast<size_t>(node.state)]
                                                      [static_cast<size_t>(c)])];
            std::vector<Label> next = node.observed;
            next.push_back(om.apply(t.label));
            for (auto& [tgt, p] : t.dist.entries()) {
                if (seen.insert({tgt, next}).second) queue.push_back({tgt, next});
            }
        }
    }
    return src;
}

}  // namespace

dsl::Bundle generate_dc(int n) {
    if (n < 3)
        throw Error(ErrorCode::BadN,
                    "dining cryptographers needs n >= 3, got " + std::to_string(n));
    dsl::Bundle b;
    b.automata.push_back(build_master(n));
    for (int i = 1; i <= n; ++i) b.automata.push_back(build_coin(n, i));
    for (int i = 1; i <= n; ++i) b.automata.push_back(build_crypt(n, i));

    std::vector<SystemExpr> parts;
    for (auto& a : b.automata) parts.push_back(SystemExpr::atom_ref(a.name));
    std::vector<std::string> channels;
    for (int i = 1; i <= n; ++i) {
        int im1 = ((i - 2) % n + n) % n + 1;
        channels.push_back(nm("p", i));
        channels.push_back(nm("n", i));
        channels.push_back(nm2("h", i, i));
        channels.push_back(nm2("t", i, i));
        channels.push_back(nm2("h", i, im1));
        channels.push_back(nm2("t", i, im1));
    }
    std::vector<Label> flips;
    for (int i = 1; i <= n; ++i) flips.push_back(labels::get(nm("flip", i)));
    b.systems.emplace_back(
        "main", SystemExpr::seq_of(SystemExpr::hide_of(
                    SystemExpr::sync_of(SystemExpr::compose_of(std::move(parts)),
                                        std::move(channels)),
                    std::move(flips))));

    AnonymitySpec spec;
    for (int i = 1; i <= n; ++i) {
        spec.users.push_back(i);
        spec.markers[i] = labels::tau(nm("p", i));
        spec.act_o.insert(labels::get(nm("a", i), Kind::Output));
        spec.act_o.insert(labels::get(nm("d", i), Kind::Output));
    }
    b.spec = spec;

    ProbAutomaton sys = b.elaborate_system("main");
    b.schedulers.push_back(build_order123(sys, spec));

    std::set<Label> all_markers;
    for (auto& [u, l] : spec.markers) all_markers.insert(l);
    for (size_t i = 0; i < spec.users.size(); ++i) {
        for (size_t j = i + 1; j < spec.users.size(); ++j) {
            int ui = spec.users[i], uj = spec.users[j];
            AutomorphismSearch found =
                find_automorphism(sys, spec.act_o, spec.markers.at(ui),
                                  spec.markers.at(uj), all_markers);
            if (!found.map) continue;
            dsl::StateMapSrc src;
            src.name = "swap_" + std::to_string(ui) + "_" + std::to_string(uj);
            src.user_i = ui;
            src.user_j = uj;
            const StateMap& m = *found.map;
            for (int s = 0; s < sys.num_states; ++s)
                if (m[static_cast<size_t>(s)] != s)
                    src.entries.emplace_back(s, m[static_cast<size_t>(s)]);
            b.statemaps.push_back(std::move(src));
        }
    }
    return b;
}

dsl::Bundle with_master_prior(const dsl::Bundle& b, const std::vector<Rational>& weights) {
    const ProbAutomaton* master = b.find_automaton("Master");
    if (!master)
        throw Error(ErrorCode::UnknownName,
                    "no automaton named 'Master' to attach the prior to");
    const auto& roots = master->trans[static_cast<size_t>(master->init)];
    if (roots.empty())
        throw Error(ErrorCode::BadInput, "'Master' has no initial choice to weight");
    if (weights.size() != roots.size())
        throw Error(ErrorCode::BadInput,
                    "prior needs " + std::to_string(roots.size()) + " weights, got " +
                        std::to_string(weights.size()));

    int branches = static_cast<int>(roots.size());
    int shift = 1 + branches;
    ProbAutomaton prior =
        ProbAutomaton::empty(shift + master->num_states, 0, master->name);
    std::vector<Distribution::Entry> entry_dist;
    for (int k = 0; k < branches; ++k)
        entry_dist.emplace_back(1 + k, weights[static_cast<size_t>(k)]);
    prior.add(0, labels::tau("choose"), Distribution::make(std::move(entry_dist)));
    for (int k = 0; k < branches; ++k) {
        const Transition& t = roots[static_cast<size_t>(k)];
        prior.add(1 + k, t.label, t.dist.map([&](int s) { return s + shift; }));
    }
    for (int s = 0; s < master->num_states; ++s)
        for (const Transition& t : master->trans[static_cast<size_t>(s)])
            prior.add(s + shift, t.label, t.dist.map([&](int x) { return x + shift; }));

    dsl::Bundle out;
    out.automata = b.automata;
    for (auto& a : out.automata)
        if (a.name == "Master") a = prior;
    out.systems = b.systems;
    out.spec = b.spec;
    return out;
}

}  // namespace pam::dc
