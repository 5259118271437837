#include "pam/bisim.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace pam {

void Partition::canonicalize() {
    const int n = num_states();
    int max_id = -1;
    for (int s = 0; s < n; ++s) max_id = std::max(max_id, block_of[s]);
    std::vector<int> remap(max_id + 1, -1);  // old block id -> new block id
    int next = 0;
    for (int s = 0; s < n; ++s) {
        int& slot = remap[block_of[s]];
        if (slot < 0) slot = next++;
    }
    blocks.assign(next, {});
    for (int s = 0; s < n; ++s) {
        block_of[s] = remap[block_of[s]];
        blocks[block_of[s]].push_back(s);
    }
}

Partition Partition::discrete(int n) {
    Partition p;
    p.block_of.resize(n);
    std::iota(p.block_of.begin(), p.block_of.end(), 0);
    p.blocks.resize(n);
    for (int s = 0; s < n; ++s) p.blocks[s] = {s};
    return p;
}

Partition Partition::trivial(int n) {
    Partition p;
    p.block_of.assign(n, 0);
    p.blocks.resize(1);
    p.blocks[0].resize(n);
    std::iota(p.blocks[0].begin(), p.blocks[0].end(), 0);
    return p;
}

Partition Partition::from_assignment(const std::vector<int>& group_of) {
    Partition p;
    p.block_of = group_of;
    p.canonicalize();
    return p;
}

bool lift_equiv(const Partition& part, const Distribution& mu,
                const Distribution& nu) {
    std::vector<Rational> mass(part.num_blocks(), Rational(0));
    for (const auto& [s, p] : mu.entries()) mass[part.block_of[s]] += p;
    for (const auto& [s, p] : nu.entries()) mass[part.block_of[s]] -= p;
    for (const auto& m : mass)
        if (m != 0) return false;
    return true;
}

namespace {

// Signature of a state under a partition: the set of (label, block-mass
// vector) pairs of its outgoing transitions. Two states in the same block
// satisfy the (symmetric) transfer condition for that partition exactly when
// their signatures coincide.
using BlockMass = std::vector<std::pair<int, Rational>>;
using Signature = std::vector<std::pair<Label, BlockMass>>;

Signature state_signature(const ProbAutomaton& a, int s, const Partition& part,
                          const std::function<Label(Label)>& view) {
    Signature sig;
    sig.reserve(a.trans[s].size());
    for (const auto& tr : a.trans[s]) {
        std::map<int, Rational> mass;
        for (const auto& [t, p] : tr.dist.entries())
            mass[part.block_of[t]] += p;
        sig.emplace_back(view(tr.label), BlockMass(mass.begin(), mass.end()));
    }
    std::sort(sig.begin(), sig.end());
    sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
    return sig;
}

Label identity_view(Label l) { return l; }

}  // namespace

Partition bisimilarity(const ProbAutomaton& a,
                       const std::function<Label(Label)>& label_view) {
    const int n = a.num_states;
    Partition part = Partition::trivial(n);
    for (;;) {
        // Group states by (current block, signature); the groups are the
        // blocks of the refined partition.
        std::map<std::pair<int, Signature>, int> group_ids;
        std::vector<int> next_block(n);
        for (int s = 0; s < n; ++s) {
            auto key = std::make_pair(part.block_of[s],
                                      state_signature(a, s, part, label_view));
            auto [it, fresh] =
                group_ids.emplace(std::move(key), static_cast<int>(group_ids.size()));
            (void)fresh;
            next_block[s] = it->second;
        }
        if (static_cast<int>(group_ids.size()) == part.num_blocks()) break;
        part = Partition::from_assignment(next_block);
    }
    part.canonicalize();
    return part;
}

Partition bisimilarity(const ProbAutomaton& a) {
    return bisimilarity(a, identity_view);
}

Partition bisimilarity(const ProbAutomaton& a, const ObservationMap& omega) {
    return bisimilarity(a, [&omega](Label l) { return omega.apply(l); });
}

bool is_bisimulation(const ProbAutomaton& a, const Partition& part,
                     const std::function<Label(Label)>& label_view) {
    for (const auto& block : part.blocks) {
        if (block.size() < 2) continue;
        Signature ref = state_signature(a, block[0], part, label_view);
        for (size_t k = 1; k < block.size(); ++k)
            if (state_signature(a, block[k], part, label_view) != ref)
                return false;
    }
    return true;
}

bool is_bisimulation(const ProbAutomaton& a, const Partition& part) {
    return is_bisimulation(a, part, identity_view);
}

bool refines(const Partition& fine, const Partition& coarse) {
    for (const auto& block : fine.blocks)
        for (size_t k = 1; k < block.size(); ++k)
            if (!coarse.same_block(block[0], block[k])) return false;
    return true;
}

void for_each_partition(int n,
                        const std::function<void(const Partition&)>& fn) {
    // Restricted-growth strings: element s may join blocks 0..max_used+1.
    std::vector<int> assign(n, 0);
    std::function<void(int, int)> rec = [&](int s, int used) {
        if (s == n) {
            fn(Partition::from_assignment(assign));
            return;
        }
        for (int b = 0; b <= used; ++b) {
            assign[s] = b;
            rec(s + 1, std::max(used, b + 1));
        }
    };
    if (n == 0) {
        fn(Partition{});
        return;
    }
    rec(0, 0);
}

ProbAutomaton disjoint_union(const ProbAutomaton& a, const ProbAutomaton& b) {
    ProbAutomaton u = ProbAutomaton::empty(a.num_states + b.num_states, a.init,
                                           a.name + "+" + b.name);
    const int shift = a.num_states;
    if (!a.state_names.empty() || !b.state_names.empty()) {
        u.state_names.resize(static_cast<size_t>(u.num_states));
        for (int s = 0; s < a.num_states; ++s)
            if (!a.state_names.empty()) u.state_names[s] = a.state_names[s];
        for (int s = 0; s < b.num_states; ++s)
            if (!b.state_names.empty()) u.state_names[shift + s] = b.state_names[s];
    }
    for (int s = 0; s < a.num_states; ++s)
        for (const auto& tr : a.trans[s]) u.add(s, tr.label, tr.dist, tr.moved);
    for (int s = 0; s < b.num_states; ++s)
        for (const auto& tr : b.trans[s])
            u.add(shift + s, tr.label,
                  tr.dist.map([shift](int t) { return t + shift; }), tr.moved);
    return u;
}

bool bisimilar(const ProbAutomaton& a, const ProbAutomaton& b) {
    ProbAutomaton u = disjoint_union(a, b);
    Partition part = bisimilarity(u);
    return part.same_block(a.init, a.num_states + b.init);
}

}  // namespace pam
