#pragma once

#include "pam/automaton.hpp"
#include "pam/obs.hpp"

#include <functional>
#include <vector>

namespace pam {

// A partition of the state set {0..n-1}. Blocks are kept in canonical form:
// each block sorted ascending, blocks ordered by their smallest state, and
// block_of[s] is the index of the block containing s. Canonical numbering
// makes block ids stable across runs, so scheduler tables that mention class
// ids stay meaningful when written to disk and read back.
struct Partition {
    std::vector<int> block_of;
    std::vector<std::vector<int>> blocks;

    int num_states() const { return static_cast<int>(block_of.size()); }
    int num_blocks() const { return static_cast<int>(blocks.size()); }
    bool same_block(int s, int t) const { return block_of[s] == block_of[t]; }

    // Rebuild `blocks` from `block_of` in canonical order and renumber.
    void canonicalize();

    static Partition discrete(int n);  // every state its own block
    static Partition trivial(int n);   // one block (n >= 1)
    // Build from an arbitrary state->group assignment.
    static Partition from_assignment(const std::vector<int>& group_of);

    friend bool operator==(const Partition& a, const Partition& b) {
        return a.block_of == b.block_of;
    }
};

// Lifting of a state equivalence to distributions: equal mass on every block.
bool lift_equiv(const Partition& part, const Distribution& mu,
                const Distribution& nu);

// Coarsest probabilistic bisimulation, computed by signature refinement
// starting from the trivial partition. The label_view is applied to every
// transition label before comparison; pass the identity for raw
// bisimilarity, or an ObservationMap to identify states an observer
// restricted to Act_O cannot tell apart.
Partition bisimilarity(const ProbAutomaton& a);
Partition bisimilarity(const ProbAutomaton& a, const ObservationMap& omega);
Partition bisimilarity(const ProbAutomaton& a,
                       const std::function<Label(Label)>& label_view);

// Check the transfer condition for a given partition (not necessarily the
// coarsest): within every block all states must have identical signatures.
bool is_bisimulation(const ProbAutomaton& a, const Partition& part);
bool is_bisimulation(const ProbAutomaton& a, const Partition& part,
                     const std::function<Label(Label)>& label_view);

// true iff `fine` refines `coarse` (every block of `fine` is contained in a
// block of `coarse`). Used to cross-check the refinement result against the
// brute-force search.
bool refines(const Partition& fine, const Partition& coarse);

// Enumerate every partition of {0..n-1} (Bell(n) many — keep n small; the
// test oracle uses n <= 6). Visits each exactly once, in a deterministic
// order, in canonical form.
void for_each_partition(int n,
                        const std::function<void(const Partition&)>& fn);

// Deterministic-seam helper for equivalence-of-initial-states questions:
// disjoint union of two automata (states of b shifted by a.num_states; init
// of the union is a's — callers compare classes of a.init and shifted
// b.init directly).
ProbAutomaton disjoint_union(const ProbAutomaton& a, const ProbAutomaton& b);

// Convenience: initial states of a and b are bisimilar (labels read raw).
bool bisimilar(const ProbAutomaton& a, const ProbAutomaton& b);

}  // namespace pam
