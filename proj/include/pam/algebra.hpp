#pragma once

#include "pam/automaton.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pam {

// Communication function of ACP-style parallel composition: a partial
// commutative table mapping unordered label pairs to the joint action.
// Associativity is not enforced (the composition definition never uses it);
// the handshake helper generates the CCS-style instance used throughout.
class CommFunction {
  public:
    void set(Label a, Label b, Label result);
    std::optional<Label> sync(Label a, Label b) const;
    bool empty() const { return table_.empty(); }

    // gamma(c?, c!) = tau(c) for every channel name, undefined elsewhere.
    static CommFunction handshake(const std::vector<std::string>& channels);

  private:
    std::map<std::pair<Label, Label>, Label> table_;  // key sorted
};

inline constexpr size_t kProductStateGuard = size_t{1} << 20;

// Parallel composition of two automata: states are pairs (flattened to dense
// ids), transitions are the synchronous joint moves (product distributions,
// for every gamma(b,c) defined) plus both asynchronous interleavings.
// Provenance masks record which side(s) moved. Throws ExplosionGuard when the
// state product exceeds `guard`.
ProbAutomaton compose(const ProbAutomaton& a1, const ProbAutomaton& a2,
                      const CommFunction& gamma, size_t guard = kProductStateGuard);

// Left-nested n-ary composition with flattened tuple names.
ProbAutomaton compose(const std::vector<const ProbAutomaton*>& parts,
                      const CommFunction& gamma, size_t guard = kProductStateGuard);

// Removes every transition whose label is in the set; states untouched.
ProbAutomaton restrict_actions(const ProbAutomaton& a, const std::set<Label>& labels);

// Renames every label in the set to the invisible action tau tagged with the
// label's name; structure and probabilities untouched.
ProbAutomaton hide_actions(const ProbAutomaton& a, const std::set<Label>& labels);

// Drops states unreachable from the initial state, renumbering densely in
// discovery order. old_ids (optional) receives, per new id, the old id.
ProbAutomaton reachable(const ProbAutomaton& a, std::vector<int>* old_ids = nullptr);

// Canonical-interleaving reduction over composition provenance: at each state
// that has invisible (Internal-kind) transitions, keep only those whose
// moved-set contains the lowest-indexed component able to move invisibly —
// that component's own alternatives all survive, while independent
// components' moves are deferred (they commute with the kept step and
// reappear after it). States with only visible transitions are untouched, so
// observable ordering stays with the scheduler. Sound when distinct
// components' moves are independent, which composition guarantees.
ProbAutomaton seq_reduce(const ProbAutomaton& a);

// System expression over named component automata. The canonical closed-
// system pipeline seq(hide(sync(A || B || ..., {channels}), {labels})) is
// elaborated FUSED: a single reachability sweep over tuple states that never
// materializes intermediate products. Other shapes fall back to the binary
// operators (subject to the product guard).
struct SystemExpr {
    enum class Op { Atom, Compose, Sync, Restrict, Hide, Seq };
    Op op = Op::Atom;
    std::string atom;                  // Op::Atom
    std::vector<SystemExpr> children;  // Compose: >= 2, others: exactly 1
    std::vector<std::string> channels; // Op::Sync
    std::vector<Label> labels;         // Op::Restrict / Op::Hide

    static SystemExpr atom_ref(std::string name);
    static SystemExpr compose_of(std::vector<SystemExpr> parts);
    static SystemExpr sync_of(SystemExpr inner, std::vector<std::string> channels);
    static SystemExpr restrict_of(SystemExpr inner, std::vector<Label> labels);
    static SystemExpr hide_of(SystemExpr inner, std::vector<Label> labels);
    static SystemExpr seq_of(SystemExpr inner);
};

// Resolves atoms by name. Throws BadInput for unknown names.
using AutomatonLookup = std::map<std::string, const ProbAutomaton*>;

ProbAutomaton elaborate(const SystemExpr& expr, const AutomatonLookup& autos,
                        size_t guard = kProductStateGuard);

}  // namespace pam
