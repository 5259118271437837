#pragma once

#include "pam/distribution.hpp"
#include "pam/label.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pam {

// One nondeterministic alternative of a state: an action together with the
// probabilistic effect on successors. `moved` is composition provenance: a
// bitmask of which parallel components participated in the step (0 when the
// automaton was not produced by composition). It never affects semantics;
// the canonical-interleaving reduction (algebra) consumes it.
struct Transition {
    Label label = -1;
    Distribution dist;
    uint32_t moved = 0;
};

// Probabilistic automaton: per-state list of transitions (the nondeterministic
// choices), dense integer state ids, one initial state. A state with no
// transitions terminates. Display names are a side table used by printers;
// composition fills them with tuple names.
struct ProbAutomaton {
    std::string name;
    int num_states = 0;
    int init = 0;
    // Number of parallel components this automaton's provenance masks span
    // (1 for automata not produced by composition).
    int components = 1;
    std::vector<std::vector<Transition>> trans;
    std::vector<std::string> state_names;  // may be empty (ids used instead)

    static ProbAutomaton empty(int n, int init = 0, std::string name = {}) {
        ProbAutomaton a;
        a.name = std::move(name);
        a.num_states = n;
        a.init = init;
        a.trans.resize(static_cast<size_t>(n));
        return a;
    }

    void add(int from, Label label, Distribution dist, uint32_t moved = 0) {
        trans.at(static_cast<size_t>(from))
            .push_back({label, std::move(dist), moved});
    }

    size_t num_transitions() const {
        size_t n = 0;
        for (auto& ts : trans) n += ts.size();
        return n;
    }

    bool terminating(int s) const { return trans[static_cast<size_t>(s)].empty(); }
};

// Well-formedness report (dangling targets, bad initial state; ill-formed
// distributions are impossible by construction of Distribution, but index
// ranges are checked here).
struct ValidationReport {
    std::vector<std::string> problems;
    int terminating_states = 0;
    bool ok() const { return problems.empty(); }
};

ValidationReport pa_validate(const ProbAutomaton& a);

// Fully probabilistic automaton: each state either terminates or takes one
// probabilistic step over (action, successor) pairs. Produced by scheduler
// unfolding; `halt_mass` is scheduler-withheld mass and `truncated` marks
// states cut by the unfolding horizon (termination that is an artifact of
// the bound, reported separately by the measure module).
struct FpaStep {
    struct Branch {
        Label label = -1;
        int target = 0;
        Rational prob;
    };
    std::vector<Branch> branches;  // branch mass + halt_mass = 1, or all zero
    Rational halt_mass = 0;
    bool truncated = false;

    bool terminates() const { return branches.empty(); }
    // Genuine end of a run: not cut by the horizon, no withheld mass. Only
    // these states end complete paths; full halts (halt_mass = 1) and
    // truncation points are accounted separately by the measure module.
    bool complete_end() const {
        return branches.empty() && halt_mass == 0 && !truncated;
    }
    Rational branch_mass() const {
        Rational t = 0;
        for (auto& b : branches) t += b.prob;
        return t;
    }
};

struct FullyProbAutomaton {
    std::string name;
    int num_states = 0;
    int init = 0;
    std::vector<FpaStep> steps;

    static FullyProbAutomaton empty(int n, int init = 0, std::string name = {}) {
        FullyProbAutomaton f;
        f.name = std::move(name);
        f.num_states = n;
        f.init = init;
        f.steps.resize(static_cast<size_t>(n));
        return f;
    }
};

ValidationReport fpa_validate(const FullyProbAutomaton& f);

// A finite path: start state plus steps (action, successor). Paths are always
// interpreted against their owning automaton; path_prob/measure check that
// each step exists with positive probability.
struct Path {
    int start = 0;
    struct Step {
        Label label = -1;
        int target = 0;
    };
    std::vector<Step> steps;

    size_t length() const { return steps.size(); }
    int last() const { return steps.empty() ? start : steps.back().target; }
};

// The sequence of actions along a path, states removed.
std::vector<Label> path_trace(const Path& p);

// True iff `prefix` is a prefix of `whole` (same start, initial steps agree).
bool path_is_prefix(const Path& prefix, const Path& whole);

}  // namespace pam
