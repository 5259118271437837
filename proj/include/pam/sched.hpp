#pragma once

#include "pam/automaton.hpp"
#include "pam/bisim.hpp"
#include "pam/error.hpp"
#include "pam/obs.hpp"

#include <compare>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pam {

// Unfolding depth bound: kUnbounded is only valid on acyclic automata
// (otherwise CyclicNeedsHorizon is raised).
inline constexpr int kUnbounded = -1;

bool is_cyclic(const ProbAutomaton& a);

// Resource bounds for scheduler-space operations. Exceeding one raises
// ExplosionGuard rather than silently degrading the verdict.
struct SchedLimits {
    size_t max_keys = 200000;                         // distinct scheduler keys
    unsigned long long max_schedulers = 20000000ULL;  // enumeration size
    size_t max_unfold_nodes = size_t{1} << 22;        // unfolding tree nodes
    unsigned long long max_interference_checks = 100000ULL;  // candidate schedulers
};

// What a tabular scheduler conditions on: the observation-map image of the
// action history plus the bisimilarity class (under the same observation
// map, canonically numbered) of the current state. Keying on the class
// rather than the state is what makes the table admissible by construction:
// indistinguishable situations share a row.
struct SchedulerKey {
    std::vector<Label> observed;
    int state_class = 0;

    auto operator<=>(const SchedulerKey&) const = default;
};

// One scheduling decision: a sub-distribution over canonical choice indices
// of the key's class (see ClassChoices), with explicit withheld mass.
struct SchedulerRow {
    std::vector<std::pair<int, Rational>> choices;  // sorted by index, mass > 0
    Rational halt_mass = 0;

    static SchedulerRow det(int choice) { return {{{choice, Rational(1)}}, 0}; }
    static SchedulerRow halt() { return {{}, Rational(1)}; }
    static SchedulerRow make(std::vector<std::pair<int, Rational>> choices,
                             Rational halt_mass);

    bool is_det() const { return choices.size() == 1 && choices[0].second == 1; }
    bool is_halt() const { return choices.empty(); }

    friend bool operator==(const SchedulerRow&, const SchedulerRow&) = default;
};

// Finite-description scheduler. A missing key means the scheduler halts
// (withholds all mass) in that situation.
//   TabularDet          every row a point choice
//   TabularRandomized   rows may randomize or halt partially
//   HistoryIndependent  keys carry no history (observed part empty); the row
//                       depends on the state class only
struct Scheduler {
    enum class Kind { TabularDet, TabularRandomized, HistoryIndependent };

    Kind kind = Kind::TabularDet;
    std::string name;
    ObservationMap omega;  // observation map the keys are expressed in
    std::map<SchedulerKey, SchedulerRow> table;

    // Row for a full key; applies the kind's key trimming. nullptr = halt.
    const SchedulerRow* lookup(const SchedulerKey& key) const;
};

// Canonical choice indexing. Choices of a class are the transitions of its
// representative (smallest state id), in the representative's list order;
// pick[s][c] maps choice c to a transition index of member state s by
// matching the representative's c-th transition signature (observed label +
// class masses). Bisimilarity guarantees a match exists; surplus equivalent
// duplicates fall back to the last match, so every member resolves every
// choice.
struct ClassChoices {
    ObservationMap omega;
    Partition part;                      // bisimilarity under omega
    std::vector<int> rep;                // class -> representative state
    std::vector<int> degree;             // class -> number of choices
    std::vector<std::vector<int>> pick;  // state -> choice -> transition index

    int class_of(int s) const { return part.block_of[s]; }
};

ClassChoices make_class_choices(const ProbAutomaton& a, const ObservationMap& omega);

// Resolves every nondeterministic choice of `a` by `xi`, producing the tree
// of scheduled runs: fully probabilistic, states are reachable (history, key)
// situations, labels stay raw (observation maps apply at measuring time).
// Horizon bounds the depth; beyond it steps are marked truncated. Missing
// rows become full halts.
FullyProbAutomaton unfold(const ProbAutomaton& a, const Scheduler& xi, int horizon,
                          const SchedLimits& limits = {});

// As above with the choice indexing precomputed (it embeds a bisimulation
// partition, the dominant cost when unfolding many schedulers of one
// automaton). cc must have been built for a with xi's observation map.
FullyProbAutomaton unfold(const ProbAutomaton& a, const Scheduler& xi, int horizon,
                          const ClassChoices& cc, const SchedLimits& limits = {});

// Decision procedure for admissibility under `omega`: on every pair of
// reachable situations with identical observed histories and bisimilar
// current states, the scheduled action distributions must be equivalent
// (same observed labels with the same class masses). Malformed tables
// (choice out of range, bad masses) are rejected.
bool is_admissible(const ProbAutomaton& a, const Scheduler& xi,
                   const ObservationMap& omega);

// A scheduler that is admissible under both observation modes: history-
// independent, first canonical choice of each class of the collapse
// bisimilarity.
Scheduler synthesize_admissible(const ProbAutomaton& a, const std::set<Label>& act_o);

// Enumerates every non-halting deterministic tabular scheduler over keys
// with observed-history length < horizon, in a canonical order (keys are
// discovered breadth-first, choices tried ascending). Calls fn for each;
// fn returning false stops early. Returns the number emitted.
unsigned long long enumerate_admissible(
    const ProbAutomaton& a, const ObservationMap& omega, int horizon,
    const SchedLimits& limits, const std::function<bool(const Scheduler&)>& fn);

// Draws one non-halting deterministic tabular scheduler uniformly per key
// (choice drawn on first discovery, keys discovered breadth-first).
// Deterministic in `seed`.
Scheduler sample_admissible(const ProbAutomaton& a, const ObservationMap& omega,
                            int horizon, unsigned long long seed,
                            const SchedLimits& limits = {});

}  // namespace pam
