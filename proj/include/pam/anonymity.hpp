#pragma once

#include "pam/automaton.hpp"
#include "pam/measure.hpp"
#include "pam/obs.hpp"
#include "pam/sched.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pam {

// Who may be responsible, how responsibility shows up in a run, and what an
// observer can see. marker(i) is the action betraying user i; the markers
// must be mutually exclusive per run (violations raise BadInput during
// evaluation). A_i is the event "marker(i) occurs", A their union.
struct AnonymitySpec {
    std::vector<int> users;
    std::map<int, Label> markers;
    std::set<Label> act_o;
};

enum class VerdictStatus {
    AnonymousProved,          // every admissible scheduler, unbounded
    AnonymousOnCheckedClass,  // exhaustive over the stated finite class
    Violation,                // reproducible witness in hand
    Inconclusive,             // nothing established either way
};

const char* verdict_name(VerdictStatus s);

struct Witness {
    std::string scheduler_name;
    int user = -1;
    int other_user = -1;             // set for pairwise (bp-style) witnesses
    std::vector<Label> observation;  // the observable trace o
    Rational lhs{0}, rhs{0};
    std::string detail;                 // rendered inequality
    std::optional<Scheduler> scheduler;  // reproducible artifact if available
};

struct Verdict {
    VerdictStatus status = VerdictStatus::Inconclusive;
    std::string coverage;  // what exactly was checked
    std::optional<Witness> witness;
};

// Conditional-independence reading on one unfolding: for every user i and
// every realized observation o,
//     P[o and A_i | A]  =  P[o | A] * P[A_i | A],
// compared with denominators cleared so P[A] = 0 passes vacuously (the
// coverage string says so).
Verdict check_fpa(const FullyProbAutomaton& f, const AnonymitySpec& spec);

// Pairwise reading: P[o | A_i] = P[o | A_j] for all users with positive
// marker probability.
Verdict check_fpa_bp(const FullyProbAutomaton& f, const AnonymitySpec& spec);

// Total map on states: m[s] is the image of s.
using StateMap = std::vector<int>;

struct PairMap {
    int user_i = -1;
    int user_j = -1;
    StateMap map;
};

struct CheckStrategy {
    enum class Kind { Enumerate, Sample, Automorphism };

    Kind kind = Kind::Enumerate;
    ObservationMap::Mode mode = ObservationMap::Mode::Collapse;
    int horizon = kUnbounded;
    int samples = 100;               // Sample
    unsigned long long seed = 0;     // Sample
    bool bp_variant = false;         // use the pairwise reading per unfolding
    std::vector<PairMap> maps;       // Automorphism
};

// Quantifies over admissible schedulers by the chosen strategy:
//   Enumerate      every deterministic tabular admissible scheduler up to
//                  the horizon; exhaustive -> ANONYMOUS-ON-CHECKED-CLASS
//   Sample         `samples` randomly drawn schedulers; no violation ->
//                  INCONCLUSIVE (sampling proves nothing)
//   Automorphism   delegates to prove_by_automorphism -> ANONYMOUS-PROVED
// Violations carry the scheduler and the exact inequality.
Verdict check_pa(const ProbAutomaton& a, const AnonymitySpec& spec,
                 const CheckStrategy& strategy, const SchedLimits& limits = {});

// Searches the raw-history deterministic schedulers (keys may read invisible
// action identities, so they are not admissible in general) for one whose
// unfolding violates the conditional-independence reading — the scheduler
// interference witness. Candidates that differ from already-fixed decisions
// at observably equal histories are tried first, which steers straight
// toward interference. Returns the scheduler and the exact inequality.
std::optional<std::pair<Scheduler, Witness>> find_interfering(
    const ProbAutomaton& a, const AnonymitySpec& spec, int horizon,
    const SchedLimits& limits = {});

// Is m an automorphism of a that the observer cannot see: a bijection fixing
// the initial state such that s's transitions and m(s)'s transitions match
// one-to-one with identical observed labels and m-pushforward distributions.
// Returns the first discrepancy, or nullopt if m qualifies.
std::optional<std::string> automorphism_error(const ProbAutomaton& a,
                                              const StateMap& m,
                                              const ObservationMap& omega);

bool check_automorphism(const ProbAutomaton& a, const StateMap& m,
                        const std::set<Label>& act_o);

// The marker-exchange side condition for the pair (marker_i, marker_j):
// within each matching group of transitions, marker_i-labeled ones at s must
// correspond to marker_j-labeled ones at m(s) and vice versa.
std::optional<std::string> marker_swap_error(const ProbAutomaton& a,
                                             const StateMap& m,
                                             const ObservationMap& omega,
                                             Label marker_i, Label marker_j);

// Proof rule: one observation-preserving automorphism exchanging the markers
// per user pair makes every admissible scheduler treat the two users
// identically — ANONYMOUS-PROVED without enumerating schedulers, at any
// horizon. Missing or non-qualifying maps yield INCONCLUSIVE (a bad map
// proves nothing).
Verdict prove_by_automorphism(const ProbAutomaton& a, const AnonymitySpec& spec,
                              const std::vector<PairMap>& maps);

struct AutomorphismSearch {
    std::optional<StateMap> map;
    bool exhausted = false;       // whole space searched, no map exists
    unsigned long long nodes = 0;
};

// Backtracking search for an involutive automorphism exchanging marker_i and
// marker_j (all other markers fixed). Prunes by observation-bisimilarity
// classes and marker-distance profiles; every returned map has passed
// automorphism_error and marker_swap_error.
AutomorphismSearch find_automorphism(const ProbAutomaton& a,
                                     const std::set<Label>& act_o, Label marker_i,
                                     Label marker_j,
                                     const std::set<Label>& all_markers,
                                     unsigned long long node_limit = 50000000ULL);

// Diagnostic separating the per-scheduler pairwise reading from its
// cross-scheduler strengthening: enumerate admissible schedulers, check the
// pairwise reading inside each unfolding, then compare user-conditional
// observation distributions across different unfoldings.
struct CrossSchedulerReport {
    bool per_scheduler_ok = true;
    std::optional<Witness> per_scheduler_witness;
    std::optional<Witness> cross_witness;
    unsigned long long schedulers = 0;
};

CrossSchedulerReport cross_scheduler_bp(const ProbAutomaton& a,
                                        const AnonymitySpec& spec,
                                        ObservationMap::Mode mode, int horizon,
                                        const SchedLimits& limits = {});

}  // namespace pam
