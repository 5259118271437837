#pragma once

#include "pam/algebra.hpp"
#include "pam/anonymity.hpp"
#include "pam/automaton.hpp"
#include "pam/sched.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pam::dsl {

// Scheduler block as written in a model file. Rows are kept verbatim; the
// class ids in the keys refer to the canonical bisimilarity classes of the
// elaborated system under the declared observation mode, which is also how
// unfold numbers them — so a table written against a file is meaningful
// exactly for that file's system.
struct SchedulerSrc {
    std::string name;
    ObservationMap::Mode mode = ObservationMap::Mode::Collapse;
    Scheduler::Kind kind = Scheduler::Kind::TabularDet;
    std::vector<std::pair<SchedulerKey, SchedulerRow>> rows;  // file order

    friend bool operator==(const SchedulerSrc&, const SchedulerSrc&) = default;
};

// State bijection for one user pair, as written. Entries may be sparse;
// build_statemap completes them with identity.
struct StateMapSrc {
    std::string name;
    int user_i = 0;
    int user_j = 0;
    std::vector<std::pair<int, int>> entries;  // file order

    friend bool operator==(const StateMapSrc&, const StateMapSrc&) = default;
};

struct Bundle {
    std::vector<ProbAutomaton> automata;
    std::vector<std::pair<std::string, SystemExpr>> systems;
    std::optional<AnonymitySpec> spec;
    std::vector<SchedulerSrc> schedulers;
    std::vector<StateMapSrc> statemaps;

    const ProbAutomaton* find_automaton(const std::string& name) const;
    const SystemExpr* find_system(const std::string& name) const;
    const SchedulerSrc* find_scheduler(const std::string& name) const;
    const StateMapSrc* find_statemap(const std::string& name) const;

    // Elaborates the named system; "" picks the only declared system, or the
    // only automaton if no system was declared. Throws UnknownName when the
    // choice is missing or ambiguous.
    ProbAutomaton elaborate_system(const std::string& name = {},
                                   size_t guard = kProductStateGuard) const;

    // Resolves a written scheduler block against this bundle's spec (whose
    // observe set defines the collapse observation map).
    Scheduler build_scheduler(const SchedulerSrc& src) const;

    // Completes a written state map into a total PairMap on num_states
    // states (unmapped states stay fixed).
    PairMap build_statemap(const StateMapSrc& src, int num_states) const;
};

// Parses model text in the .pam format (grammar in the README). All errors
// carry "line L, col C" and what was expected; arbitrary byte input yields
// an Error, never a crash.
Bundle parse_model(const std::string& text);

// Exact textual form: parse_model(print_model(b)) is structurally identical
// to b, and every probability stays an exact fraction.
std::string print_model(const Bundle& b);

// A scheduler rendered as a scheduler block in the model format (rows in
// key order). The inverse direction is parse_model on a file containing the
// block plus its system.
std::string print_scheduler(const Scheduler& xi);

// Deterministic DOT rendering: dirac effects as one labelled edge, proper
// distributions through an intermediate point node with fraction-labelled
// edges; on unfoldings, truncation shows as a dashed node and withheld mass
// as a "halt p/q" annotation.
std::string render_dot(const ProbAutomaton& a);
std::string render_dot(const FullyProbAutomaton& f);

// Structural identity (used by round-trip and generator-vs-file checks):
// same shape, labels, distributions, and provenance masks; display names
// are ignored.
bool same_structure(const ProbAutomaton& a, const ProbAutomaton& b);
bool same_bundle(const Bundle& a, const Bundle& b);

}  // namespace pam::dsl
