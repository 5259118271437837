#pragma once

#include "pam/automaton.hpp"
#include "pam/error.hpp"

#include <functional>
#include <set>
#include <vector>

namespace pam {

// Measurable event over complete runs, evaluated on the full action trace.
// TraceIs carries its own observable alphabet so "the observation equals o"
// is expressible without fixing a global alphabet.
struct EventPredicate {
    enum class Form { All, Occurs, TraceIs, And, Or, Not };

    Form form = Form::All;
    Label label = -1;                      // Occurs
    std::vector<Label> expected;           // TraceIs
    std::set<Label> act_o;                 // TraceIs
    std::vector<EventPredicate> children;  // And / Or / Not

    bool eval(const std::vector<Label>& trace) const;

    static EventPredicate all();
    static EventPredicate occurs(Label l);
    static EventPredicate otrace_is(std::vector<Label> expected,
                                    std::set<Label> act_o);
    static EventPredicate conj(std::vector<EventPredicate> children);
    static EventPredicate disj(std::vector<EventPredicate> children);
    static EventPredicate negate(EventPredicate child);
};

// Projection of a trace onto the observable alphabet.
std::vector<Label> otrace(const std::vector<Label>& trace,
                          const std::set<Label>& act_o);

// Every probability the library reports comes with an account of the mass
// the unfolding did not resolve: scheduler-withheld (halt) mass and mass cut
// off by the horizon. value is exact on the complete runs; when
// truncated_mass is nonzero it is a lower bound for the unbounded system.
struct MeasureReport {
    Rational value{0};
    Rational halt_mass{0};
    Rational truncated_mass{0};
    long long complete_path_count = 0;  // all complete runs, not only satisfying
};

// Probability of one finite path: the product of its branch probabilities.
// Throws NotAPath if a step does not exist in f.
Rational path_prob(const FullyProbAutomaton& f, const Path& p);

// Visits every complete run (ending in genuine termination) as its action
// trace with its probability; the returned report carries the halt and
// truncated mass and the run count (value stays 0). Throws CyclicUnsupported
// when f has a cycle: complete runs are then not enumerable.
MeasureReport for_each_complete_trace(
    const FullyProbAutomaton& f,
    const std::function<void(const std::vector<Label>&, const Rational&)>& fn);

// The complete runs as explicit paths from the initial state.
std::vector<std::pair<Path, Rational>> complete_paths(const FullyProbAutomaton& f);

// P[e] over the complete runs of f, with unresolved mass reported alongside.
MeasureReport event_prob(const FullyProbAutomaton& f, const EventPredicate& e);

// P[e | given]. Throws ConditionNullEvent when P[given] = 0.
Rational cond_prob(const FullyProbAutomaton& f, const EventPredicate& e,
                   const EventPredicate& given);

}  // namespace pam
