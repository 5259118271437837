#include "pam/measure.hpp"

#include <algorithm>

namespace pam {

bool EventPredicate::eval(const std::vector<Label>& trace) const {
    switch (form) {
        case Form::All:
            return true;
        case Form::Occurs:
            return std::find(trace.begin(), trace.end(), label) != trace.end();
        case Form::TraceIs:
            return otrace(trace, act_o) == expected;
        case Form::And:
            for (const auto& c : children)
                if (!c.eval(trace)) return false;
            return true;
        case Form::Or:
            for (const auto& c : children)
                if (c.eval(trace)) return true;
            return false;
        case Form::Not:
            return !children.front().eval(trace);
    }
    return false;
}

EventPredicate EventPredicate::all() { return {}; }

EventPredicate EventPredicate::occurs(Label l) {
    EventPredicate e;
    e.form = Form::Occurs;
    e.label = l;
    return e;
}

EventPredicate EventPredicate::otrace_is(std::vector<Label> expected,
                                         std::set<Label> act_o) {
    EventPredicate e;
    e.form = Form::TraceIs;
    e.expected = std::move(expected);
    e.act_o = std::move(act_o);
    return e;
}

EventPredicate EventPredicate::conj(std::vector<EventPredicate> children) {
    EventPredicate e;
    e.form = Form::And;
    e.children = std::move(children);
    return e;
}

EventPredicate EventPredicate::disj(std::vector<EventPredicate> children) {
    EventPredicate e;
    e.form = Form::Or;
    e.children = std::move(children);
    return e;
}

EventPredicate EventPredicate::negate(EventPredicate child) {
    EventPredicate e;
    e.form = Form::Not;
    e.children.push_back(std::move(child));
    return e;
}

std::vector<Label> otrace(const std::vector<Label>& trace,
                          const std::set<Label>& act_o) {
    std::vector<Label> out;
    for (Label l : trace)
        if (act_o.count(l)) out.push_back(l);
    return out;
}

Rational path_prob(const FullyProbAutomaton& f, const Path& p) {
    if (p.start < 0 || p.start >= f.num_states)
        throw Error(ErrorCode::NotAPath, "path start out of range");
    Rational prob = 1;
    int at = p.start;
    for (const auto& step : p.steps) {
        const FpaStep& st = f.steps[at];
        Rational mass = 0;
        for (const auto& b : st.branches)
            if (b.label == step.label && b.target == step.target) mass += b.prob;
        if (mass == 0)
            throw Error(ErrorCode::NotAPath,
                        "step " + labels::show(step.label) + " -> " +
                            std::to_string(step.target) + " does not exist at state " +
                            std::to_string(at));
        prob *= mass;
        at = step.target;
    }
    return prob;
}

namespace {

bool fpa_is_cyclic(const FullyProbAutomaton& f) {
    enum : uint8_t { White, Grey, Black };
    std::vector<uint8_t> color(static_cast<size_t>(f.num_states), White);
    struct Frame {
        int state;
        size_t br = 0;
    };
    for (int root = 0; root < f.num_states; ++root) {
        if (color[root] != White) continue;
        std::vector<Frame> stack{{root}};
        color[root] = Grey;
        while (!stack.empty()) {
            Frame& fr = stack.back();
            if (fr.br >= f.steps[fr.state].branches.size()) {
                color[fr.state] = Black;
                stack.pop_back();
                continue;
            }
            const int next = f.steps[fr.state].branches[fr.br++].target;
            if (color[next] == Grey) return true;
            if (color[next] == White) {
                color[next] = Grey;
                stack.push_back({next});
            }
        }
    }
    return false;
}

// Shared depth-first sweep: calls leaf() at every genuine end with the step
// sequence from the initial state and its probability, while tallying halt
// and truncated mass into the report.
MeasureReport sweep(const FullyProbAutomaton& f,
                    const std::function<void(const std::vector<Path::Step>&,
                                             const Rational&)>& leaf) {
    if (fpa_is_cyclic(f))
        throw Error(ErrorCode::CyclicUnsupported,
                    "complete runs of a cyclic automaton are not enumerable");
    MeasureReport rep;
    struct Frame {
        int state;
        size_t br = 0;
        Rational prob;  // probability of reaching this state along the stack
    };
    std::vector<Frame> stack{{f.init, 0, Rational(1)}};
    std::vector<Path::Step> steps;
    while (!stack.empty()) {
        Frame& fr = stack.back();
        const FpaStep& st = f.steps[fr.state];
        if (fr.br == 0) {  // first visit of this frame
            if (st.halt_mass != 0) rep.halt_mass += fr.prob * st.halt_mass;
            if (st.truncated) rep.truncated_mass += fr.prob;
            if (st.complete_end()) {
                ++rep.complete_path_count;
                leaf(steps, fr.prob);
            }
        }
        if (fr.br >= st.branches.size()) {
            stack.pop_back();
            if (!steps.empty()) steps.pop_back();
            continue;
        }
        const auto& b = st.branches[fr.br++];
        steps.push_back({b.label, b.target});
        stack.push_back({b.target, 0, fr.prob * b.prob});
    }
    return rep;
}

}  // namespace

MeasureReport for_each_complete_trace(
    const FullyProbAutomaton& f,
    const std::function<void(const std::vector<Label>&, const Rational&)>& fn) {
    std::vector<Label> trace;
    return sweep(f, [&](const std::vector<Path::Step>& steps, const Rational& p) {
        trace.clear();
        trace.reserve(steps.size());
        for (const auto& s : steps) trace.push_back(s.label);
        fn(trace, p);
    });
}

std::vector<std::pair<Path, Rational>> complete_paths(const FullyProbAutomaton& f) {
    std::vector<std::pair<Path, Rational>> out;
    sweep(f, [&](const std::vector<Path::Step>& steps, const Rational& p) {
        out.push_back({Path{f.init, steps}, p});
    });
    return out;
}

MeasureReport event_prob(const FullyProbAutomaton& f, const EventPredicate& e) {
    MeasureReport rep;
    MeasureReport base =
        for_each_complete_trace(f, [&](const std::vector<Label>& trace,
                                       const Rational& p) {
            if (e.eval(trace)) rep.value += p;
        });
    rep.halt_mass = std::move(base.halt_mass);
    rep.truncated_mass = std::move(base.truncated_mass);
    rep.complete_path_count = base.complete_path_count;
    return rep;
}

Rational cond_prob(const FullyProbAutomaton& f, const EventPredicate& e,
                   const EventPredicate& given) {
    MeasureReport g = event_prob(f, given);
    if (g.value == 0)
        throw Error(ErrorCode::ConditionNullEvent,
                    "conditioning event has probability 0");
    MeasureReport both = event_prob(f, EventPredicate::conj({e, given}));
    return both.value / g.value;
}

}  // namespace pam
