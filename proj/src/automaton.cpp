#include "pam/automaton.hpp"

#include <sstream>

namespace pam {

namespace {

std::string at_state(int s) {
    std::ostringstream os;
    os << "state " << s;
    return os.str();
}

}  // namespace

ValidationReport pa_validate(const ProbAutomaton& a) {
    ValidationReport r;
    if (a.num_states <= 0) {
        r.problems.push_back("automaton has no states");
        return r;
    }
    if (a.init < 0 || a.init >= a.num_states)
        r.problems.push_back("initial state out of range");
    if (a.trans.size() != static_cast<size_t>(a.num_states))
        r.problems.push_back("transition table size differs from state count");
    for (int s = 0; s < static_cast<int>(a.trans.size()); ++s) {
        if (a.trans[s].empty()) ++r.terminating_states;
        for (auto& t : a.trans[s]) {
            if (t.label < 0) r.problems.push_back(at_state(s) + ": transition without label");
            Rational total = 0;
            for (auto& [target, p] : t.dist.entries()) {
                total += p;
                if (target < 0 || target >= a.num_states)
                    r.problems.push_back(at_state(s) + ": dangling target " +
                                         std::to_string(target));
            }
            if (total != 1)
                r.problems.push_back(at_state(s) + ": transition mass " + to_string(total));
        }
    }
    if (!a.state_names.empty() && a.state_names.size() != static_cast<size_t>(a.num_states))
        r.problems.push_back("state-name table size differs from state count");
    return r;
}

ValidationReport fpa_validate(const FullyProbAutomaton& f) {
    ValidationReport r;
    if (f.num_states <= 0) {
        r.problems.push_back("automaton has no states");
        return r;
    }
    if (f.init < 0 || f.init >= f.num_states)
        r.problems.push_back("initial state out of range");
    if (f.steps.size() != static_cast<size_t>(f.num_states))
        r.problems.push_back("step table size differs from state count");
    for (int s = 0; s < static_cast<int>(f.steps.size()); ++s) {
        const FpaStep& st = f.steps[s];
        if (st.terminates()) {
            ++r.terminating_states;
            // Empty steps are genuine ends (halt 0), full scheduler halts
            // (halt 1) or truncation points (halt 0, truncated).
            if (st.halt_mass != 0 && st.halt_mass != 1)
                r.problems.push_back(at_state(s) + ": empty step with partial halt mass " +
                                     to_string(st.halt_mass));
            if (st.truncated && st.halt_mass != 0)
                r.problems.push_back(at_state(s) + ": truncated step with halt mass");
            continue;
        }
        Rational total = st.halt_mass;
        for (auto& b : st.branches) {
            if (b.prob <= 0) r.problems.push_back(at_state(s) + ": non-positive branch mass");
            if (b.label < 0) r.problems.push_back(at_state(s) + ": branch without label");
            if (b.target < 0 || b.target >= f.num_states)
                r.problems.push_back(at_state(s) + ": dangling target " +
                                     std::to_string(b.target));
            total += b.prob;
        }
        if (total != 1)
            r.problems.push_back(at_state(s) + ": step mass " + to_string(total));
    }
    return r;
}

std::vector<Label> path_trace(const Path& p) {
    std::vector<Label> out;
    out.reserve(p.steps.size());
    for (auto& s : p.steps) out.push_back(s.label);
    return out;
}

bool path_is_prefix(const Path& prefix, const Path& whole) {
    if (prefix.start != whole.start) return false;
    if (prefix.steps.size() > whole.steps.size()) return false;
    for (size_t i = 0; i < prefix.steps.size(); ++i) {
        if (prefix.steps[i].label != whole.steps[i].label ||
            prefix.steps[i].target != whole.steps[i].target)
            return false;
    }
    return true;
}

}  // namespace pam
