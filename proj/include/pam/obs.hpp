#pragma once

#include "pam/label.hpp"

#include <set>

namespace pam {

// What an adversary can read off a history. Collapse mode (the default)
// maps every label outside Act_O to the one anonymous invisible action, so
// invisible steps are visible only as "something internal happened"; strict
// mode keeps raw labels, which lets schedulers key on invisible identities
// and is retained to reproduce the classic leak that motivates collapse.
struct ObservationMap {
    enum class Mode { Collapse, Strict };
    Mode mode = Mode::Collapse;
    std::set<Label> act_o;

    Label apply(Label l) const {
        if (mode == Mode::Strict) return l;
        return act_o.count(l) ? l : labels::tau();
    }

    static ObservationMap collapse(std::set<Label> act_o) {
        return {Mode::Collapse, std::move(act_o)};
    }
    static ObservationMap strict() { return {Mode::Strict, {}}; }

    friend bool operator==(const ObservationMap& a, const ObservationMap& b) {
        if (a.mode != b.mode) return false;
        if (a.mode == Mode::Strict) return true;
        return a.act_o == b.act_o;
    }
};

}  // namespace pam
