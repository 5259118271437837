#include "pam/algebra.hpp"
#include "pam/bisim.hpp"
#include "pam/dsl.hpp"
#include "pam/error.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace pam;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

dsl::Bundle load(const std::string& name) {
    return dsl::parse_model(slurp(std::string(PAM_MODELS_DIR) + "/" + name));
}

// reader = c? then done; sender = c! then x.
ProbAutomaton reader() {
    ProbAutomaton a = ProbAutomaton::empty(2, 0, "R");
    a.add(0, labels::get("c", Kind::Input), Distribution::dirac(1));
    return a;
}

ProbAutomaton sender() {
    ProbAutomaton a = ProbAutomaton::empty(3, 0, "S");
    a.add(0, labels::get("c", Kind::Output), Distribution::dirac(1));
    a.add(1, labels::get("x"), Distribution::dirac(2));
    return a;
}

}  // namespace

TEST_SUITE_BEGIN("algebra");

TEST_CASE("handshake composition produces the joint step and interleavings") {
    CommFunction gamma = CommFunction::handshake({"c"});
    CHECK(gamma.sync(labels::get("c", Kind::Input), labels::get("c", Kind::Output)) ==
          labels::tau("c"));
    CHECK(gamma.sync(labels::get("c", Kind::Output), labels::get("c", Kind::Input)) ==
          labels::tau("c"));
    CHECK(!gamma.sync(labels::get("c", Kind::Input), labels::get("d", Kind::Output))
               .has_value());

    ProbAutomaton p = compose(reader(), sender(), gamma);
    // (0,0): reader's c? alone, sender's c! alone, and the tau(c) handshake.
    REQUIRE(p.init == 0);
    REQUIRE(p.trans[0].size() == 3);
    int handshakes = 0, halves = 0;
    for (const auto& tr : p.trans[0]) {
        if (tr.label == labels::tau("c")) {
            ++handshakes;
            CHECK(tr.moved == 0b11u);
        } else {
            ++halves;
            CHECK((tr.moved == 0b01u || tr.moved == 0b10u));
        }
    }
    CHECK(handshakes == 1);
    CHECK(halves == 2);
    CHECK(p.components == 2);
}

TEST_CASE("restrict_actions drops the labels, hide_actions renames to tagged tau") {
    CommFunction gamma = CommFunction::handshake({"c"});
    ProbAutomaton p = compose(reader(), sender(), gamma);
    ProbAutomaton r = restrict_actions(
        p, {labels::get("c", Kind::Input), labels::get("c", Kind::Output)});
    for (const auto& ts : r.trans)
        for (const auto& tr : ts) {
            CHECK(tr.label != labels::get("c", Kind::Input));
            CHECK(tr.label != labels::get("c", Kind::Output));
        }
    ProbAutomaton reach = reachable(r);
    // init -tau(c)-> (1,1) -x-> (1,2); the dropped halves leave nothing else.
    CHECK(reach.num_states == 3);
    CHECK(reach.num_transitions() == 2);

    ProbAutomaton h = hide_actions(reach, {labels::get("x")});
    bool saw = false;
    for (const auto& ts : h.trans)
        for (const auto& tr : ts)
            if (tr.label == labels::tau("x")) saw = true;
    CHECK(saw);
}

TEST_CASE("reachable renumbers densely and keeps provenance") {
    ProbAutomaton a = ProbAutomaton::empty(5, 2, "g");
    a.add(2, labels::get("go"), Distribution::dirac(4));
    std::vector<int> old_ids;
    ProbAutomaton r = reachable(a, &old_ids);
    CHECK(r.num_states == 2);
    CHECK(r.init == 0);
    CHECK(old_ids == std::vector<int>{2, 4});
}

TEST_CASE("seq_reduce keeps one component's invisible alternatives") {
    // Two invisible transitions from different components plus one visible:
    // only the lowest component's invisible step survives; at visible-only
    // states nothing changes.
    ProbAutomaton a = ProbAutomaton::empty(4, 0, "m");
    a.components = 2;
    a.add(0, labels::tau("l"), Distribution::dirac(1), 0b01);
    a.add(0, labels::tau("r"), Distribution::dirac(2), 0b10);
    a.add(0, labels::get("v"), Distribution::dirac(3), 0b10);
    a.add(1, labels::get("v"), Distribution::dirac(3), 0b01);
    a.add(1, labels::get("w"), Distribution::dirac(3), 0b10);
    ProbAutomaton s = seq_reduce(a);
    REQUIRE(s.trans[0].size() == 1);
    CHECK(s.trans[0][0].label == labels::tau("l"));
    CHECK(s.trans[1].size() == 2);  // visible-only state untouched
}

TEST_CASE("seq_reduce keeps all alternatives of the chosen component") {
    ProbAutomaton a = ProbAutomaton::empty(3, 0, "m");
    a.components = 2;
    a.add(0, labels::tau("x"), Distribution::dirac(1), 0b01);
    a.add(0, labels::tau("y"), Distribution::dirac(2), 0b01);
    a.add(0, labels::tau("z"), Distribution::dirac(2), 0b10);
    ProbAutomaton s = seq_reduce(a);
    CHECK(s.trans[0].size() == 2);  // both of component 0's, not component 1's
}

TEST_CASE("system expressions elaborate, with sync sugar equal to restrict") {
    dsl::Bundle b = load("race.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    CHECK(sys.num_states == 12);
    CHECK(sys.num_transitions() == 15);

    // sync(A || B || C, {c}) == restrict(A || B || C, {c?, c!}) up to
    // structure: compose already adds the handshake, sync only drops halves.
    AutomatonLookup lk;
    for (const auto& a : b.automata) lk[a.name] = &a;
    SystemExpr inner = SystemExpr::compose_of(
        {SystemExpr::atom_ref("A"), SystemExpr::atom_ref("B"),
         SystemExpr::atom_ref("C")});
    SystemExpr restr = SystemExpr::restrict_of(
        inner, {labels::get("c", Kind::Input), labels::get("c", Kind::Output)});
    // restrict alone has no handshake: the c-steps vanish entirely.
    ProbAutomaton no_hs = elaborate(restr, lk);
    CHECK(no_hs.num_transitions() < sys.num_transitions());

    SystemExpr synced = SystemExpr::sync_of(inner, {"c"});
    CHECK(dsl::same_structure(elaborate(synced, lk), sys));
}

TEST_CASE("elaboration guard throws ExplosionGuard") {
    dsl::Bundle b = load("dining3.pam");
    CHECK_THROWS_AS(b.elaborate_system("main", 16), Error);
    try {
        b.elaborate_system("main", 16);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ExplosionGuard);
    }
}

TEST_CASE("dining cryptographers elaborations: canonical and unreduced sizes") {
    dsl::Bundle b = load("dining3.pam");
    ProbAutomaton seq = b.elaborate_system("main");
    CHECK(seq.num_states == 265);
    CHECK(seq.num_transitions() == 344);

    // Same pipeline without the canonical-interleaving reduction.
    const SystemExpr& main_expr = b.find_system("main")->op == SystemExpr::Op::Seq
                                      ? b.find_system("main")->children[0]
                                      : *b.find_system("main");
    AutomatonLookup lk;
    for (const auto& a : b.automata) lk[a.name] = &a;
    ProbAutomaton full = elaborate(main_expr, lk);
    CHECK(full.num_states == 2011);
    CHECK(full.num_transitions() == 4467);

    // The reduction is itself idempotent and a sub-automaton of the full
    // elaboration in size.
    CHECK(seq.num_states < full.num_states);
    ProbAutomaton again = reachable(seq_reduce(seq));
    CHECK(again.num_states == seq.num_states);
    CHECK(again.num_transitions() == seq.num_transitions());
}

TEST_CASE("unknown atom name fails elaboration") {
    AutomatonLookup lk;
    CHECK_THROWS_AS(elaborate(SystemExpr::atom_ref("nope"), lk), Error);
}

TEST_SUITE_END();
