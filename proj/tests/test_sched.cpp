#include "pam/dsl.hpp"
#include "pam/measure.hpp"
#include "pam/sched.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace pam;

namespace {

dsl::Bundle load(const std::string& name) {
    std::ifstream in(std::string(PAM_MODELS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return dsl::parse_model(ss.str());
}

}  // namespace

TEST_SUITE_BEGIN("sched");

TEST_CASE("scheduler rows validate") {
    CHECK(SchedulerRow::det(3).is_det());
    CHECK(SchedulerRow::halt().is_halt());
    auto mixed = SchedulerRow::make({{0, rat(1, 3)}, {2, rat(1, 3)}}, rat(1, 3));
    CHECK(mixed.choices.size() == 2);
    CHECK(mixed.halt_mass == rat(1, 3));
    CHECK_THROWS_AS(SchedulerRow::make({{0, rat(1, 2)}}, rat(1, 3)), Error);
    CHECK_THROWS_AS(SchedulerRow::make({{0, rat(-1, 2)}}, rat(3, 2)), Error);
}

TEST_CASE("class choices: canonical indices and occurrence pairing") {
    // Two bisimilar states, each with two equivalent alternatives; the
    // representative's order defines the choice indices and surplus
    // duplicates pair off by occurrence.
    ProbAutomaton a = ProbAutomaton::empty(4, 0, "dup");
    Label go = labels::get("go");
    a.add(0, go, Distribution::dirac(2));
    a.add(0, go, Distribution::dirac(2));
    a.add(1, go, Distribution::dirac(3));
    a.add(1, go, Distribution::dirac(3));
    ObservationMap om = ObservationMap::strict();
    ClassChoices cc = make_class_choices(a, om);
    CHECK(cc.part.same_block(0, 1));
    const int cls = cc.class_of(0);
    CHECK(cc.rep[cls] == 0);
    CHECK(cc.degree[cls] == 2);  // duplicates are kept, not merged
    CHECK(cc.pick[1] == std::vector<int>{0, 1});
}

TEST_CASE("unfolding the two-user system under the leaking table") {
    dsl::Bundle b = load("m_sec5.pam");
    ProbAutomaton m = b.elaborate_system("main");
    ObservationMap strict = ObservationMap::strict();
    ClassChoices cc = make_class_choices(m, strict);

    Label t = labels::tau(), a1 = labels::get("a_1"), a2 = labels::get("a_2");
    Scheduler leak;
    leak.kind = Scheduler::Kind::TabularDet;
    leak.name = "leak";
    leak.omega = strict;
    leak.table[{{}, cc.class_of(0)}] = SchedulerRow::det(0);
    leak.table[{{t}, cc.class_of(1)}] = SchedulerRow::det(0);
    leak.table[{{t}, cc.class_of(2)}] = SchedulerRow::det(0);
    leak.table[{{t, a1}, cc.class_of(3)}] = SchedulerRow::det(0);  // then x_1
    leak.table[{{t, a2}, cc.class_of(3)}] = SchedulerRow::det(1);  // then x_2

    FullyProbAutomaton f = unfold(m, leak, 4);
    auto rep = event_prob(f, EventPredicate::all());
    CHECK(rep.complete_path_count == 2);
    CHECK(rep.value == 1);
    CHECK(rep.halt_mass == 0);
    CHECK(rep.truncated_mass == 0);

    // The table reads invisible identities: strict-admissible only.
    CHECK(is_admissible(m, leak, strict));
    CHECK(!is_admissible(m, leak, ObservationMap::collapse(b.spec->act_o)));
}

TEST_CASE("missing rows halt; horizon cuts are marked truncated") {
    dsl::Bundle b = load("m_sec5.pam");
    ProbAutomaton m = b.elaborate_system("main");
    ObservationMap om = ObservationMap::collapse(b.spec->act_o);
    ClassChoices cc = make_class_choices(m, om);

    Scheduler s;
    s.kind = Scheduler::Kind::TabularDet;
    s.omega = om;
    s.table[{{}, cc.class_of(0)}] = SchedulerRow::det(0);
    // No row after the first step: everything halts there.
    FullyProbAutomaton f = unfold(m, s, kUnbounded);
    auto rep = event_prob(f, EventPredicate::all());
    CHECK(rep.complete_path_count == 0);
    CHECK(rep.halt_mass == 1);

    Scheduler full = synthesize_admissible(m, b.spec->act_o);
    FullyProbAutomaton cut = unfold(m, full, 1);
    auto rep2 = event_prob(cut, EventPredicate::all());
    CHECK(rep2.truncated_mass == 1);
    CHECK(rep2.complete_path_count == 0);
}

TEST_CASE("synthesized scheduler is admissible under both readings") {
    for (const char* file : {"m_sec5.pam", "race.pam", "mirror_pair.pam"}) {
        dsl::Bundle b = load(file);
        ProbAutomaton sys = b.elaborate_system("main");
        Scheduler xi = synthesize_admissible(sys, b.spec->act_o);
        CHECK(xi.kind == Scheduler::Kind::HistoryIndependent);
        CHECK(is_admissible(sys, xi, ObservationMap::collapse(b.spec->act_o)));
        CHECK(is_admissible(sys, xi, ObservationMap::strict()));
    }
}

TEST_CASE("enumeration counts: 2 collapsed, 4 strict on the two-user system") {
    dsl::Bundle b = load("m_sec5.pam");
    ProbAutomaton m = b.elaborate_system("main");
    auto count = [&](const ObservationMap& om) {
        return enumerate_admissible(m, om, 3, {},
                                    [](const Scheduler&) { return true; });
    };
    CHECK(count(ObservationMap::collapse(b.spec->act_o)) == 2);
    CHECK(count(ObservationMap::strict()) == 4);

    // Early stop is honored.
    unsigned long long seen = 0;
    enumerate_admissible(m, ObservationMap::strict(), 3, {},
                         [&](const Scheduler&) { return ++seen < 2; });
    CHECK(seen == 2);
}

TEST_CASE("every enumerated scheduler is admissible by construction") {
    dsl::Bundle b = load("race.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    ObservationMap om = ObservationMap::collapse(b.spec->act_o);
    unsigned long long n = enumerate_admissible(
        sys, om, 8, {}, [&](const Scheduler& xi) {
            CHECK(is_admissible(sys, xi, om));
            return true;
        });
    CHECK(n > 0);
}

TEST_CASE("dining cryptographers enumeration count") {
    dsl::Bundle b = load("dining3.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    ObservationMap om = ObservationMap::collapse(b.spec->act_o);
    CHECK(enumerate_admissible(sys, om, 15, {},
                               [](const Scheduler&) { return true; }) == 5184);

    // The bound is enforced, not advisory.
    SchedLimits tight;
    tight.max_schedulers = 100;
    CHECK_THROWS_AS(enumerate_admissible(sys, om, 15, tight,
                                         [](const Scheduler&) { return true; }),
                    Error);
}

TEST_CASE("sampling is deterministic in the seed") {
    dsl::Bundle b = load("dining3.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    ObservationMap om = ObservationMap::collapse(b.spec->act_o);
    Scheduler s1 = sample_admissible(sys, om, 15, 99);
    Scheduler s2 = sample_admissible(sys, om, 15, 99);
    CHECK(s1.table == s2.table);
    CHECK(is_admissible(sys, s1, om));

    bool differs = false;
    for (unsigned long long seed = 0; seed < 8 && !differs; ++seed)
        differs = !(sample_admissible(sys, om, 15, seed).table == s1.table);
    CHECK(differs);
}

TEST_CASE("the shipped order123 table is admissible and randomized") {
    dsl::Bundle b = load("dining3.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    const dsl::SchedulerSrc* src = b.find_scheduler("order123");
    REQUIRE(src != nullptr);
    Scheduler xi = b.build_scheduler(*src);
    CHECK(xi.kind == Scheduler::Kind::TabularRandomized);
    CHECK(is_admissible(sys, xi, ObservationMap::collapse(b.spec->act_o)));

    // Root row randomizes uniformly over the four master branches.
    ClassChoices cc = make_class_choices(sys, xi.omega);
    const SchedulerRow* root = xi.lookup({{}, cc.class_of(sys.init)});
    REQUIRE(root != nullptr);
    CHECK(root->choices.size() == 4);
    for (const auto& [c, q] : root->choices) CHECK(q == rat(1, 4));
}

TEST_CASE("unfold node guard") {
    dsl::Bundle b = load("dining3.pam");
    ProbAutomaton sys = b.elaborate_system("main");
    Scheduler xi = synthesize_admissible(sys, b.spec->act_o);
    SchedLimits tiny;
    tiny.max_unfold_nodes = 8;
    CHECK_THROWS_AS(unfold(sys, xi, 15, tiny), Error);
}

TEST_CASE("cyclic automata need a horizon") {
    ProbAutomaton loop = ProbAutomaton::empty(1, 0, "loop");
    loop.add(0, labels::get("spin"), Distribution::dirac(0));
    CHECK(is_cyclic(loop));
    Scheduler xi = synthesize_admissible(loop, {});
    CHECK_THROWS_AS(unfold(loop, xi, kUnbounded), Error);
    FullyProbAutomaton f = unfold(loop, xi, 3);
    auto rep = event_prob(f, EventPredicate::all());
    CHECK(rep.truncated_mass == 1);

    ProbAutomaton line = ProbAutomaton::empty(2, 0, "line");
    line.add(0, labels::get("go"), Distribution::dirac(1));
    CHECK(!is_cyclic(line));
}

TEST_SUITE_END();
