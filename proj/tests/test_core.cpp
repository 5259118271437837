#include "pam/automaton.hpp"
#include "pam/distribution.hpp"
#include "pam/error.hpp"
#include "pam/label.hpp"
#include "pam/rational.hpp"

#include <doctest.h>

using namespace pam;

TEST_SUITE_BEGIN("core");

TEST_CASE("rational parsing and exactness") {
    CHECK(*parse_rational("1/3") + *parse_rational("1/6") == rat(1, 2));
    CHECK(*parse_rational("2/4") == rat(1, 2));  // normalized
    CHECK(*parse_rational("-3") == rat(-3));
    CHECK(to_string(rat(2, 4)) == "1/2");
    CHECK(to_string(rat(5)) == "5");
    CHECK(!parse_rational("1/0").has_value());
    CHECK(!parse_rational("0.5").has_value());
    CHECK(!parse_rational("").has_value());
    CHECK(!parse_rational("a/b").has_value());
    // Values a double could not hold exactly stay exact.
    Rational tiny = rat(1);
    for (int i = 0; i < 200; ++i) tiny /= 3;
    Rational back = tiny;
    for (int i = 0; i < 200; ++i) back *= 3;
    CHECK(back == 1);
}

TEST_CASE("label interning and display") {
    Label a = labels::get("a_1");
    CHECK(a == labels::get("a_1"));
    CHECK(a != labels::get("a_1", Kind::Output));
    CHECK(labels::show(labels::get("c", Kind::Input)) == "c?");
    CHECK(labels::show(labels::get("c", Kind::Output)) == "c!");
    CHECK(labels::show(labels::tau()) == "tau");
    CHECK(labels::show(labels::tau("p_1")) == "tau(p_1)");
    CHECK(labels::data(labels::tau("x")).kind == Kind::Internal);
    CHECK(labels::tau("x") != labels::tau("y"));
    CHECK(labels::tau("x") != labels::tau());
}

TEST_CASE("label parse is the inverse of show") {
    for (Label l : {labels::get("go"), labels::get("c", Kind::Input),
                    labels::get("c", Kind::Output), labels::tau(),
                    labels::tau("p_2")})
        CHECK(labels::parse(labels::show(l)) == l);
    CHECK(labels::parse("not a label!") == -1);
    CHECK(labels::parse("") == -1);
    CHECK(labels::parse("tau(") == -1);
}

TEST_CASE("distribution factory validates") {
    auto d = Distribution::make({{0, rat(1, 2)}, {1, rat(1, 2)}});
    CHECK(d.entries().size() == 2);
    CHECK(d.mass(0) == rat(1, 2));
    CHECK(d.mass(7) == 0);

    // Zero entries are dropped; a repeated outcome is rejected, not merged.
    auto e = Distribution::make({{3, rat(1)}, {2, rat(0)}});
    CHECK(e.entries().size() == 1);
    CHECK(e.mass(3) == 1);
    CHECK_THROWS_AS(Distribution::make({{3, rat(1, 3)}, {3, rat(2, 3)}}), Error);

    // map may merge, and masses add.
    auto merged = Distribution::make({{0, rat(1, 2)}, {1, rat(1, 2)}}).map(
        [](int) { return 9; });
    CHECK(merged.mass(9) == 1);

    CHECK_THROWS_AS(Distribution::make({{0, rat(1, 2)}, {1, rat(1, 3)}}), Error);
    CHECK_THROWS_AS(Distribution::make({{0, rat(3, 2)}, {1, rat(-1, 2)}}), Error);
    try {
        Distribution::make({{0, rat(1, 2)}, {1, rat(1, 3)}});
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::SumNotOne);
    }
}

TEST_CASE("dirac helper") {
    auto d = Distribution::dirac(4);
    CHECK(d.entries().size() == 1);
    CHECK(d.mass(4) == 1);
}

TEST_CASE("pa_validate flags structural problems") {
    ProbAutomaton a = ProbAutomaton::empty(2, 0, "t");
    a.add(0, labels::get("go"), Distribution::dirac(1));
    CHECK(pa_validate(a).ok());
    CHECK(pa_validate(a).terminating_states == 1);

    ProbAutomaton bad_init = ProbAutomaton::empty(2, 5);
    CHECK(!pa_validate(bad_init).ok());

    ProbAutomaton dangling = ProbAutomaton::empty(1, 0);
    dangling.add(0, labels::get("go"), Distribution::dirac(3));
    CHECK(!pa_validate(dangling).ok());
}

TEST_CASE("fpa step accounting") {
    FpaStep done;
    CHECK(done.terminates());
    CHECK(done.complete_end());

    FpaStep halted;
    halted.halt_mass = 1;
    CHECK(halted.terminates());
    CHECK(!halted.complete_end());

    FpaStep cut;
    cut.truncated = true;
    CHECK(!cut.complete_end());

    FpaStep step;
    step.branches.push_back({labels::get("go"), 1, rat(1, 3)});
    step.halt_mass = rat(2, 3);
    CHECK(step.branch_mass() == rat(1, 3));
    CHECK(!step.terminates());
}

TEST_CASE("fpa_validate checks mass and targets") {
    FullyProbAutomaton f = FullyProbAutomaton::empty(2);
    f.steps[0].branches.push_back({labels::get("go"), 1, rat(1, 2)});
    f.steps[0].halt_mass = rat(1, 2);
    CHECK(fpa_validate(f).ok());

    FullyProbAutomaton g = FullyProbAutomaton::empty(2);
    g.steps[0].branches.push_back({labels::get("go"), 1, rat(1, 2)});
    CHECK(!fpa_validate(g).ok());  // mass 1/2 unaccounted

    FullyProbAutomaton h = FullyProbAutomaton::empty(1);
    h.steps[0].branches.push_back({labels::get("go"), 9, rat(1)});
    CHECK(!fpa_validate(h).ok());  // dangling target
}

TEST_CASE("paths: trace and prefix") {
    Path p;
    p.start = 0;
    p.steps = {{labels::get("a"), 1}, {labels::get("b"), 2}};
    CHECK(path_trace(p) == std::vector<Label>{labels::get("a"), labels::get("b")});
    CHECK(p.last() == 2);

    Path q;
    q.start = 0;
    q.steps = {{labels::get("a"), 1}};
    CHECK(path_is_prefix(q, p));
    CHECK(!path_is_prefix(p, q));
    Path r = q;
    r.start = 1;
    CHECK(!path_is_prefix(r, p));
}

TEST_SUITE_END();
