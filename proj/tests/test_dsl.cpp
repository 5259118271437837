#include "pam/dsl.hpp"
#include "pam/sched.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace pam;
using dsl::Bundle;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(PAM_MODELS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The position and code of the parse error for bad model text.
struct Failure {
    ErrorCode code;
    std::string what;
};

Failure parse_failure(const std::string& text) {
    try {
        dsl::parse_model(text);
    } catch (const Error& e) {
        return {e.code(), e.what()};
    }
    FAIL("expected the parse to fail");
    return {ErrorCode::Syntax, ""};
}

void check_failure(const std::string& text, ErrorCode code, const std::string& at,
                   const std::string& message) {
    Failure f = parse_failure(text);
    CHECK(f.code == code);
    CHECK_MESSAGE(f.what.find(at) != std::string::npos, f.what, " should mention ", at);
    CHECK_MESSAGE(f.what.find(message) != std::string::npos, f.what,
                  " should mention ", message);
}

const char* kTinyPrefix = "format 1\nautomaton A {\n  init 0;\n";

}  // namespace

TEST_SUITE_BEGIN("dsl");

TEST_CASE("every shipped model round-trips exactly") {
    for (const char* name :
         {"m_sec5.pam", "race.pam", "mirror_pair.pam", "dining3.pam"}) {
        CAPTURE(name);
        Bundle b = dsl::parse_model(slurp(name));
        std::string printed = dsl::print_model(b);
        Bundle again = dsl::parse_model(printed);
        CHECK(dsl::same_bundle(b, again));
        // Printing is a fixed point after one round.
        CHECK(dsl::print_model(again) == printed);
    }
}

TEST_CASE("comments and whitespace are insignificant") {
    Bundle a = dsl::parse_model(
        "format 1\nautomaton A { init 0; 0 -go-> { 1: 1/1 }; }");
    Bundle b = dsl::parse_model(
        "format 1 # header\n# a whole comment line\nautomaton A {\n"
        "  init 0;   # initial\n  0 -go-> {\n    1: 1/1\n  };\n}\n");
    CHECK(dsl::same_bundle(a, b));
}

TEST_CASE("label notation round-trips through the printer") {
    Bundle b = dsl::parse_model(
        "format 1\nautomaton A { init 0; 0 -c?-> { 1: 1/1 }; 1 -c!-> { 2: 1/1 }; "
        "2 -tau-> { 3: 1/1 }; 3 -tau(c)-> { 4: 1/1 }; }");
    const auto& tr = b.automata.at(0).trans;
    CHECK(labels::data(tr[0][0].label).kind == Kind::Input);
    CHECK(labels::data(tr[1][0].label).kind == Kind::Output);
    CHECK(tr[2][0].label == labels::tau());
    CHECK(tr[3][0].label == labels::tau("c"));
    CHECK(dsl::same_bundle(b, dsl::parse_model(dsl::print_model(b))));
}

TEST_CASE("the header is mandatory and versioned") {
    check_failure("automaton A { init 0; }", ErrorCode::Syntax, "line 1, col 1",
                  "the 'format 1' header");
    check_failure("format 2\n", ErrorCode::Syntax, "line 1, col 8",
                  "unsupported format version 2");
    check_failure("", ErrorCode::Syntax, "line 1, col 1", "format");
}

TEST_CASE("decimal literals are refused with a pointer at the number") {
    check_failure(std::string(kTinyPrefix) + "  0 -go-> { 1: 0.5 };\n}\n",
                  ErrorCode::BadFraction, "line 4, col 16",
                  "decimal literals are not supported");
}

TEST_CASE("bare integers are not probabilities") {
    check_failure(std::string(kTinyPrefix) + "  0 -go-> { 1: 1 };\n}\n",
                  ErrorCode::BadFraction, "line 4, col 16",
                  "probabilities must be exact fractions p/q");
}

TEST_CASE("zero denominators are refused at the denominator") {
    check_failure(std::string(kTinyPrefix) + "  0 -go-> { 1: 1/0 };\n}\n",
                  ErrorCode::BadFraction, "line 4, col 18", "zero denominator");
}

TEST_CASE("a row whose masses do not sum to one points at the row") {
    check_failure(
        std::string(kTinyPrefix) + "  0 -go-> { 1: 1/2, 2: 1/3 };\n}\n",
        ErrorCode::SumNotOne, "line 4, col 3", "sums to 5/6");
}

TEST_CASE("duplicate declarations are rejected by name") {
    check_failure(
        "format 1\nautomaton A { init 0; }\nautomaton A { init 0; }\n",
        ErrorCode::Syntax, "line 3, col 11", "duplicate name 'A'");
    check_failure(
        "format 1\nautomaton A { init 0; }\nsystem A = A;\n",
        ErrorCode::Syntax, "line 3, col 8", "duplicate name 'A'");
}

TEST_CASE("spec blocks are single and fully spelled") {
    std::string spec =
        "spec { users { 1 }; marker 1 = m_1; observe { o }; }\n";
    check_failure("format 1\n" + spec + spec, ErrorCode::Syntax, "line 3",
                  "duplicate spec block");
    check_failure(
        "format 1\nspec { users { 1 }; marker 1 = a; marker 1 = b; }\n",
        ErrorCode::Syntax, "line 2, col 35", "duplicate marker for user 1");
    check_failure("format 1\nspec { audience { 1 }; }\n", ErrorCode::Syntax,
                  "line 2, col 8", "expected one of 'users', 'marker', 'observe'");
}

TEST_CASE("a single pipe is called out") {
    check_failure(
        "format 1\nautomaton A { init 0; }\nsystem s = A | A;\n",
        ErrorCode::Syntax, "line 3, col 14", "expected '||', got a single '|'");
}

TEST_CASE("arbitrary bytes fail with the byte value, never crash") {
    check_failure("format 1\n@", ErrorCode::Syntax, "line 2, col 1",
                  "unexpected character (byte 64)");
    // A sweep of junk inputs: anything may be rejected, nothing may crash.
    std::mt19937 rng(7);
    for (int round = 0; round < 200; ++round) {
        std::string junk = "format 1\n";
        const int len = static_cast<int>(rng() % 40);
        for (int k = 0; k < len; ++k)
            junk.push_back(static_cast<char>(rng() % 256));
        try {
            dsl::parse_model(junk);
        } catch (const Error&) {
        }
    }
}

TEST_CASE("state ids are capped") {
    check_failure(std::string(kTinyPrefix) + "  0 -go-> { 1000001: 1/1 };\n}\n",
                  ErrorCode::Syntax, "line 4, col 13",
                  "exceeds the supported maximum 1000000");
}

TEST_CASE("scheduler blocks validate their shape") {
    std::string prefix =
        "format 1\nautomaton A { init 0; }\n"
        "spec { users { 1 }; marker 1 = m_1; observe { o }; }\n";
    check_failure(prefix +
                      "scheduler x { mode collapse; kind det;\n"
                      "  key([] ; 0) -> 0;\n  key([] ; 0) -> 1;\n}\n",
                  ErrorCode::Syntax, "line 6", "duplicate scheduler key");
    check_failure(prefix +
                      "scheduler x { mode collapse; kind det;\n"
                      "  key([] ; 0) -> { 0: 1/2, halt: 1/2 };\n}\n",
                  ErrorCode::Syntax, "line 5",
                  "det scheduler rows must be a single choice or 'halt'");
    check_failure(prefix +
                      "scheduler x { mode collapse; kind independent;\n"
                      "  key([o] ; 0) -> 0;\n}\n",
                  ErrorCode::Syntax, "line 5",
                  "history-independent scheduler keys must have an empty");
    check_failure(prefix + "scheduler x { mode sometimes; kind det; }\n",
                  ErrorCode::Syntax, "line 4", "expected 'collapse' or 'strict'");
}

TEST_CASE("statemap blocks reject repeated sources") {
    check_failure(
        "format 1\nautomaton A { init 0; }\n"
        "statemap m pair 1 2 {\n  0 -> 1;\n  0 -> 2;\n}\n",
        ErrorCode::Syntax, "line 5, col 3", "duplicate state map entry for state 0");
}

TEST_CASE("system selection is explicit when ambiguous") {
    Bundle two = dsl::parse_model(
        "format 1\nautomaton A { init 0; }\nautomaton B { init 0; }\n");
    CHECK_THROWS_WITH_AS(two.elaborate_system(),
                         "UnknownName: no system declared and more than one "
                         "automaton; name one",
                         Error);
    CHECK_THROWS_AS(two.elaborate_system("C"), Error);
    CHECK(two.elaborate_system("B").num_states == 1);

    Bundle one = dsl::parse_model("format 1\nautomaton A { init 0; }\n");
    CHECK(one.elaborate_system().num_states == 1);
}

TEST_CASE("collapse schedulers need a spec for the observe set") {
    Bundle b = dsl::parse_model(
        "format 1\nautomaton A { init 0; }\n"
        "scheduler x { mode collapse; kind det; }\n");
    CHECK_THROWS_AS(b.build_scheduler(b.schedulers.at(0)), Error);
    Bundle s = dsl::parse_model(
        "format 1\nautomaton A { init 0; }\n"
        "scheduler x { mode strict; kind det; }\n");
    CHECK(s.build_scheduler(s.schedulers.at(0)).omega.mode ==
          ObservationMap::Mode::Strict);
}

TEST_CASE("statemaps must fit the system they are applied to") {
    Bundle b = dsl::parse_model(
        "format 1\nautomaton A { init 0; }\n"
        "statemap m pair 1 2 {\n  5 -> 6;\n}\n");
    CHECK_THROWS_AS(b.build_statemap(b.statemaps.at(0), 3), Error);
    PairMap pm = b.build_statemap(b.statemaps.at(0), 8);
    CHECK(pm.map[5] == 6);
    CHECK(pm.map[0] == 0);  // unmentioned states stay fixed
}

TEST_CASE("printed schedulers parse back against their system") {
    Bundle b = dsl::parse_model(slurp("m_sec5.pam"));
    ProbAutomaton m = b.elaborate_system("main");
    std::vector<Scheduler> scheds;
    enumerate_admissible(m, ObservationMap::collapse(b.spec->act_o), 3, {},
                         [&](const Scheduler& xi) {
                             scheds.push_back(xi);
                             return true;
                         });
    REQUIRE(scheds.size() == 2);
    for (const Scheduler& xi : scheds) {
        std::string text = dsl::print_model(b) + "\n" + dsl::print_scheduler(xi);
        Bundle with = dsl::parse_model(text);
        REQUIRE(with.schedulers.size() == 1);
        Scheduler back = with.build_scheduler(with.schedulers.at(0));
        CHECK(back.kind == xi.kind);
        CHECK(back.omega == xi.omega);
        CHECK(back.table == xi.table);
    }
}

TEST_CASE("deterministic DOT rendering of an automaton") {
    Bundle b = dsl::parse_model(slurp("m_sec5.pam"));
    ProbAutomaton m = b.elaborate_system("main");
    CHECK(dsl::render_dot(m) == R"dot(digraph "pa" {
  rankdir=TB;
  node [shape=circle];
  __init [shape=none, label=""];
  s0 [label="(0)"];
  s1 [label="(1)"];
  s2 [label="(2)"];
  s3 [label="(3)"];
  s4 [label="(4)"];
  __init -> s0;
  p0_0 [shape=point];
  s0 -> p0_0 [label="tau", arrowhead=none];
  p0_0 -> s1 [label="1/2"];
  p0_0 -> s2 [label="1/2"];
  s1 -> s3 [label="a_1"];
  s2 -> s3 [label="a_2"];
  s3 -> s4 [label="x_1"];
  s3 -> s4 [label="x_2"];
}
)dot");
}

TEST_CASE("deterministic DOT rendering of an unfolding with truncation") {
    Bundle b = dsl::parse_model(slurp("m_sec5.pam"));
    ProbAutomaton m = b.elaborate_system("main");
    std::vector<Scheduler> scheds;
    enumerate_admissible(m, ObservationMap::collapse(b.spec->act_o), 3, {},
                         [&](const Scheduler& xi) {
                             scheds.push_back(xi);
                             return true;
                         });
    FullyProbAutomaton f = unfold(m, scheds.at(0), 2);
    CHECK(dsl::render_dot(f) == R"dot(digraph "[det#1]" {
  rankdir=TB;
  node [shape=circle];
  __init [shape=none, label=""];
  s0 [label="0"];
  s1 [label="1"];
  s2 [label="2"];
  s3 [label="3", style=dashed];
  s4 [label="4", style=dashed];
  __init -> s0;
  p0 [shape=point];
  s0 -> p0 [arrowhead=none];
  p0 -> s1 [label="tau 1/2"];
  p0 -> s2 [label="tau 1/2"];
  s1 -> s3 [label="a_1"];
  s2 -> s4 [label="a_2"];
}
)dot");
}

TEST_CASE("structural identity ignores display names") {
    Bundle b = dsl::parse_model(slurp("race.pam"));
    ProbAutomaton x = b.elaborate_system("main");
    ProbAutomaton y = b.elaborate_system("main");
    CHECK(dsl::same_structure(x, y));
    y.name = "other";
    y.state_names.assign(static_cast<size_t>(y.num_states), "q");
    CHECK(dsl::same_structure(x, y));
    // A changed mass is a different structure.
    REQUIRE(!y.trans[0].empty());
    for (auto& t : y.trans[static_cast<size_t>(y.init)]) {
        if (t.dist.support_size() == 2) {
            auto entries = t.dist.entries();
            std::vector<Distribution::Entry> tweak = {
                {entries[0].first, rat(1, 3)}, {entries[1].first, rat(2, 3)}};
            t.dist = Distribution::make(std::move(tweak));
            break;
        }
    }
    CHECK(!dsl::same_structure(x, y));
}

TEST_CASE("print_model keeps every probability an exact fraction") {
    Bundle b = dsl::parse_model(
        "format 1\nautomaton A { init 0; 0 -go-> { 1: 1/3, 2: 2/3 }; }");
    std::string printed = dsl::print_model(b);
    CHECK(printed.find("1/3") != std::string::npos);
    CHECK(printed.find("2/3") != std::string::npos);
    CHECK(printed.find('.') == std::string::npos);
}

TEST_SUITE_END();
