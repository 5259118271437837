#include "pam/cli.hpp"

#include "pam/anonymity.hpp"
#include "pam/bisim.hpp"
#include "pam/dc.hpp"
#include "pam/dsl.hpp"
#include "pam/error.hpp"
#include "pam/measure.hpp"
#include "pam/sched.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pam::cli {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitInput = 3;
constexpr int kExitGuard = 4;

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "1.0.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::BadInput, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::BadInput, "cannot write '" + path + "'");
    out << text;
}

std::string frac(const Rational& r) {
    std::ostringstream os;
    os << numerator(r) << "/" << denominator(r);
    return os.str();
}

std::string show_labels(const std::vector<Label>& ls) {
    if (ls.empty()) return "(empty)";
    std::string out;
    for (size_t k = 0; k < ls.size(); ++k) {
        if (k) out += " ";
        out += labels::show(ls[k]);
    }
    return out;
}

json labels_json(const std::vector<Label>& ls) {
    json arr = json::array();
    for (Label l : ls) arr.push_back(labels::show(l));
    return arr;
}

std::vector<Rational> parse_prior(const std::string& text) {
    std::vector<Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto r = parse_rational(item);
        if (!r)
            throw Error(ErrorCode::BadFraction,
                        "bad prior weight '" + item + "' (write exact fractions p/q)");
        out.push_back(*r);
    }
    if (out.empty())
        throw Error(ErrorCode::BadInput, "--master-prior needs at least one weight");
    return out;
}

json witness_json(const Witness& w) {
    json j;
    j["scheduler"] = w.scheduler_name;
    j["user"] = w.user;
    if (w.other_user >= 0)
        j["other_user"] = w.other_user;
    else
        j["other_user"] = nullptr;
    j["observation"] = labels_json(w.observation);
    j["lhs"] = frac(w.lhs);
    j["rhs"] = frac(w.rhs);
    j["detail"] = w.detail;
    if (w.scheduler)
        j["scheduler_table"] = dsl::print_scheduler(*w.scheduler);
    else
        j["scheduler_table"] = nullptr;
    return j;
}

void print_witness(std::ostream& os, const Witness& w) {
    os << "witness:\n";
    os << "  scheduler: " << w.scheduler_name << "\n";
    os << "  user: " << w.user;
    if (w.other_user >= 0) os << " vs " << w.other_user;
    os << "\n";
    os << "  observation: " << show_labels(w.observation) << "\n";
    os << "  " << w.detail << "\n";
    if (w.scheduler) os << dsl::print_scheduler(*w.scheduler);
}

int verdict_exit(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::AnonymousProved:
        case VerdictStatus::AnonymousOnCheckedClass: return kExitOk;
        case VerdictStatus::Violation: return kExitViolation;
        case VerdictStatus::Inconclusive: return kExitInconclusive;
    }
    return kExitInconclusive;
}

// Shared per-invocation inputs; prior substitution happens before
// elaboration so every downstream object refers to the transformed bundle.
struct Loaded {
    dsl::Bundle bundle;
    ProbAutomaton sys;
};

Loaded load_system(const std::string& file, const std::string& system,
                   const std::string& prior) {
    Loaded l;
    l.bundle = dsl::parse_model(read_file(file));
    if (!prior.empty())
        l.bundle = dc::with_master_prior(l.bundle, parse_prior(prior));
    l.sys = l.bundle.elaborate_system(system);
    return l;
}

const AnonymitySpec& require_spec(const dsl::Bundle& b, const char* who) {
    if (!b.spec)
        throw Error(ErrorCode::BadInput,
                    std::string(who) + " needs a spec block (users/markers/observe)");
    return *b.spec;
}

struct Emitter {
    bool as_json = false;
    json j;
    std::ostringstream text;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Emitter(const char* command, bool as_json) : as_json(as_json) {
        j["schema"] = kSchemaVersion;
        j["tool"] = "pamcheck";
        j["version"] = kToolVersion;
        j["command"] = command;
    }

    void flush(const std::string& out_path) {
        if (as_json) {
            j["elapsed_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            write_output(out_path, j.dump(2) + "\n");
        } else {
            write_output(out_path, text.str());
        }
    }
};

// ---------------------------------------------------------------------------
// Subcommands

struct CommonOpts {
    std::string file;
    std::string system;
    std::string out;
    std::string prior;
    bool as_json = false;
};

int cmd_validate(const CommonOpts& opt) {
    Emitter em("validate", opt.as_json);
    dsl::Bundle b = dsl::parse_model(read_file(opt.file));
    std::vector<std::string> problems;

    json autos = json::array();
    for (auto& a : b.automata) {
        ValidationReport r = pa_validate(a);
        for (auto& p : r.problems) problems.push_back("automaton " + a.name + ": " + p);
        autos.push_back({{"name", a.name},
                         {"states", a.num_states},
                         {"transitions", a.num_transitions()}});
        em.text << "automaton " << a.name << ": " << a.num_states << " states, "
                << a.num_transitions() << " transitions\n";
    }

    json systems = json::array();
    std::optional<ProbAutomaton> the_system;
    for (auto& [name, expr] : b.systems) {
        try {
            ProbAutomaton sys = b.elaborate_system(name);
            ValidationReport r = pa_validate(sys);
            for (auto& p : r.problems) problems.push_back("system " + name + ": " + p);
            systems.push_back({{"name", name},
                               {"states", sys.num_states},
                               {"transitions", sys.num_transitions()}});
            em.text << "system " << name << ": " << sys.num_states << " states, "
                    << sys.num_transitions() << " transitions\n";
            if (opt.system.empty() ? b.systems.size() == 1 : name == opt.system)
                the_system = std::move(sys);
        } catch (const Error& e) {
            problems.push_back("system " + name + ": " + e.what());
        }
    }

    if (b.spec) {
        if (the_system) {
            std::set<Label> present;
            for (auto& ts : the_system->trans)
                for (auto& t : ts) present.insert(t.label);
            for (auto& [u, l] : b.spec->markers)
                if (!present.count(l))
                    problems.push_back("spec: marker " + std::to_string(u) + " label " +
                                       labels::show(l) +
                                       " does not occur in the elaborated system");
            for (Label l : b.spec->act_o)
                if (!present.count(l))
                    problems.push_back("spec: observable " + labels::show(l) +
                                       " does not occur in the elaborated system");
            for (auto& [u, l] : b.spec->markers)
                if (b.spec->act_o.count(l))
                    problems.push_back("spec: marker " + labels::show(l) +
                                       " is also listed as observable");
        }
        for (int u : b.spec->users)
            if (!b.spec->markers.count(u))
                problems.push_back("spec: user " + std::to_string(u) + " has no marker");
        em.text << "spec: " << b.spec->users.size() << " users, "
                << b.spec->act_o.size() << " observables\n";
    }
    for (auto& s : b.schedulers) {
        try {
            (void)b.build_scheduler(s);
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
        em.text << "scheduler " << s.name << ": " << s.rows.size() << " rows\n";
    }
    for (auto& m : b.statemaps) {
        if (b.spec && (!b.spec->markers.count(m.user_i) || !b.spec->markers.count(m.user_j)))
            problems.push_back("statemap " + m.name + ": users not in the spec");
        em.text << "statemap " << m.name << ": pair (" << m.user_i << ", " << m.user_j
                << "), " << m.entries.size() << " entries\n";
    }

    em.j["automata"] = autos;
    em.j["systems"] = systems;
    em.j["valid"] = problems.empty();
    em.j["problems"] = problems;
    for (auto& p : problems) em.text << "problem: " << p << "\n";
    em.text << (problems.empty() ? "valid\n" : "invalid\n");
    em.flush(opt.out);
    return problems.empty() ? kExitOk : kExitInput;
}

int cmd_compose(const CommonOpts& opt, const std::string& emit) {
    Emitter em("compose", false);  // emits a document, not a report
    Loaded l = load_system(opt.file, opt.system, opt.prior);
    if (l.sys.name.empty()) l.sys.name = "system";
    if (emit == "dot") {
        write_output(opt.out, dsl::render_dot(l.sys));
    } else {
        dsl::Bundle flat;
        flat.automata.push_back(l.sys);
        write_output(opt.out, dsl::print_model(flat));
    }
    return kExitOk;
}

int cmd_bisim(const CommonOpts& opt, const std::string& obs_mode) {
    Emitter em("bisim", opt.as_json);
    Loaded l = load_system(opt.file, opt.system, opt.prior);
    Partition part;
    if (obs_mode == "collapse") {
        const AnonymitySpec& spec = require_spec(l.bundle, "--obs-mode collapse");
        part = bisimilarity(l.sys, ObservationMap::collapse(spec.act_o));
    } else {
        part = bisimilarity(l.sys);
    }
    part.canonicalize();
    em.text << "states: " << part.num_states() << "\n";
    em.text << "classes: " << part.num_blocks() << "\n";
    json blocks = json::array();
    for (size_t c = 0; c < part.blocks.size(); ++c) {
        em.text << "class " << c << ":";
        json members = json::array();
        for (int s : part.blocks[c]) {
            em.text << " " << s;
            members.push_back(s);
        }
        em.text << "\n";
        blocks.push_back(members);
    }
    em.j["states"] = part.num_states();
    em.j["classes"] = part.num_blocks();
    em.j["blocks"] = blocks;
    em.flush(opt.out);
    return kExitOk;
}

int cmd_measure(const CommonOpts& opt, const std::string& scheduler_name, int horizon) {
    Emitter em("measure", opt.as_json);
    if (!opt.prior.empty() && !scheduler_name.empty())
        throw Error(ErrorCode::BadInput,
                    "--scheduler tables are keyed against the unmodified system; "
                    "they cannot be combined with --master-prior");
    Loaded l = load_system(opt.file, opt.system, opt.prior);

    Scheduler xi;
    if (!scheduler_name.empty()) {
        const dsl::SchedulerSrc* src = l.bundle.find_scheduler(scheduler_name);
        if (!src)
            throw Error(ErrorCode::UnknownName,
                        "no scheduler named '" + scheduler_name + "' in the file");
        xi = l.bundle.build_scheduler(*src);
    } else {
        std::set<Label> act_o = l.bundle.spec ? l.bundle.spec->act_o : std::set<Label>{};
        xi = synthesize_admissible(l.sys, act_o);
    }

    FullyProbAutomaton f = unfold(l.sys, xi, horizon);
    MeasureReport base = event_prob(f, EventPredicate::all());

    em.text << "scheduler: " << xi.name << "\n";
    em.text << "complete paths: " << base.complete_path_count << "\n";
    em.text << "complete mass: " << frac(base.value) << ", halt mass: "
            << frac(base.halt_mass) << ", truncated mass: " << frac(base.truncated_mass)
            << "\n";
    em.j["scheduler"] = xi.name;
    em.j["horizon"] = horizon;
    em.j["complete_paths"] = base.complete_path_count;
    em.j["complete_mass"] = frac(base.value);
    em.j["halt_mass"] = frac(base.halt_mass);
    em.j["truncated_mass"] = frac(base.truncated_mass);

    if (l.bundle.spec) {
        const AnonymitySpec& spec = *l.bundle.spec;
        // Joint masses per user and realized observation in one sweep.
        std::map<std::vector<Label>, Rational> p_obs;
        std::map<int, Rational> p_user;
        std::map<std::pair<int, std::vector<Label>>, Rational> p_joint;
        for_each_complete_trace(f, [&](const std::vector<Label>& trace, const Rational& p) {
            std::vector<Label> o = otrace(trace, spec.act_o);
            p_obs[o] += p;
            for (auto& [u, marker] : spec.markers) {
                bool hit = false;
                for (Label step : trace)
                    if (step == marker) {
                        hit = true;
                        break;
                    }
                if (hit) {
                    p_user[u] += p;
                    p_joint[{u, o}] += p;
                }
            }
        });
        json events = json::array();
        for (int u : spec.users) {
            Rational pu = p_user.count(u) ? p_user[u] : Rational(0);
            em.text << "P[A_" << u << "] = " << frac(pu) << "\n";
            events.push_back({{"user", u}, {"prob", frac(pu)}});
        }
        em.j["events"] = events;
        json table = json::array();
        for (auto& [o, po] : p_obs) {
            em.text << "observation " << show_labels(o) << ": P[o] = " << frac(po);
            for (int u : spec.users) {
                if (!p_user.count(u) || p_user[u] == 0) continue;
                Rational joint = 0;
                auto it = p_joint.find({u, o});
                if (it != p_joint.end()) joint = it->second;
                Rational c = joint / p_user[u];
                em.text << ", P[o|A_" << u << "] = " << frac(c);
                table.push_back({{"user", u},
                                 {"observation", labels_json(o)},
                                 {"prob", frac(c)}});
            }
            em.text << "\n";
        }
        em.j["table"] = table;
    }
    em.flush(opt.out);
    return kExitOk;
}

int cmd_check(const CommonOpts& opt, const std::string& strategy,
              const std::string& obs_mode, int horizon, int samples,
              unsigned long long seed, bool bp) {
    Emitter em("check", opt.as_json);
    Loaded l = load_system(opt.file, opt.system, opt.prior);
    const AnonymitySpec& spec = require_spec(l.bundle, "check");

    CheckStrategy st;
    st.mode = obs_mode == "strict" ? ObservationMap::Mode::Strict
                                   : ObservationMap::Mode::Collapse;
    st.horizon = horizon;
    st.samples = samples;
    st.seed = seed;
    st.bp_variant = bp;
    if (strategy == "enumerate") {
        st.kind = CheckStrategy::Kind::Enumerate;
    } else if (strategy == "sample") {
        st.kind = CheckStrategy::Kind::Sample;
    } else {
        st.kind = CheckStrategy::Kind::Automorphism;
        std::set<Label> all_markers;
        for (auto& [u, lab] : spec.markers) all_markers.insert(lab);
        for (size_t i = 0; i < spec.users.size(); ++i) {
            for (size_t j = i + 1; j < spec.users.size(); ++j) {
                int ui = spec.users[i], uj = spec.users[j];
                const dsl::StateMapSrc* src = nullptr;
                for (auto& m : l.bundle.statemaps)
                    if ((m.user_i == ui && m.user_j == uj) ||
                        (m.user_i == uj && m.user_j == ui))
                        src = &m;
                if (src) {
                    st.maps.push_back(l.bundle.build_statemap(*src, l.sys.num_states));
                    continue;
                }
                AutomorphismSearch found =
                    find_automorphism(l.sys, spec.act_o, spec.markers.at(ui),
                                      spec.markers.at(uj), all_markers);
                if (found.map) st.maps.push_back(PairMap{ui, uj, *found.map});
            }
        }
    }

    Verdict v = check_pa(l.sys, spec, st);
    em.text << "status: " << verdict_name(v.status) << "\n";
    em.text << "coverage: " << v.coverage << "\n";
    if (v.witness) print_witness(em.text, *v.witness);
    em.j["status"] = verdict_name(v.status);
    em.j["coverage"] = v.coverage;
    em.j["witness"] = v.witness ? witness_json(*v.witness) : json(nullptr);
    em.flush(opt.out);
    return verdict_exit(v.status);
}

int cmd_counterexample(const CommonOpts& opt, int horizon) {
    Emitter em("counterexample", opt.as_json);
    Loaded l = load_system(opt.file, opt.system, opt.prior);
    const AnonymitySpec& spec = require_spec(l.bundle, "counterexample");

    auto found = find_interfering(l.sys, spec, horizon);
    em.j["found"] = found.has_value();
    if (found) {
        em.text << "interfering scheduler found\n";
        print_witness(em.text, found->second);
        em.j["witness"] = witness_json(found->second);
    } else {
        em.text << "no interfering scheduler found";
        if (horizon >= 0) em.text << " (horizon " << horizon << ")";
        em.text << "\n";
        em.j["witness"] = nullptr;
    }
    em.flush(opt.out);
    return found ? kExitViolation : kExitOk;
}

int cmd_gen_dc(int n, const std::string& out, bool as_json) {
    Emitter em("gen", as_json);
    dsl::Bundle b = dc::generate_dc(n);
    std::string text = dsl::print_model(b);
    if (as_json) {
        em.j["n"] = n;
        em.j["automata"] = b.automata.size();
        em.j["schedulers"] = b.schedulers.size();
        em.j["statemaps"] = b.statemaps.size();
        em.j["model"] = text;
        em.flush(out);
    } else {
        write_output(out, text);
    }
    return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"pamcheck: exact anonymity checking for probabilistic automata"};
    app.require_subcommand(1);

    CommonOpts v_opt;
    auto* validate = app.add_subcommand("validate", "parse a model and report problems");
    validate->add_option("file", v_opt.file, "model file (.pam)")->required();
    validate->add_option("--system", v_opt.system, "system to check the spec against");
    validate->add_flag("--json", v_opt.as_json, "machine-readable report");
    validate->add_option("-o,--output", v_opt.out, "write the report to a file");

    CommonOpts c_opt;
    std::string c_emit = "pam";
    auto* compose = app.add_subcommand("compose", "elaborate the system and emit it");
    compose->add_option("file", c_opt.file, "model file (.pam)")->required();
    compose->add_option("--system", c_opt.system, "system to elaborate");
    compose->add_option("--emit", c_emit, "output form")
        ->check(CLI::IsMember({"pam", "dot"}));
    compose->add_option("--master-prior", c_opt.prior,
                        "replace the Master branch choice with these weights");
    compose->add_option("-o,--output", c_opt.out, "write to a file");

    CommonOpts b_opt;
    std::string b_mode = "strict";
    auto* bisim = app.add_subcommand("bisim", "print the bisimilarity partition");
    bisim->add_option("file", b_opt.file, "model file (.pam)")->required();
    bisim->add_option("--system", b_opt.system, "system to elaborate");
    bisim->add_option("--obs-mode", b_mode, "label view for the partition")
        ->check(CLI::IsMember({"collapse", "strict"}));
    bisim->add_flag("--json", b_opt.as_json, "machine-readable report");
    bisim->add_option("-o,--output", b_opt.out, "write the report to a file");

    CommonOpts m_opt;
    std::string m_sched;
    int m_horizon = kUnbounded;
    auto* measure =
        app.add_subcommand("measure", "event and conditional probabilities from the spec");
    measure->add_option("file", m_opt.file, "model file (.pam)")->required();
    measure->add_option("--system", m_opt.system, "system to elaborate");
    measure->add_option("--scheduler", m_sched, "named scheduler from the file");
    measure->add_option("--horizon", m_horizon, "unfolding depth bound");
    measure->add_option("--master-prior", m_opt.prior,
                        "replace the Master branch choice with these weights");
    measure->add_flag("--json", m_opt.as_json, "machine-readable report");
    measure->add_option("-o,--output", m_opt.out, "write the report to a file");

    CommonOpts k_opt;
    std::string k_strategy;
    std::string k_mode = "collapse";
    int k_horizon = kUnbounded;
    int k_samples = 100;
    unsigned long long k_seed = 0;
    bool k_bp = false;
    auto* check = app.add_subcommand("check", "anonymity verdict over admissible schedulers");
    check->add_option("file", k_opt.file, "model file (.pam)")->required();
    check->add_option("--system", k_opt.system, "system to elaborate");
    check->add_option("--strategy", k_strategy, "how to cover the scheduler class")
        ->required()
        ->check(CLI::IsMember({"enumerate", "sample", "automorphism"}));
    check->add_option("--obs-mode", k_mode, "what scheduler keys may observe")
        ->check(CLI::IsMember({"collapse", "strict"}));
    check->add_option("--horizon", k_horizon, "unfolding depth bound");
    check->add_option("--samples", k_samples, "number of sampled schedulers");
    check->add_option("--seed", k_seed, "sampling seed");
    check->add_flag("--bp", k_bp, "use the pairwise per-scheduler reading");
    check->add_option("--master-prior", k_opt.prior,
                      "replace the Master branch choice with these weights");
    check->add_flag("--json", k_opt.as_json, "machine-readable report");
    check->add_option("-o,--output", k_opt.out, "write the report to a file");

    CommonOpts x_opt;
    int x_horizon = kUnbounded;
    auto* cex = app.add_subcommand("counterexample",
                                   "search raw-history schedulers for interference");
    cex->add_option("file", x_opt.file, "model file (.pam)")->required();
    cex->add_option("--system", x_opt.system, "system to elaborate");
    cex->add_option("--horizon", x_horizon, "unfolding depth bound");
    cex->add_option("--master-prior", x_opt.prior,
                    "replace the Master branch choice with these weights");
    cex->add_flag("--json", x_opt.as_json, "machine-readable report");
    cex->add_option("-o,--output", x_opt.out, "write the report to a file");

    auto* gen = app.add_subcommand("gen", "built-in model generators");
    gen->require_subcommand(1);
    int g_n = 3;
    std::string g_out;
    bool g_json = false;
    auto* gen_dc = gen->add_subcommand("dc", "dining cryptographers, n users");
    gen_dc->add_option("--n", g_n, "number of cryptographers")->required();
    gen_dc->add_option("-o,--output", g_out, "write the model to a file");
    gen_dc->add_flag("--json", g_json, "machine-readable report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*validate) return cmd_validate(v_opt);
        if (*compose) return cmd_compose(c_opt, c_emit);
        if (*bisim) return cmd_bisim(b_opt, b_mode);
        if (*measure) return cmd_measure(m_opt, m_sched, m_horizon);
        if (*check)
            return cmd_check(k_opt, k_strategy, k_mode, k_horizon, k_samples, k_seed,
                             k_bp);
        if (*cex) return cmd_counterexample(x_opt, x_horizon);
        if (*gen_dc) return cmd_gen_dc(g_n, g_out, g_json);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == ErrorCode::ExplosionGuard ? kExitGuard : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace pam::cli
