#include "pam/dsl.hpp"

#include "pam/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace pam::dsl {

namespace {

// ---------------------------------------------------------------------------
// Lexing

enum class Tok {
    Ident,
    Number,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Slash,
    Arrow,
    Minus,
    Eq,
    Par,
    Question,
    Bang,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;  // Ident / Number payload
    int line = 1;
    int col = 1;
};

std::string tok_show(const Token& t) {
    switch (t.kind) {
        case Tok::Ident: return "'" + t.text + "'";
        case Tok::Number: return "'" + t.text + "'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Semi: return "';'";
        case Tok::Comma: return "','";
        case Tok::Colon: return "':'";
        case Tok::Slash: return "'/'";
        case Tok::Arrow: return "'->'";
        case Tok::Minus: return "'-'";
        case Tok::Eq: return "'='";
        case Tok::Par: return "'||'";
        case Tok::Question: return "'?'";
        case Tok::Bang: return "'!'";
        case Tok::End: return "end of input";
    }
    return "token";
}

[[noreturn]] void fail_at(int line, int col, ErrorCode code, const std::string& message) {
    throw Error(code, "line " + std::to_string(line) + ", col " + std::to_string(col) +
                          ": " + message);
}

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto bump = [&](char c) {
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        int tl = line, tc = col;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            bump(c);
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') {
                bump(text[i]);
                ++i;
            }
            continue;
        }
        auto push = [&](Tok k, std::string s = {}) {
            out.push_back({k, std::move(s), tl, tc});
        };
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (i < text.size()) {
                char d = text[i];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
                    s.push_back(d);
                    bump(d);
                    ++i;
                } else {
                    break;
                }
            }
            push(Tok::Ident, std::move(s));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string s;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                s.push_back(text[i]);
                bump(text[i]);
                ++i;
            }
            if (i < text.size() && text[i] == '.')
                fail_at(tl, tc, ErrorCode::BadFraction,
                        "decimal literals are not supported; write an exact fraction p/q");
            push(Tok::Number, std::move(s));
            continue;
        }
        bump(c);
        ++i;
        switch (c) {
            case '{': push(Tok::LBrace); continue;
            case '}': push(Tok::RBrace); continue;
            case '(': push(Tok::LParen); continue;
            case ')': push(Tok::RParen); continue;
            case '[': push(Tok::LBracket); continue;
            case ']': push(Tok::RBracket); continue;
            case ';': push(Tok::Semi); continue;
            case ',': push(Tok::Comma); continue;
            case ':': push(Tok::Colon); continue;
            case '/': push(Tok::Slash); continue;
            case '=': push(Tok::Eq); continue;
            case '?': push(Tok::Question); continue;
            case '!': push(Tok::Bang); continue;
            case '-':
                if (i < text.size() && text[i] == '>') {
                    bump('>');
                    ++i;
                    push(Tok::Arrow);
                } else {
                    push(Tok::Minus);
                }
                continue;
            case '|':
                if (i < text.size() && text[i] == '|') {
                    bump('|');
                    ++i;
                    push(Tok::Par);
                    continue;
                }
                fail_at(tl, tc, ErrorCode::Syntax, "expected '||', got a single '|'");
            default:
                fail_at(tl, tc, ErrorCode::Syntax,
                        "unexpected character (byte " +
                            std::to_string(static_cast<unsigned char>(c)) + ")");
        }
    }
    out.push_back({Tok::End, {}, line, col});
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
  public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Bundle parse() {
        expect_keyword("format", "the 'format 1' header");
        Token v = eat(Tok::Number, "the format version");
        if (v.text != "1")
            fail_at(v.line, v.col, ErrorCode::Syntax,
                    "unsupported format version " + v.text + " (this tool reads format 1)");
        Bundle b;
        while (!at(Tok::End)) {
            const Token& t = peek();
            if (t.kind != Tok::Ident)
                fail(t,
                     "expected one of 'automaton', 'system', 'spec', 'scheduler', "
                     "'statemap'");
            if (t.text == "automaton")
                parse_automaton(b);
            else if (t.text == "system")
                parse_system(b);
            else if (t.text == "spec")
                parse_spec(b);
            else if (t.text == "scheduler")
                parse_scheduler(b);
            else if (t.text == "statemap")
                parse_statemap(b);
            else
                fail(t,
                     "expected one of 'automaton', 'system', 'spec', 'scheduler', "
                     "'statemap'");
        }
        return b;
    }

  private:
    std::vector<Token> toks_;
    size_t i_ = 0;

    static constexpr long long kMaxStateId = 1000000;

    const Token& peek() const { return toks_[i_]; }
    const Token& peek2() const { return toks_[std::min(i_ + 1, toks_.size() - 1)]; }

    bool at(Tok k) const { return peek().kind == k; }
    bool at_keyword(const char* kw) const {
        return peek().kind == Tok::Ident && peek().text == kw;
    }

    [[noreturn]] void fail(const Token& t, const std::string& expected) const {
        fail_at(t.line, t.col, ErrorCode::Syntax, expected + ", got " + tok_show(t));
    }

    Token eat(Tok k, const char* what) {
        if (!at(k)) fail(peek(), std::string("expected ") + what);
        return toks_[i_++];
    }

    bool eat_if(Tok k) {
        if (!at(k)) return false;
        ++i_;
        return true;
    }

    Token expect_keyword(const char* kw, const char* what) {
        if (!at_keyword(kw)) fail(peek(), std::string("expected ") + what);
        return toks_[i_++];
    }

    long long parse_small(const char* what, long long max) {
        Token t = eat(Tok::Number, what);
        if (t.text.size() > 18)
            fail_at(t.line, t.col, ErrorCode::Syntax,
                    std::string(what) + " is too large");
        long long v = std::stoll(t.text);
        if (v > max)
            fail_at(t.line, t.col, ErrorCode::Syntax,
                    std::string(what) + " exceeds the supported maximum " +
                        std::to_string(max));
        return v;
    }

    int parse_state() { return static_cast<int>(parse_small("a state id", kMaxStateId)); }

    Rational parse_fraction() {
        Token num = eat(Tok::Number, "a fraction p/q");
        if (!at(Tok::Slash))
            fail_at(num.line, num.col, ErrorCode::BadFraction,
                    "probabilities must be exact fractions p/q");
        eat(Tok::Slash, "'/'");
        Token den = eat(Tok::Number, "the fraction denominator");
        Integer d(den.text);
        if (d == 0)
            fail_at(den.line, den.col, ErrorCode::BadFraction, "zero denominator");
        return Rational(Integer(num.text), d);
    }

    Label parse_label() {
        Token t = eat(Tok::Ident, "a label");
        if (t.text == "tau") {
            if (eat_if(Tok::LParen)) {
                Token tag = eat(Tok::Ident, "the hidden-label tag");
                eat(Tok::RParen, "')'");
                return labels::tau(tag.text);
            }
            return labels::tau();
        }
        if (eat_if(Tok::Question)) return labels::get(t.text, Kind::Input);
        if (eat_if(Tok::Bang)) return labels::get(t.text, Kind::Output);
        return labels::get(t.text, Kind::Plain);
    }

    std::vector<Label> parse_label_set() {
        eat(Tok::LBrace, "'{'");
        std::vector<Label> out;
        if (!at(Tok::RBrace)) {
            do {
                out.push_back(parse_label());
            } while (eat_if(Tok::Comma));
        }
        eat(Tok::RBrace, "'}'");
        return out;
    }

    void check_fresh_name(const Bundle& b, const Token& name) const {
        if (b.find_automaton(name.text) || b.find_system(name.text) ||
            b.find_scheduler(name.text) || b.find_statemap(name.text))
            fail_at(name.line, name.col, ErrorCode::Syntax,
                    "duplicate name '" + name.text + "'");
    }

    void parse_automaton(Bundle& b) {
        expect_keyword("automaton", "'automaton'");
        Token name = eat(Tok::Ident, "the automaton name");
        check_fresh_name(b, name);
        eat(Tok::LBrace, "'{'");
        expect_keyword("init", "'init'");
        int init = parse_state();
        eat(Tok::Semi, "';'");

        struct Row {
            int from;
            Label label;
            std::vector<Distribution::Entry> entries;
            int line, col;
        };
        std::vector<Row> rows;
        int max_state = init;
        while (!at(Tok::RBrace)) {
            Token first = peek();
            int from = parse_state();
            max_state = std::max(max_state, from);
            eat(Tok::Minus, "'-' of a '-LABEL->' transition");
            Label lab = parse_label();
            eat(Tok::Arrow, "'->'");
            eat(Tok::LBrace, "'{'");
            std::vector<Distribution::Entry> entries;
            if (!at(Tok::RBrace)) {
                do {
                    int tgt = parse_state();
                    max_state = std::max(max_state, tgt);
                    eat(Tok::Colon, "':'");
                    entries.emplace_back(tgt, parse_fraction());
                } while (eat_if(Tok::Comma));
            }
            eat(Tok::RBrace, "'}'");
            eat(Tok::Semi, "';'");
            rows.push_back({from, lab, std::move(entries), first.line, first.col});
        }
        eat(Tok::RBrace, "'}'");

        ProbAutomaton a = ProbAutomaton::empty(max_state + 1, init, name.text);
        for (auto& r : rows) {
            try {
                a.add(r.from, r.label, Distribution::make(std::move(r.entries)));
            } catch (const Error& e) {
                fail_at(r.line, r.col, e.code(), strip_code_prefix(e.what()));
            }
        }
        b.automata.push_back(std::move(a));
    }

    static std::string strip_code_prefix(const std::string& what) {
        auto pos = what.find(": ");
        return pos == std::string::npos ? what : what.substr(pos + 2);
    }

    SystemExpr parse_term() {
        const Token& t = peek();
        if (t.kind == Tok::LParen) {
            eat(Tok::LParen, "'('");
            SystemExpr e = parse_expr();
            eat(Tok::RParen, "')'");
            return e;
        }
        if (t.kind != Tok::Ident) fail(t, "expected an automaton name or operator");
        if (peek2().kind == Tok::LParen &&
            (t.text == "sync" || t.text == "restrict" || t.text == "hide" ||
             t.text == "seq")) {
            Token op = toks_[i_++];
            eat(Tok::LParen, "'('");
            SystemExpr inner = parse_expr();
            if (op.text == "seq") {
                eat(Tok::RParen, "')'");
                return SystemExpr::seq_of(std::move(inner));
            }
            eat(Tok::Comma, "','");
            if (op.text == "sync") {
                eat(Tok::LBrace, "'{'");
                std::vector<std::string> chans;
                if (!at(Tok::RBrace)) {
                    do {
                        chans.push_back(eat(Tok::Ident, "a channel name").text);
                    } while (eat_if(Tok::Comma));
                }
                eat(Tok::RBrace, "'}'");
                eat(Tok::RParen, "')'");
                return SystemExpr::sync_of(std::move(inner), std::move(chans));
            }
            std::vector<Label> labs = parse_label_set();
            eat(Tok::RParen, "')'");
            if (op.text == "restrict")
                return SystemExpr::restrict_of(std::move(inner), std::move(labs));
            return SystemExpr::hide_of(std::move(inner), std::move(labs));
        }
        Token name = eat(Tok::Ident, "an automaton name");
        return SystemExpr::atom_ref(name.text);
    }

    SystemExpr parse_expr() {
        SystemExpr first = parse_term();
        if (!at(Tok::Par)) return first;
        std::vector<SystemExpr> parts;
        parts.push_back(std::move(first));
        while (eat_if(Tok::Par)) parts.push_back(parse_term());
        return SystemExpr::compose_of(std::move(parts));
    }

    void parse_system(Bundle& b) {
        expect_keyword("system", "'system'");
        Token name = eat(Tok::Ident, "the system name");
        check_fresh_name(b, name);
        eat(Tok::Eq, "'='");
        SystemExpr e = parse_expr();
        eat(Tok::Semi, "';'");
        b.systems.emplace_back(name.text, std::move(e));
    }

    void parse_spec(Bundle& b) {
        Token kw = expect_keyword("spec", "'spec'");
        if (b.spec)
            fail_at(kw.line, kw.col, ErrorCode::Syntax, "duplicate spec block");
        eat(Tok::LBrace, "'{'");
        AnonymitySpec spec;
        while (!at(Tok::RBrace)) {
            const Token& t = peek();
            if (at_keyword("users")) {
                ++i_;
                eat(Tok::LBrace, "'{'");
                if (!at(Tok::RBrace)) {
                    do {
                        spec.users.push_back(
                            static_cast<int>(parse_small("a user id", 1000000000)));
                    } while (eat_if(Tok::Comma));
                }
                eat(Tok::RBrace, "'}'");
                eat(Tok::Semi, "';'");
            } else if (at_keyword("marker")) {
                ++i_;
                Token ut = peek();
                int user = static_cast<int>(parse_small("a user id", 1000000000));
                eat(Tok::Eq, "'='");
                Label lab = parse_label();
                eat(Tok::Semi, "';'");
                if (spec.markers.count(user))
                    fail_at(ut.line, ut.col, ErrorCode::Syntax,
                            "duplicate marker for user " + std::to_string(user));
                spec.markers[user] = lab;
            } else if (at_keyword("observe")) {
                ++i_;
                for (Label l : parse_label_set()) spec.act_o.insert(l);
                eat(Tok::Semi, "';'");
            } else {
                fail(t, "expected one of 'users', 'marker', 'observe'");
            }
        }
        eat(Tok::RBrace, "'}'");
        b.spec = std::move(spec);
    }

    void parse_scheduler(Bundle& b) {
        expect_keyword("scheduler", "'scheduler'");
        Token name = eat(Tok::Ident, "the scheduler name");
        check_fresh_name(b, name);
        eat(Tok::LBrace, "'{'");
        SchedulerSrc src;
        src.name = name.text;

        expect_keyword("mode", "'mode'");
        Token mode = eat(Tok::Ident, "'collapse' or 'strict'");
        if (mode.text == "collapse")
            src.mode = ObservationMap::Mode::Collapse;
        else if (mode.text == "strict")
            src.mode = ObservationMap::Mode::Strict;
        else
            fail(mode, "expected 'collapse' or 'strict'");
        eat(Tok::Semi, "';'");

        expect_keyword("kind", "'kind'");
        Token kind = eat(Tok::Ident, "'det', 'randomized' or 'independent'");
        if (kind.text == "det")
            src.kind = Scheduler::Kind::TabularDet;
        else if (kind.text == "randomized")
            src.kind = Scheduler::Kind::TabularRandomized;
        else if (kind.text == "independent")
            src.kind = Scheduler::Kind::HistoryIndependent;
        else
            fail(kind, "expected 'det', 'randomized' or 'independent'");
        eat(Tok::Semi, "';'");

        std::set<SchedulerKey> seen;
        while (!at(Tok::RBrace)) {
            Token kw = expect_keyword("key", "'key' or '}'");
            eat(Tok::LParen, "'('");
            eat(Tok::LBracket, "'['");
            SchedulerKey key;
            if (!at(Tok::RBracket)) {
                do {
                    key.observed.push_back(parse_label());
                } while (eat_if(Tok::Comma));
            }
            eat(Tok::RBracket, "']'");
            eat(Tok::Semi, "';'");
            key.state_class =
                static_cast<int>(parse_small("a class id", 1000000000));
            eat(Tok::RParen, "')'");
            eat(Tok::Arrow, "'->'");

            SchedulerRow row;
            if (at(Tok::Number)) {
                row = SchedulerRow::det(
                    static_cast<int>(parse_small("a choice index", 1000000000)));
            } else if (at_keyword("halt")) {
                ++i_;
                row = SchedulerRow::halt();
            } else if (at(Tok::LBrace)) {
                eat(Tok::LBrace, "'{'");
                std::vector<std::pair<int, Rational>> choices;
                Rational halt_mass = 0;
                do {
                    if (at_keyword("halt")) {
                        ++i_;
                        eat(Tok::Colon, "':'");
                        halt_mass += parse_fraction();
                    } else {
                        int c = static_cast<int>(
                            parse_small("a choice index", 1000000000));
                        eat(Tok::Colon, "':'");
                        choices.emplace_back(c, parse_fraction());
                    }
                } while (eat_if(Tok::Comma));
                eat(Tok::RBrace, "'}'");
                try {
                    row = SchedulerRow::make(std::move(choices), halt_mass);
                } catch (const Error& e) {
                    fail_at(kw.line, kw.col, e.code(), strip_code_prefix(e.what()));
                }
            } else {
                fail(peek(), "expected a choice index, 'halt' or '{'");
            }
            eat(Tok::Semi, "';'");

            if (src.kind == Scheduler::Kind::HistoryIndependent &&
                !key.observed.empty())
                fail_at(kw.line, kw.col, ErrorCode::Syntax,
                        "history-independent scheduler keys must have an empty "
                        "observed history");
            if (src.kind == Scheduler::Kind::TabularDet && !row.is_det() &&
                !row.is_halt())
                fail_at(kw.line, kw.col, ErrorCode::Syntax,
                        "det scheduler rows must be a single choice or 'halt'");
            if (!seen.insert(key).second)
                fail_at(kw.line, kw.col, ErrorCode::Syntax,
                        "duplicate scheduler key");
            src.rows.emplace_back(std::move(key), std::move(row));
        }
        eat(Tok::RBrace, "'}'");
        b.schedulers.push_back(std::move(src));
    }

    void parse_statemap(Bundle& b) {
        expect_keyword("statemap", "'statemap'");
        Token name = eat(Tok::Ident, "the state map name");
        check_fresh_name(b, name);
        StateMapSrc src;
        src.name = name.text;
        expect_keyword("pair", "'pair'");
        src.user_i = static_cast<int>(parse_small("a user id", 1000000000));
        src.user_j = static_cast<int>(parse_small("a user id", 1000000000));
        eat(Tok::LBrace, "'{'");
        std::set<int> seen;
        while (!at(Tok::RBrace)) {
            Token st = peek();
            int s = parse_state();
            eat(Tok::Arrow, "'->'");
            int t = parse_state();
            eat(Tok::Semi, "';'");
            if (!seen.insert(s).second)
                fail_at(st.line, st.col, ErrorCode::Syntax,
                        "duplicate state map entry for state " + std::to_string(s));
            src.entries.emplace_back(s, t);
        }
        eat(Tok::RBrace, "'}'");
        b.statemaps.push_back(std::move(src));
    }
};

// ---------------------------------------------------------------------------
// Printing

std::string frac(const Rational& r) {
    std::ostringstream os;
    os << numerator(r) << "/" << denominator(r);
    return os.str();
}

void print_expr(const SystemExpr& e, std::string& out) {
    switch (e.op) {
        case SystemExpr::Op::Atom:
            out += e.atom;
            return;
        case SystemExpr::Op::Compose: {
            bool first = true;
            for (auto& c : e.children) {
                if (!first) out += " || ";
                first = false;
                bool paren = c.op == SystemExpr::Op::Compose;
                if (paren) out += "(";
                print_expr(c, out);
                if (paren) out += ")";
            }
            return;
        }
        case SystemExpr::Op::Sync: {
            out += "sync(";
            print_expr(e.children[0], out);
            out += ", {";
            for (size_t k = 0; k < e.channels.size(); ++k) {
                if (k) out += ", ";
                out += e.channels[k];
            }
            out += "})";
            return;
        }
        case SystemExpr::Op::Restrict:
        case SystemExpr::Op::Hide: {
            out += e.op == SystemExpr::Op::Restrict ? "restrict(" : "hide(";
            print_expr(e.children[0], out);
            out += ", {";
            for (size_t k = 0; k < e.labels.size(); ++k) {
                if (k) out += ", ";
                out += labels::show(e.labels[k]);
            }
            out += "})";
            return;
        }
        case SystemExpr::Op::Seq:
            out += "seq(";
            print_expr(e.children[0], out);
            out += ")";
            return;
    }
}

void print_key_row(const SchedulerKey& key, const SchedulerRow& row, std::string& out) {
    out += "  key([";
    for (size_t k = 0; k < key.observed.size(); ++k) {
        if (k) out += ", ";
        out += labels::show(key.observed[k]);
    }
    out += "] ; " + std::to_string(key.state_class) + ") -> ";
    if (row.is_halt()) {
        out += "halt";
    } else if (row.is_det()) {
        out += std::to_string(row.choices[0].first);
    } else {
        out += "{ ";
        bool first = true;
        for (auto& [c, p] : row.choices) {
            if (!first) out += ", ";
            first = false;
            out += std::to_string(c) + ": " + frac(p);
        }
        if (row.halt_mass != 0) {
            if (!first) out += ", ";
            out += "halt: " + frac(row.halt_mass);
        }
        out += " }";
    }
    out += ";\n";
}

const char* mode_name(ObservationMap::Mode m) {
    return m == ObservationMap::Mode::Collapse ? "collapse" : "strict";
}

const char* kind_name(Scheduler::Kind k) {
    switch (k) {
        case Scheduler::Kind::TabularDet: return "det";
        case Scheduler::Kind::TabularRandomized: return "randomized";
        case Scheduler::Kind::HistoryIndependent: return "independent";
    }
    return "det";
}

}  // namespace

// ---------------------------------------------------------------------------
// Bundle

const ProbAutomaton* Bundle::find_automaton(const std::string& name) const {
    for (auto& a : automata)
        if (a.name == name) return &a;
    return nullptr;
}

const SystemExpr* Bundle::find_system(const std::string& name) const {
    for (auto& [n, e] : systems)
        if (n == name) return &e;
    return nullptr;
}

const SchedulerSrc* Bundle::find_scheduler(const std::string& name) const {
    for (auto& s : schedulers)
        if (s.name == name) return &s;
    return nullptr;
}

const StateMapSrc* Bundle::find_statemap(const std::string& name) const {
    for (auto& m : statemaps)
        if (m.name == name) return &m;
    return nullptr;
}

ProbAutomaton Bundle::elaborate_system(const std::string& name, size_t guard) const {
    AutomatonLookup lookup;
    for (auto& a : automata) lookup[a.name] = &a;
    if (!name.empty()) {
        if (const SystemExpr* e = find_system(name)) return elaborate(*e, lookup, guard);
        if (const ProbAutomaton* a = find_automaton(name)) return *a;
        throw Error(ErrorCode::UnknownName, "no system or automaton named '" + name + "'");
    }
    if (systems.size() == 1) return elaborate(systems[0].second, lookup, guard);
    if (systems.empty() && automata.size() == 1) return automata[0];
    if (systems.empty())
        throw Error(ErrorCode::UnknownName,
                    "no system declared and more than one automaton; name one");
    throw Error(ErrorCode::UnknownName,
                "more than one system declared; name the one to use");
}

Scheduler Bundle::build_scheduler(const SchedulerSrc& src) const {
    Scheduler xi;
    xi.kind = src.kind;
    xi.name = src.name;
    if (src.mode == ObservationMap::Mode::Strict) {
        xi.omega = ObservationMap::strict();
    } else {
        if (!spec)
            throw Error(ErrorCode::BadInput,
                        "scheduler '" + src.name +
                            "' uses collapse mode but the model has no spec block "
                            "(needed for the observe set)");
        xi.omega = ObservationMap::collapse(spec->act_o);
    }
    for (auto& [key, row] : src.rows) {
        if (!xi.table.emplace(key, row).second)
            throw Error(ErrorCode::BadInput,
                        "scheduler '" + src.name + "' has a duplicate key");
    }
    return xi;
}

PairMap Bundle::build_statemap(const StateMapSrc& src, int num_states) const {
    PairMap pm;
    pm.user_i = src.user_i;
    pm.user_j = src.user_j;
    pm.map.resize(static_cast<size_t>(num_states));
    for (int s = 0; s < num_states; ++s) pm.map[static_cast<size_t>(s)] = s;
    for (auto& [s, t] : src.entries) {
        if (s >= num_states || t >= num_states)
            throw Error(ErrorCode::BadInput,
                        "state map '" + src.name + "' mentions state " +
                            std::to_string(std::max(s, t)) + " but the system has " +
                            std::to_string(num_states) + " states");
        pm.map[static_cast<size_t>(s)] = t;
    }
    return pm;
}

// ---------------------------------------------------------------------------
// Entry points

Bundle parse_model(const std::string& text) {
    return Parser(tokenize(text)).parse();
}

std::string print_model(const Bundle& b) {
    std::string out = "format 1\n";
    for (auto& a : b.automata) {
        out += "\nautomaton " + a.name + " {\n";
        out += "  init " + std::to_string(a.init) + ";\n";
        for (int s = 0; s < a.num_states; ++s) {
            for (auto& t : a.trans[static_cast<size_t>(s)]) {
                out += "  " + std::to_string(s) + " -" + labels::show(t.label) +
                       "-> { ";
                bool first = true;
                for (auto& [tgt, p] : t.dist.entries()) {
                    if (!first) out += ", ";
                    first = false;
                    out += std::to_string(tgt) + ": " + frac(p);
                }
                out += " };\n";
            }
        }
        out += "}\n";
    }
    for (auto& [name, expr] : b.systems) {
        out += "\nsystem " + name + " = ";
        print_expr(expr, out);
        out += ";\n";
    }
    if (b.spec) {
        out += "\nspec {\n  users { ";
        for (size_t k = 0; k < b.spec->users.size(); ++k) {
            if (k) out += ", ";
            out += std::to_string(b.spec->users[k]);
        }
        out += " };\n";
        for (auto& [user, lab] : b.spec->markers)
            out += "  marker " + std::to_string(user) + " = " + labels::show(lab) +
                   ";\n";
        out += "  observe { ";
        bool first = true;
        for (Label l : b.spec->act_o) {
            if (!first) out += ", ";
            first = false;
            out += labels::show(l);
        }
        out += " };\n}\n";
    }
    for (auto& s : b.schedulers) {
        out += "\nscheduler " + s.name + " {\n";
        out += "  mode " + std::string(mode_name(s.mode)) + ";\n";
        out += "  kind " + std::string(kind_name(s.kind)) + ";\n";
        for (auto& [key, row] : s.rows) print_key_row(key, row, out);
        out += "}\n";
    }
    for (auto& m : b.statemaps) {
        out += "\nstatemap " + m.name + " pair " + std::to_string(m.user_i) + " " +
               std::to_string(m.user_j) + " {\n";
        for (auto& [s, t] : m.entries)
            out += "  " + std::to_string(s) + " -> " + std::to_string(t) + ";\n";
        out += "}\n";
    }
    return out;
}

std::string print_scheduler(const Scheduler& xi) {
    // Display names like "det#1" are not identifiers ('#' opens a comment);
    // fold them into ones the parser accepts.
    std::string name;
    for (char c : xi.name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
            name.push_back(c);
        else
            name.push_back('_');
    }
    if (name.empty())
        name = "xi";
    else if (std::isdigit(static_cast<unsigned char>(name.front())))
        name = "xi_" + name;
    std::string out = "scheduler " + name + " {\n";
    out += "  mode " + std::string(mode_name(xi.omega.mode)) + ";\n";
    out += "  kind " + std::string(kind_name(xi.kind)) + ";\n";
    for (auto& [key, row] : xi.table) print_key_row(key, row, out);
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// DOT rendering

namespace {

std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += "\"";
    return out;
}

std::string node_title(int s, const std::vector<std::string>& names) {
    if (s < static_cast<int>(names.size()) && !names[static_cast<size_t>(s)].empty())
        return names[static_cast<size_t>(s)];
    return std::to_string(s);
}

}  // namespace

std::string render_dot(const ProbAutomaton& a) {
    std::string out = "digraph " + dot_quote(a.name.empty() ? "pa" : a.name) + " {\n";
    out += "  rankdir=TB;\n  node [shape=circle];\n";
    out += "  __init [shape=none, label=\"\"];\n";
    for (int s = 0; s < a.num_states; ++s)
        out += "  s" + std::to_string(s) + " [label=" +
               dot_quote(node_title(s, a.state_names)) + "];\n";
    out += "  __init -> s" + std::to_string(a.init) + ";\n";
    for (int s = 0; s < a.num_states; ++s) {
        const auto& ts = a.trans[static_cast<size_t>(s)];
        for (size_t k = 0; k < ts.size(); ++k) {
            const Transition& t = ts[k];
            std::string label = dot_quote(labels::show(t.label));
            if (t.dist.support_size() == 1) {
                out += "  s" + std::to_string(s) + " -> s" +
                       std::to_string(t.dist.entries()[0].first) + " [label=" + label +
                       "];\n";
            } else {
                std::string mid = "p" + std::to_string(s) + "_" + std::to_string(k);
                out += "  " + mid + " [shape=point];\n";
                out += "  s" + std::to_string(s) + " -> " + mid + " [label=" + label +
                       ", arrowhead=none];\n";
                for (auto& [tgt, p] : t.dist.entries())
                    out += "  " + mid + " -> s" + std::to_string(tgt) + " [label=" +
                           dot_quote(frac(p)) + "];\n";
            }
        }
    }
    out += "}\n";
    return out;
}

std::string render_dot(const FullyProbAutomaton& f) {
    std::string out = "digraph " + dot_quote(f.name.empty() ? "fpa" : f.name) + " {\n";
    out += "  rankdir=TB;\n  node [shape=circle];\n";
    out += "  __init [shape=none, label=\"\"];\n";
    for (int s = 0; s < f.num_states; ++s) {
        const FpaStep& st = f.steps[static_cast<size_t>(s)];
        std::string attrs = "label=" + dot_quote(std::to_string(s));
        if (st.truncated) attrs += ", style=dashed";
        out += "  s" + std::to_string(s) + " [" + attrs + "];\n";
    }
    out += "  __init -> s" + std::to_string(f.init) + ";\n";
    for (int s = 0; s < f.num_states; ++s) {
        const FpaStep& st = f.steps[static_cast<size_t>(s)];
        if (st.branches.size() == 1 && st.branches[0].prob == 1) {
            out += "  s" + std::to_string(s) + " -> s" +
                   std::to_string(st.branches[0].target) + " [label=" +
                   dot_quote(labels::show(st.branches[0].label)) + "];\n";
        } else if (!st.branches.empty()) {
            std::string mid = "p" + std::to_string(s);
            out += "  " + mid + " [shape=point];\n";
            out += "  s" + std::to_string(s) + " -> " + mid + " [arrowhead=none];\n";
            for (auto& br : st.branches)
                out += "  " + mid + " -> s" + std::to_string(br.target) + " [label=" +
                       dot_quote(labels::show(br.label) + " " + frac(br.prob)) + "];\n";
        }
        if (st.halt_mass != 0) {
            std::string h = "h" + std::to_string(s);
            out += "  " + h + " [shape=none, label=" +
                   dot_quote("halt " + frac(st.halt_mass)) + "];\n";
            out += "  s" + std::to_string(s) + " -> " + h + " [style=dotted];\n";
        }
    }
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// Structural comparison

bool same_structure(const ProbAutomaton& a, const ProbAutomaton& b) {
    if (a.num_states != b.num_states || a.init != b.init) return false;
    for (int s = 0; s < a.num_states; ++s) {
        const auto& ta = a.trans[static_cast<size_t>(s)];
        const auto& tb = b.trans[static_cast<size_t>(s)];
        if (ta.size() != tb.size()) return false;
        for (size_t k = 0; k < ta.size(); ++k) {
            if (ta[k].label != tb[k].label || !(ta[k].dist == tb[k].dist) ||
                ta[k].moved != tb[k].moved)
                return false;
        }
    }
    return true;
}

namespace {

bool same_expr(const SystemExpr& a, const SystemExpr& b) {
    if (a.op != b.op || a.atom != b.atom || a.channels != b.channels ||
        a.labels != b.labels || a.children.size() != b.children.size())
        return false;
    for (size_t k = 0; k < a.children.size(); ++k)
        if (!same_expr(a.children[k], b.children[k])) return false;
    return true;
}

bool same_spec(const AnonymitySpec& a, const AnonymitySpec& b) {
    return a.users == b.users && a.markers == b.markers && a.act_o == b.act_o;
}

}  // namespace

bool same_bundle(const Bundle& a, const Bundle& b) {
    if (a.automata.size() != b.automata.size()) return false;
    for (size_t k = 0; k < a.automata.size(); ++k)
        if (!same_structure(a.automata[k], b.automata[k])) return false;
    if (a.systems.size() != b.systems.size()) return false;
    for (size_t k = 0; k < a.systems.size(); ++k) {
        if (a.systems[k].first != b.systems[k].first ||
            !same_expr(a.systems[k].second, b.systems[k].second))
            return false;
    }
    if (a.spec.has_value() != b.spec.has_value()) return false;
    if (a.spec && !same_spec(*a.spec, *b.spec)) return false;
    return a.schedulers == b.schedulers && a.statemaps == b.statemaps;
}

}  // namespace pam::dsl
