#include "pam/label.hpp"

#include <deque>
#include <mutex>
#include <tuple>
#include <map>

namespace pam::labels {

namespace {

struct Registry {
    std::mutex mu;
    std::deque<LabelData> table;
    std::map<std::tuple<std::string, Kind, std::string>, Label> index;
};

Registry& reg() {
    static Registry r;
    return r;
}

}  // namespace

Label get(std::string_view name, Kind kind, std::string_view tag) {
    auto& r = reg();
    std::scoped_lock lock(r.mu);
    auto key = std::make_tuple(std::string(name), kind, std::string(tag));
    auto it = r.index.find(key);
    if (it != r.index.end()) return it->second;
    Label id = static_cast<Label>(r.table.size());
    r.table.push_back({std::string(name), kind, std::string(tag)});
    r.index.emplace(std::move(key), id);
    return id;
}

Label tau(std::string_view tag) { return get("tau", Kind::Internal, tag); }

const LabelData& data(Label l) {
    auto& r = reg();
    std::scoped_lock lock(r.mu);
    return r.table.at(static_cast<size_t>(l));
}

std::string show(Label l) {
    const LabelData& d = data(l);
    switch (d.kind) {
        case Kind::Plain: return d.name;
        case Kind::Input: return d.name + "?";
        case Kind::Output: return d.name + "!";
        case Kind::Internal: return d.tag.empty() ? "tau" : "tau(" + d.tag + ")";
    }
    return d.name;
}

Label parse(std::string_view text) {
    if (text.empty()) return -1;
    auto ident = [](std::string_view s) {
        if (s.empty()) return false;
        for (char c : s) {
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_';
            if (!ok) return false;
        }
        return !(s[0] >= '0' && s[0] <= '9');
    };
    if (text == "tau") return tau();
    if (text.size() > 5 && text.substr(0, 4) == "tau(" && text.back() == ')') {
        std::string_view tag = text.substr(4, text.size() - 5);
        if (!ident(tag)) return -1;
        return tau(tag);
    }
    char last = text.back();
    if (last == '?' || last == '!') {
        std::string_view name = text.substr(0, text.size() - 1);
        if (!ident(name)) return -1;
        return get(name, last == '?' ? Kind::Input : Kind::Output);
    }
    if (!ident(text)) return -1;
    return get(text, Kind::Plain);
}

}  // namespace pam::labels
