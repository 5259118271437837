#pragma once

#include "pam/error.hpp"
#include "pam/rational.hpp"

#include <algorithm>
#include <initializer_list>
#include <utility>
#include <vector>

namespace pam {

// Discrete probability distribution over dense integer outcome ids with
// exact rational masses. Entries are the support (all strictly positive),
// kept sorted by outcome for canonical comparison, and sum to exactly 1.
class Distribution {
  public:
    using Entry = std::pair<int, Rational>;

    Distribution() = default;

    // Validating factory: drops zero entries, rejects negative mass and
    // totals different from 1.
    static Distribution make(std::vector<Entry> entries) {
        std::vector<Entry> kept;
        Rational total = 0;
        for (auto& [outcome, mass] : entries) {
            if (mass < 0) throw Error(ErrorCode::NegativeMass, "negative probability mass");
            if (mass == 0) continue;
            total += mass;
            kept.emplace_back(outcome, mass);
        }
        if (total != 1)
            throw Error(ErrorCode::SumNotOne,
                        "distribution mass sums to " + to_string(total) + ", expected 1");
        std::sort(kept.begin(), kept.end());
        for (size_t i = 1; i < kept.size(); ++i)
            if (kept[i - 1].first == kept[i].first)
                throw Error(ErrorCode::SumNotOne, "duplicate outcome in distribution");
        Distribution d;
        d.entries_ = std::move(kept);
        return d;
    }

    static Distribution dirac(int outcome) { return make({{outcome, 1}}); }

    const std::vector<Entry>& entries() const { return entries_; }
    size_t support_size() const { return entries_.size(); }

    Rational mass(int outcome) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), outcome,
                                   [](const Entry& e, int o) { return e.first < o; });
        if (it != entries_.end() && it->first == outcome) return it->second;
        return 0;
    }

    // The image distribution under an outcome renaming (must be injective
    // on the support to preserve distribution-hood; merging is allowed and
    // masses add, which composition's tuple reindexing never triggers).
    template <typename F>
    Distribution map(F&& f) const {
        std::vector<Entry> out;
        out.reserve(entries_.size());
        for (auto& [o, p] : entries_) out.emplace_back(f(o), p);
        std::sort(out.begin(), out.end());
        std::vector<Entry> merged;
        for (auto& e : out) {
            if (!merged.empty() && merged.back().first == e.first)
                merged.back().second += e.second;
            else
                merged.push_back(e);
        }
        Distribution d;
        d.entries_ = std::move(merged);
        return d;
    }

    friend bool operator==(const Distribution& a, const Distribution& b) {
        return a.entries_ == b.entries_;
    }

  private:
    std::vector<Entry> entries_;
};

// Sub-probability distribution: positive entries plus an explicit halt mass,
// together summing to exactly 1. This is the D(S+1) construction resolving
// nondeterminism with the option of stopping; schedulers use it for rows and
// unfoldings use it to account for withheld mass.
struct SubDistribution {
    std::vector<std::pair<int, Rational>> entries;  // sorted, masses > 0
    Rational halt_mass = 0;

    static SubDistribution make(std::vector<std::pair<int, Rational>> entries,
                                Rational halt = 0) {
        Rational total = halt;
        if (halt < 0) throw Error(ErrorCode::NegativeMass, "negative halt mass");
        std::vector<std::pair<int, Rational>> kept;
        for (auto& [o, p] : entries) {
            if (p < 0) throw Error(ErrorCode::NegativeMass, "negative probability mass");
            if (p == 0) continue;
            total += p;
            kept.emplace_back(o, p);
        }
        if (total != 1)
            throw Error(ErrorCode::SumNotOne,
                        "sub-distribution mass sums to " + to_string(total) + ", expected 1");
        std::sort(kept.begin(), kept.end());
        SubDistribution s;
        s.entries = std::move(kept);
        s.halt_mass = halt;
        return s;
    }

    static SubDistribution all_halt() {
        SubDistribution s;
        s.halt_mass = 1;
        return s;
    }

    friend bool operator==(const SubDistribution& a, const SubDistribution& b) {
        return a.halt_mass == b.halt_mass && a.entries == b.entries;
    }
};

}  // namespace pam
