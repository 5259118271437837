#pragma once

#include "pam/dsl.hpp"
#include "pam/rational.hpp"

#include <vector>

namespace pam::dc {

// Builds the dining-cryptographers bundle for n >= 3 (BadN otherwise):
// a Master that nondeterministically picks one of n+1 branches and notifies
// every cryptographer (payer first on payer branches), n fair Coins that
// signal their two adjacent cryptographers, and n Crypts that read their
// notification and two coins and announce agree/disagree. The closed system
// is seq(hide(sync(all components, handshake channels), coin flips)); the
// spec marks user i by the hidden notification tau(p_i) and observes the
// announcements. Ships the order123 scheduler (uniformly randomized master
// branch, announcements in cryptographer order) and, when the search
// succeeds, one marker-exchanging automorphism per user pair.
dsl::Bundle generate_dc(int n);

// Replaces the nondeterministic branch choice of the automaton named
// "Master" with an explicit prior: a fresh initial state takes a hidden
// probabilistic step into per-branch entry states, each performing its
// branch's original first transition. weights must have one entry per
// branch and sum to 1. Schedulers and state maps of the input bundle are
// dropped (they are keyed against the unmodified system); the spec block
// and system expressions carry over.
dsl::Bundle with_master_prior(const dsl::Bundle& b, const std::vector<Rational>& weights);

}  // namespace pam::dc
