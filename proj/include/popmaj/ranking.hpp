#pragma once

// Self-stabilizing ranking layer: inconsistency-triggered global reset with
// leader election, followed by binary-tree rank assignment.
//
// Rule order within one interaction (rule 1 ends evaluation, the others
// apply in sequence):
//   1. two Settled agents with the same rank both start a reset;
//   2. reset propagation: Resetting agents that enter with resetcount 0 exit,
//      two Resetting agents adopt max(c0, c1) - 1 and duel for leadership, a
//      Resetting agent in the upper half of its countdown infects the other;
//   3. exit: L becomes Settled rank 1, F becomes Unsettled with a full wait;
//   4. a Settled agent of rank i hands out rank 2i, then 2i+1 (if <= n);
//   5. an Unsettled agent left untouched by 2-4 loses patience and restarts
//      the reset when its waitcount runs out.

#include "popmaj/types.hpp"

#include <utility>

namespace popmaj::ranking {

enum class ResetCause : std::uint8_t { None, RankConflict, WaitTimeout, MajorityLayer };

struct ResetOutcome {
    bool triggered = false;
    ResetCause by = ResetCause::None;

    static ResetOutcome none() noexcept { return {}; }
    static ResetOutcome because(ResetCause cause) noexcept { return {true, cause}; }
    bool operator==(const ResetOutcome&) const = default;
};

inline std::string_view to_string(ResetCause c) noexcept {
    switch (c) {
    case ResetCause::RankConflict: return "RankConflict";
    case ResetCause::WaitTimeout: return "WaitTimeout";
    case ResetCause::MajorityLayer: return "MajorityLayer";
    default: return "None";
    }
}

/// (Resetting, L, R_max); answer and timer are left to the caller.
inline AgentState trigger_reset(AgentState s, const Params& p) noexcept {
    s.role = Role::Resetting;
    s.leader = Leader::L;
    s.resetcount = p.r_max;
    s.canonicalize();
    return s;
}

struct RankingResult {
    AgentState first;
    AgentState second;
    ResetOutcome outcome;
};

namespace detail {

inline void exit_reset(AgentState& s, const Params& p) noexcept {
    if (s.leader == Leader::L) {
        s.role = Role::Settled;
        s.rank = 1;
        s.childmask = 0;
    } else {
        s.role = Role::Unsettled;
        s.waitcount = p.w_max;
    }
    s.canonicalize();
}

/// Returns true if `child` received a rank from `parent`.
inline bool try_assign(AgentState& parent, AgentState& child, const Params& p) noexcept {
    const std::uint64_t left = 2ull * parent.rank;
    std::uint64_t give = 0;
    if (!(parent.childmask & kLeftChild) && left <= p.n) {
        parent.childmask |= kLeftChild;
        give = left;
    } else if (!(parent.childmask & kRightChild) && left + 1 <= p.n) {
        parent.childmask |= kRightChild;
        give = left + 1;
    } else {
        return false;
    }
    child.role = Role::Settled;
    child.rank = static_cast<std::uint32_t>(give);
    child.childmask = 0;
    child.canonicalize();
    return true;
}

} // namespace detail

/// Ranking transition for (initiator, responder). Inputs never influence it.
inline RankingResult delta_ranking(AgentState s0, AgentState s1, const Params& p) noexcept {
    // 1. rank conflict
    if (s0.role == Role::Settled && s1.role == Role::Settled && s0.rank == s1.rank) {
        return {trigger_reset(s0, p), trigger_reset(s1, p), ResetOutcome::because(ResetCause::RankConflict)};
    }

    AgentState* s[2] = {&s0, &s1};
    bool touched[2] = {false, false};
    bool exiting[2] = {false, false};

    // 2. reset propagation
    const bool r0 = s0.role == Role::Resetting;
    const bool r1 = s1.role == Role::Resetting;
    if (r0 && r1) {
        const std::uint32_t top = std::max(s0.resetcount, s1.resetcount);
        const std::uint32_t next = top > 0 ? top - 1 : 0;
        exiting[0] = s0.resetcount == 0 && next == 0;
        exiting[1] = s1.resetcount == 0 && next == 0;
        s0.resetcount = s1.resetcount = next;
        if (s0.leader == Leader::L && s1.leader == Leader::L) s1.leader = Leader::F;
        touched[0] = touched[1] = true;
    } else if (r0 || r1) {
        const int r = r0 ? 0 : 1;
        AgentState& resetter = *s[r];
        AgentState& other = *s[1 - r];
        touched[r] = true;
        if (resetter.resetcount == 0) {
            exiting[r] = true;
        } else if (p.contagious(resetter.resetcount)) {
            --resetter.resetcount;
            other.role = Role::Resetting;
            other.leader = Leader::F;
            other.resetcount = resetter.resetcount;
            other.canonicalize();
            touched[1 - r] = true;
        } else {
            --resetter.resetcount;
        }
    }

    // 3. exit
    for (int i = 0; i < 2; ++i)
        if (exiting[i]) detail::exit_reset(*s[i], p);

    // 4. rank assignment
    for (int i = 0; i < 2; ++i) {
        AgentState& parent = *s[i];
        AgentState& child = *s[1 - i];
        if (parent.role == Role::Settled && child.role == Role::Unsettled) {
            if (detail::try_assign(parent, child, p)) touched[0] = touched[1] = true;
            break;
        }
    }

    // 5. wait timeout
    ResetOutcome outcome;
    for (int i = 0; i < 2; ++i) {
        AgentState& u = *s[i];
        if (u.role != Role::Unsettled || touched[i]) continue;
        if (u.waitcount > 0) --u.waitcount;
        if (u.waitcount == 0) {
            u = trigger_reset(u, p);
            outcome = ResetOutcome::because(ResetCause::WaitTimeout);
        }
    }
    return {s0, s1, outcome};
}

inline std::pair<AgentState, AgentState> delta_ranking_states(const AgentState& s0, const AgentState& s1,
                                                              const Params& p) noexcept {
    auto r = delta_ranking(s0, s1, p);
    return {r.first, r.second};
}

/// Every agent Settled with pairwise-distinct ranks.
inline bool detect_all_settled(const Configuration& c) {
    std::vector<bool> seen(c.size() + 1, false);
    for (const auto& s : c.states()) {
        if (s.role != Role::Settled) return false;
        if (s.rank == 0 || s.rank > c.size() || seen[s.rank]) return false;
        seen[s.rank] = true;
    }
    return true;
}

} // namespace popmaj::ranking
