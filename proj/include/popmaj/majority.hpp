#pragma once

// Exact-majority layer, run after the ranking layer in every interaction:
// answer clearing on reset entry, timer arming, answer epidemic among
// Resetting agents, input-ordered swapping, median decision and the
// timer-gated propagation reset.

#include "popmaj/ranking.hpp"
#include "popmaj/types.hpp"

#include <algorithm>
#include <optional>
#include <utility>

namespace popmaj::majority {

/// Answers written by a decision; an empty slot means "unchanged".
struct Decision {
    std::optional<Answer> first;
    std::optional<Answer> second;

    [[nodiscard]] bool no_op() const noexcept { return !first && !second; }
    bool operator==(const Decision&) const = default;
};

/// Median decision for two Settled agents given (rank, input) of each.
inline Decision decide(std::uint32_t rank0, Input x0, std::uint32_t rank1, Input x1, std::uint32_t n) noexcept {
    Decision d;
    if (n % 2 == 0) {
        const std::uint32_t lo = n / 2;
        const bool fwd = rank0 == lo && rank1 == lo + 1;
        const bool bwd = rank1 == lo && rank0 == lo + 1;
        if (fwd || bwd) {
            const Input xi = fwd ? x0 : x1;
            const Answer a = x0 == x1 ? to_answer(xi) : Answer::T;
            d.first = a;
            d.second = a;
        }
    } else {
        const std::uint32_t mid = (n + 1) / 2;
        if (rank0 == mid)
            d.first = to_answer(x0);
        else if (rank1 == mid)
            d.second = to_answer(x1);
    }
    return d;
}

struct LayerResult {
    AgentState first;
    AgentState second;
    bool propagation_reset = false;
};

/// Applies the majority layer. `before*` are the states entering the
/// interaction, `after*` the states produced by the ranking layer.
inline LayerResult apply_majority_layer(const AgentState& before0, const AgentState& before1, AgentState after0,
                                        AgentState after1, Input x0, Input x1, const Params& p) noexcept {
    AgentState* a[2] = {&after0, &after1};
    const AgentState* b[2] = {&before0, &before1};
    const std::uint32_t mid = p.mid();

    for (int i = 0; i < 2; ++i) {
        if (a[i]->role == Role::Resetting && b[i]->role != Role::Resetting) a[i]->answer = Answer::Phi;
        if (a[i]->role == Role::Settled && b[i]->role != Role::Settled && a[i]->rank == mid)
            a[i]->timer = p.timer_max;
    }

    if (after0.role == Role::Resetting && after1.role == Role::Resetting) {
        if (after0.answer == Answer::Phi && after1.answer != Answer::Phi)
            after0.answer = after1.answer;
        else if (after1.answer == Answer::Phi && after0.answer != Answer::Phi)
            after1.answer = after0.answer;
    }

    LayerResult out;
    if (after0.role == Role::Settled && after1.role == Role::Settled) {
        if (after0.rank < after1.rank && x0 == Input::B && x1 == Input::A) std::swap(after0, after1);

        const Decision d = decide(after0.rank, x0, after1.rank, x1, p.n);
        if (d.first) after0.answer = *d.first;
        if (d.second) after1.answer = *d.second;

        for (int i = 0; i < 2; ++i) {
            AgentState& me = *a[i];
            AgentState& other = *a[1 - i];
            if (me.rank != mid) continue;
            if (other.rank == p.n && me.timer > 0) --me.timer;
            if (me.timer == 0 && me.answer != other.answer) {
                other.answer = me.answer;
                me = ranking::trigger_reset(me, p);
                other = ranking::trigger_reset(other, p);
                out.propagation_reset = true;
            }
            break;
        }
    }
    out.first = after0;
    out.second = after1;
    return out;
}

/// The configuration-set predicates used to stage stabilization.
struct PhasePredicates {
    bool in_S_rank = false;
    bool in_S_swap = false;
    bool in_T_swap = false;
    bool in_S_dec = false;
    bool in_S_out = false;
    bool in_S_tim = false;
    bool in_S_em = false;
    bool operator==(const PhasePredicates&) const = default;
};

/// Timer floor defining T_swap.
inline constexpr std::uint32_t kTSwapTimer = 28;

/// Direct O(n) evaluation of every predicate.
inline PhasePredicates phase(const Configuration& c, const Params& p) {
    PhasePredicates ph;
    if (!ranking::detect_all_settled(c)) return ph;
    ph.in_S_rank = true;

    const std::vector<Input>& in = c.inputs();
    const Answer want = to_answer(majority_oracle(in));
    std::uint32_t max_a = 0;
    std::uint32_t min_b = p.n + 1;
    bool all_right = true;
    const AgentState* median = nullptr;
    for (std::size_t v = 0; v < c.size(); ++v) {
        const AgentState& s = c.state(v);
        if (in[v] == Input::A)
            max_a = std::max(max_a, s.rank);
        else
            min_b = std::min(min_b, s.rank);
        if (s.answer != want) all_right = false;
        if (s.rank == p.mid()) median = &s;
    }
    ph.in_S_swap = max_a < min_b;
    ph.in_T_swap = median != nullptr && median->timer >= kTSwapTimer;
    ph.in_S_dec = ph.in_S_swap && median != nullptr && median->answer == want;
    ph.in_S_out = all_right;
    ph.in_S_tim = ph.in_S_swap && ph.in_S_out;
    ph.in_S_em = ph.in_S_tim && median != nullptr && median->timer == 0;
    return ph;
}

/// Fast silence predicate: membership in S_em.
inline bool is_silent_shape(const Configuration& c, const Params& p) { return phase(c, p).in_S_em; }

/// Number of (A-input, B-input) agent pairs, both Settled, whose B agent holds
/// the lower rank.
inline std::uint64_t misordered_pairs(const Configuration& c) {
    std::vector<std::uint32_t> a_ranks, b_ranks;
    for (std::size_t v = 0; v < c.size(); ++v) {
        const AgentState& s = c.state(v);
        if (s.role != Role::Settled) continue;
        (c.input(v) == Input::A ? a_ranks : b_ranks).push_back(s.rank);
    }
    std::sort(b_ranks.begin(), b_ranks.end());
    std::uint64_t count = 0;
    for (std::uint32_t r : a_ranks)
        count += static_cast<std::uint64_t>(std::lower_bound(b_ranks.begin(), b_ranks.end(), r) - b_ranks.begin());
    return count;
}

/// Maintains the phase predicates under single-agent updates in O(1).
class PhaseTracker {
  public:
    PhaseTracker(const Configuration& c, const Params& p)
        : mid_(p.mid()), inputs_(c.inputs()), rank_count_(p.n + 1, 0), bad_ranks_(p.n) {
        for (Input x : inputs_) num_a_ += x == Input::A;
        want_ = to_answer(majority_oracle(inputs_));
        for (std::size_t v = 0; v < c.size(); ++v) add(v, c.state(v));
    }

    /// Replace agent v's contribution `before` with `after`.
    void update(std::size_t v, const AgentState& before, const AgentState& after) noexcept {
        remove(v, before);
        add(v, after);
    }

    [[nodiscard]] PhasePredicates predicates() const noexcept {
        PhasePredicates ph;
        ph.in_S_rank = bad_ranks_ == 0;
        if (!ph.in_S_rank) return ph;
        ph.in_S_swap = a_low_ == num_a_;
        ph.in_T_swap = mid_ge_floor_ > 0;
        ph.in_S_dec = ph.in_S_swap && mid_wrong_ == 0;
        ph.in_S_out = wrong_ == 0;
        ph.in_S_tim = ph.in_S_swap && ph.in_S_out;
        ph.in_S_em = ph.in_S_tim && mid_timer_sum_ == 0;
        return ph;
    }

    [[nodiscard]] bool silent() const noexcept {
        return bad_ranks_ == 0 && a_low_ == num_a_ && wrong_ == 0 && mid_timer_sum_ == 0;
    }

  private:
    void bump_rank(std::uint32_t r, int delta) noexcept {
        const std::uint32_t old = rank_count_[r];
        const std::uint32_t now = static_cast<std::uint32_t>(static_cast<int>(old) + delta);
        rank_count_[r] = now;
        if (old == 1 && now != 1) ++bad_ranks_;
        if (old != 1 && now == 1) --bad_ranks_;
    }

    void apply(std::size_t v, const AgentState& s, int sign) noexcept {
        if (s.answer != want_) wrong_ += sign;
        if (s.role != Role::Settled) return;
        bump_rank(s.rank, sign);
        if (inputs_[v] == Input::A && s.rank <= num_a_) a_low_ += sign;
        if (s.rank == mid_) {
            mid_timer_sum_ += sign * static_cast<std::int64_t>(s.timer);
            if (s.answer != want_) mid_wrong_ += sign;
            if (s.timer >= kTSwapTimer) mid_ge_floor_ += sign;
        }
    }

    void add(std::size_t v, const AgentState& s) noexcept { apply(v, s, +1); }
    void remove(std::size_t v, const AgentState& s) noexcept { apply(v, s, -1); }

    std::uint32_t mid_;
    std::vector<Input> inputs_;
    std::uint32_t num_a_ = 0;
    Answer want_ = Answer::T;
    std::vector<std::uint32_t> rank_count_;
    std::int64_t bad_ranks_;
    std::int64_t a_low_ = 0;
    std::int64_t wrong_ = 0;
    std::int64_t mid_timer_sum_ = 0;
    std::int64_t mid_wrong_ = 0;
    std::int64_t mid_ge_floor_ = 0;
};

} // namespace popmaj::majority
