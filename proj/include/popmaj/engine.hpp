#pragma once

// Population-protocol machinery: the joint transition function, schedulers,
// the execution loop and silence detection.

#include "popmaj/majority.hpp"
#include "popmaj/ranking.hpp"
#include "popmaj/rng.hpp"
#include "popmaj/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace popmaj::engine {

struct Interaction {
    AgentState first;
    AgentState second;
    ranking::ResetOutcome outcome;
};

/// Full transition: ranking layer, then the majority layer, in line order.
/// Assumes in-range states; see `delta` for the checked entry point.
inline Interaction interact(const AgentState& s0, Input x0, const AgentState& s1, Input x1, const Params& p) noexcept {
    const ranking::RankingResult r = ranking::delta_ranking(s0, s1, p);
    const majority::LayerResult m = majority::apply_majority_layer(s0, s1, r.first, r.second, x0, x1, p);
    ranking::ResetOutcome outcome = r.outcome;
    if (m.propagation_reset) outcome = ranking::ResetOutcome::because(ranking::ResetCause::MajorityLayer);
    return {m.first, m.second, outcome};
}

inline std::pair<AgentState, AgentState> delta(const AgentState& s0, Input x0, const AgentState& s1, Input x1,
                                               const Params& p) {
    if (!s0.in_range(p) || !s1.in_range(p)) throw std::invalid_argument("delta: state outside declared ranges");
    const Interaction r = interact(s0, x0, s1, x1, p);
    return {r.first, r.second};
}

/// Uniform random scheduler over ordered pairs of distinct agents.
class UniformScheduler {
  public:
    UniformScheduler(std::uint32_t n, std::uint64_t seed) : n_(n), eng_(seed) {
        if (n < 2) throw std::invalid_argument("uniform scheduler needs n >= 2");
    }

    std::optional<InteractionPair> next() {
        const auto u = static_cast<std::uint32_t>(draw_below(eng_, n_));
        auto v = static_cast<std::uint32_t>(draw_below(eng_, n_ - 1));
        if (v >= u) ++v;
        return InteractionPair{u, v};
    }

  private:
    std::uint32_t n_;
    Engine eng_;
};

/// Replays a fixed pair list once.
class ScriptedScheduler {
  public:
    explicit ScriptedScheduler(std::vector<InteractionPair> pairs) : pairs_(std::move(pairs)) {}

    std::optional<InteractionPair> next() {
        if (pos_ >= pairs_.size()) return std::nullopt;
        return pairs_[pos_++];
    }

  private:
    std::vector<InteractionPair> pairs_;
    std::size_t pos_ = 0;
};

inline void check_pair(const InteractionPair& pair, std::size_t n) {
    if (pair.initiator == pair.responder || pair.initiator >= n || pair.responder >= n)
        throw std::invalid_argument("invalid interaction pair");
}

/// What one interaction did to the configuration.
struct StepEffect {
    AgentState before0;
    AgentState before1;
    bool changed = false;
    ranking::ResetOutcome outcome;
};

/// In-place step; only the two named agents are touched.
inline StepEffect apply(Configuration& c, const InteractionPair& pair, const Params& p) {
    check_pair(pair, c.size());
    AgentState& a = c.state(pair.initiator);
    AgentState& b = c.state(pair.responder);
    StepEffect eff{a, b, false, {}};
    const Interaction r = interact(a, c.input(pair.initiator), b, c.input(pair.responder), p);
    eff.changed = !(r.first == a) || !(r.second == b);
    eff.outcome = r.outcome;
    a = r.first;
    b = r.second;
    return eff;
}

inline Configuration step(Configuration c, const InteractionPair& pair, const Params& p) {
    apply(c, pair, p);
    return c;
}

/// Exact silence: no ordered pair changes any state. O(n^2) transitions.
inline bool is_silent(const Configuration& c, const Params& p) {
    const std::size_t n = c.size();
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            const Interaction r = interact(c.state(u), c.input(u), c.state(v), c.input(v), p);
            if (!(r.first == c.state(u)) || !(r.second == c.state(v))) return false;
        }
    return true;
}

struct RunStats {
    std::uint64_t interactions = 0; ///< interactions executed
    bool silenced = false;
    std::uint64_t silence_index = 0; ///< interactions before the first silent configuration
    double parallel_time = 0.0;      ///< silence_index / n when silenced, else interactions / n
    std::uint64_t resets = 0;        ///< interactions that triggered a reset
    bool exhausted = false;          ///< scheduler ran dry before the budget
};

struct NoObserver {
    void operator()(std::uint64_t, const Configuration&, const InteractionPair&, const StepEffect&,
                    const majority::PhaseTracker&) const noexcept {}
};

/// Runs until the configuration is silent, the budget is spent or the
/// scheduler ends. Silence is tracked incrementally, so the reported index is
/// exact for every n. The observer sees every interaction after it is applied.
template <class Scheduler, class Observer = NoObserver>
RunStats run(Configuration& c, const Params& p, Scheduler& sched, std::uint64_t max_interactions,
             Observer&& observe = {}) {
    if (max_interactions == 0) throw std::invalid_argument("max_interactions must be positive");
    c.validate(p);
    majority::PhaseTracker tracker(c, p);
    RunStats st;
    auto finish = [&](bool silent) {
        st.silenced = silent;
        st.silence_index = silent ? st.interactions : 0;
        st.parallel_time = static_cast<double>(st.interactions) / p.n;
        return st;
    };
    if (tracker.silent()) return finish(true);
    while (st.interactions < max_interactions) {
        const std::optional<InteractionPair> pair = sched.next();
        if (!pair) {
            st.exhausted = true;
            return finish(false);
        }
        const StepEffect eff = apply(c, *pair, p);
        ++st.interactions;
        if (eff.outcome.triggered) ++st.resets;
        if (eff.changed) {
            tracker.update(pair->initiator, eff.before0, c.state(pair->initiator));
            tracker.update(pair->responder, eff.before1, c.state(pair->responder));
        }
        observe(st.interactions, c, *pair, eff, tracker);
        if (eff.changed && tracker.silent()) return finish(true);
    }
    return finish(false);
}

/// Convenience overload on a copy.
template <class Scheduler>
std::pair<Configuration, RunStats> run_copy(Configuration c, const Params& p, Scheduler& sched,
                                            std::uint64_t max_interactions) {
    RunStats st = run(c, p, sched, max_interactions);
    return {std::move(c), st};
}

} // namespace popmaj::engine
