#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace popmaj {

enum class Input : std::uint8_t { A, B };
enum class Opinion : std::uint8_t { A, B, T };
enum class Answer : std::uint8_t { Phi, T, A, B };
enum class Role : std::uint8_t { Resetting, Settled, Unsettled };
enum class Leader : std::uint8_t { F, L };

/// Bit 0 marks the left child (2i) as handed out, bit 1 the right child (2i+1).
inline constexpr std::uint8_t kLeftChild = 0b01;
inline constexpr std::uint8_t kRightChild = 0b10;

inline constexpr Answer to_answer(Input x) noexcept { return x == Input::A ? Answer::A : Answer::B; }

inline constexpr Answer to_answer(Opinion y) noexcept {
    switch (y) {
    case Opinion::A: return Answer::A;
    case Opinion::B: return Answer::B;
    default: return Answer::T;
    }
}

/// Protocol parameters. Everything but `n`, `t_rank` and `seed` is derived by
/// `Params::make`; verification builds overwrite the counter bounds with caps.
struct Params {
    std::uint32_t n = 2;
    std::uint32_t t_rank = 16;
    std::uint32_t r_max = 1;     ///< reset countdown start
    std::uint32_t w_max = 1;     ///< Unsettled patience
    std::uint32_t timer_max = 1; ///< 7(t_rank + 4)
    std::uint64_t seed = 0;

    static constexpr std::uint32_t kMaxAgents = (1u << 20) - 1;
    static constexpr std::uint32_t kMaxCounter = (1u << 21) - 1;
    static constexpr std::uint32_t kMaxTimer = (1u << 16) - 1;

    static std::uint32_t default_r_max(std::uint32_t n) {
        return static_cast<std::uint32_t>(std::ceil(60.0 * std::log(static_cast<double>(n))));
    }

    static std::uint32_t default_w_max(std::uint32_t n) {
        return std::max<std::uint32_t>(default_r_max(n), 10 * n);
    }

    static Params make(std::uint32_t n, std::uint32_t t_rank = 16, std::uint64_t seed = 0) {
        Params p;
        p.n = n;
        p.t_rank = t_rank;
        p.seed = seed;
        if (n >= 2) {
            p.r_max = default_r_max(n);
            p.w_max = default_w_max(n);
        }
        p.timer_max = 7 * (t_rank + 4);
        p.validate();
        return p;
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("n must be at least 2");
        if (n > kMaxAgents) throw std::invalid_argument("n too large");
        if (t_rank == 0) throw std::invalid_argument("t_rank must be positive");
        if (r_max == 0 || w_max == 0 || timer_max == 0)
            throw std::invalid_argument("counter bounds must be positive");
        if (r_max > kMaxCounter || w_max > kMaxCounter)
            throw std::invalid_argument("counter bound too large");
        if (timer_max > kMaxTimer) throw std::invalid_argument("timer bound too large");
    }

    /// Rank of the deciding agent, ceil(n/2).
    [[nodiscard]] std::uint32_t mid() const noexcept { return (n + 1) / 2; }

    /// Only the upper half of the reset countdown infects non-Resetting agents.
    [[nodiscard]] bool contagious(std::uint32_t resetcount) const noexcept {
        return 2ull * resetcount > r_max;
    }

    bool operator==(const Params&) const = default;
};

/// One agent's mutable state. Fields not used by the current role hold their
/// canonical zero (leader F, counters 0, rank 1, empty childmask).
struct AgentState {
    Role role = Role::Unsettled;
    Leader leader = Leader::F;
    std::uint32_t resetcount = 0;
    std::uint32_t waitcount = 0;
    std::uint32_t rank = 1;
    std::uint8_t childmask = 0;
    Answer answer = Answer::Phi;
    std::uint32_t timer = 0;

    bool operator==(const AgentState&) const = default;

    static AgentState resetting(Leader leader, std::uint32_t resetcount, Answer answer = Answer::Phi,
                                std::uint32_t timer = 0) {
        AgentState s;
        s.role = Role::Resetting;
        s.leader = leader;
        s.resetcount = resetcount;
        s.answer = answer;
        s.timer = timer;
        return s;
    }

    static AgentState settled(std::uint32_t rank, std::uint8_t childmask = 0, Answer answer = Answer::Phi,
                              std::uint32_t timer = 0) {
        AgentState s;
        s.role = Role::Settled;
        s.rank = rank;
        s.childmask = childmask;
        s.answer = answer;
        s.timer = timer;
        return s;
    }

    static AgentState unsettled(std::uint32_t waitcount, Answer answer = Answer::Phi, std::uint32_t timer = 0) {
        AgentState s;
        s.role = Role::Unsettled;
        s.waitcount = waitcount;
        s.answer = answer;
        s.timer = timer;
        return s;
    }

    /// Zero every field the role does not use.
    void canonicalize() noexcept {
        if (role != Role::Resetting) {
            leader = Leader::F;
            resetcount = 0;
        }
        if (role != Role::Unsettled) waitcount = 0;
        if (role != Role::Settled) {
            rank = 1;
            childmask = 0;
        }
    }

    [[nodiscard]] bool is_canonical() const noexcept {
        AgentState c = *this;
        c.canonicalize();
        return c == *this;
    }

    [[nodiscard]] bool in_range(const Params& p) const noexcept {
        return is_canonical() && resetcount <= p.r_max && waitcount <= p.w_max && rank >= 1 && rank <= p.n &&
               childmask <= 0b11 && timer <= p.timer_max;
    }

    /// Packs a canonical in-range state into 64 bits (role-exclusive counters
    /// share one slot). Injective for n < 2^20, counters < 2^21, timer < 2^16.
    [[nodiscard]] std::uint64_t key() const noexcept {
        const std::uint64_t counter = role == Role::Resetting ? resetcount : waitcount;
        return static_cast<std::uint64_t>(role) | (static_cast<std::uint64_t>(leader) << 2) |
               (static_cast<std::uint64_t>(answer) << 3) | (static_cast<std::uint64_t>(childmask) << 5) |
               (static_cast<std::uint64_t>(timer) << 7) | (static_cast<std::uint64_t>(rank) << 23) |
               (counter << 43);
    }
};

struct InteractionPair {
    std::uint32_t initiator = 0;
    std::uint32_t responder = 1;
    bool operator==(const InteractionPair&) const = default;
};

/// Inputs are fixed at construction; only agent states can be changed.
class Configuration {
  public:
    Configuration() = default;
    Configuration(std::vector<Input> inputs, std::vector<AgentState> states)
        : inputs_(std::move(inputs)), states_(std::move(states)) {
        if (inputs_.size() != states_.size())
            throw std::invalid_argument("inputs and states must have the same length");
    }

    [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }
    [[nodiscard]] const std::vector<Input>& inputs() const noexcept { return inputs_; }
    [[nodiscard]] const std::vector<AgentState>& states() const noexcept { return states_; }
    [[nodiscard]] Input input(std::size_t i) const { return inputs_.at(i); }
    [[nodiscard]] const AgentState& state(std::size_t i) const { return states_.at(i); }
    AgentState& state(std::size_t i) { return states_.at(i); }

    /// Throws if the configuration does not fit `p`.
    void validate(const Params& p) const {
        if (states_.size() != p.n) throw std::invalid_argument("configuration size does not match n");
        for (std::size_t i = 0; i < states_.size(); ++i)
            if (!states_[i].in_range(p))
                throw std::invalid_argument("agent " + std::to_string(i) + " state out of range");
    }

    bool operator==(const Configuration&) const = default;

  private:
    std::vector<Input> inputs_;
    std::vector<AgentState> states_;
};

/// Canonical single-agent state space: Resetting x {L,F} x [0..R] + Settled x
/// [1..n] x childmask + Unsettled x [0..W], each crossed with answer x timer.
/// `state_at` enumerates it in a fixed order.
class StateSpace {
  public:
    explicit StateSpace(const Params& p) : p_(p) {}

    [[nodiscard]] std::uint64_t role_part() const noexcept {
        return 2ull * (p_.r_max + 1) + 4ull * p_.n + (p_.w_max + 1);
    }
    [[nodiscard]] std::uint64_t size() const noexcept { return role_part() * 4ull * (p_.timer_max + 1); }

    [[nodiscard]] AgentState state_at(std::uint64_t index) const {
        if (index >= size()) throw std::out_of_range("state index");
        const std::uint64_t timers = p_.timer_max + 1;
        AgentState s;
        s.timer = static_cast<std::uint32_t>(index % timers);
        index /= timers;
        s.answer = static_cast<Answer>(index % 4);
        index /= 4;
        const std::uint64_t resetting = 2ull * (p_.r_max + 1);
        const std::uint64_t settled = 4ull * p_.n;
        if (index < resetting) {
            s.role = Role::Resetting;
            s.leader = index % 2 == 0 ? Leader::F : Leader::L;
            s.resetcount = static_cast<std::uint32_t>(index / 2);
        } else if (index < resetting + settled) {
            index -= resetting;
            s.role = Role::Settled;
            s.childmask = static_cast<std::uint8_t>(index % 4);
            s.rank = static_cast<std::uint32_t>(index / 4) + 1;
        } else {
            s.role = Role::Unsettled;
            s.waitcount = static_cast<std::uint32_t>(index - resetting - settled);
        }
        return s;
    }

  private:
    Params p_;
};


/// Output map: Phi reads as a tie, everything else is reported as is.
inline constexpr Opinion output(const AgentState& s) noexcept {
    switch (s.answer) {
    case Answer::A: return Opinion::A;
    case Answer::B: return Opinion::B;
    default: return Opinion::T;
    }
}

inline Opinion majority_oracle(const std::vector<Input>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("majority of an empty population");
    std::size_t a = 0;
    for (Input x : inputs) a += x == Input::A;
    const std::size_t b = inputs.size() - a;
    if (a > b) return Opinion::A;
    if (b > a) return Opinion::B;
    return Opinion::T;
}

inline std::string_view to_string(Input x) noexcept { return x == Input::A ? "A" : "B"; }

inline std::string_view to_string(Opinion y) noexcept {
    switch (y) {
    case Opinion::A: return "A";
    case Opinion::B: return "B";
    default: return "T";
    }
}

inline std::string_view to_string(Answer a) noexcept {
    switch (a) {
    case Answer::Phi: return "Phi";
    case Answer::T: return "T";
    case Answer::A: return "A";
    default: return "B";
    }
}

inline std::string_view to_string(Role r) noexcept {
    switch (r) {
    case Role::Resetting: return "Resetting";
    case Role::Settled: return "Settled";
    default: return "Unsettled";
    }
}

inline std::string_view to_string(Leader l) noexcept { return l == Leader::L ? "L" : "F"; }

/// Parses a string of 'A'/'B' characters.
inline std::vector<Input> parse_inputs(std::string_view text) {
    std::vector<Input> out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == 'A' || c == 'a')
            out.push_back(Input::A);
        else if (c == 'B' || c == 'b')
            out.push_back(Input::B);
        else
            throw std::invalid_argument("inputs must consist of A and B");
    }
    return out;
}

inline std::vector<Input> make_inputs(std::uint32_t n, std::uint32_t num_a) {
    if (num_a > n) throw std::invalid_argument("num_A exceeds n");
    std::vector<Input> out(n, Input::B);
    for (std::uint32_t i = 0; i < num_a; ++i) out[i] = Input::A;
    return out;
}

} // namespace popmaj
