#pragma once

// Bounded exhaustive verification at tiny n. Counters are capped so the
// configuration space is finite; the protocol rules read the caps through
// Params exactly as they read the full-size bounds.
//
// The configuration digraph has one node per configuration up to permutation
// of agents with equal input, and one edge per ordered agent pair. Under the
// uniform scheduler every execution ends in a terminal strongly connected
// component with probability 1, so self-stabilization holds iff every
// terminal component is a single silent configuration with correct outputs.

#include "popmaj/engine.hpp"
#include "popmaj/majority.hpp"
#include "popmaj/snapshot.hpp"
#include "popmaj/types.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace popmaj::verifier {

struct VerifierCaps {
    std::uint32_t reset = 1;
    std::uint32_t wait = 1;
    std::uint32_t timer = 1;

    void validate() const {
        if (reset == 0 || wait == 0 || timer == 0) throw std::invalid_argument("caps must be >= 1");
    }
    bool operator==(const VerifierCaps&) const = default;
};

class StateSpaceTooLarge : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// |states|^n must stay below this.
inline constexpr std::uint64_t kMaxConfigurations = 50'000'000;

inline Params capped_params(std::uint32_t n, const VerifierCaps& caps) {
    caps.validate();
    Params p = Params::make(n);
    p.r_max = caps.reset;
    p.w_max = caps.wait;
    p.timer_max = caps.timer;
    p.validate();
    return p;
}

inline std::vector<AgentState> enumerate_states(std::uint32_t n, const VerifierCaps& caps) {
    const StateSpace space(capped_params(n, caps));
    std::vector<AgentState> out;
    out.reserve(space.size());
    for (std::uint64_t i = 0; i < space.size(); ++i) out.push_back(space.state_at(i));
    return out;
}

using Transition =
    std::function<engine::Interaction(const AgentState&, Input, const AgentState&, Input, const Params&)>;

struct Counterexample {
    Configuration start;
    std::vector<InteractionPair> path;
    std::string reason;
};

struct VerifierReport {
    std::uint32_t n = 0;
    std::vector<Input> inputs;
    VerifierCaps caps;
    std::uint64_t state_count = 0;
    std::uint64_t reachable_count = 0;
    std::uint64_t edge_count = 0;
    std::uint64_t terminal_scc_count = 0;
    bool all_terminal_silent_correct = false;
    std::vector<std::string> bad_silent_configs;
    std::optional<Counterexample> counterexample;
    std::set<std::vector<Opinion>> terminal_outputs;
};

namespace detail {

inline std::string inline_config(const Configuration& c) {
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) out += ';';
        out += snapshot::format_agent(c.input(i), c.state(i));
    }
    return out;
}

/// Configurations with agents sorted as [A-inputs..., B-inputs...], each
/// group in nondecreasing state index; encoded base |S| into one integer.
class ConfigSpace {
  public:
    ConfigSpace(std::uint32_t n, std::vector<Input> inputs, const VerifierCaps& caps, Transition delta = engine::interact)
        : n_(n), params_(capped_params(n, caps)), states_(enumerate_states(n, caps)), delta_(std::move(delta)) {
        if (inputs.size() != n) throw std::invalid_argument("inputs length must equal n");
        for (Input x : inputs) num_a_ += x == Input::A;
        inputs_ = make_inputs(n, num_a_);
        radix_ = states_.size();
        long double total = 1;
        for (std::uint32_t i = 0; i < n; ++i) total *= static_cast<long double>(radix_);
        if (total > static_cast<long double>(kMaxConfigurations))
            throw StateSpaceTooLarge("configuration space too large: " + std::to_string(radix_) + "^" +
                                     std::to_string(n));
        for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i].key(), i);
        std::vector<std::uint32_t> cur(n);
        generate(0, cur);
    }

    [[nodiscard]] std::size_t size() const noexcept { return codes_.size(); }
    [[nodiscard]] const Params& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<Input>& inputs() const noexcept { return inputs_; }
    [[nodiscard]] std::size_t state_count() const noexcept { return states_.size(); }
    [[nodiscard]] const Transition& transition() const noexcept { return delta_; }

    /// Silence under this space's transition function.
    [[nodiscard]] bool is_silent(const Configuration& c) const {
        for (std::uint32_t u = 0; u < n_; ++u)
            for (std::uint32_t v = 0; v < n_; ++v) {
                if (u == v) continue;
                const engine::Interaction r = delta_(c.state(u), c.input(u), c.state(v), c.input(v), params_);
                if (!(r.first == c.state(u)) || !(r.second == c.state(v))) return false;
            }
        return true;
    }

    [[nodiscard]] Configuration decode(std::size_t node) const {
        std::uint64_t code = codes_[node];
        std::vector<AgentState> st(n_);
        for (std::uint32_t i = n_; i-- > 0;) {
            st[i] = states_[code % radix_];
            code /= radix_;
        }
        return Configuration(inputs_, std::move(st));
    }

    /// Permutation sorting `c` into canonical order: perm[pos] = agent.
    [[nodiscard]] std::vector<std::uint32_t> canonical_order(const Configuration& c) const {
        std::vector<std::uint32_t> perm(n_);
        for (std::uint32_t i = 0; i < n_; ++i) perm[i] = i;
        auto key = [&](std::uint32_t a) {
            return std::pair<int, std::size_t>{c.input(a) == Input::A ? 0 : 1, index_.at(c.state(a).key())};
        };
        std::stable_sort(perm.begin(), perm.end(), [&](auto a, auto b) { return key(a) < key(b); });
        return perm;
    }

    [[nodiscard]] std::size_t node_of(const Configuration& c) const {
        const auto perm = canonical_order(c);
        std::uint64_t code = 0;
        for (std::uint32_t pos = 0; pos < n_; ++pos) code = code * radix_ + index_.at(c.state(perm[pos]).key());
        const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
        return static_cast<std::size_t>(it - codes_.begin());
    }

    /// Successor via ordered pair (u, v) on a configuration in canonical order.
    [[nodiscard]] std::size_t successor(std::vector<AgentState>& scratch, const Configuration& c, std::uint32_t u,
                                        std::uint32_t v) const {
        const engine::Interaction r = delta_(c.state(u), c.input(u), c.state(v), c.input(v), params_);
        scratch.assign(c.states().begin(), c.states().end());
        scratch[u] = r.first;
        scratch[v] = r.second;
        std::vector<std::uint32_t> idx(n_);
        for (std::uint32_t i = 0; i < n_; ++i) idx[i] = static_cast<std::uint32_t>(index_.at(scratch[i].key()));
        std::sort(idx.begin(), idx.begin() + num_a_);
        std::sort(idx.begin() + num_a_, idx.end());
        std::uint64_t code = 0;
        for (std::uint32_t i = 0; i < n_; ++i) code = code * radix_ + idx[i];
        const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
        return static_cast<std::size_t>(it - codes_.begin());
    }

  private:
    void generate(std::uint32_t pos, std::vector<std::uint32_t>& cur) {
        if (pos == n_) {
            std::uint64_t code = 0;
            for (std::uint32_t i = 0; i < n_; ++i) code = code * radix_ + cur[i];
            codes_.push_back(code);
            return;
        }
        const bool same_group = pos > 0 && pos != num_a_;
        const std::uint32_t lo = same_group ? cur[pos - 1] : 0;
        for (std::uint32_t s = lo; s < radix_; ++s) {
            cur[pos] = s;
            generate(pos + 1, cur);
        }
    }

    std::uint32_t n_;
    Params params_;
    std::vector<AgentState> states_;
    Transition delta_;
    std::vector<Input> inputs_;
    std::uint32_t num_a_ = 0;
    std::uint64_t radix_ = 1;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    std::vector<std::uint64_t> codes_;
};

struct Graph {
    std::vector<std::uint64_t> offsets;
    std::vector<std::uint32_t> targets;
    std::vector<std::uint32_t> pair_index; ///< which ordered pair produced each edge
};

inline std::vector<InteractionPair> ordered_pairs(std::uint32_t n) {
    std::vector<InteractionPair> out;
    for (std::uint32_t u = 0; u < n; ++u)
        for (std::uint32_t v = 0; v < n; ++v)
            if (u != v) out.push_back({u, v});
    return out;
}

inline Graph build_graph(const ConfigSpace& space, std::uint32_t n) {
    const auto pairs = ordered_pairs(n);
    Graph g;
    g.offsets.reserve(space.size() + 1);
    g.targets.reserve(space.size() * pairs.size());
    g.pair_index.reserve(space.size() * pairs.size());
    std::vector<AgentState> scratch;
    g.offsets.push_back(0);
    for (std::size_t node = 0; node < space.size(); ++node) {
        const Configuration c = space.decode(node);
        for (std::uint32_t k = 0; k < pairs.size(); ++k) {
            g.targets.push_back(
                static_cast<std::uint32_t>(space.successor(scratch, c, pairs[k].initiator, pairs[k].responder)));
            g.pair_index.push_back(k);
        }
        g.offsets.push_back(g.targets.size());
    }
    return g;
}

/// Iterative Tarjan; returns component id per node.
inline std::vector<std::uint32_t> strongly_connected(const Graph& g, std::uint32_t& count) {
    const std::size_t nodes = g.offsets.size() - 1;
    constexpr std::uint32_t kUnvisited = ~0u;
    std::vector<std::uint32_t> index(nodes, kUnvisited), low(nodes, 0), comp(nodes, kUnvisited);
    std::vector<std::uint32_t> stack;
    std::vector<bool> on_stack(nodes, false);
    std::vector<std::pair<std::uint32_t, std::uint64_t>> call; // node, next edge
    std::uint32_t next_index = 0;
    count = 0;
    for (std::size_t root = 0; root < nodes; ++root) {
        if (index[root] != kUnvisited) continue;
        call.emplace_back(static_cast<std::uint32_t>(root), g.offsets[root]);
        index[root] = low[root] = next_index++;
        stack.push_back(static_cast<std::uint32_t>(root));
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, e] = call.back();
            if (e < g.offsets[v + 1]) {
                const std::uint32_t w = g.targets[e++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, g.offsets[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::uint32_t done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                std::uint32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                } while (w != done);
                ++count;
            }
        }
    }
    return comp;
}

/// Shortest path (BFS) from `from` to any node satisfying `is_target`, as a
/// list of (node, pair index) steps.
template <class Pred>
std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> shortest_path(const Graph& g, std::uint32_t from,
                                                                                  Pred is_target) {
    const std::size_t nodes = g.offsets.size() - 1;
    std::vector<std::int64_t> parent_edge(nodes, -1);
    std::vector<bool> seen(nodes, false);
    std::deque<std::uint32_t> queue{from};
    seen[from] = true;
    std::optional<std::uint32_t> hit;
    while (!queue.empty()) {
        const std::uint32_t v = queue.front();
        queue.pop_front();
        if (is_target(v)) {
            hit = v;
            break;
        }
        for (std::uint64_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            const std::uint32_t w = g.targets[e];
            if (seen[w]) continue;
            seen[w] = true;
            parent_edge[w] = static_cast<std::int64_t>(e);
            queue.push_back(w);
        }
    }
    if (!hit) return std::nullopt;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> steps;
    std::uint32_t v = *hit;
    while (v != from) {
        const auto e = static_cast<std::uint64_t>(parent_edge[v]);
        const auto src = static_cast<std::uint32_t>(std::upper_bound(g.offsets.begin(), g.offsets.end(), e) -
                                                    g.offsets.begin() - 1);
        steps.emplace_back(src, g.pair_index[e]);
        v = src;
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
}

inline std::vector<Opinion> outputs_of(const Configuration& c) {
    std::vector<Opinion> out;
    for (const auto& s : c.states()) out.push_back(output(s));
    return out;
}

} // namespace detail

/// Builds the whole configuration digraph for (n, inputs, caps) and audits its
/// terminal components.
/// `delta` defaults to the protocol; tests substitute broken variants.
inline VerifierReport check_stabilization(std::uint32_t n, const std::vector<Input>& inputs, const VerifierCaps& caps,
                                          Transition delta = engine::interact) {
    const detail::ConfigSpace space(n, inputs, caps, std::move(delta));
    const detail::Graph g = detail::build_graph(space, n);
    std::uint32_t comp_count = 0;
    const auto comp = detail::strongly_connected(g, comp_count);

    std::vector<std::uint32_t> comp_size(comp_count, 0);
    std::vector<bool> terminal(comp_count, true);
    for (std::size_t v = 0; v + 1 < g.offsets.size(); ++v) {
        ++comp_size[comp[v]];
        for (std::uint64_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
            if (comp[g.targets[e]] != comp[v]) terminal[comp[v]] = false;
    }

    VerifierReport rep;
    rep.n = n;
    rep.inputs = space.inputs();
    rep.caps = caps;
    rep.state_count = space.state_count();
    rep.reachable_count = space.size();
    rep.edge_count = g.targets.size();
    const Opinion want = majority_oracle(space.inputs());

    std::vector<bool> bad_comp(comp_count, false);
    std::vector<bool> reported(comp_count, false);
    for (std::size_t v = 0; v + 1 < g.offsets.size(); ++v) {
        const std::uint32_t k = comp[v];
        if (!terminal[k]) continue;
        if (!reported[k]) ++rep.terminal_scc_count;
        const Configuration c = space.decode(v);
        std::string why;
        if (comp_size[k] != 1)
            why = "terminal component of size " + std::to_string(comp_size[k]);
        else if (!space.is_silent(c))
            why = "terminal configuration is not silent";
        else if (std::any_of(c.states().begin(), c.states().end(), [&](const AgentState& s) { return output(s) != want; }))
            why = "silent configuration with wrong output";
        if (!why.empty()) {
            bad_comp[k] = true;
            if (!reported[k]) rep.bad_silent_configs.push_back(why + ": " + detail::inline_config(c));
        } else {
            rep.terminal_outputs.insert(detail::outputs_of(c));
        }
        reported[k] = true;
    }

    if (!rep.bad_silent_configs.empty()) {
        // Prefer a path from the all-Unsettled start; fall back to a bad
        // configuration itself.
        const auto& p = space.params();
        Configuration start(space.inputs(), std::vector<AgentState>(n, AgentState::unsettled(p.w_max)));
        std::uint32_t from = static_cast<std::uint32_t>(space.node_of(start));
        auto steps = detail::shortest_path(g, from, [&](std::uint32_t v) { return bad_comp[comp[v]]; });
        if (!steps) {
            for (std::size_t v = 0; v < comp.size(); ++v)
                if (bad_comp[comp[v]]) {
                    from = static_cast<std::uint32_t>(v);
                    break;
                }
            start = space.decode(from);
            steps = std::vector<std::pair<std::uint32_t, std::uint32_t>>{};
        }
        Counterexample cx{start, {}, rep.bad_silent_configs.front()};
        const auto pairs = detail::ordered_pairs(n);
        Configuration cur = start;
        for (const auto& [node, k] : *steps) {
            const auto perm = space.canonical_order(cur);
            const InteractionPair actual{perm[pairs[k].initiator], perm[pairs[k].responder]};
            cx.path.push_back(actual);
            const engine::Interaction r = space.transition()(cur.state(actual.initiator), cur.input(actual.initiator),
                                                             cur.state(actual.responder), cur.input(actual.responder), p);
            cur.state(actual.initiator) = r.first;
            cur.state(actual.responder) = r.second;
        }
        rep.counterexample = std::move(cx);
    }
    rep.all_terminal_silent_correct = rep.bad_silent_configs.empty() && !rep.counterexample;
    return rep;
}

/// Every delta-fixpoint in the capped space: flags wrong outputs, disagreement
/// with the S_em shape predicate, and (when A is not the majority) A-input
/// agents sharing a state.
inline std::vector<std::string> audit_silent_set(std::uint32_t n, const std::vector<Input>& inputs,
                                                 const VerifierCaps& caps, std::uint64_t* fixpoints = nullptr) {
    const detail::ConfigSpace space(n, inputs, caps);
    const Params& p = space.params();
    const Opinion want = majority_oracle(space.inputs());
    std::uint32_t num_a = 0;
    for (Input x : space.inputs()) num_a += x == Input::A;
    const bool check_distinct = 2 * num_a <= n;

    std::vector<std::string> violations;
    std::uint64_t found = 0;
    for (std::size_t v = 0; v < space.size(); ++v) {
        const Configuration c = space.decode(v);
        const bool silent = engine::is_silent(c, p);
        const bool shaped = majority::is_silent_shape(c, p);
        if (silent != shaped)
            violations.push_back(std::string(silent ? "fixpoint outside S_em: " : "S_em configuration not silent: ") +
                                 detail::inline_config(c));
        if (!silent) continue;
        ++found;
        if (std::any_of(c.states().begin(), c.states().end(), [&](const AgentState& s) { return output(s) != want; }))
            violations.push_back("fixpoint with wrong output: " + detail::inline_config(c));
        if (check_distinct) {
            for (std::uint32_t i = 0; i < num_a; ++i)
                for (std::uint32_t j = i + 1; j < num_a; ++j)
                    if (c.state(i) == c.state(j))
                        violations.push_back("A-input agents share a state: " + detail::inline_config(c));
        }
    }
    if (fixpoints) *fixpoints = found;
    return violations;
}

inline std::string inputs_string(const std::vector<Input>& in) {
    std::string s;
    for (Input x : in) s += to_string(x);
    return s;
}

inline std::string outputs_string(const std::vector<Opinion>& out) {
    std::string s;
    for (Opinion y : out) s += to_string(y);
    return s;
}

/// key=value header, then one violation per line, then the counterexample.
inline void write_report(std::ostream& os, const VerifierReport& r) {
    os << "n=" << r.n << '\n'
       << "inputs=" << inputs_string(r.inputs) << '\n'
       << "cap_reset=" << r.caps.reset << '\n'
       << "cap_wait=" << r.caps.wait << '\n'
       << "cap_timer=" << r.caps.timer << '\n'
       << "states=" << r.state_count << '\n'
       << "reachable_count=" << r.reachable_count << '\n'
       << "edges=" << r.edge_count << '\n'
       << "terminal_scc_count=" << r.terminal_scc_count << '\n'
       << "all_terminal_silent_correct=" << (r.all_terminal_silent_correct ? "true" : "false") << '\n'
       << "violations=" << r.bad_silent_configs.size() << '\n';
    os << "terminal_outputs=";
    bool first = true;
    for (const auto& o : r.terminal_outputs) {
        if (!first) os << ' ';
        os << outputs_string(o);
        first = false;
    }
    os << '\n';
    for (const auto& v : r.bad_silent_configs) os << "violation " << v << '\n';
    if (r.counterexample) {
        os << "counterexample_start " << detail::inline_config(r.counterexample->start) << '\n';
        os << "counterexample_path";
        for (const auto& pr : r.counterexample->path) os << " (" << pr.initiator << ',' << pr.responder << ')';
        os << '\n';
    }
}

} // namespace popmaj::verifier
