#pragma once

// Experiment harness: initial-configuration generators, instrumented trials,
// parallel sweeps with canonical output order, and summary statistics.

#include "popmaj/engine.hpp"
#include "popmaj/majority.hpp"
#include "popmaj/rng.hpp"
#include "popmaj/snapshot.hpp"
#include "popmaj/types.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

namespace popmaj::harness {

enum class InitKind : std::uint8_t {
    uniform_random_state,
    all_unsettled,
    mid_reset,
    wrong_answers,
    duplicate_ranks,
    lb_flip,
    from_file,
};

inline constexpr std::array<InitKind, 6> kGeneratedKinds = {
    InitKind::uniform_random_state, InitKind::all_unsettled,   InitKind::mid_reset,
    InitKind::wrong_answers,        InitKind::duplicate_ranks, InitKind::lb_flip,
};

inline std::string_view to_string(InitKind k) noexcept {
    switch (k) {
    case InitKind::uniform_random_state: return "uniform_random_state";
    case InitKind::all_unsettled: return "all_unsettled";
    case InitKind::mid_reset: return "mid_reset";
    case InitKind::wrong_answers: return "wrong_answers";
    case InitKind::duplicate_ranks: return "duplicate_ranks";
    case InitKind::lb_flip: return "lb_flip";
    default: return "from_file";
    }
}

inline InitKind parse_init_kind(std::string_view s) {
    for (InitKind k : kGeneratedKinds)
        if (to_string(k) == s) return k;
    if (s == "from_file") return InitKind::from_file;
    throw std::invalid_argument("unknown init kind '" + std::string(s) + "'");
}

/// lb_flip needs an odd population of at least 5.
inline bool kind_applies(InitKind k, std::uint32_t n) noexcept {
    return k != InitKind::lb_flip || (n % 2 == 1 && n >= 5);
}

/// S_em configuration for `inputs`, which must list A agents first.
inline Configuration silent_configuration(const std::vector<Input>& inputs, const Params& p) {
    const Answer want = to_answer(majority_oracle(inputs));
    std::vector<AgentState> st;
    st.reserve(inputs.size());
    for (std::uint32_t r = 1; r <= inputs.size(); ++r) {
        std::uint8_t mask = 0;
        if (2ull * r <= p.n) mask |= kLeftChild;
        if (2ull * r + 1 <= p.n) mask |= kRightChild;
        st.push_back(AgentState::settled(r, mask, want, 0));
    }
    for (std::size_t i = 1; i < inputs.size(); ++i)
        if (inputs[i - 1] == Input::B && inputs[i] == Input::A)
            throw std::invalid_argument("silent_configuration expects A inputs first");
    return Configuration(inputs, std::move(st));
}

struct Start {
    Configuration config;
    std::optional<std::uint32_t> flipped; ///< agent overwritten by lb_flip
};

inline Start generate_start(InitKind kind, std::uint32_t n, std::uint32_t num_a, std::uint64_t seed, const Params& p,
                            const std::string& path = {}) {
    if (p.n != n) throw std::invalid_argument("params.n does not match n");
    if (kind == InitKind::from_file) {
        if (path.empty()) throw std::invalid_argument("from_file needs a path");
        return {snapshot::load(path, &p), std::nullopt};
    }
    if (num_a > n) throw std::invalid_argument("num_A must lie in [0, n]");
    Engine rng(derive_seed(seed, {0x67656e}));
    const std::vector<Input> inputs = make_inputs(n, num_a);
    const Answer want = to_answer(majority_oracle(inputs));

    switch (kind) {
    case InitKind::uniform_random_state: {
        const StateSpace space(p);
        std::vector<AgentState> st;
        st.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) st.push_back(space.state_at(draw_below(rng, space.size())));
        return {Configuration(inputs, std::move(st)), std::nullopt};
    }
    case InitKind::all_unsettled:
        return {Configuration(inputs, std::vector<AgentState>(n, AgentState::unsettled(p.w_max))), std::nullopt};
    case InitKind::mid_reset: {
        // A silent configuration caught by a reset wave: about half the agents
        // are Resetting at scattered countdown values, exactly one of them L.
        Configuration c = silent_configuration(inputs, p);
        std::vector<std::uint32_t> hit;
        for (std::uint32_t i = 0; i < n; ++i)
            if (draw_below(rng, 2) == 0) hit.push_back(i);
        if (hit.empty()) hit.push_back(static_cast<std::uint32_t>(draw_below(rng, n)));
        const std::uint32_t lead = hit[draw_below(rng, hit.size())];
        for (std::uint32_t i : hit) {
            const auto rc = static_cast<std::uint32_t>(1 + draw_below(rng, p.r_max));
            c.state(i) = AgentState::resetting(i == lead ? Leader::L : Leader::F, rc, Answer::Phi, c.state(i).timer);
        }
        return {std::move(c), std::nullopt};
    }
    case InitKind::wrong_answers: {
        Configuration c = silent_configuration(inputs, p);
        const Answer wrong = want == Answer::A ? Answer::B : Answer::A;
        for (std::uint32_t i = 0; i < n; ++i) c.state(i).answer = wrong;
        return {std::move(c), std::nullopt};
    }
    case InitKind::duplicate_ranks:
        return {Configuration(inputs, std::vector<AgentState>(n, AgentState::settled(1))), std::nullopt};
    case InitKind::lb_flip: {
        if (!kind_applies(kind, n)) throw std::invalid_argument("lb_flip requires odd n >= 5");
        if (num_a != n / 2) throw std::invalid_argument("lb_flip requires num_A = floor(n/2)");
        const Configuration silent = silent_configuration(inputs, p);
        const auto w = static_cast<std::uint32_t>(draw_below(rng, num_a));
        const auto u = static_cast<std::uint32_t>(num_a + draw_below(rng, n - num_a));
        std::vector<Input> flipped_inputs = inputs;
        flipped_inputs[u] = Input::A;
        std::vector<AgentState> st = silent.states();
        st[u] = st[w];
        return {Configuration(std::move(flipped_inputs), std::move(st)), u};
    }
    default: break;
    }
    throw std::invalid_argument("unsupported init kind");
}

inline Configuration generate(InitKind kind, std::uint32_t n, std::uint32_t num_a, std::uint64_t seed,
                              const Params& p) {
    return generate_start(kind, n, num_a, seed, p).config;
}

/// 200 n^2 ln(n+1) interactions.
inline std::uint64_t default_max_interactions(std::uint32_t n) {
    return static_cast<std::uint64_t>(std::ceil(200.0 * n * n * std::log(n + 1.0)));
}

enum class Phase : std::uint8_t { S_rank, T_swap, S_dec, S_tim, S_em };
inline constexpr std::size_t kPhaseCount = 5;

struct TraceMetrics {
    std::uint32_t n = 0;
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;
    std::uint32_t num_a = 0;
    InitKind init_kind = InitKind::all_unsettled;
    bool silenced = false;
    std::uint64_t interactions = 0; ///< to silence, or the budget spent on overflow
    double parallel_time = 0.0;
    std::uint64_t resets = 0;
    std::array<std::optional<double>, kPhaseCount> phase_times{};
    bool correct = false;
    std::optional<std::uint64_t> flip_first_change; ///< lb_flip: interactions until the flipped agent moves

    [[nodiscard]] bool overflow() const noexcept { return !silenced; }
    bool operator==(const TraceMetrics&) const = default;
};

inline bool outputs_correct(const Configuration& c) {
    const Opinion want = majority_oracle(c.inputs());
    return std::all_of(c.states().begin(), c.states().end(), [&](const AgentState& s) { return output(s) == want; });
}

using StateSet = std::unordered_set<std::uint64_t>;

namespace detail {

inline void record_phases(std::array<std::optional<double>, kPhaseCount>& times, const majority::PhasePredicates& ph,
                          double t) {
    const bool hit[kPhaseCount] = {ph.in_S_rank, ph.in_T_swap, ph.in_S_dec, ph.in_S_tim, ph.in_S_em};
    for (std::size_t i = 0; i < kPhaseCount; ++i)
        if (hit[i] && !times[i]) times[i] = t;
}

} // namespace detail

/// Runs an already-built start configuration.
inline TraceMetrics run_start(Start start, std::uint64_t seed, const Params& p, std::uint64_t max_interactions,
                              StateSet* census = nullptr) {
    Configuration& c = start.config;
    c.validate(p);
    TraceMetrics m;
    m.n = p.n;
    m.seed = seed;
    {
        majority::PhaseTracker t0(c, p);
        detail::record_phases(m.phase_times, t0.predicates(), 0.0);
    }
    if (census)
        for (const auto& s : c.states()) census->insert(s.key());

    engine::UniformScheduler sched(p.n, derive_seed(seed, {0x736368}));
    const auto watched = start.flipped;
    const AgentState watched_start = watched ? c.state(*watched) : AgentState{};
    auto observe = [&](std::uint64_t t, const Configuration& cur, const InteractionPair& pair,
                       const engine::StepEffect& eff, const majority::PhaseTracker& tracker) {
        if (!eff.changed) return;
        detail::record_phases(m.phase_times, tracker.predicates(), static_cast<double>(t) / p.n);
        if (census) {
            census->insert(cur.state(pair.initiator).key());
            census->insert(cur.state(pair.responder).key());
        }
        if (watched && !m.flip_first_change && !(cur.state(*watched) == watched_start)) m.flip_first_change = t;
    };
    const engine::RunStats st = engine::run(c, p, sched, max_interactions, observe);
    m.silenced = st.silenced;
    m.interactions = st.silenced ? st.silence_index : st.interactions;
    m.parallel_time = st.parallel_time;
    m.resets = st.resets;
    m.correct = outputs_correct(c);
    return m;
}

/// One instrumented trial; deterministic in all arguments.
inline TraceMetrics run_trial(InitKind kind, std::uint32_t n, std::uint32_t num_a, std::uint64_t seed,
                              const Params& p, std::uint64_t max_interactions, StateSet* census = nullptr,
                              const std::string& path = {}) {
    Start start = generate_start(kind, n, num_a, seed, p, path);
    std::uint32_t actual_a = num_a;
    if (kind == InitKind::from_file) {
        actual_a = 0;
        for (Input x : start.config.inputs()) actual_a += x == Input::A;
    }
    TraceMetrics m = run_start(std::move(start), seed, p, max_interactions, census);
    m.init_kind = kind;
    m.num_a = actual_a;
    return m;
}

enum class NumAPolicy : std::uint8_t { Auto, All, Critical };

/// Small populations sweep every num_A; large ones the tie/near-tie/unanimous set.
inline std::vector<std::uint32_t> num_a_values(NumAPolicy policy, std::uint32_t n) {
    constexpr std::uint32_t kAutoAllLimit = 12;
    if (policy == NumAPolicy::All || (policy == NumAPolicy::Auto && n <= kAutoAllLimit)) {
        std::vector<std::uint32_t> v(n + 1);
        for (std::uint32_t i = 0; i <= n; ++i) v[i] = i;
        return v;
    }
    const std::uint32_t half = n / 2;
    std::vector<std::uint32_t> v = {0, 1, half - 1, half, (n + 1) / 2, n - 1, n};
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

struct SweepSpec {
    std::vector<std::uint32_t> ns;
    NumAPolicy policy = NumAPolicy::Auto;
    std::optional<std::uint32_t> fixed_num_a; ///< overrides the policy when set
    std::vector<InitKind> kinds{kGeneratedKinds.begin(), kGeneratedKinds.end()};
    std::uint32_t trials = 1;
    std::uint64_t base_seed = 0;
    std::uint32_t t_rank = 16;
    std::uint64_t max_interactions = 0; ///< 0 selects default_max_interactions(n)
    unsigned workers = 1;
    bool census = false;
};

struct SweepResult {
    std::vector<TraceMetrics> rows;
    std::map<std::uint32_t, std::uint64_t> census; ///< n -> distinct canonical states observed
};

inline std::uint64_t trial_seed(std::uint64_t base, std::uint32_t n, InitKind kind, std::uint32_t trial) {
    return derive_seed(base, {n, static_cast<std::uint64_t>(kind), trial});
}

struct SweepTask {
    std::uint32_t n;
    InitKind kind;
    std::uint32_t num_a;
    std::uint32_t trial;
};

/// Tasks in canonical order: by n, kind, num_A, trial.
inline std::vector<SweepTask> sweep_tasks(const SweepSpec& spec) {
    std::vector<std::uint32_t> ns = spec.ns;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::vector<InitKind> kinds = spec.kinds;
    std::sort(kinds.begin(), kinds.end());
    kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());

    std::vector<SweepTask> tasks;
    for (std::uint32_t n : ns)
        for (InitKind k : kinds) {
            if (k == InitKind::from_file || !kind_applies(k, n)) continue;
            std::vector<std::uint32_t> as;
            if (k == InitKind::lb_flip)
                as = {n / 2};
            else if (spec.fixed_num_a)
                as = {std::min(*spec.fixed_num_a, n)};
            else
                as = num_a_values(spec.policy, n);
            for (std::uint32_t a : as)
                for (std::uint32_t t = 0; t < spec.trials; ++t) tasks.push_back({n, k, a, t});
        }
    return tasks;
}

inline SweepResult sweep(const SweepSpec& spec) {
    if (spec.trials == 0) throw std::invalid_argument("trials must be >= 1");
    const std::vector<SweepTask> tasks = sweep_tasks(spec);
    SweepResult out;
    out.rows.resize(tasks.size());
    std::map<std::uint32_t, StateSet> census;
    std::mutex census_mu;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const SweepTask& t = tasks[i];
            const Params p = Params::make(t.n, spec.t_rank);
            const std::uint64_t seed = trial_seed(spec.base_seed, t.n, t.kind, t.trial);
            const std::uint64_t budget = spec.max_interactions ? spec.max_interactions : default_max_interactions(t.n);
            StateSet local;
            TraceMetrics m = run_trial(t.kind, t.n, t.num_a, seed, p, budget, spec.census ? &local : nullptr);
            m.trial = t.trial;
            out.rows[i] = m;
            if (spec.census) {
                std::lock_guard lock(census_mu);
                census[t.n].merge(local);
            }
        }
    };
    const unsigned workers = std::max(1u, spec.workers);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (auto& [n, set] : census) out.census[n] = set.size();
    return out;
}

inline constexpr const char* kCsvHeader =
    "n,seed,trial,num_A,init_kind,interactions,parallel_time,resets,t_S_rank,t_T_swap,t_S_dec,t_S_tim,t_S_em,correct";

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string csv_row(const TraceMetrics& m) {
    std::string s = std::to_string(m.n) + ',' + std::to_string(m.seed) + ',' + std::to_string(m.trial) + ',' +
                    std::to_string(m.num_a) + ',' + std::string(to_string(m.init_kind)) + ',' +
                    (m.silenced ? std::to_string(m.interactions) : std::string("overflow")) + ',' +
                    fixed4(m.parallel_time) + ',' + std::to_string(m.resets);
    for (const auto& t : m.phase_times) s += ',' + (t ? fixed4(*t) : std::string());
    s += m.correct ? ",true" : ",false";
    return s;
}

inline void write_csv(std::ostream& os, const std::vector<TraceMetrics>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) os << csv_row(r) << '\n';
}

struct GroupStats {
    std::uint32_t n = 0;
    InitKind kind = InitKind::all_unsettled;
    std::size_t trials = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double max = 0.0;
    double correct_fraction = 0.0;
    std::size_t overflows = 0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

struct Summary {
    std::vector<GroupStats> groups;          ///< ordered by (n, kind)
    std::map<InitKind, LinearFit> time_fits; ///< mean parallel time against n
    std::map<std::uint32_t, std::uint64_t> census;
};

/// Ordinary least squares; needs at least two distinct x values.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs two or more points");
    const double k = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = k * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit needs distinct x values");
    LinearFit f;
    f.slope = (k * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / k;
    return f;
}

/// Normal-approximation 95% interval.
inline std::pair<double, double> mean_ci95(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("empty sample");
    double mean = 0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, mean};
    double var = 0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size() - 1);
    const double half = 1.959963984540054 * std::sqrt(var / static_cast<double>(xs.size()));
    return {mean - half, mean + half};
}

inline Summary summarize(const std::vector<TraceMetrics>& rows, const std::map<std::uint32_t, std::uint64_t>& census = {}) {
    if (rows.empty()) throw std::invalid_argument("summarize: empty table");
    std::map<std::pair<std::uint32_t, InitKind>, std::vector<const TraceMetrics*>> by;
    for (const auto& r : rows) by[{r.n, r.init_kind}].push_back(&r);

    Summary s;
    s.census = census;
    std::map<InitKind, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& [key, group] : by) {
        GroupStats g;
        g.n = key.first;
        g.kind = key.second;
        g.trials = group.size();
        std::vector<double> times;
        std::size_t ok = 0;
        for (const TraceMetrics* r : group) {
            times.push_back(r->parallel_time);
            g.max = std::max(g.max, r->parallel_time);
            ok += r->correct && r->silenced;
            g.overflows += r->overflow();
        }
        const auto [lo, hi] = mean_ci95(times);
        double mean = 0;
        for (double v : times) mean += v;
        g.mean = mean / static_cast<double>(times.size());
        g.ci_low = lo;
        g.ci_high = hi;
        g.correct_fraction = static_cast<double>(ok) / static_cast<double>(group.size());
        s.groups.push_back(g);
        series[g.kind].first.push_back(g.n);
        series[g.kind].second.push_back(g.mean);
    }
    for (const auto& [kind, xy] : series)
        if (xy.first.size() >= 2) s.time_fits[kind] = fit_line(xy.first, xy.second);
    return s;
}

inline void write_summary(std::ostream& os, const Summary& s) {
    os << "n,init_kind,trials,mean_parallel_time,ci95_low,ci95_high,max,correct_fraction,overflows\n";
    for (const auto& g : s.groups)
        os << g.n << ',' << to_string(g.kind) << ',' << g.trials << ',' << fixed4(g.mean) << ',' << fixed4(g.ci_low)
           << ',' << fixed4(g.ci_high) << ',' << fixed4(g.max) << ',' << fixed4(g.correct_fraction) << ','
           << g.overflows << '\n';
    for (const auto& [kind, f] : s.time_fits)
        os << "# fit " << to_string(kind) << ": mean_time = " << fixed4(f.slope) << " * n + " << fixed4(f.intercept)
           << '\n';
    for (const auto& [n, c] : s.census) os << "# census n=" << n << " distinct_states=" << c << '\n';
}

} // namespace popmaj::harness
