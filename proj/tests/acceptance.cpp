// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
// Usage: acceptance [criterion numbers...]   (default: all)

#include "popmaj/popmaj.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace {

using namespace popmaj;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double mean(const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

std::vector<Input> inputs_with(std::uint32_t n, std::uint32_t num_a) {
    std::vector<Input> in(n, Input::B);
    std::fill(in.begin(), in.begin() + num_a, Input::A);
    return in;
}

// Exhaustive terminal-SCC check at n = 2 and 3.
Verdict criterion1() {
    const auto t0 = Clock::now();
    std::string bad;
    for (const char* word : {"AA", "AB", "BB", "AAA", "AAB", "ABB", "BBB"}) {
        const auto in = parse_inputs(word);
        const auto r = verifier::check_stabilization(static_cast<std::uint32_t>(in.size()), in, {1, 1, 1});
        if (!r.all_terminal_silent_correct) bad += std::string(" ") + word;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return {bad.empty() && secs < 600.0,
            "7 input words, " + fmt("%.1f", secs) + " s" + (bad.empty() ? "" : ", failing:" + bad)};
}

// Sweep shared by criteria 2 and 7.
const harness::SweepResult& full_sweep() {
    static const harness::SweepResult res = [] {
        harness::SweepSpec spec;
        spec.ns = {4, 5, 8, 9, 16, 17, 32, 33, 64, 128};
        spec.trials = 20;
        spec.base_seed = 2002;
        spec.census = true;
        return harness::sweep(spec);
    }();
    return res;
}

Verdict criterion2() {
    const std::set<std::uint32_t> ns = {4, 5, 8, 9, 16, 17, 32, 33, 64};
    std::size_t rows = 0, correct = 0, overflow = 0;
    for (const auto& r : full_sweep().rows) {
        if (!ns.count(r.n)) continue;
        ++rows;
        correct += r.silenced && r.correct;
        overflow += r.overflow();
    }
    const double frac = rows ? static_cast<double>(correct) / static_cast<double>(rows) : 0.0;
    return {rows > 0 && correct == rows && overflow == 0,
            std::to_string(rows) + " trials, correct fraction " + fmt("%.4f", frac) + ", overflows " +
                std::to_string(overflow)};
}

Verdict criterion3() {
    const std::vector<std::uint32_t> ns = {16, 32, 64, 128};
    std::vector<double> means;
    std::string detail = "means";
    bool pass = true;
    for (std::uint32_t n : ns) {
        const Params p = Params::make(n);
        std::vector<double> t;
        for (std::uint32_t k = 0; k < 200; ++k) {
            const auto m = harness::run_trial(harness::InitKind::all_unsettled, n, (n + 1) / 2,
                                              derive_seed(3003, {n, k}), p, harness::default_max_interactions(n));
            pass = pass && m.silenced;
            t.push_back(m.parallel_time);
        }
        means.push_back(mean(t));
        detail += " " + std::to_string(n) + ":" + fmt("%.1f", means.back());
    }
    detail += "; ratios";
    for (std::size_t i = 1; i < means.size(); ++i) {
        const double ratio = means[i] / means[i - 1];
        pass = pass && ratio >= 1.4 && ratio <= 3.2;
        detail += " " + fmt("%.3f", ratio);
    }
    return {pass, detail};
}

Verdict criterion4() {
    const std::uint32_t n = 64;
    const Params p = Params::make(n);
    const double bound = 40.0 * p.t_rank * n * std::log(static_cast<double>(n));
    const auto budget = static_cast<std::uint64_t>(std::ceil(bound * n)) + 1;
    std::uint32_t within = 0;
    double worst = 0;
    for (std::uint32_t k = 0; k < 500; ++k) {
        const auto m = harness::run_trial(harness::InitKind::all_unsettled, n, n / 2 + 1, derive_seed(4004, {k}), p,
                                          budget);
        if (m.silenced && m.parallel_time <= bound) ++within;
        worst = std::max(worst, m.parallel_time);
    }
    const double frac = within / 500.0;
    return {frac >= 0.99, fmt("%.3f", frac) + " silent within " + fmt("%.0f", bound) + ", slowest " +
                              fmt("%.1f", worst)};
}

// A run that ends before the flipped agent moves is censored at its length,
// which can only lower the mean.
Verdict criterion5() {
    bool pass = true;
    std::string detail;
    for (std::uint32_t n : {33u, 65u}) {
        const Params p = Params::make(n);
        std::vector<double> first;
        for (std::uint32_t k = 0; k < 200; ++k) {
            const auto m = harness::run_trial(harness::InitKind::lb_flip, n, n / 2, derive_seed(5005, {n, k}), p,
                                              harness::default_max_interactions(n));
            first.push_back(static_cast<double>(m.flip_first_change.value_or(m.interactions)));
        }
        const double need = 0.3 * n * (n - 1) / 2.0;
        const double got = mean(first);
        pass = pass && got >= need;
        detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + " mean " + fmt("%.1f", got) +
                  " vs " + fmt("%.1f", need);
    }
    return {pass, detail};
}

// Random S_em member: A agents take the lowest ranks, answers are correct,
// the median timer is 0 and everything else is free.
Configuration random_em(std::uint32_t n, Engine& rng, const Params& p) {
    const auto num_a = static_cast<std::uint32_t>(draw_below(rng, n + 1));
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    for (std::uint32_t i = n; i > 1; --i) std::swap(order[i - 1], order[draw_below(rng, i)]);
    std::vector<Input> in(n);
    std::vector<AgentState> st(n);
    std::vector<Input> sorted = inputs_with(n, num_a);
    const Answer want = to_answer(majority_oracle(sorted));
    for (std::uint32_t r = 1; r <= n; ++r) {
        const std::uint32_t v = order[r - 1];
        in[v] = sorted[r - 1];
        const auto timer = r == p.mid() ? 0u : static_cast<std::uint32_t>(draw_below(rng, p.timer_max + 1));
        st[v] = AgentState::settled(r, static_cast<std::uint8_t>(draw_below(rng, 4)), want, timer);
    }
    return Configuration(in, st);
}

Verdict criterion6() {
    std::size_t violations = 0, fixpoints = 0;
    for (const char* word : {"AA", "AB", "BB", "AAA", "AAB", "ABB", "BBB"}) {
        const auto in = parse_inputs(word);
        std::uint64_t found = 0;
        violations +=
            verifier::audit_silent_set(static_cast<std::uint32_t>(in.size()), in, {1, 1, 1}, &found).size();
        fixpoints += found;
    }
    Engine rng(6006);
    std::size_t silent = 0, perturbed_silent = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto n = static_cast<std::uint32_t>(4 + draw_below(rng, 5));
        const Params p = Params::make(n);
        Configuration c = random_em(n, rng, p);
        silent += engine::is_silent(c, p);
        // Leaving S_em by one wrong answer must also leave the silent set.
        const auto v = static_cast<std::size_t>(draw_below(rng, n));
        const Answer want = c.state(v).answer;
        c.state(v).answer = want == Answer::A ? Answer::B : Answer::A;
        perturbed_silent += engine::is_silent(c, p);
    }
    return {violations == 0 && silent == 1000 && perturbed_silent == 0,
            std::to_string(fixpoints) + " fixpoints, " + std::to_string(violations) + " violations; " +
                std::to_string(silent) + "/1000 S_em silent, " + std::to_string(perturbed_silent) +
                " perturbed silent"};
}

Verdict criterion7() {
    const auto& census = full_sweep().census;
    const double c = static_cast<double>(census.at(16)) / 16.0;
    bool pass = true;
    std::string detail = "c=" + fmt("%.2f", c) + ";";
    for (std::uint32_t n : {16u, 32u, 64u, 128u}) {
        const auto seen = census.at(n);
        pass = pass && static_cast<double>(seen) <= c * n;
        detail += " n=" + std::to_string(n) + ":" + std::to_string(seen) + " (" + fmt("%.1f", seen / double(n)) +
                  "/agent)";
    }
    return {pass, detail};
}

Verdict criterion8() {
    const std::uint32_t n = 64;
    const Params p = Params::make(n);
    Engine rng(8008);
    std::size_t increases = 0, unfinished = 0;
    std::vector<double> times;
    const std::uint64_t budget = 1000ull * n * n;
    for (int k = 0; k < 100; ++k) {
        std::vector<std::uint32_t> ranks(n);
        for (std::uint32_t i = 0; i < n; ++i) ranks[i] = i + 1;
        for (std::uint32_t i = n; i > 1; --i) std::swap(ranks[i - 1], ranks[draw_below(rng, i)]);
        std::vector<Input> in(n);
        std::vector<AgentState> st(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            in[i] = draw_below(rng, 2) ? Input::A : Input::B;
            const auto timer = ranks[i] == p.mid() ? p.timer_max
                                                    : static_cast<std::uint32_t>(draw_below(rng, p.timer_max + 1));
            st[i] = AgentState::settled(ranks[i], static_cast<std::uint8_t>(draw_below(rng, 4)),
                                        static_cast<Answer>(draw_below(rng, 4)), timer);
        }
        Configuration c(in, st);
        engine::UniformScheduler sched(n, derive_seed(8008, {static_cast<std::uint64_t>(k)}));
        std::uint64_t pot = majority::misordered_pairs(c);
        std::uint64_t t = 0;
        while (!majority::phase(c, p).in_S_swap && t < budget) {
            const auto eff = engine::apply(c, *sched.next(), p);
            ++t;
            if (!eff.changed) continue;
            const std::uint64_t now = majority::misordered_pairs(c);
            increases += now > pot;
            pot = now;
        }
        if (t >= budget) ++unfinished;
        times.push_back(static_cast<double>(t) / n);
    }
    const double m = mean(times);
    return {increases == 0 && unfinished == 0 && m <= 2.0 * n,
            std::to_string(increases) + " potential increases, mean time to S_swap " + fmt("%.2f", m) + " vs " +
                fmt("%.0f", 2.0 * n)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8};
    std::set<int> chosen;
    for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!chosen.empty() && !chosen.count(id)) continue;
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("criterion %d: %s %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
