#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace popmaj;
using harness::InitKind;

namespace {

std::string csv(const std::vector<harness::TraceMetrics>& rows) {
    std::ostringstream os;
    harness::write_csv(os, rows);
    return os.str();
}

} // namespace

TEST(Generate, AllUnsettled) {
    const Params p = Params::make(8);
    const Configuration c = harness::generate(InitKind::all_unsettled, 8, 3, 1, p);
    for (const auto& s : c.states()) EXPECT_EQ(s, AgentState::unsettled(p.w_max, Answer::Phi, 0));
    EXPECT_EQ(c.inputs(), make_inputs(8, 3));
}

TEST(Generate, DuplicateRanks) {
    const Params p = Params::make(4);
    const Configuration c = harness::generate(InitKind::duplicate_ranks, 4, 2, 1, p);
    for (const auto& s : c.states()) {
        EXPECT_EQ(s.role, Role::Settled);
        EXPECT_EQ(s.rank, 1u);
    }
}

TEST(Generate, LowerBoundFlip) {
    const Params p = Params::make(5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto start = harness::generate_start(InitKind::lb_flip, 5, 2, seed, p);
        const Configuration& c = start.config;
        EXPECT_EQ(majority_oracle(c.inputs()), Opinion::A);
        for (const auto& s : c.states()) EXPECT_EQ(output(s), Opinion::B);
        ASSERT_TRUE(start.flipped);
        EXPECT_EQ(c.input(*start.flipped), Input::A);
        // the flipped agent duplicates some A agent's state
        int twins = 0;
        for (std::uint32_t i = 0; i < 5; ++i)
            if (i != *start.flipped && c.state(i) == c.state(*start.flipped)) ++twins;
        EXPECT_EQ(twins, 1);
        EXPECT_FALSE(engine::is_silent(c, p));
    }
}

TEST(Generate, WrongAnswersIsSortedWithMinorityAnswers) {
    const Params p = Params::make(9);
    const Configuration c = harness::generate(InitKind::wrong_answers, 9, 6, 3, p);
    const auto ph = majority::phase(c, p);
    EXPECT_TRUE(ph.in_S_rank);
    EXPECT_TRUE(ph.in_S_swap);
    for (const auto& s : c.states()) EXPECT_EQ(s.answer, Answer::B);
}

TEST(Generate, UniformRandomStatesAreInRangeAndVaried) {
    const Params p = Params::make(16);
    const Configuration c = harness::generate(InitKind::uniform_random_state, 16, 5, 9, p);
    c.validate(p);
    std::set<std::uint64_t> keys;
    for (const auto& s : c.states()) keys.insert(s.key());
    EXPECT_GT(keys.size(), 12u);
}

TEST(Generate, MidResetHasOneLeaderAmongResetting) {
    const Params p = Params::make(20);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Configuration c = harness::generate(InitKind::mid_reset, 20, 11, seed, p);
        c.validate(p);
        int resetting = 0, leaders = 0;
        for (const auto& s : c.states()) {
            resetting += s.role == Role::Resetting;
            leaders += s.role == Role::Resetting && s.leader == Leader::L;
        }
        EXPECT_GE(resetting, 1);
        EXPECT_EQ(leaders, 1);
    }
}

TEST(Generate, Errors) {
    const Params p5 = Params::make(5);
    EXPECT_THROW(harness::generate(InitKind::all_unsettled, 5, 6, 0, p5), std::invalid_argument);
    EXPECT_THROW(harness::generate(InitKind::lb_flip, 5, 3, 0, p5), std::invalid_argument);
    const Params p6 = Params::make(6);
    EXPECT_THROW(harness::generate(InitKind::lb_flip, 6, 3, 0, p6), std::invalid_argument);
    const Params p3 = Params::make(3);
    EXPECT_THROW(harness::generate(InitKind::lb_flip, 3, 1, 0, p3), std::invalid_argument);
    EXPECT_THROW(harness::generate(InitKind::all_unsettled, 4, 1, 0, p5), std::invalid_argument);
    EXPECT_THROW(harness::generate(InitKind::from_file, 5, 1, 0, p5), std::invalid_argument);
    EXPECT_THROW(harness::parse_init_kind("bogus"), std::invalid_argument);
}

TEST(Generate, FromFile) {
    const Params p = Params::make(4);
    const Configuration c = testkit::em_config(4, 1, p);
    const std::string path = ::testing::TempDir() + "popmaj_harness_start.txt";
    snapshot::save(path, c);
    const auto m = harness::run_trial(InitKind::from_file, 4, 0, 1, p, 1000, nullptr, path);
    EXPECT_TRUE(m.silenced);
    EXPECT_EQ(m.interactions, 0u);
    EXPECT_EQ(m.num_a, 1u);
    std::remove(path.c_str());
}

TEST(RunTrial, SilentStartTakesNoTime) {
    const Params p = Params::make(6);
    auto m = harness::run_start({testkit::em_config(6, 2, p), std::nullopt}, 1, p, 1000);
    EXPECT_TRUE(m.silenced);
    EXPECT_EQ(m.parallel_time, 0.0);
    EXPECT_TRUE(m.correct);
    // the median timer sits at 0, below the T_swap floor
    for (std::size_t i = 0; i < harness::kPhaseCount; ++i) {
        if (i == static_cast<std::size_t>(harness::Phase::T_swap)) {
            EXPECT_FALSE(m.phase_times[i]);
        } else {
            EXPECT_EQ(m.phase_times[i], 0.0);
        }
    }
}

TEST(RunTrial, WrongAnswersForceAResetAndRecover) {
    const Params p = Params::make(16);
    for (std::uint32_t a : {0u, 5u, 8u, 12u}) {
        const auto m = harness::run_trial(InitKind::wrong_answers, 16, a, 4, p, harness::default_max_interactions(16));
        EXPECT_GE(m.resets, 1u);
        EXPECT_TRUE(m.silenced);
        EXPECT_TRUE(m.correct);
    }
}

TEST(RunTrial, Deterministic) {
    const Params p = Params::make(12);
    for (InitKind k : harness::kGeneratedKinds) {
        if (!harness::kind_applies(k, 12)) continue;
        const auto a = harness::run_trial(k, 12, 5, 77, p, harness::default_max_interactions(12));
        const auto b = harness::run_trial(k, 12, 5, 77, p, harness::default_max_interactions(12));
        EXPECT_EQ(a, b);
        EXPECT_EQ(harness::csv_row(a), harness::csv_row(b));
    }
}

TEST(RunTrial, PhaseTimesRespectContainment) {
    const Params p = Params::make(10);
    const auto m = harness::run_trial(InitKind::all_unsettled, 10, 4, 2, p, harness::default_max_interactions(10));
    ASSERT_TRUE(m.silenced);
    for (const auto& t : m.phase_times) ASSERT_TRUE(t);
    const auto at = [&](harness::Phase ph) { return *m.phase_times[static_cast<std::size_t>(ph)]; };
    EXPECT_LE(at(harness::Phase::S_rank), at(harness::Phase::S_dec));
    EXPECT_LE(at(harness::Phase::S_dec), at(harness::Phase::S_em));
    EXPECT_LE(at(harness::Phase::S_tim), at(harness::Phase::S_em));
    EXPECT_DOUBLE_EQ(at(harness::Phase::S_em), m.parallel_time);
}

TEST(RunTrial, OverflowIsReported) {
    const Params p = Params::make(8);
    const auto m = harness::run_trial(InitKind::all_unsettled, 8, 4, 1, p, 10);
    EXPECT_TRUE(m.overflow());
    EXPECT_NE(harness::csv_row(m).find(",overflow,"), std::string::npos);
}

TEST(Sweep, CanonicalRowsForOneKind) {
    harness::SweepSpec spec;
    spec.ns = {16, 8};
    spec.kinds = {InitKind::all_unsettled};
    spec.policy = harness::NumAPolicy::Critical;
    spec.trials = 3;
    const auto res = harness::sweep(spec);
    // critical values at n=8: {0,1,3,4,7,8}; at n=16: {0,1,7,8,15,16}
    ASSERT_EQ(res.rows.size(), 2u * 6u * 3u);
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        const auto& a = res.rows[i - 1];
        const auto& b = res.rows[i];
        EXPECT_LE(std::tie(a.n, a.init_kind, a.num_a, a.trial), std::tie(b.n, b.init_kind, b.num_a, b.trial));
    }
    EXPECT_EQ(res.rows.front().n, 8u);
}

TEST(Sweep, SixRowsForTwoSizesThreeTrials) {
    harness::SweepSpec spec;
    spec.ns = {8, 16};
    spec.kinds = {InitKind::duplicate_ranks};
    spec.fixed_num_a = 5;
    spec.trials = 3;
    const auto res = harness::sweep(spec);
    ASSERT_EQ(res.rows.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(res.rows[i].n, i < 3 ? 8u : 16u);
        EXPECT_EQ(res.rows[i].trial, i % 3);
        EXPECT_EQ(res.rows[i].num_a, 5u);
    }
}

TEST(Sweep, LowerBoundKindOnOddSizesOnly) {
    harness::SweepSpec spec;
    spec.ns = {8, 9, 16, 17};
    spec.kinds = {InitKind::lb_flip};
    spec.trials = 3;
    const auto res = harness::sweep(spec);
    ASSERT_EQ(res.rows.size(), 6u);
    EXPECT_EQ(res.rows[0].n, 9u);
    EXPECT_EQ(res.rows[0].num_a, 4u);
    EXPECT_EQ(res.rows[3].n, 17u);
    for (const auto& r : res.rows) {
        EXPECT_TRUE(r.flip_first_change);
        EXPECT_TRUE(r.correct);
    }
}

TEST(Sweep, ReproducibleAndWorkerIndependent) {
    harness::SweepSpec spec;
    spec.ns = {5, 8};
    spec.trials = 2;
    spec.base_seed = 123;
    spec.census = true;
    spec.workers = 1;
    const auto one = harness::sweep(spec);
    const auto again = harness::sweep(spec);
    spec.workers = 8;
    const auto many = harness::sweep(spec);
    EXPECT_EQ(csv(one.rows), csv(again.rows));
    EXPECT_EQ(csv(one.rows), csv(many.rows));
    EXPECT_EQ(one.census, many.census);
    spec.base_seed = 124;
    EXPECT_NE(csv(harness::sweep(spec).rows), csv(one.rows));
}

TEST(Sweep, RejectsZeroTrials) {
    harness::SweepSpec spec;
    spec.ns = {4};
    spec.trials = 0;
    EXPECT_THROW(harness::sweep(spec), std::invalid_argument);
}

TEST(Sweep, TrialSeedsDependOnEveryCoordinate) {
    const auto s = harness::trial_seed(1, 8, InitKind::mid_reset, 2);
    EXPECT_NE(s, harness::trial_seed(2, 8, InitKind::mid_reset, 2));
    EXPECT_NE(s, harness::trial_seed(1, 9, InitKind::mid_reset, 2));
    EXPECT_NE(s, harness::trial_seed(1, 8, InitKind::lb_flip, 2));
    EXPECT_NE(s, harness::trial_seed(1, 8, InitKind::mid_reset, 3));
}

TEST(NumAPolicy, Values) {
    EXPECT_EQ(harness::num_a_values(harness::NumAPolicy::Auto, 4), (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
    EXPECT_EQ(harness::num_a_values(harness::NumAPolicy::Auto, 33),
              (std::vector<std::uint32_t>{0, 1, 15, 16, 17, 32, 33}));
    EXPECT_EQ(harness::num_a_values(harness::NumAPolicy::Critical, 64),
              (std::vector<std::uint32_t>{0, 1, 31, 32, 63, 64}));
    EXPECT_EQ(harness::num_a_values(harness::NumAPolicy::All, 20).size(), 21u);
}

TEST(Csv, HeaderAndEmptyPhaseFields) {
    harness::TraceMetrics m;
    m.n = 4;
    m.seed = 9;
    m.num_a = 2;
    m.silenced = true;
    m.interactions = 10;
    m.parallel_time = 2.5;
    m.phase_times[0] = 1.25;
    m.correct = true;
    EXPECT_EQ(harness::csv_row(m), "4,9,0,2,all_unsettled,10,2.5000,0,1.2500,,,,,true");
    EXPECT_EQ(std::string(harness::kCsvHeader),
              "n,seed,trial,num_A,init_kind,interactions,parallel_time,resets,t_S_rank,t_T_swap,t_S_dec,t_S_tim,"
              "t_S_em,correct");
}

TEST(Summarize, CorrectFractionAndExactLinearFit) {
    std::vector<harness::TraceMetrics> rows;
    const double c = 3.5;
    for (std::uint32_t n : {4u, 8u, 16u, 32u})
        for (int t = 0; t < 3; ++t) {
            harness::TraceMetrics m;
            m.n = n;
            m.silenced = true;
            m.correct = true;
            m.parallel_time = c * n;
            rows.push_back(m);
        }
    const auto s = harness::summarize(rows);
    ASSERT_EQ(s.groups.size(), 4u);
    for (const auto& g : s.groups) {
        EXPECT_DOUBLE_EQ(g.correct_fraction, 1.0);
        EXPECT_DOUBLE_EQ(g.mean, c * g.n);
        EXPECT_DOUBLE_EQ(g.ci_low, g.mean);
        EXPECT_DOUBLE_EQ(g.max, c * g.n);
    }
    const auto fit = s.time_fits.at(InitKind::all_unsettled);
    EXPECT_NEAR(fit.slope, c, 1e-12);
    EXPECT_NEAR(fit.intercept, 0.0, 1e-9);
    EXPECT_THROW(harness::summarize({}), std::invalid_argument);
}

TEST(Summarize, ConfidenceIntervalByHand) {
    // sample {1,2,3,4}: mean 2.5, s^2 = 5/3, half-width 1.96 * sqrt(5/12)
    const auto [lo, hi] = harness::mean_ci95({1, 2, 3, 4});
    const double half = 1.959963984540054 * std::sqrt(5.0 / 12.0);
    EXPECT_NEAR(lo, 2.5 - half, 1e-12);
    EXPECT_NEAR(hi, 2.5 + half, 1e-12);
}

TEST(Summarize, CensusNeverExceedsDeclaredStates) {
    harness::SweepSpec spec;
    spec.ns = {4, 6};
    spec.trials = 2;
    spec.census = true;
    const auto res = harness::sweep(spec);
    const auto s = harness::summarize(res.rows, res.census);
    ASSERT_EQ(s.census.size(), 2u);
    for (const auto& [n, count] : s.census) {
        EXPECT_GT(count, 0u);
        EXPECT_LE(count, StateSpace(Params::make(n)).size());
    }
    for (const auto& g : s.groups) EXPECT_DOUBLE_EQ(g.correct_fraction, 1.0);
}
