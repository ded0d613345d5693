/*
Copyright 2026 The nsoc-sched Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <gtest/gtest.h>

#include "nsoc/mapper.hpp"
#include "nsoc/simulate.hpp"
#include "support.hpp"

using namespace nsoc;
using namespace nsoc::testing;

namespace {

Platform gpps(int count) {
    Platform p;
    p.name = "gpps";
    p.interconnect = {2e9, 2e-5, 5e-5};
    for (int k = 1; k <= count; ++k) {
        Resource r;
        r.id = "GPP" + std::to_string(k);
        r.kind = ResourceKind::Gpp;
        r.active_power_w = 3;
        r.idle_power_w = 1;
        p.resources.push_back(r);
    }
    return p;
}

Schedule point(double energy, double period) {
    Schedule s;
    s.energy_j = energy;
    s.period_s = period;
    s.throughput = 1.0 / period;
    return s;
}

Errc code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return Errc::InvalidInput;
}

constexpr InitialStrategy kStrategies[] = {InitialStrategy::Rnd, InitialStrategy::Lb, InitialStrategy::Nfm};

} // namespace

TEST(InitialMapping, SingleGppTakesEverything) {
    auto g = inception();
    auto p = platform_fixture("single_gpp");
    for (auto s : kStrategies) {
        auto m = initial_mapping(g, p, s, 3);
        for (const auto &[actor, res] : m.assignment)
            EXPECT_EQ(res, "GPP1") << strategy_name(s);
        EXPECT_TRUE(mapping_ok(g, p, m));
    }
}

TEST(InitialMapping, LoadBalanceSplitsEqualActors) {
    ApplicationGraph g;
    g.name = "four";
    for (const char *id : {"a", "b", "c", "d"})
        g.actors.push_back({id, "Dense", {{"GPP", 1.0}}, 0});
    auto m = initial_mapping(g, gpps(2), InitialStrategy::Lb, 0);
    std::map<std::string, int> per;
    for (const auto &[actor, res] : m.assignment)
        ++per[res];
    EXPECT_EQ(per["GPP1"], 2);
    EXPECT_EQ(per["GPP2"], 2);
}

TEST(InitialMapping, NpuFirstOnProjectionBlock) {
    auto g = app_fixture("projection_block");
    auto p = platform_fixture("nsoc_1npu");
    auto m = initial_mapping(g, p, InitialStrategy::Nfm, 0);
    EXPECT_EQ(m.assignment.at("pool"), "NPU1");
    EXPECT_EQ(m.assignment.at("conv_a"), "NPU1");
    EXPECT_EQ(m.assignment.at("conv_sc"), "GPP1");
}

TEST(InitialMapping, StrategyNames) {
    EXPECT_EQ(parse_strategy("rnd"), InitialStrategy::Rnd);
    EXPECT_EQ(parse_strategy("lb"), InitialStrategy::Lb);
    EXPECT_EQ(parse_strategy("nfm"), InitialStrategy::Nfm);
    EXPECT_FALSE(parse_strategy("greedy"));
}

TEST(InitialMapping, InfeasibleActor) {
    auto g = app_fixture("convlstm_tiny");
    EXPECT_EQ(code_of([&] { initial_mapping(g, platform_fixture("npu_only"), InitialStrategy::Nfm, 0); }),
              Errc::Infeasible);
}

TEST(Evaluate, SerialChainOnGpp) {
    auto g = app_fixture("alexnet_like");
    auto p = platform_fixture("single_gpp");
    Mapping m;
    double sum = 0;
    for (const auto &a : g.actors) {
        m.assignment[a.id] = "GPP1";
        sum += *a.latency("GPP");
    }
    derive_orders(g, m);
    EXPECT_NEAR(evaluate_mapping(g, p, m).period_s, sum, 1e-12);
}

TEST(Evaluate, PeriodMatchesSimulation) {
    std::mt19937_64 rng(51);
    for (int k = 0; k < 15; ++k) {
        auto g = random_application(rng, 8);
        auto p = random_platform(rng, 3);
        auto m = random_mapping(rng, g, p);
        for (unsigned n : {1u, 2u}) {
            EvalOptions opt;
            opt.block_n = n;
            opt.with_gantt = false;
            auto ev = evaluate_detailed(g, p, m, opt);
            auto rec = self_timed_simulate(ev.block.graph, 600);
            EXPECT_LE(rel_diff(steady_state_period(rec, 300) / n, ev.schedule.period_s), 1e-6);
        }
    }
}

TEST(Evaluate, ScheduleFields) {
    auto g = inception();
    auto p = platform_fixture("nsoc_2npu");
    auto s = evaluate_mapping(g, p, reference_mapping(g), 2);
    EXPECT_EQ(s.block_n, 2u);
    EXPECT_EQ(s.transaction_order.size(), 20u);
    EXPECT_NEAR(s.throughput * s.period_s, 1.0, 1e-12);
    EXPECT_FALSE(gantt_overlaps(s.gantt));
    EXPECT_GT(s.energy_j, 0.0);
}

TEST(Evaluate, HeterogeneousBeatsBaselineOnInception) {
    auto g = inception();
    auto p = platform_fixture("nsoc_2npu");
    auto base = evaluate_baseline(g, p);
    for (const auto &a : g.actors)
        EXPECT_EQ(base.mapping.assignment.at(a.id), p.resource("NPU1").supports(a) ? "NPU1" : "GPP1") << a.id;
    HillClimbConfig cfg;
    EXPECT_GE(hill_climb(g, p, cfg).headline().throughput, base.throughput);
}

TEST(Evaluate, BaselineWithoutGpp) {
    auto g = app_fixture("convlstm_tiny");
    EXPECT_EQ(code_of([&] { evaluate_baseline(g, platform_fixture("npu_only")); }), Errc::UnsupportedAssignment);
}

TEST(Energy, HandArithmetic) {
    Platform p = gpps(2);
    EXPECT_DOUBLE_EQ(energy_of({{"GPP1", "x", 0, 8}}, 8, gpps(1)), 24.0);
    EXPECT_DOUBLE_EQ(energy_of({}, 8, p), 16.0);
    EXPECT_DOUBLE_EQ(energy_of({{"GPP1", "x", 0, 2}, {"GPP2", "y", 3, 5}}, 8, p), 2 * (3 * 2 + 1 * 6));
    EXPECT_EQ(code_of([&] { energy_of({{"GPP1", "x", 3, 2}}, 8, p); }), Errc::NegativeTime);
}

TEST(Energy, SubunitsChargeTheirResource) {
    auto p = platform_fixture("nsoc_1npu");
    double e = energy_of({{"NPU1:conv", "c", 0, 1}, {"NPU1:pool", "q", 0, 1}}, 4, p);
    EXPECT_DOUBLE_EQ(e, 0.6 * 2 + 0.06 * 2 + 0.4 * 4);
}

TEST(Archive, SelectSchedule) {
    ParetoArchive a;
    EXPECT_TRUE(a.offer(point(2, 5)));
    EXPECT_TRUE(a.offer(point(4, 3)));
    EXPECT_DOUBLE_EQ(select_schedule(a).period_s, 3);
    EXPECT_DOUBLE_EQ(select_schedule(a, 3.0).period_s, 5);
    EXPECT_EQ(code_of([&] { select_schedule(a, 1.0); }), Errc::NoFeasibleSchedule);
    EXPECT_EQ(code_of([&] { select_schedule(ParetoArchive{}); }), Errc::NoFeasibleSchedule);
}

TEST(Archive, NeverHoldsDominatedPair) {
    std::mt19937_64 rng(52);
    std::uniform_int_distribution<int> v(1, 20);
    for (int trial = 0; trial < 50; ++trial) {
        ParetoArchive a;
        std::vector<Schedule> offered;
        for (int k = 0; k < 40; ++k) {
            offered.push_back(point(v(rng), v(rng)));
            a.offer(offered.back());
            ASSERT_FALSE(has_dominated_pair(a.members()));
        }
        // Every offered point is weakly dominated by some member.
        for (const auto &s : offered)
            EXPECT_TRUE(std::any_of(a.members().begin(), a.members().end(), [&](const Schedule &m) {
                return m.energy_j <= s.energy_j && m.period_s <= s.period_s;
            }));
    }
}

TEST(Archive, RejectsDuplicates) {
    ParetoArchive a;
    EXPECT_TRUE(a.offer(point(1, 1)));
    EXPECT_FALSE(a.offer(point(1, 1)));
    EXPECT_FALSE(a.offer(point(2, 1)));
    EXPECT_TRUE(a.offer(point(0.5, 0.5)));
    EXPECT_EQ(a.size(), 1u);
}

TEST(HillClimb, SwapIsInvolution) {
    auto g = inception();
    auto m = reference_mapping(g);
    auto back = swap_actors(g, swap_actors(g, m, "conv1", "pool"), "conv1", "pool");
    EXPECT_EQ(back.assignment, m.assignment);
}

TEST(HillClimb, SingleResourcePlatform) {
    auto g = app_fixture("lenet_like");
    auto p = platform_fixture("single_gpp");
    HillClimbConfig cfg;
    auto r = hill_climb(g, p, cfg);
    ASSERT_EQ(r.archive.size(), 1u);
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace.front().kind, ClimbStep::Kind::Initial);
    EXPECT_EQ(r.headline().mapping, initial_mapping(g, p, cfg.initial_strategy, cfg.seed));
}

TEST(HillClimb, MonotoneAndDeterministicOnInception) {
    auto g = inception();
    auto p = platform_fixture("nsoc_2npu");
    for (auto s : kStrategies) {
        HillClimbConfig cfg;
        cfg.initial_strategy = s;
        cfg.seed = 5;
        auto r = hill_climb(g, p, cfg);
        double prev = r.initial_period();
        for (const auto &step : r.trace) {
            if (step.kind == ClimbStep::Kind::Commit) {
                EXPECT_LE(step.period_s, prev + kTimeEps);
            }
            prev = step.period_s;
        }
        EXPECT_LE(r.headline().period_s, r.initial_period() + kTimeEps);
        EXPECT_FALSE(has_dominated_pair(r.archive.members()));
        for (const auto &m : r.archive.members())
            EXPECT_TRUE(mapping_ok(g, p, m.mapping));
        auto again = hill_climb(g, p, cfg);
        EXPECT_EQ(r.archive.members(), again.archive.members());
    }
}

TEST(HillClimb, HeadlineIsReproducedByEvaluation) {
    auto g = app_fixture("projection_block");
    auto p = platform_fixture("nsoc_1npu");
    HillClimbConfig cfg;
    auto r = hill_climb(g, p, cfg);
    auto s = evaluate_mapping(g, p, r.headline().mapping, cfg.block_n);
    EXPECT_EQ(s, r.headline());
}
