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

// nsoc-sched: command-line front end.
//
//   nsoc-sched analyze APP PLATFORM [MAPPING] [--block-n N] [--baseline]
//   nsoc-sched map APP PLATFORM [--strategy rnd|lb|nfm] [--seed S] [--block-n N] [--out-db DIR]
//   nsoc-sched usecase DB RUNNING_SCHEDULE APP_B PLATFORM [--mode local|global] ...
//   nsoc-sched gantt SCHEDULE [--format csv|json]
//
// Exit codes: 0 ok, 1 input error, 2 infeasible mapping, 3 no admissible
// use-case schedule.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsoc/io.hpp"
#include "nsoc/mapper.hpp"
#include "nsoc/usecase.hpp"

namespace {

using nsoc::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNoAdmissible = 3;

int exit_code_for(nsoc::Errc c) {
    switch (c) {
    case nsoc::Errc::UnsupportedAssignment:
    case nsoc::Errc::Infeasible:
    case nsoc::Errc::NoFeasibleSchedule:
        return kExitInfeasible;
    case nsoc::Errc::NoAdmissibleSchedule:
        return kExitNoAdmissible;
    default:
        return kExitInput;
    }
}

void emit(const std::string &text, const std::string &out) {
    if (out.empty())
        std::cout << text;
    else
        nsoc::io::write_file(out, text);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag) {
    if (flag)
        return *flag;
    if (const char *env = std::getenv("NSOC_SCHED_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception &) {
            throw nsoc::Error(nsoc::Errc::InvalidInput, "NSOC_SCHED_SEED is not an unsigned integer");
        }
    }
    return 0;
}

json report_json(const nsoc::LocalResult &r) {
    using nsoc::io::round12;
    return {{"rho_A", round12(r.rho_a)},
            {"rho_hat_A", round12(r.rho_hat_a)},
            {"delta_rho_A_pct", round12(r.delta_rho_a_pct)},
            {"rho_B", round12(r.rho_b)}};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Mapping and throughput analysis of ML operation graphs on heterogeneous neuromorphic SoCs"};
    app.require_subcommand(1);

    std::string out;
    app.add_option("--out", out, "Write the result to a file instead of standard output");

    // analyze
    auto *analyze = app.add_subcommand("analyze", "Evaluate one mapping");
    std::string a_app, a_platform, a_mapping;
    unsigned a_block = 1;
    bool a_baseline = false;
    analyze->add_option("application", a_app)->required();
    analyze->add_option("platform", a_platform)->required();
    analyze->add_option("mapping", a_mapping);
    analyze->add_option("--block-n", a_block)->check(CLI::PositiveNumber);
    analyze->add_flag("--baseline", a_baseline, "NPU-first baseline with GPP fallback");

    // map
    auto *map = app.add_subcommand("map", "Hill-climbing exploration");
    std::string m_app, m_platform, m_strategy = "nfm", m_db;
    std::optional<std::uint64_t> m_seed;
    unsigned m_block = 4;
    map->add_option("application", m_app)->required();
    map->add_option("platform", m_platform)->required();
    map->add_option("--seed", m_seed);
    map->add_option("--strategy", m_strategy)->check(CLI::IsMember({"rnd", "lb", "nfm"}));
    map->add_option("--block-n", m_block)->check(CLI::PositiveNumber);
    map->add_option("--out-db", m_db, "Schedule database directory");

    // usecase
    auto *usecase = app.add_subcommand("usecase", "Admit a second application next to a running one");
    std::string u_db, u_running, u_app_b, u_platform, u_mode = "local";
    double u_delta = 5.0, u_rho = 1.0;
    std::optional<std::uint64_t> u_seed;
    unsigned u_block = 4;
    usecase->add_option("db", u_db)->required();
    usecase->add_option("running_schedule", u_running)->required();
    usecase->add_option("app_b", u_app_b)->required();
    usecase->add_option("platform", u_platform)->required();
    usecase->add_option("--mode", u_mode)->check(CLI::IsMember({"local", "global"}));
    usecase->add_option("--delta-rho-max", u_delta, "Largest tolerated slowdown of the running application, %");
    usecase->add_option("--rho-constraint", u_rho, "Period ceiling for the new application, s");
    usecase->add_option("--seed", u_seed);
    usecase->add_option("--block-n", u_block, "Block size for global exploration")->check(CLI::PositiveNumber);

    // gantt
    auto *gantt = app.add_subcommand("gantt", "Export Gantt rows of a schedule");
    std::string g_schedule, g_format = "csv";
    gantt->add_option("schedule", g_schedule)->required();
    gantt->add_option("--format", g_format)->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*analyze) {
            auto g = nsoc::io::load_application(a_app);
            auto p = nsoc::io::load_platform(a_platform);
            nsoc::Schedule s;
            if (a_baseline) {
                s = nsoc::evaluate_baseline(g, p, a_block);
            } else {
                auto m = a_mapping.empty() ? nsoc::initial_mapping(g, p, nsoc::InitialStrategy::Nfm, 0)
                                           : nsoc::io::load_mapping(a_mapping, g);
                s = nsoc::evaluate_mapping(g, p, m, a_block);
            }
            emit(nsoc::io::dump(nsoc::io::to_json(s)), out);
        } else if (*map) {
            auto g = nsoc::io::load_application(m_app);
            auto p = nsoc::io::load_platform(m_platform);
            nsoc::HillClimbConfig cfg;
            cfg.initial_strategy = *nsoc::parse_strategy(m_strategy);
            cfg.seed = resolve_seed(m_seed);
            cfg.block_n = m_block;
            auto result = nsoc::hill_climb(g, p, cfg);
            if (!m_db.empty())
                nsoc::io::save_archive(m_db, g, result.archive);
            emit(nsoc::io::dump(nsoc::io::to_json(result.headline())), out);
        } else if (*usecase) {
            auto db = nsoc::io::load_db(u_db);
            auto sa = nsoc::io::load_schedule(u_running);
            auto gb = nsoc::io::load_application(u_app_b);
            auto p = nsoc::io::load_platform(u_platform);
            auto it = db.find(sa.application);
            if (it == db.end())
                throw nsoc::Error(nsoc::Errc::InvalidInput,
                                  "running application '" + sa.application + "' not in schedule database");
            const auto &ga = it->second.application;
            if (u_mode == "local") {
                nsoc::UsecasePolicy policy{u_delta, u_rho};
                auto r = nsoc::local_explore(db, ga, sa, gb.name, p, policy);
                json j = {{"schedule_b", nsoc::io::to_json(r.schedule_b)}, {"report", report_json(r)}};
                emit(nsoc::io::dump(j), out);
            } else {
                nsoc::HillClimbConfig cfg;
                cfg.seed = resolve_seed(u_seed);
                cfg.block_n = u_block;
                auto r = nsoc::global_explore(ga, gb, p, cfg);
                json j = {{"combined", nsoc::io::to_json(r.combined)}};
                if (!ga.actors.empty())
                    j["schedule_a"] = nsoc::io::to_json(r.a);
                if (!gb.actors.empty())
                    j["schedule_b"] = nsoc::io::to_json(r.b);
                emit(nsoc::io::dump(j), out);
            }
        } else if (*gantt) {
            auto rows = nsoc::io::gantt_rows(nsoc::io::load_schedule(g_schedule));
            emit(g_format == "csv" ? nsoc::io::gantt_csv(rows) : nsoc::io::dump(nsoc::io::gantt_json(rows)), out);
        }
    } catch (const nsoc::Error &e) {
        std::cerr << "nsoc-sched: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        std::cerr << "nsoc-sched: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
