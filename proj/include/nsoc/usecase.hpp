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

// usecase.hpp: two applications sharing one platform. Probabilistic
// contention model, local exploration over stored archives and global
// exploration of the merged graph.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nsoc/error.hpp"
#include "nsoc/mapper.hpp"
#include "nsoc/sdfg.hpp"

namespace nsoc {

struct StateProbs {
    double wait = 0.0;
    double exec = 0.0;
    double not_ready = 1.0;
};

/// Long-run fraction of time an actor spends waiting, executing and idle
/// when it fires `rate` times per second.
inline StateProbs steady_probs(double t_exec, double t_wait, double rate) {
    if (t_exec < 0 || t_wait < 0 || rate < 0)
        throw Error(Errc::InvalidInput, "steady_probs: negative argument");
    StateProbs p;
    p.wait = t_wait * rate;
    p.exec = t_exec * rate;
    if (p.wait + p.exec > 1.0 + kTimeEps)
        throw Error(Errc::ProbabilityOverflow, "wait and execution occupancy exceed 1");
    p.not_ready = std::max(0.0, 1.0 - p.wait - p.exec);
    return p;
}

inline constexpr double kSaturationGuard = 1e-9;

/// Mean wait of an actor arriving at a resource where a contender with
/// execution time `t_a` fires `rate` times per second, served FCFS:
/// t_a^2 rate / 2 / (1 - t_a rate).
inline double expected_wait(double t_a, double rate) {
    if (t_a < 0 || rate < 0)
        throw Error(Errc::InvalidInput, "expected_wait: negative argument");
    const double load = t_a * rate;
    if (load >= 1.0 - kSaturationGuard)
        throw Error(Errc::SaturatedResource, "contender occupancy " + std::to_string(load) + " leaves no slack");
    return (t_a * t_a * rate / 2.0) / (1.0 - load);
}

struct UsecasePolicy {
    double delta_rho_max_pct = 5.0;
    double rho_constraint_s = 1.0;

    void validate() const {
        if (!(delta_rho_max_pct >= 0))
            throw Error(Errc::InvalidInput, "delta_rho_max must be non-negative");
        if (!(rho_constraint_s > 0))
            throw Error(Errc::InvalidInput, "rho_constraint must be positive");
    }
};

struct ScheduleDbEntry {
    ApplicationGraph application;
    ParetoArchive archive;
};

/// Application name -> graph and its archive of Pareto schedules.
using ScheduleDb = std::map<std::string, ScheduleDbEntry>;

/// Execution times of `g` with the waits caused by `other` added on every
/// shared resource.
inline ApplicationGraph inflate(const ApplicationGraph &g, const Mapping &m, const ApplicationGraph &other,
                                const Mapping &other_m, double other_rate, const Platform &p) {
    ApplicationGraph out = g;
    for (auto &a : out.actors) {
        const std::string &res = m.assignment.at(a.id);
        double wait = 0.0;
        for (const auto &c : other.actors) {
            auto it = other_m.assignment.find(c.id);
            if (it == other_m.assignment.end() || it->second != res)
                continue;
            wait += expected_wait(*c.latency(kind_name(p.resource(res).kind)), other_rate);
        }
        if (wait > 0)
            a.exec_time[std::string(kind_name(p.resource(res).kind))] += wait;
    }
    return out;
}

struct ContentionResult {
    Schedule a;
    Schedule b;
};

/// Re-evaluates both schedules with contention-inflated execution times.
/// Each side is inflated against the other's published (unadjusted) rate.
inline ContentionResult apply_contention(const ApplicationGraph &ga, const Schedule &sa, const ApplicationGraph &gb,
                                         const Schedule &sb, const Platform &p) {
    if (sa.platform != sb.platform || sa.platform != p.name)
        throw Error(Errc::InvalidInput, "schedules target different platforms");
    auto shares = [](const Mapping &x, const Mapping &y) {
        for (const auto &[_, r] : x.assignment)
            for (const auto &[__, s] : y.assignment)
                if (r == s)
                    return true;
        return false;
    };
    if (!shares(sa.mapping, sb.mapping))
        return {sa, sb};

    const double rate_a = 1.0 / sa.period_s;
    const double rate_b = 1.0 / sb.period_s;
    auto ga_hat = inflate(ga, sa.mapping, gb, sb.mapping, rate_b, p);
    auto gb_hat = inflate(gb, sb.mapping, ga, sa.mapping, rate_a, p);

    EvalOptions opt;
    opt.with_gantt = false;
    opt.block_n = sa.block_n;
    ContentionResult r;
    r.a = evaluate_detailed(ga_hat, p, sa.mapping, opt).schedule;
    opt.block_n = sb.block_n;
    r.b = evaluate_detailed(gb_hat, p, sb.mapping, opt).schedule;
    return r;
}

struct LocalResult {
    Schedule schedule_b;  // archive member as stored
    double rho_a = 0;     // A's period without contention
    double rho_hat_a = 0; // A's period with contention
    double delta_rho_a_pct = 0;
    double rho_b = 0; // B's period with contention

    double combined_throughput() const { return 1.0 / std::max(rho_hat_a, rho_b); }
};

/// Picks the highest-throughput stored schedule of `app_b` that keeps A's
/// degradation below the policy bound and B's period below its ceiling.
/// Candidates that saturate a shared resource are skipped.
inline LocalResult local_explore(const ScheduleDb &db, const ApplicationGraph &ga, const Schedule &sa,
                                 const std::string &app_b, const Platform &p, const UsecasePolicy &policy) {
    policy.validate();
    auto it = db.find(app_b);
    if (it == db.end())
        throw Error(Errc::InvalidInput, "application '" + app_b + "' not in schedule database");
    std::vector<const Schedule *> candidates;
    for (const auto &s : it->second.archive.members())
        candidates.push_back(&s);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Schedule *x, const Schedule *y) { return x->throughput > y->throughput; });

    for (const Schedule *sb : candidates) {
        ContentionResult adj;
        try {
            adj = apply_contention(ga, sa, it->second.application, *sb, p);
        } catch (const Error &e) {
            if (e.code() == Errc::SaturatedResource)
                continue;
            throw;
        }
        LocalResult r;
        r.schedule_b = *sb;
        r.rho_a = sa.period_s;
        r.rho_hat_a = adj.a.period_s;
        r.delta_rho_a_pct = 100.0 * (r.rho_hat_a - r.rho_a) / r.rho_a;
        r.rho_b = adj.b.period_s;
        if (r.delta_rho_a_pct < policy.delta_rho_max_pct && r.rho_b < policy.rho_constraint_s)
            return r;
    }
    throw Error(Errc::NoAdmissibleSchedule,
                "no stored schedule of '" + app_b + "' satisfies the use-case policy");
}

inline constexpr char kAppSeparator = '/';

inline std::pair<std::string, std::string> merged_prefixes(const ApplicationGraph &a, const ApplicationGraph &b) {
    std::string pa = a.name, pb = b.name;
    if (pa == pb)
        pb += "_2";
    return {pa + kAppSeparator, pb + kAppSeparator};
}

/// Disjoint union with ids namespaced as "<app>/<id>".
inline ApplicationGraph merge_graphs(const ApplicationGraph &a, const ApplicationGraph &b) {
    if (a.actors.empty())
        return b;
    if (b.actors.empty())
        return a;
    auto [pa, pb] = merged_prefixes(a, b);
    ApplicationGraph out;
    out.name = a.name + "+" + b.name;
    auto add = [&](const ApplicationGraph &g, const std::string &prefix) {
        for (auto actor : g.actors) {
            actor.id = prefix + actor.id;
            out.actors.push_back(std::move(actor));
        }
        for (auto c : g.channels) {
            c.id = prefix + c.id;
            c.src = prefix + c.src;
            c.dst = prefix + c.dst;
            out.channels.push_back(std::move(c));
        }
    };
    add(a, pa);
    add(b, pb);
    return out;
}

struct GlobalResult {
    Schedule combined;
    Schedule a;
    Schedule b;
    HillClimbResult climb;

    double combined_throughput() const { return combined.throughput; }
};

namespace detail {

inline std::string strip_prefix(const std::string &id, const std::string &prefix) {
    return id.rfind(prefix, 0) == 0 ? id.substr(prefix.size()) : id;
}

/// Restricts a merged schedule to the actors and channels of one application.
inline Schedule split_schedule(const Schedule &merged, const Evaluation &ev, const ApplicationGraph &g,
                               const std::string &prefix) {
    std::set<std::string> owned;
    for (const auto &n : ev.block.graph.nodes)
        if (n.origin.rfind(prefix, 0) == 0)
            owned.insert(n.id);

    Schedule s = merged;
    s.application = g.name;
    s.mapping = {};
    for (const auto &[actor, res] : merged.mapping.assignment)
        if (actor.rfind(prefix, 0) == 0)
            s.mapping.assignment[strip_prefix(actor, prefix)] = res;
    for (const auto &[res, seq] : merged.mapping.order)
        for (const auto &actor : seq)
            if (actor.rfind(prefix, 0) == 0)
                s.mapping.order[res].push_back(strip_prefix(actor, prefix));
    s.transaction_order.clear();
    for (const auto &id : merged.transaction_order)
        if (owned.count(id))
            s.transaction_order.push_back(id);
    s.gantt.clear();
    for (auto seg : merged.gantt)
        if (owned.count(seg.actor)) {
            seg.actor = strip_prefix(seg.actor, prefix);
            s.gantt.push_back(std::move(seg));
        }
    return s;
}

} // namespace detail

/// Hill climbing on the merged graph. Both applications share the combined
/// period since they run in one self-timed system.
inline GlobalResult global_explore(const ApplicationGraph &a, const ApplicationGraph &b, const Platform &p,
                                   const HillClimbConfig &cfg) {
    GlobalResult r;
    if (b.actors.empty() || a.actors.empty()) {
        const ApplicationGraph &only = a.actors.empty() ? b : a;
        r.climb = hill_climb(only, p, cfg);
        r.combined = r.climb.headline();
        (a.actors.empty() ? r.b : r.a) = r.combined;
        return r;
    }
    auto merged = merge_graphs(a, b);
    r.climb = hill_climb(merged, p, cfg);
    r.combined = r.climb.headline();

    EvalOptions opt;
    opt.block_n = cfg.block_n;
    opt.with_gantt = false;
    auto ev = evaluate_detailed(merged, p, r.combined.mapping, opt);
    auto [pa, pb] = merged_prefixes(a, b);
    r.a = detail::split_schedule(r.combined, ev, a, pa);
    r.b = detail::split_schedule(r.combined, ev, b, pb);
    return r;
}

} // namespace nsoc
