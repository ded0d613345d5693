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

// mapper.hpp: schedule evaluation, initial mappings, Hill Climbing and the
// Pareto archive of explored schedules.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nsoc/error.hpp"
#include "nsoc/ipc.hpp"
#include "nsoc/maxplus.hpp"
#include "nsoc/sdfg.hpp"
#include "nsoc/simulate.hpp"

namespace nsoc {

struct GanttSegment {
    std::string unit;
    std::string actor;
    double start_s = 0.0;
    double end_s = 0.0;

    friend bool operator==(const GanttSegment &, const GanttSegment &) = default;
};

struct Schedule {
    std::string application;
    std::string platform;
    Mapping mapping;
    std::vector<std::string> transaction_order;
    double period_s = 0.0;
    double throughput = 0.0;
    double energy_j = 0.0;
    unsigned block_n = 1;
    std::vector<GanttSegment> gantt;

    friend bool operator==(const Schedule &, const Schedule &) = default;
};

/// True if some unit runs two overlapping segments.
inline bool gantt_overlaps(const std::vector<GanttSegment> &gantt) {
    std::map<std::string, std::vector<std::pair<double, double>>> per_unit;
    for (const auto &s : gantt)
        per_unit[s.unit].push_back({s.start_s, s.end_s});
    for (auto &[unit, segs] : per_unit) {
        std::sort(segs.begin(), segs.end());
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].first < segs[i - 1].second - kTimeEps)
                return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

/// Joules for one period given the busy seconds of each resource.
inline double energy_from_busy(const std::map<std::string, double> &busy, double period_s, const Platform &p) {
    double joules = 0.0;
    for (const auto &r : p.resources) {
        auto it = busy.find(r.id);
        double active = it == busy.end() ? 0.0 : it->second;
        joules += r.active_power_w * active + r.idle_power_w * std::max(0.0, period_s - active);
    }
    return joules;
}

/// Active power while a segment runs, idle power for the rest of the period.
inline double energy_of(const std::vector<GanttSegment> &gantt, double period_s, const Platform &p) {
    if (!(period_s >= 0.0))
        throw Error(Errc::NegativeTime, "period " + std::to_string(period_s));
    std::map<std::string, double> busy;
    for (const auto &s : gantt) {
        if (s.start_s < 0.0 || s.end_s < s.start_s)
            throw Error(Errc::NegativeTime, "segment " + s.actor + " on " + s.unit);
        busy[unit_resource(s.unit)] += s.end_s - s.start_s;
    }
    return energy_from_busy(busy, period_s, p);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalOptions {
    unsigned block_n = 1;
    /// Split NPUs into per-operation sub-units (disabled for the serialized baseline).
    bool use_hir = true;
    bool with_gantt = true;
    /// Block iterations simulated to extract a steady-state Gantt chart.
    std::size_t gantt_iterations = 16;
};

/// Everything the evaluation pipeline produces, for callers that need more
/// than the summary Schedule.
struct Evaluation {
    Schedule schedule;
    IpcGraph ipc;      // after send/receive insertion
    BlockGraph block;  // hIR block with the transaction order embedded
    double block_period = 0.0;
};

/// Gantt chart of one steady-state block iteration, shifted to start at 0.
inline std::vector<GanttSegment> steady_state_gantt(const IpcGraph &g, std::size_t iterations) {
    auto rec = self_timed_simulate(g, iterations);
    std::vector<GanttSegment> out;
    double origin = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < g.nodes.size(); ++v) {
        double end = rec.end_times[v].back();
        double start = end - g.nodes[v].exec_time;
        origin = std::min(origin, start);
        out.push_back({g.nodes[v].unit, g.nodes[v].id, start, end});
    }
    for (auto &s : out) {
        s.start_s = std::max(0.0, s.start_s - origin);
        s.end_s = std::max(s.start_s, s.end_s - origin);
    }
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        return a.unit != b.unit ? a.unit < b.unit : a.start_s != b.start_s ? a.start_s < b.start_s : a.actor < b.actor;
    });
    return out;
}

/// IPC graph -> hIR -> block of n iterations -> transaction order -> period.
inline Evaluation evaluate_detailed(const ApplicationGraph &g, const Platform &p, const Mapping &m,
                                    const EvalOptions &opt = {}) {
    Evaluation ev;
    ev.ipc = build_ipc(g, m, p);
    IpcGraph hir = opt.use_hir ? build_hir(ev.ipc, p) : ev.ipc;
    BlockGraph block = build_block(hir, opt.block_n);
    auto order = transaction_order(block.graph);
    ev.block = {embed_order(block.graph, order), block.n};
    ev.block_period = block_period(ev.block);

    Schedule &s = ev.schedule;
    s.application = g.name;
    s.platform = p.name;
    s.mapping = m;
    s.transaction_order = order;
    s.block_n = opt.block_n;
    s.period_s = ev.block_period / static_cast<double>(opt.block_n);
    s.throughput = throughput(s.period_s);

    std::map<std::string, double> busy;
    for (const auto &node : ev.block.graph.nodes)
        busy[node.resource] += node.exec_time;
    s.energy_j = energy_from_busy(busy, ev.block_period, p) / static_cast<double>(opt.block_n);
    if (opt.with_gantt)
        s.gantt = steady_state_gantt(ev.block.graph, opt.gantt_iterations);
    return ev;
}

inline Schedule evaluate_mapping(const ApplicationGraph &g, const Platform &p, const Mapping &m,
                                 unsigned block_n = 1) {
    EvalOptions opt;
    opt.block_n = block_n;
    return evaluate_detailed(g, p, m, opt).schedule;
}

// ---------------------------------------------------------------------------
// Initial mappings
// ---------------------------------------------------------------------------

enum class InitialStrategy { Rnd, Lb, Nfm };

inline std::string_view strategy_name(InitialStrategy s) {
    switch (s) {
    case InitialStrategy::Rnd: return "rnd";
    case InitialStrategy::Lb: return "lb";
    case InitialStrategy::Nfm: return "nfm";
    }
    return "?";
}

inline std::optional<InitialStrategy> parse_strategy(std::string_view s) {
    if (s == "rnd")
        return InitialStrategy::Rnd;
    if (s == "lb")
        return InitialStrategy::Lb;
    if (s == "nfm")
        return InitialStrategy::Nfm;
    return std::nullopt;
}

namespace detail {

inline std::vector<const Resource *> feasible_resources(const Actor &a, const Platform &p) {
    std::vector<const Resource *> out;
    for (const auto &r : p.resources)
        if (r.supports(a))
            out.push_back(&r);
    if (out.empty())
        throw Error(Errc::Infeasible, "no resource can run " + a.id + " (" + a.op_type + ")");
    return out;
}

inline double latency_on(const Actor &a, const Resource &r) { return *a.latency(kind_name(r.kind)); }

} // namespace detail

inline Mapping initial_mapping(const ApplicationGraph &g, const Platform &p, InitialStrategy strategy,
                               std::uint64_t seed) {
    Mapping m;
    const auto topo = topological_order(g);
    switch (strategy) {
    case InitialStrategy::Rnd: {
        std::mt19937_64 rng(seed);
        for (const auto &id : topo) {
            auto options = detail::feasible_resources(g.actor(id), p);
            std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
            m.assignment[id] = options[pick(rng)]->id;
        }
        break;
    }
    case InitialStrategy::Lb: {
        std::map<std::string, double> load;
        for (const auto &id : topo) {
            const Actor &a = g.actor(id);
            const Resource *best = nullptr;
            double best_load = 0.0;
            for (const Resource *r : detail::feasible_resources(a, p)) {
                double l = load[r->id] + detail::latency_on(a, *r);
                if (!best || l < best_load - kTimeEps) {
                    best = r;
                    best_load = l;
                }
            }
            load[best->id] = best_load;
            m.assignment[id] = best->id;
        }
        break;
    }
    case InitialStrategy::Nfm: {
        // List scheduling: the earliest-ready actor goes to the unit where it
        // can start first; NPUs win ties against GPPs.
        std::map<std::string, double> free_at, finish, ready_at;
        std::map<std::string, int> pending;
        for (const auto &a : g.actors) {
            pending[a.id] = 0;
            ready_at[a.id] = 0.0;
        }
        for (const auto &c : g.channels)
            if (c.initial_tokens == 0)
                ++pending[c.dst];
        std::vector<std::string> ready;
        for (const auto &[id, n] : pending)
            if (n == 0)
                ready.push_back(id);
        while (!ready.empty()) {
            auto it = std::min_element(ready.begin(), ready.end(), [&](const auto &x, const auto &y) {
                return ready_at[x] != ready_at[y] ? ready_at[x] < ready_at[y] : x < y;
            });
            std::string id = *it;
            ready.erase(it);
            const Actor &a = g.actor(id);
            const Resource *best = nullptr;
            double best_start = 0.0;
            for (const Resource *r : detail::feasible_resources(a, p)) {
                double start = std::max(ready_at[id], free_at[r->id]);
                bool better = !best || start < best_start - kTimeEps ||
                              (std::abs(start - best_start) <= kTimeEps && r->is_npu() && !best->is_npu());
                if (better) {
                    best = r;
                    best_start = start;
                }
            }
            double end = best_start + detail::latency_on(a, *best);
            free_at[best->id] = end;
            finish[id] = end;
            m.assignment[id] = best->id;
            for (const auto &c : g.channels) {
                if (c.src != id || c.initial_tokens != 0)
                    continue;
                ready_at[c.dst] = std::max(ready_at[c.dst], end);
                if (--pending[c.dst] == 0)
                    ready.push_back(c.dst);
            }
        }
        break;
    }
    }
    derive_orders(g, m);
    return m;
}

/// NPU-only reference: everything the first NPU supports runs there, the
/// rest falls back to the first GPP.
inline Mapping baseline_mapping(const ApplicationGraph &g, const Platform &p) {
    const Resource *npu = nullptr;
    const Resource *gpp = nullptr;
    for (const auto &r : p.resources) {
        if (r.is_npu() && !npu)
            npu = &r;
        if (!r.is_npu() && !gpp)
            gpp = &r;
    }
    Mapping m;
    for (const auto &a : g.actors) {
        if (npu && npu->supports(a))
            m.assignment[a.id] = npu->id;
        else if (gpp)
            m.assignment[a.id] = gpp->id;
        else
            throw Error(Errc::UnsupportedAssignment, a.id + " (" + a.op_type + ") has no NPU support and no GPP");
    }
    derive_orders(g, m);
    return m;
}

inline Schedule evaluate_baseline(const ApplicationGraph &g, const Platform &p, unsigned block_n = 1) {
    EvalOptions opt;
    opt.block_n = block_n;
    opt.use_hir = false;
    return evaluate_detailed(g, p, baseline_mapping(g, p), opt).schedule;
}

// ---------------------------------------------------------------------------
// Pareto archive
// ---------------------------------------------------------------------------

/// Schedules not dominated in (energy, period). Members are kept sorted by
/// period, so front() is the highest-throughput schedule.
class ParetoArchive {
public:
    /// Returns true if `s` was inserted.
    bool offer(Schedule s) {
        for (const auto &m : members_)
            if (m.energy_j <= s.energy_j + kTimeEps && m.period_s <= s.period_s + kTimeEps)
                return false;
        std::erase_if(members_, [&](const Schedule &m) {
            return s.energy_j <= m.energy_j && s.period_s <= m.period_s;
        });
        auto pos = std::lower_bound(members_.begin(), members_.end(), s, [](const auto &a, const auto &b) {
            return a.period_s != b.period_s ? a.period_s < b.period_s : a.energy_j < b.energy_j;
        });
        members_.insert(pos, std::move(s));
        return true;
    }

    const std::vector<Schedule> &members() const { return members_; }
    std::vector<Schedule> &members() { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }

private:
    std::vector<Schedule> members_;
};

/// True if some member dominates another (lower-or-equal in both
/// objectives and strictly lower in one).
inline bool has_dominated_pair(const std::vector<Schedule> &set) {
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (i == j)
                continue;
            const auto &a = set[i];
            const auto &b = set[j];
            bool weak = a.energy_j <= b.energy_j && a.period_s <= b.period_s;
            bool strict = a.energy_j < b.energy_j || a.period_s < b.period_s;
            if (weak && strict)
                return true;
        }
    return false;
}

/// Highest-throughput member whose energy fits under `energy_cap`.
inline Schedule select_schedule(const ParetoArchive &archive, std::optional<double> energy_cap = std::nullopt) {
    if (archive.empty())
        throw Error(Errc::NoFeasibleSchedule, "empty archive");
    for (const auto &s : archive.members())
        if (!energy_cap || s.energy_j <= *energy_cap)
            return s;
    throw Error(Errc::NoFeasibleSchedule, "no schedule under the energy cap");
}

// ---------------------------------------------------------------------------
// Hill Climbing
// ---------------------------------------------------------------------------

struct HillClimbConfig {
    InitialStrategy initial_strategy = InitialStrategy::Nfm;
    std::uint64_t seed = 0;
    unsigned perturbation_swaps = 3;
    unsigned max_perturbations = 5;
    unsigned block_n = 4;
};

struct ClimbStep {
    enum class Kind { Initial, Commit, Perturb };
    Kind kind;
    double period_s;
    Mapping mapping;
};

struct HillClimbResult {
    ParetoArchive archive;
    std::vector<ClimbStep> trace;
    std::size_t evaluations = 0;

    const Schedule &headline() const { return archive.members().front(); }
    double initial_period() const { return trace.front().period_s; }
};

/// Exchanges the resources of actors a and b and re-derives the orders.
inline Mapping swap_actors(const ApplicationGraph &g, const Mapping &m, const std::string &a, const std::string &b) {
    Mapping out = m;
    std::swap(out.assignment.at(a), out.assignment.at(b));
    derive_orders(g, out);
    return out;
}

inline Mapping move_actor(const ApplicationGraph &g, const Mapping &m, const std::string &a, const std::string &to) {
    Mapping out = m;
    out.assignment.at(a) = to;
    derive_orders(g, out);
    return out;
}

namespace detail {

class ClimbEvaluator {
public:
    ClimbEvaluator(const ApplicationGraph &g, const Platform &p, unsigned block_n, ParetoArchive &archive)
        : g_(g), p_(p), archive_(archive) {
        opt_.block_n = block_n;
        opt_.with_gantt = false;
    }

    double operator()(const Mapping &m) {
        std::string key;
        for (const auto &[a, r] : m.assignment)
            key += a + '\x1f' + r + '\x1e';
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
        Schedule s = evaluate_detailed(g_, p_, m, opt_).schedule;
        ++evaluations;
        double period = s.period_s;
        archive_.offer(std::move(s));
        cache_.emplace(std::move(key), period);
        return period;
    }

    std::size_t evaluations = 0;

private:
    const ApplicationGraph &g_;
    const Platform &p_;
    ParetoArchive &archive_;
    EvalOptions opt_;
    std::map<std::string, double> cache_;
};

inline bool can_swap(const ApplicationGraph &g, const Platform &p, const Mapping &m, const std::string &a,
                     const std::string &b) {
    const auto &ra = m.assignment.at(a);
    const auto &rb = m.assignment.at(b);
    return ra != rb && p.resource(rb).supports(g.actor(a)) && p.resource(ra).supports(g.actor(b));
}

} // namespace detail

/// Hill Climbing over actor-to-resource mappings, minimising the per-iteration
/// block period.
///
/// One pass visits every actor; for each it evaluates all swaps with actors
/// on other resources plus moves to other resources, and commits the best
/// trial if it beats the current period (ties between trials are broken by
/// the seeded generator). Passes repeat while they improve. A stuck search
/// is perturbed by random swaps and restarted, up to max_perturbations
/// times. Every evaluated schedule is offered to the Pareto archive.
inline HillClimbResult hill_climb(const ApplicationGraph &g, const Platform &p, const HillClimbConfig &cfg) {
    HillClimbResult result;
    std::mt19937_64 rng(cfg.seed);
    detail::ClimbEvaluator eval(g, p, cfg.block_n, result.archive);

    Mapping current = initial_mapping(g, p, cfg.initial_strategy, cfg.seed);
    double period = eval(current);
    result.trace.push_back({ClimbStep::Kind::Initial, period, current});

    std::vector<std::string> ids;
    for (const auto &a : g.actors)
        ids.push_back(a.id);

    auto climb = [&] {
        bool improved = true;
        while (improved) {
            improved = false;
            for (const auto &a : ids) {
                std::vector<Mapping> trials;
                for (const auto &b : ids)
                    if (detail::can_swap(g, p, current, a, b))
                        trials.push_back(swap_actors(g, current, a, b));
                for (const auto &r : p.resources)
                    if (r.id != current.assignment.at(a) && r.supports(g.actor(a)))
                        trials.push_back(move_actor(g, current, a, r.id));
                if (trials.empty())
                    continue;
                std::vector<double> periods;
                periods.reserve(trials.size());
                for (const auto &t : trials)
                    periods.push_back(eval(t));
                double best = *std::min_element(periods.begin(), periods.end());
                if (!(best < period - kTimeEps))
                    continue;
                std::vector<std::size_t> ties;
                for (std::size_t i = 0; i < periods.size(); ++i)
                    if (periods[i] <= best + kTimeEps)
                        ties.push_back(i);
                std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
                current = trials[ties[pick(rng)]];
                period = eval(current);
                result.trace.push_back({ClimbStep::Kind::Commit, period, current});
                improved = true;
            }
        }
    };

    climb();
    for (unsigned k = 0; k < cfg.max_perturbations; ++k) {
        bool moved = false;
        for (unsigned s = 0; s < cfg.perturbation_swaps; ++s) {
            std::vector<std::pair<std::string, std::string>> options;
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j)
                    if (detail::can_swap(g, p, current, ids[i], ids[j]))
                        options.push_back({ids[i], ids[j]});
            if (options.empty())
                break;
            std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
            const auto &[a, b] = options[pick(rng)];
            current = swap_actors(g, current, a, b);
            moved = true;
        }
        if (!moved)
            break;
        period = eval(current);
        result.trace.push_back({ClimbStep::Kind::Perturb, period, current});
        climb();
    }

    // Archive members were evaluated without Gantt charts.
    EvalOptions full;
    full.block_n = cfg.block_n;
    for (auto &s : result.archive.members())
        s = evaluate_detailed(g, p, s.mapping, full).schedule;
    result.evaluations = eval.evaluations;
    return result;
}

} // namespace nsoc
