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

// simulate.hpp: discrete-event execution of an IPC graph under self-timed
// semantics. Used as the timing oracle for the max-plus analysis.

#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "nsoc/error.hpp"
#include "nsoc/ipc.hpp"

namespace nsoc {

/// Firing end times t_i(k); end_times[i][k-1] belongs to actors[i].
struct FiringRecord {
    std::vector<std::string> actors;
    std::vector<std::vector<double>> end_times;

    const std::vector<double> &of(const std::string &id) const {
        auto it = std::find(actors.begin(), actors.end(), id);
        if (it == actors.end())
            throw Error(Errc::InvalidInput, "unknown actor '" + id + "'");
        return end_times[static_cast<std::size_t>(it - actors.begin())];
    }
};

/// Runs `iterations` firings of every node.
///
/// Units do not rely on the Sequence edges of the graph: each unit walks its
/// own cyclic order and starts the head node once it is idle and every
/// incoming non-sequencing edge holds a token. Completions at equal times
/// are handled in (unit id, order position) order.
inline FiringRecord self_timed_simulate(const IpcGraph &g, std::size_t iterations) {
    if (iterations == 0)
        throw Error(Errc::InvalidInput, "iterations must be positive");
    const std::size_t n = g.nodes.size();

    std::vector<std::vector<std::size_t>> in_edges(n), out_edges(n);
    std::vector<long> tokens(g.edges.size(), 0);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto &e = g.edges[i];
        if (e.role == EdgeRole::Sequence)
            continue;
        in_edges[e.dst].push_back(i);
        out_edges[e.src].push_back(i);
        tokens[i] = e.delay;
    }

    struct Unit {
        const std::vector<std::size_t> *order;
        std::size_t pos = 0;
        bool busy = false;
    };
    std::vector<Unit> units;
    std::vector<char> placed(n, 0);
    for (const auto &[name, seq] : g.unit_order) {
        if (seq.empty())
            continue;
        units.push_back({&seq});
        for (auto v : seq) {
            if (placed[v])
                throw Error(Errc::InvalidInput, "node '" + g.nodes[v].id + "' appears on two units");
            placed[v] = 1;
        }
    }
    for (std::size_t v = 0; v < n; ++v)
        if (!placed[v])
            throw Error(Errc::InvalidInput, "node '" + g.nodes[v].id + "' has no unit");

    FiringRecord rec;
    rec.end_times.assign(n, {});
    for (const auto &node : g.nodes) {
        rec.actors.push_back(node.id);
    }
    for (auto &t : rec.end_times)
        t.reserve(iterations);

    // (time, unit index, position, node)
    using Event = std::tuple<double, std::size_t, std::size_t, std::size_t>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::size_t remaining = n * iterations;

    auto try_start = [&](double now) {
        for (std::size_t u = 0; u < units.size(); ++u) {
            Unit &unit = units[u];
            if (unit.busy)
                continue;
            std::size_t v = (*unit.order)[unit.pos];
            if (rec.end_times[v].size() >= iterations)
                continue;
            bool ready = std::all_of(in_edges[v].begin(), in_edges[v].end(),
                                     [&](std::size_t e) { return tokens[e] > 0; });
            if (!ready)
                continue;
            for (auto e : in_edges[v])
                --tokens[e];
            unit.busy = true;
            events.emplace(now + g.nodes[v].exec_time, u, unit.pos, v);
        }
    };

    try_start(0.0);
    while (!events.empty()) {
        const double now = std::get<0>(events.top());
        while (!events.empty() && std::get<0>(events.top()) == now) {
            auto [t, u, pos, v] = events.top();
            events.pop();
            rec.end_times[v].push_back(t);
            --remaining;
            for (auto e : out_edges[v])
                ++tokens[e];
            Unit &unit = units[u];
            unit.busy = false;
            unit.pos = (unit.pos + 1) % unit.order->size();
        }
        try_start(now);
    }
    if (remaining != 0)
        throw Error(Errc::Deadlock, "no node can fire while " + std::to_string(remaining) + " firings remain");
    return rec;
}

/// Mean inter-firing time over the last `window` iterations, maximised over
/// nodes. For a strongly connected graph every node converges to the same
/// value.
inline double steady_state_period(const FiringRecord &rec, std::size_t window) {
    double best = 0.0;
    for (const auto &t : rec.end_times) {
        if (t.size() <= window)
            throw Error(Errc::InvalidInput, "window exceeds simulated iterations");
        double p = (t.back() - t[t.size() - 1 - window]) / static_cast<double>(window);
        best = std::max(best, p);
    }
    return best;
}

} // namespace nsoc
