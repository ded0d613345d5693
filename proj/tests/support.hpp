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

// Shared fixtures, random generators and independent oracles for the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "nsoc/io.hpp"
#include "nsoc/ipc.hpp"
#include "nsoc/mapper.hpp"
#include "nsoc/maxplus.hpp"
#include "nsoc/sdfg.hpp"

#ifndef NSOC_FIXTURES
#error "NSOC_FIXTURES must point at the fixtures directory"
#endif

namespace nsoc::testing {

inline std::string fixture(const std::string &name) { return std::string(NSOC_FIXTURES) + "/" + name; }

inline ApplicationGraph app_fixture(const std::string &name) {
    return io::load_application(fixture(name + ".app.json"));
}
inline Platform platform_fixture(const std::string &name) {
    return io::load_platform(fixture(name + ".platform.json"));
}

inline ApplicationGraph inception() { return app_fixture("inception_block"); }
inline Mapping reference_mapping(const ApplicationGraph &g) {
    return io::load_mapping(fixture("inception_ref.mapping.json"), g);
}

inline const std::vector<std::string> &shipped_apps() {
    static const std::vector<std::string> apps = {"inception_block", "projection_block", "squeezenet_like",
                                                  "alexnet_like",    "lenet_like",       "convlstm_tiny"};
    return apps;
}

// ---------------------------------------------------------------------------
// Independent MCM oracle: bisection on lambda with Bellman-Ford detection of
// a cycle whose weight exceeds lambda times its token count.
// ---------------------------------------------------------------------------

inline bool has_cycle_above(const TimedDigraph &g, double lambda) {
    const std::size_t n = g.size();
    std::vector<double> dist(n, 0.0);
    for (std::size_t round = 0; round <= n; ++round) {
        bool changed = false;
        for (const auto &e : g.edges) {
            double w = e.weight - lambda * static_cast<double>(e.delay);
            if (dist[e.src] + w > dist[e.dst] + 1e-13) {
                dist[e.dst] = dist[e.src] + w;
                changed = true;
            }
        }
        if (!changed)
            return false;
    }
    return true;
}

inline double mcm_bisection(const TimedDigraph &g) {
    double hi = 0.0;
    for (const auto &e : g.edges)
        hi += std::abs(e.weight);
    double lo = -hi - 1.0;
    hi += 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        double mid = 0.5 * (lo + hi);
        (has_cycle_above(g, mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Random graphs
// ---------------------------------------------------------------------------

/// Random digraph whose delay-free edges respect a hidden node permutation,
/// so every cycle carries at least one token. May be acyclic.
inline TimedDigraph random_digraph(std::mt19937_64 &rng, std::size_t max_nodes, std::size_t max_edges) {
    std::uniform_int_distribution<std::size_t> nn(1, max_nodes);
    const std::size_t n = nn(rng);
    std::uniform_int_distribution<std::size_t> ne(1, max_edges);
    const std::size_t m = ne(rng);
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i)
        rank[i] = i;
    std::shuffle(rank.begin(), rank.end(), rng);

    TimedDigraph g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_node("v" + std::to_string(i));
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    std::uniform_int_distribution<int> delay(0, 2);
    std::uniform_real_distribution<double> weight(0.1, 10.0);
    for (std::size_t k = 0; k < m; ++k) {
        auto u = node(rng), v = node(rng);
        auto d = static_cast<std::uint32_t>(delay(rng));
        if (d == 0 && rank[u] >= rank[v])
            d = 1;
        g.add_edge(u, v, weight(rng), d);
    }
    return g;
}

/// Weakly connected random DAG application with per-kind latencies
/// (GPP = 2.78 x NPU) drawn from a small operation vocabulary.
inline ApplicationGraph random_application(std::mt19937_64 &rng, std::size_t max_actors,
                                           const std::string &name = "random") {
    static const std::vector<std::string> ops = {"Conv2D", "MaxPooling2D", "Dense", "Add", "Activation"};
    std::uniform_int_distribution<std::size_t> na(2, max_actors);
    const std::size_t n = na(rng);
    std::uniform_real_distribution<double> lat(0.5e-3, 4e-3);
    std::uniform_int_distribution<std::size_t> op(0, ops.size() - 1);
    std::uniform_int_distribution<std::uint64_t> bytes(1024, 65536);
    std::bernoulli_distribution extra(0.3);

    ApplicationGraph g;
    g.name = name;
    for (std::size_t i = 0; i < n; ++i) {
        Actor a;
        a.id = "a" + std::to_string(i);
        a.op_type = ops[op(rng)];
        double t = lat(rng);
        a.exec_time = {{"NPU", t}, {"GPP", 2.78 * t}};
        g.actors.push_back(a);
    }
    auto add = [&](std::size_t u, std::size_t v) {
        std::string id = g.actors[u].id + "->" + g.actors[v].id;
        for (const auto &c : g.channels)
            if (c.id == id)
                return;
        g.channels.push_back({id, g.actors[u].id, g.actors[v].id, 1, bytes(rng), 0});
    };
    for (std::size_t v = 1; v < n; ++v) {
        std::uniform_int_distribution<std::size_t> parent(0, v - 1);
        add(parent(rng), v);
        if (v >= 2 && extra(rng))
            add(parent(rng), v);
    }
    return g;
}

/// GPP first, then up to `max_resources - 1` NPUs with per-op sub-units.
inline Platform random_platform(std::mt19937_64 &rng, std::size_t max_resources) {
    std::uniform_int_distribution<std::size_t> nr(1, max_resources);
    const std::size_t n = nr(rng);
    Platform p;
    p.name = "random_platform";
    p.interconnect = {2e9, 2e-5, 5e-5};
    Resource gpp;
    gpp.id = "GPP1";
    gpp.kind = ResourceKind::Gpp;
    gpp.active_power_w = 2.4;
    gpp.idle_power_w = 0.4;
    p.resources.push_back(gpp);
    for (std::size_t k = 1; k < n; ++k) {
        Resource r;
        r.id = "NPU" + std::to_string(k);
        r.kind = ResourceKind::Npu;
        r.active_power_w = 0.6;
        r.idle_power_w = 0.06;
        r.subunits = {{"conv", {"Conv2D"}}, {"pool", {"MaxPooling2D"}}, {"dense", {"Dense"}}, {"vector", {"Add", "Activation"}}};
        for (const auto &s : r.subunits)
            r.supported_ops.insert(s.op_types.begin(), s.op_types.end());
        p.resources.push_back(r);
    }
    return p;
}

inline Mapping random_mapping(std::mt19937_64 &rng, const ApplicationGraph &g, const Platform &p) {
    Mapping m;
    for (const auto &a : g.actors) {
        std::vector<std::string> ok;
        for (const auto &r : p.resources)
            if (r.supports(a))
                ok.push_back(r.id);
        std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
        m.assignment[a.id] = ok[pick(rng)];
    }
    derive_orders(g, m);
    return m;
}

/// Uniformly seeded random linear extension of a TPO graph.
inline std::vector<std::string> random_topological_order(std::mt19937_64 &rng, const TpoGraph &tpo) {
    const std::size_t n = tpo.nodes.size();
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<std::size_t>> succ(n);
    for (const auto &[u, v] : tpo.edges) {
        ++indeg[v];
        succ[u].push_back(v);
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0)
            ready.push_back(v);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
        auto i = pick(rng);
        auto v = ready[i];
        ready.erase(ready.begin() + static_cast<long>(i));
        order.push_back(tpo.nodes[v]);
        for (auto w : succ[v])
            if (--indeg[w] == 0)
                ready.push_back(w);
    }
    return order;
}

inline bool is_topological(const TpoGraph &tpo, const std::vector<std::string> &order) {
    if (order.size() != tpo.nodes.size())
        return false;
    std::vector<std::size_t> pos(tpo.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        pos[tpo.index_of(order[i])] = i;
    return std::all_of(tpo.edges.begin(), tpo.edges.end(), [&](const auto &e) { return pos[e.first] < pos[e.second]; });
}

/// Mapping invariants shared by every test that produces a mapping.
inline bool mapping_ok(const ApplicationGraph &g, const Platform &p, const Mapping &m) {
    return check_mapping(g, p, m).ok();
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace nsoc::testing

namespace nsoc::testing {

/// Monte-Carlo wait at a FCFS resource. Contender jobs of length `t_a` are
/// released as a Poisson stream with `rate` per second; a probe arriving at
/// a uniform time after a warm-up waits for the unfinished work ahead of it.
inline double fcfs_wait_monte_carlo(double t_a, double rate, std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate);
    const double load = t_a * rate;
    const double warmup = 200.0 * t_a / (1.0 - load);
    std::uniform_real_distribution<double> phase(warmup, warmup + 1.0 / rate);
    double sum = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
        const double probe = phase(rng);
        double now = 0.0, work = 0.0;
        for (;;) {
            double next = now + gap(rng);
            if (next > probe) {
                work = std::max(0.0, work - (probe - now));
                break;
            }
            work = std::max(0.0, work - (next - now)) + t_a;
            now = next;
        }
        sum += work;
    }
    return sum / static_cast<double>(trials);
}

} // namespace nsoc::testing
