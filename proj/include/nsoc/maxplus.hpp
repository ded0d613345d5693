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

// maxplus.hpp: max-plus primitives and maximum cycle mean of timed digraphs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsoc/error.hpp"

namespace nsoc {

/// Absolute tolerance for tie-sensitive comparisons of times.
inline constexpr double kTimeEps = 1e-12;

/// Element of the max-plus semiring; -inf is the additive identity.
struct MaxPlusValue {
    double value = -std::numeric_limits<double>::infinity();

    static constexpr MaxPlusValue zero() { return {-std::numeric_limits<double>::infinity()}; }
    static constexpr MaxPlusValue one() { return {0.0}; }

    bool is_zero() const { return value == -std::numeric_limits<double>::infinity(); }
    friend bool operator==(MaxPlusValue, MaxPlusValue) = default;
};

/// a (+) b = max(a, b)
inline MaxPlusValue mp_add(MaxPlusValue a, MaxPlusValue b) { return {std::max(a.value, b.value)}; }

/// a (x) b = a + b, with the zero element absorbing
inline MaxPlusValue mp_mul(MaxPlusValue a, MaxPlusValue b) {
    if (a.is_zero() || b.is_zero())
        return MaxPlusValue::zero();
    return {a.value + b.value};
}

/// Directed multigraph with a weight (seconds) and a token count per edge.
struct TimedDigraph {
    struct Edge {
        std::size_t src;
        std::size_t dst;
        double weight;
        std::uint32_t delay;
    };

    std::vector<std::string> nodes;
    std::vector<Edge> edges;

    std::size_t add_node(std::string name) {
        nodes.push_back(std::move(name));
        return nodes.size() - 1;
    }
    void add_edge(std::size_t src, std::size_t dst, double weight, std::uint32_t delay) {
        edges.push_back({src, dst, weight, delay});
    }
    std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Topological order of the delay-free subgraph, or ZeroDelayCycle.
inline std::vector<std::size_t> zero_delay_topo(const TimedDigraph &g) {
    std::vector<int> indeg(g.size(), 0);
    std::vector<std::vector<std::size_t>> succ(g.size());
    for (const auto &e : g.edges) {
        if (e.delay != 0)
            continue;
        succ[e.src].push_back(e.dst);
        ++indeg[e.dst];
    }
    std::vector<std::size_t> order;
    order.reserve(g.size());
    for (std::size_t v = 0; v < g.size(); ++v)
        if (indeg[v] == 0)
            order.push_back(v);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (auto w : succ[order[i]])
            if (--indeg[w] == 0)
                order.push_back(w);
    if (order.size() != g.size())
        throw Error(Errc::ZeroDelayCycle, "cycle without initial tokens");
    return order;
}

/// Strongly connected components (iterative Tarjan). Returns component id per node.
inline std::vector<int> strong_components(std::size_t n, const std::vector<std::vector<std::size_t>> &succ,
                                          int &count) {
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call;
    int next_index = 0;
    count = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != -1)
            continue;
        call.emplace_back(root, 0);
        while (!call.empty()) {
            auto &[v, it] = call.back();
            if (it == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            if (it < succ[v].size()) {
                std::size_t w = succ[v][it++];
                if (index[w] == -1) {
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
            std::size_t done = v;
            call.pop_back();
            if (!call.empty()) {
                auto parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return comp;
}

struct UnitEdge {
    std::size_t src;
    std::size_t dst;
    double weight;
};

/// Karp's maximum cycle mean for a strongly connected graph where every
/// edge counts as length one.
inline double karp_scc(std::size_t m, const std::vector<UnitEdge> &edges) {
    std::vector<std::vector<double>> d(m + 1, std::vector<double>(m, kNegInf));
    d[0][0] = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        auto &cur = d[k];
        const auto &prev = d[k - 1];
        for (const auto &e : edges)
            if (prev[e.src] != kNegInf)
                cur[e.dst] = std::max(cur[e.dst], prev[e.src] + e.weight);
    }
    double best = kNegInf;
    for (std::size_t v = 0; v < m; ++v) {
        if (d[m][v] == kNegInf)
            continue;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < m; ++k)
            if (d[k][v] != kNegInf)
                worst = std::min(worst, (d[m][v] - d[k][v]) / static_cast<double>(m - k));
        best = std::max(best, worst);
    }
    return best;
}

} // namespace detail

/// Maximum over all cycles of (sum of edge weights) / (sum of edge delays).
///
/// Edges with delay d > 1 are expanded through d - 1 zero-weight nodes so
/// every token-carrying hop has delay one; runs of delay-free edges that
/// follow a hop are contracted into a single weighted edge. Karp's
/// algorithm then runs on each strongly connected component.
inline double mcm(const TimedDigraph &g) {
    using detail::kNegInf;
    const auto topo = detail::zero_delay_topo(g);
    const std::size_t n = g.size();

    std::vector<std::vector<std::pair<std::size_t, double>>> zsucc(n);
    for (const auto &e : g.edges)
        if (e.delay == 0)
            zsucc[e.src].push_back({e.dst, e.weight});
    std::vector<std::size_t> topo_pos(n);
    for (std::size_t i = 0; i < topo.size(); ++i)
        topo_pos[topo[i]] = i;

    // Hops of delay one: (from, to, weight), over original + expansion nodes.
    std::size_t total = n;
    std::vector<detail::UnitEdge> hops;
    for (const auto &e : g.edges) {
        if (e.delay == 0)
            continue;
        std::size_t prev = e.src;
        double w = e.weight;
        for (std::uint32_t k = 1; k < e.delay; ++k) {
            hops.push_back({prev, total, w});
            prev = total++;
            w = 0.0;
        }
        hops.push_back({prev, e.dst, w});
    }

    // Longest delay-free path from each hop target (original nodes only).
    std::vector<std::vector<std::pair<std::size_t, double>>> reach(n);
    std::vector<char> needed(n, 0);
    for (const auto &h : hops)
        if (h.dst < n)
            needed[h.dst] = 1;
    std::vector<double> dist(n, kNegInf);
    for (std::size_t b = 0; b < n; ++b) {
        if (!needed[b])
            continue;
        std::fill(dist.begin(), dist.end(), kNegInf);
        dist[b] = 0.0;
        for (std::size_t i = topo_pos[b]; i < topo.size(); ++i) {
            std::size_t v = topo[i];
            if (dist[v] == kNegInf)
                continue;
            reach[b].push_back({v, dist[v]});
            for (const auto &[w, wt] : zsucc[v])
                dist[w] = std::max(dist[w], dist[v] + wt);
        }
    }

    std::vector<detail::UnitEdge> contracted;
    for (const auto &h : hops) {
        if (h.dst >= n) {
            contracted.push_back(h);
            continue;
        }
        for (const auto &[z, len] : reach[h.dst])
            contracted.push_back({h.src, z, h.weight + len});
    }
    // Keep only the heaviest of parallel edges.
    std::sort(contracted.begin(), contracted.end(), [](const auto &a, const auto &b) {
        return a.src != b.src ? a.src < b.src : a.dst != b.dst ? a.dst < b.dst : a.weight > b.weight;
    });
    contracted.erase(std::unique(contracted.begin(), contracted.end(),
                                 [](const auto &a, const auto &b) { return a.src == b.src && a.dst == b.dst; }),
                     contracted.end());

    std::vector<std::vector<std::size_t>> succ(total);
    for (const auto &e : contracted)
        succ[e.src].push_back(e.dst);
    int ncomp = 0;
    auto comp = detail::strong_components(total, succ, ncomp);

    std::vector<std::vector<std::size_t>> members(ncomp);
    for (std::size_t v = 0; v < total; ++v)
        members[comp[v]].push_back(v);
    std::vector<std::vector<detail::UnitEdge>> comp_edges(ncomp);
    std::vector<std::size_t> local(total, 0);
    for (int c = 0; c < ncomp; ++c)
        for (std::size_t i = 0; i < members[c].size(); ++i)
            local[members[c][i]] = i;
    for (const auto &e : contracted)
        if (comp[e.src] == comp[e.dst])
            comp_edges[comp[e.src]].push_back({local[e.src], local[e.dst], e.weight});

    bool any_cycle = false;
    double best = kNegInf;
    for (int c = 0; c < ncomp; ++c) {
        if (comp_edges[c].empty())
            continue;
        any_cycle = true;
        best = std::max(best, detail::karp_scc(members[c].size(), comp_edges[c]));
    }
    if (!any_cycle)
        throw Error(Errc::AcyclicGraph, "graph has no cycle");
    return best;
}

/// Reference MCM by exhaustive enumeration of simple cycles. Test oracle only;
/// limited to graphs with at most 12 nodes.
inline double mcm_bruteforce(const TimedDigraph &g) {
    const std::size_t n = g.size();
    if (n > 12)
        throw Error(Errc::InvalidInput, "mcm_bruteforce supports at most 12 nodes");
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        out[g.edges[i].src].push_back(i);

    bool found = false;
    double best = detail::kNegInf;
    std::vector<char> on_path(n, 0);

    struct Frame {
        std::size_t node;
        std::size_t next;
        double weight;
        std::uint64_t delay;
    };
    for (std::size_t s = 0; s < n; ++s) {
        // Cycles whose smallest node is s.
        std::vector<Frame> stack{{s, 0, 0.0, 0}};
        on_path[s] = 1;
        while (!stack.empty()) {
            Frame &f = stack.back();
            if (f.next == out[f.node].size()) {
                on_path[f.node] = 0;
                stack.pop_back();
                continue;
            }
            const auto &e = g.edges[out[f.node][f.next++]];
            if (e.dst < s)
                continue;
            double w = f.weight + e.weight;
            std::uint64_t d = f.delay + e.delay;
            if (e.dst == s) {
                if (d == 0)
                    throw Error(Errc::ZeroDelayCycle, "cycle without initial tokens");
                found = true;
                best = std::max(best, w / static_cast<double>(d));
                continue;
            }
            if (on_path[e.dst])
                continue;
            on_path[e.dst] = 1;
            stack.push_back({e.dst, 0, w, d});
        }
    }
    if (!found)
        throw Error(Errc::AcyclicGraph, "graph has no cycle");
    return best;
}

/// Iterations per second for a period in seconds.
inline double throughput(double period_s) {
    if (!(period_s > 0.0))
        throw Error(Errc::NonPositivePeriod, std::to_string(period_s));
    return 1.0 / period_s;
}

} // namespace nsoc
