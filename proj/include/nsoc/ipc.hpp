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

// ipc.hpp: interprocessor-communication graphs.
//
// An IpcGraph is the mapping-aware form of an application graph. Every
// node occupies one timeline unit (a GPP, an NPU, or an NPU sub-unit) and
// every unit fires its nodes in a fixed cyclic order. Edge weights are
// implicit: an edge costs the execution time of its source node, so the
// weight of a cycle is the summed execution time of the nodes on it.
//
// Edge roles:
//   Data      application channel (or a piece of one after send/receive split)
//   Sequence  self-timed order on a unit; the closing edge holds one token
//   Closure   sinks -> sources of each application component, one token;
//             an iteration must finish before the same slot starts again
//   Order     embedded transaction order over communication nodes

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsoc/error.hpp"
#include "nsoc/maxplus.hpp"
#include "nsoc/sdfg.hpp"

namespace nsoc {

enum class NodeRole { Compute, Send, Receive };
enum class EdgeRole { Data, Sequence, Closure, Order };

struct IpcNode {
    std::string id;
    NodeRole role = NodeRole::Compute;
    std::string unit;     // timeline the node occupies
    std::string resource; // platform resource owning that timeline
    double exec_time = 0.0;
    std::string origin;   // actor id (compute) or channel id (send/receive)
    std::string anchor;   // computing actor served by a send/receive on the same resource
    std::string op_type;
    std::uint64_t payload_bytes = 0;
    unsigned iteration = 1;

    bool is_comm() const { return role != NodeRole::Compute; }
};

struct IpcEdge {
    std::size_t src;
    std::size_t dst;
    std::uint32_t delay;
    EdgeRole role;
};

class IpcGraph {
public:
    std::vector<IpcNode> nodes;
    std::vector<IpcEdge> edges;
    /// Cyclic firing order of every unit, as node indices.
    std::map<std::string, std::vector<std::size_t>> unit_order;
    /// Transaction order embedded by embed_order (empty when none).
    std::vector<std::string> embedded_order;

    std::size_t add_node(IpcNode n) {
        if (!index_.emplace(n.id, nodes.size()).second)
            throw Error(Errc::InvalidInput, "duplicate IPC node '" + n.id + "'");
        nodes.push_back(std::move(n));
        return nodes.size() - 1;
    }

    void add_edge(std::size_t src, std::size_t dst, std::uint32_t delay, EdgeRole role) {
        edges.push_back({src, dst, delay, role});
    }

    std::size_t index_of(const std::string &id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw Error(Errc::InvalidInput, "unknown IPC node '" + id + "'");
        return it->second;
    }

    bool contains(const std::string &id) const { return index_.count(id) > 0; }

    std::vector<std::size_t> comm_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].is_comm())
                out.push_back(i);
        return out;
    }

    std::size_t count(EdgeRole role) const {
        return static_cast<std::size_t>(
            std::count_if(edges.begin(), edges.end(), [&](const IpcEdge &e) { return e.role == role; }));
    }

    std::size_t count(NodeRole role) const {
        return static_cast<std::size_t>(
            std::count_if(nodes.begin(), nodes.end(), [&](const IpcNode &n) { return n.role == role; }));
    }

    /// Drops existing sequencing edges and re-creates them from unit_order.
    void rebuild_sequencing() {
        std::erase_if(edges, [](const IpcEdge &e) { return e.role == EdgeRole::Sequence; });
        for (const auto &[unit, seq] : unit_order) {
            if (seq.empty())
                continue;
            for (std::size_t i = 0; i + 1 < seq.size(); ++i)
                add_edge(seq[i], seq[i + 1], 0, EdgeRole::Sequence);
            add_edge(seq.back(), seq.front(), 1, EdgeRole::Sequence);
        }
    }

    TimedDigraph digraph() const {
        TimedDigraph g;
        g.nodes.reserve(nodes.size());
        for (const auto &n : nodes)
            g.add_node(n.id);
        g.edges.reserve(edges.size());
        for (const auto &e : edges)
            g.add_edge(e.src, e.dst, nodes[e.src].exec_time, e.delay);
        return g;
    }

private:
    std::unordered_map<std::string, std::size_t> index_;
};

/// Execution time of one send or receive for `bytes` between two resources.
inline double comm_time(const Platform &p, const Resource &from, const Resource &to, std::uint64_t bytes) {
    const auto &ic = p.interconnect;
    double t = ic.setup_latency_s + static_cast<double>(bytes) / ic.bandwidth_bytes_per_s;
    if (from.kind != to.kind)
        t += ic.gpp_npu_dma_extra_s;
    return t;
}

namespace detail {

/// Sink -> source edges inside each weakly connected component.
inline void add_closure_edges(const ApplicationGraph &g, IpcGraph &ipc) {
    std::set<std::string> has_in, has_out;
    for (const auto &c : g.channels) {
        if (c.initial_tokens != 0)
            continue;
        has_out.insert(c.src);
        has_in.insert(c.dst);
    }
    auto comp = weak_components(g);
    for (const auto &sink : g.actors) {
        if (has_out.count(sink.id))
            continue;
        for (const auto &source : g.actors) {
            if (has_in.count(source.id) || comp[source.id] != comp[sink.id])
                continue;
            ipc.add_edge(ipc.index_of(sink.id), ipc.index_of(source.id), 1, EdgeRole::Closure);
        }
    }
}

} // namespace detail

/// Builds the IPC graph of `g` under mapping `m`.
///
/// Each inter-resource channel becomes src -> S -> R -> dst. The send sits
/// right after its producer in the producer resource's order, the receive
/// right before its consumer. Communication nodes are named S<k>@<res> and
/// R<k>@<res>, numbered along the resource order.
inline IpcGraph build_ipc(const ApplicationGraph &g, const Mapping &m, const Platform &p) {
    require_valid_mapping(g, p, m);

    const auto &assign = m.assignment;
    auto is_inter = [&](const Channel &c) { return assign.at(c.src) != assign.at(c.dst); };

    IpcGraph ipc;
    for (const auto &a : g.actors) {
        const Resource &r = p.resource(assign.at(a.id));
        IpcNode n;
        n.id = a.id;
        n.role = NodeRole::Compute;
        n.unit = r.id;
        n.resource = r.id;
        n.exec_time = *a.latency(kind_name(r.kind));
        n.origin = a.id;
        n.op_type = a.op_type;
        ipc.add_node(std::move(n));
    }

    std::map<std::string, std::string> send_of, recv_of; // channel id -> node id
    for (const auto &r : p.resources) {
        auto it = m.order.find(r.id);
        if (it == m.order.end() || it->second.empty())
            continue;
        int sends = 0, recvs = 0;
        auto &seq = ipc.unit_order[r.id];
        for (const auto &actor : it->second) {
            for (const auto &c : g.channels) {
                if (c.dst != actor || !is_inter(c))
                    continue;
                IpcNode n;
                n.id = "R" + std::to_string(++recvs) + "@" + r.id;
                n.role = NodeRole::Receive;
                n.unit = n.resource = r.id;
                n.exec_time = comm_time(p, p.resource(assign.at(c.src)), r, c.payload_bytes());
                n.origin = c.id;
                n.anchor = actor;
                n.payload_bytes = c.payload_bytes();
                recv_of[c.id] = n.id;
                seq.push_back(ipc.add_node(std::move(n)));
            }
            seq.push_back(ipc.index_of(actor));
            for (const auto &c : g.channels) {
                if (c.src != actor || !is_inter(c))
                    continue;
                IpcNode n;
                n.id = "S" + std::to_string(++sends) + "@" + r.id;
                n.role = NodeRole::Send;
                n.unit = n.resource = r.id;
                n.exec_time = comm_time(p, r, p.resource(assign.at(c.dst)), c.payload_bytes());
                n.origin = c.id;
                n.anchor = actor;
                n.payload_bytes = c.payload_bytes();
                send_of[c.id] = n.id;
                seq.push_back(ipc.add_node(std::move(n)));
            }
        }
    }

    for (const auto &c : g.channels) {
        auto src = ipc.index_of(c.src);
        auto dst = ipc.index_of(c.dst);
        if (!is_inter(c)) {
            ipc.add_edge(src, dst, c.initial_tokens, EdgeRole::Data);
            continue;
        }
        auto s = ipc.index_of(send_of.at(c.id));
        auto r = ipc.index_of(recv_of.at(c.id));
        ipc.add_edge(src, s, 0, EdgeRole::Data);
        ipc.add_edge(s, r, c.initial_tokens, EdgeRole::Data);
        ipc.add_edge(r, dst, 0, EdgeRole::Data);
    }
    ipc.rebuild_sequencing();
    detail::add_closure_edges(g, ipc);
    return ipc;
}

// ---------------------------------------------------------------------------
// Transaction partial order
// ---------------------------------------------------------------------------

/// Communication nodes only, with precedence edges obtained by contracting
/// computing nodes out of the delay-free part of an IPC graph.
struct TpoGraph {
    std::vector<std::string> nodes;
    std::vector<double> weight;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::size_t index_of(const std::string &id) const {
        auto it = std::find(nodes.begin(), nodes.end(), id);
        if (it == nodes.end())
            throw Error(Errc::InvalidInput, "unknown TPO node '" + id + "'");
        return static_cast<std::size_t>(it - nodes.begin());
    }
};

inline TpoGraph build_tpo(const IpcGraph &ipc) {
    TpoGraph tpo;
    std::vector<long> tpo_index(ipc.nodes.size(), -1);
    for (auto v : ipc.comm_nodes()) {
        tpo_index[v] = static_cast<long>(tpo.nodes.size());
        tpo.nodes.push_back(ipc.nodes[v].id);
        tpo.weight.push_back(ipc.nodes[v].exec_time);
    }
    std::vector<std::vector<std::size_t>> succ(ipc.nodes.size());
    for (const auto &e : ipc.edges)
        if (e.delay == 0)
            succ[e.src].push_back(e.dst);

    std::vector<int> seen(ipc.nodes.size(), -1);
    for (auto u : ipc.comm_nodes()) {
        std::vector<std::size_t> stack(succ[u].begin(), succ[u].end());
        std::set<std::size_t> targets;
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (seen[v] == static_cast<int>(u))
                continue;
            seen[v] = static_cast<int>(u);
            if (ipc.nodes[v].is_comm()) {
                if (v != u)
                    targets.insert(v);
                continue;
            }
            stack.insert(stack.end(), succ[v].begin(), succ[v].end());
        }
        for (auto v : targets)
            tpo.edges.push_back({static_cast<std::size_t>(tpo_index[u]), static_cast<std::size_t>(tpo_index[v])});
    }
    return tpo;
}

/// Cost function used by transaction_order to rank ready actors.
using TpoEvaluator = std::function<double(const TpoGraph &)>;

/// MCM of a TPO graph closed by one-token edges from every sink to every source.
inline double tpo_cyclic_mcm(const TpoGraph &tpo) {
    if (tpo.nodes.empty())
        return 0.0;
    TimedDigraph g;
    for (const auto &id : tpo.nodes)
        g.add_node(id);
    std::vector<char> has_in(tpo.nodes.size(), 0), has_out(tpo.nodes.size(), 0);
    for (const auto &[u, v] : tpo.edges) {
        g.add_edge(u, v, tpo.weight[u], 0);
        has_out[u] = 1;
        has_in[v] = 1;
    }
    for (std::size_t s = 0; s < tpo.nodes.size(); ++s) {
        if (has_out[s])
            continue;
        for (std::size_t t = 0; t < tpo.nodes.size(); ++t)
            if (!has_in[t])
                g.add_edge(s, t, tpo.weight[s], 1);
    }
    return mcm(g);
}

/// Cost of committing `prefix.back()` as the next transaction after
/// `prefix[0..n-2]`, while the actors in `waiting` are still ready. Indices
/// refer to TpoGraph::nodes.
using OrderCost = std::function<double(const std::vector<std::size_t> &prefix, const std::vector<std::size_t> &waiting)>;

namespace detail {

/// Each round collects the ready actors (all TPO predecessors ordered),
/// scores each one as the next transaction and keeps the cheapest. Equal
/// costs (within kTimeEps) go to the smallest actor id, so the result is
/// deterministic without a random stage.
inline std::vector<std::string> greedy_order(const TpoGraph &tpo, const OrderCost &cost) {
    const std::size_t n = tpo.nodes.size();
    std::vector<char> alive(n, 1);
    std::vector<std::size_t> prefix;
    prefix.reserve(n);

    for (std::size_t round = 0; round < n; ++round) {
        std::vector<int> indeg(n, 0);
        for (const auto &[u, v] : tpo.edges)
            if (alive[u] && alive[v])
                ++indeg[v];
        std::vector<std::size_t> ready;
        for (std::size_t v = 0; v < n; ++v)
            if (alive[v] && indeg[v] == 0)
                ready.push_back(v);
        if (ready.empty())
            throw Error(Errc::CyclicTpo, "no ready transaction left");
        std::sort(ready.begin(), ready.end(), [&](auto a, auto b) { return tpo.nodes[a] < tpo.nodes[b]; });

        std::size_t candidate = ready.front();
        if (ready.size() > 1) {
            double best = 0.0;
            bool first = true;
            for (auto r : ready) {
                std::vector<std::size_t> waiting;
                for (auto u : ready)
                    if (u != r)
                        waiting.push_back(u);
                prefix.push_back(r);
                double c = cost(prefix, waiting);
                prefix.pop_back();
                if (first || c < best - kTimeEps) {
                    best = c;
                    candidate = r;
                    first = false;
                }
            }
        }
        prefix.push_back(candidate);
        alive[candidate] = 0;
    }
    std::vector<std::string> order;
    for (auto v : prefix)
        order.push_back(tpo.nodes[v]);
    return order;
}

} // namespace detail

/// Greedy transaction ordering scored on the TPO graph alone: a trial is the
/// subgraph of unordered actors plus edges from the candidate to every other
/// ready actor, ranked by `evaluate`.
inline std::vector<std::string> transaction_order(const TpoGraph &tpo,
                                                  const TpoEvaluator &evaluate = tpo_cyclic_mcm) {
    const std::size_t n = tpo.nodes.size();
    return detail::greedy_order(tpo, [&](const auto &prefix, const auto &waiting) {
        std::vector<char> alive(n, 1);
        for (std::size_t i = 0; i + 1 < prefix.size(); ++i)
            alive[prefix[i]] = 0;
        TpoGraph trial;
        std::vector<std::size_t> local(n, 0);
        for (std::size_t v = 0; v < n; ++v) {
            if (!alive[v])
                continue;
            local[v] = trial.nodes.size();
            trial.nodes.push_back(tpo.nodes[v]);
            trial.weight.push_back(tpo.weight[v]);
        }
        for (const auto &[u, v] : tpo.edges)
            if (alive[u] && alive[v])
                trial.edges.push_back({local[u], local[v]});
        for (auto u : waiting)
            trial.edges.push_back({local[prefix.back()], local[u]});
        return evaluate(trial);
    });
}

/// Greedy transaction ordering scored on the whole IPC graph: a trial embeds
/// the ordered prefix as a closed chain, adds edges from the candidate to the
/// other ready actors and takes the MCM. This is the ordering used by the
/// mapper.
inline std::vector<std::string> transaction_order(const IpcGraph &ipc) {
    const TpoGraph tpo = build_tpo(ipc);
    const TimedDigraph base = ipc.digraph();
    std::vector<std::size_t> at;
    for (const auto &id : tpo.nodes)
        at.push_back(ipc.index_of(id));
    return detail::greedy_order(tpo, [&](const auto &prefix, const auto &waiting) {
        TimedDigraph g = base;
        auto w = [&](std::size_t v) { return ipc.nodes[at[v]].exec_time; };
        for (std::size_t i = 0; i + 1 < prefix.size(); ++i)
            g.add_edge(at[prefix[i]], at[prefix[i + 1]], w(prefix[i]), 0);
        for (auto u : waiting)
            g.add_edge(at[prefix.back()], at[u], w(prefix.back()), 0);
        g.add_edge(at[prefix.back()], at[prefix.front()], w(prefix.back()), 1);
        return mcm(g);
    });
}

/// Adds the transaction order as a chain of delay-free edges closed by a
/// one-token edge from the last transaction back to the first.
inline IpcGraph embed_order(const IpcGraph &ipc, const std::vector<std::string> &order) {
    auto comm = ipc.comm_nodes();
    std::vector<std::string> expected, given = order;
    for (auto v : comm)
        expected.push_back(ipc.nodes[v].id);
    std::sort(expected.begin(), expected.end());
    std::sort(given.begin(), given.end());
    if (expected != given)
        throw Error(Errc::OrderMismatch, "order is not a permutation of the communication actors");

    IpcGraph out = ipc;
    if (order.empty())
        return out;
    std::vector<std::size_t> idx;
    for (const auto &id : order)
        idx.push_back(out.index_of(id));
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
        out.add_edge(idx[i], idx[i + 1], 0, EdgeRole::Order);
    out.add_edge(idx.back(), idx.front(), 1, EdgeRole::Order);
    out.embedded_order = order;
    try {
        detail::zero_delay_topo(out.digraph());
    } catch (const Error &) {
        throw Error(Errc::OrderMismatch, "order contradicts the precedence of the communication actors");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heterogeneous IR and block graphs
// ---------------------------------------------------------------------------

/// Re-homes NPU nodes onto the sub-unit that accelerates their operation.
/// Sends and receives follow the computing actor they serve, so an NPU with
/// one catch-all sub-unit keeps a single sequencing cycle.
inline IpcGraph build_hir(const IpcGraph &ipc, const Platform &p) {
    IpcGraph out = ipc;
    for (auto &n : out.nodes) {
        if (n.is_comm())
            continue;
        const Resource &r = p.resource(n.resource);
        if (!r.is_npu())
            continue;
        auto it = std::find_if(r.subunits.begin(), r.subunits.end(),
                               [&](const Subunit &s) { return s.op_types.count(n.op_type) > 0; });
        if (it == r.subunits.end())
            throw Error(Errc::NoSubunitForOp, n.id + " (" + n.op_type + ") on " + r.id);
        n.unit = subunit_id(r, *it);
    }
    for (auto &n : out.nodes)
        if (n.is_comm())
            n.unit = out.nodes[out.index_of(n.anchor)].unit;

    std::map<std::string, std::vector<std::size_t>> orders;
    for (const auto &[unit, seq] : ipc.unit_order)
        for (auto v : seq)
            orders[out.nodes[v].unit].push_back(v);
    out.unit_order = std::move(orders);
    out.rebuild_sequencing();
    return out;
}

struct BlockGraph {
    IpcGraph graph;
    unsigned n = 1;
};

/// Combines `n` iterations into one block.
///
/// Node copies are suffixed "#k" (k = 1..n) when n > 1. Data and order
/// edges are unfolded by their token count; closure edges link each copy to
/// the same copy of the next block, so iterations inside a block may
/// overlap. Each unit fires copies 1..n in turn with one token on the
/// block-level back edge.
inline BlockGraph build_block(const IpcGraph &ipc, unsigned n) {
    if (n == 0)
        throw Error(Errc::InvalidInput, "block size must be positive");
    if (n == 1)
        return {ipc, 1};

    BlockGraph block;
    block.n = n;
    IpcGraph &g = block.graph;
    const std::size_t base = ipc.nodes.size();
    auto copy_of = [&](std::size_t v, unsigned k) { return k * base + v; };
    for (unsigned k = 0; k < n; ++k)
        for (const auto &node : ipc.nodes) {
            IpcNode c = node;
            c.id = node.id + "#" + std::to_string(k + 1);
            if (!c.anchor.empty())
                c.anchor += "#" + std::to_string(k + 1);
            c.iteration = k + 1;
            g.add_node(std::move(c));
        }
    for (const auto &e : ipc.edges) {
        if (e.role == EdgeRole::Sequence)
            continue;
        for (unsigned k = 0; k < n; ++k) {
            if (e.role == EdgeRole::Closure) {
                g.add_edge(copy_of(e.src, k), copy_of(e.dst, k), e.delay, e.role);
                continue;
            }
            unsigned shifted = k + e.delay;
            g.add_edge(copy_of(e.src, k), copy_of(e.dst, shifted % n), shifted / n, e.role);
        }
    }
    for (const auto &[unit, seq] : ipc.unit_order) {
        auto &out = g.unit_order[unit];
        for (unsigned k = 0; k < n; ++k)
            for (auto v : seq)
                out.push_back(copy_of(v, k));
    }
    for (unsigned k = 0; k < n; ++k)
        for (const auto &id : ipc.embedded_order)
            g.embedded_order.push_back(id + "#" + std::to_string(k + 1));
    g.rebuild_sequencing();
    return block;
}

/// Period of one block (all n iterations).
inline double block_period(const BlockGraph &b) { return mcm(b.graph.digraph()); }

} // namespace nsoc
