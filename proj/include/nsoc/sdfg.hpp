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

// sdfg.hpp: application graphs, platforms and mappings, plus their validation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nsoc/error.hpp"

namespace nsoc {

// ---------------------------------------------------------------------------
// Application side
// ---------------------------------------------------------------------------

/// One ML operation. Latencies are keyed by resource kind name ("GPP",
/// "NPU"); a missing entry means the operation cannot run on that kind.
struct Actor {
    std::string id;
    std::string op_type;
    std::map<std::string, double> exec_time;
    std::uint64_t state_bytes = 0;

    std::optional<double> latency(std::string_view kind) const {
        auto it = exec_time.find(std::string(kind));
        if (it == exec_time.end())
            return std::nullopt;
        return it->second;
    }
};

/// Production rate equals consumption rate, so a single `rate` is stored.
struct Channel {
    std::string id;
    std::string src;
    std::string dst;
    std::uint32_t rate = 1;
    std::uint64_t bytes_per_token = 1;
    std::uint32_t initial_tokens = 0;

    std::uint64_t payload_bytes() const { return std::uint64_t{rate} * bytes_per_token; }
};

struct ApplicationGraph {
    std::string name;
    std::vector<Actor> actors;
    std::vector<Channel> channels;

    const Actor *find_actor(std::string_view id) const {
        for (const auto &a : actors)
            if (a.id == id)
                return &a;
        return nullptr;
    }

    const Actor &actor(std::string_view id) const {
        if (const Actor *a = find_actor(id))
            return *a;
        throw Error(Errc::InvalidInput, "unknown actor '" + std::string(id) + "'");
    }

    std::vector<const Channel *> in_channels(std::string_view id) const {
        std::vector<const Channel *> out;
        for (const auto &c : channels)
            if (c.dst == id)
                out.push_back(&c);
        return out;
    }

    std::vector<const Channel *> out_channels(std::string_view id) const {
        std::vector<const Channel *> out;
        for (const auto &c : channels)
            if (c.src == id)
                out.push_back(&c);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Platform side
// ---------------------------------------------------------------------------

enum class ResourceKind { Gpp, Npu };

inline std::string_view kind_name(ResourceKind k) { return k == ResourceKind::Gpp ? "GPP" : "NPU"; }

inline std::optional<ResourceKind> parse_kind(std::string_view s) {
    if (s == "GPP")
        return ResourceKind::Gpp;
    if (s == "NPU")
        return ResourceKind::Npu;
    return std::nullopt;
}

struct Subunit {
    std::string name;
    std::set<std::string> op_types;
};

struct Resource {
    std::string id;
    ResourceKind kind = ResourceKind::Gpp;
    std::set<std::string> supported_ops; // NPU only
    std::vector<Subunit> subunits;       // NPU only
    double active_power_w = 0.0;
    double idle_power_w = 0.0;

    bool is_npu() const { return kind == ResourceKind::Npu; }

    bool supports(const Actor &a) const {
        if (!a.latency(kind_name(kind)))
            return false;
        return kind == ResourceKind::Gpp || supported_ops.count(a.op_type) > 0;
    }
};

struct Interconnect {
    double bandwidth_bytes_per_s = 1.0;
    double setup_latency_s = 0.0;
    double gpp_npu_dma_extra_s = 0.0;
};

struct Platform {
    std::string name;
    std::vector<Resource> resources;
    Interconnect interconnect;

    const Resource *find(std::string_view id) const {
        for (const auto &r : resources)
            if (r.id == id)
                return &r;
        return nullptr;
    }

    const Resource &resource(std::string_view id) const {
        if (const Resource *r = find(id))
            return *r;
        throw Error(Errc::InvalidInput, "unknown resource '" + std::string(id) + "'");
    }
};

/// Separator between a resource id and one of its sub-unit names ("NPU1:conv").
inline constexpr char kSubunitSeparator = ':';

inline std::string subunit_id(const Resource &r, const Subunit &s) {
    return r.id + kSubunitSeparator + s.name;
}

/// Maps a timeline unit (resource id or resource:subunit) back to its resource.
inline std::string unit_resource(std::string_view unit) {
    auto pos = unit.find(kSubunitSeparator);
    return std::string(pos == std::string_view::npos ? unit : unit.substr(0, pos));
}

// ---------------------------------------------------------------------------
// Mapping
// ---------------------------------------------------------------------------

/// assignment is the x_{i,j} matrix in sparse form; order holds the fixed
/// self-timed firing order on each resource.
struct Mapping {
    std::map<std::string, std::string> assignment;
    std::map<std::string, std::vector<std::string>> order;

    friend bool operator==(const Mapping &, const Mapping &) = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string subject;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    void add(std::string subject, std::string message) {
        violations.push_back({std::move(subject), std::move(message)});
    }
    std::string summary() const {
        std::string s;
        for (const auto &v : violations) {
            if (!s.empty())
                s += "; ";
            s += v.subject + ": " + v.message;
        }
        return s;
    }
};

namespace detail {

inline bool has_reserved_char(std::string_view id) {
    return id.find_first_of("@#/:") != std::string_view::npos;
}

/// True if the subgraph made of token-free channels contains a cycle.
inline bool has_token_free_cycle(const ApplicationGraph &g) {
    std::unordered_map<std::string, std::vector<std::string>> succ;
    for (const auto &c : g.channels)
        if (c.initial_tokens == 0)
            succ[c.src].push_back(c.dst);
    std::unordered_map<std::string, int> state; // 0 new, 1 open, 2 done
    std::vector<std::pair<std::string, std::size_t>> stack;
    for (const auto &a : g.actors) {
        if (state[a.id] != 0)
            continue;
        stack.emplace_back(a.id, 0);
        state[a.id] = 1;
        while (!stack.empty()) {
            auto &[node, next] = stack.back();
            const auto &out = succ[node];
            if (next < out.size()) {
                const std::string &w = out[next++];
                int &st = state[w];
                if (st == 1)
                    return true;
                if (st == 0) {
                    st = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                state[node] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

} // namespace detail

inline ValidationReport validate_application(const ApplicationGraph &g) {
    ValidationReport report;
    std::set<std::string> ids;
    for (const auto &a : g.actors) {
        if (a.id.empty())
            report.add("actor", "empty id");
        if (!ids.insert(a.id).second)
            report.add(a.id, "duplicate actor id");
        if (detail::has_reserved_char(a.id))
            report.add(a.id, "actor id contains a reserved character (@ # / :)");
        if (a.exec_time.empty())
            report.add(a.id, "no execution time on any resource kind");
        else if (!a.exec_time.count("GPP"))
            report.add(a.id, "missing mandatory GPP latency");
        for (const auto &[kind, t] : a.exec_time)
            if (!std::isfinite(t) || t <= 0.0)
                report.add(a.id, "latency on " + kind + " must be positive and finite");
    }
    std::set<std::string> cids;
    for (const auto &c : g.channels) {
        if (!cids.insert(c.id).second)
            report.add(c.id, "duplicate channel id");
        if (detail::has_reserved_char(c.id))
            report.add(c.id, "channel id contains a reserved character (@ # / :)");
        if (!ids.count(c.src) || !ids.count(c.dst))
            report.add(c.id, "dangling channel");
        if (c.rate == 0)
            report.add(c.id, "rate must be positive");
        if (c.bytes_per_token == 0)
            report.add(c.id, "bytes_per_token must be positive");
    }
    if (detail::has_token_free_cycle(g))
        report.add(g.name, "token-free cycle");
    return report;
}

inline ValidationReport validate_platform(const Platform &p) {
    ValidationReport report;
    std::set<std::string> ids;
    for (const auto &r : p.resources) {
        if (!ids.insert(r.id).second)
            report.add(r.id, "duplicate resource id");
        if (r.id.empty() || detail::has_reserved_char(r.id))
            report.add(r.id, "resource id is empty or contains a reserved character");
        if (!(r.active_power_w >= 0.0) || !(r.idle_power_w >= 0.0))
            report.add(r.id, "power must be non-negative");
        if (r.kind == ResourceKind::Gpp) {
            if (!r.subunits.empty())
                report.add(r.id, "GPP must not declare sub-units");
            continue;
        }
        std::set<std::string> unions;
        std::set<std::string> names;
        for (const auto &s : r.subunits) {
            if (!names.insert(s.name).second)
                report.add(r.id, "duplicate sub-unit '" + s.name + "'");
            unions.insert(s.op_types.begin(), s.op_types.end());
        }
        if (unions != r.supported_ops)
            report.add(r.id, "supported_ops differs from the union of sub-unit op types");
    }
    const auto &ic = p.interconnect;
    if (!(ic.bandwidth_bytes_per_s > 0.0) || !std::isfinite(ic.bandwidth_bytes_per_s))
        report.add("interconnect", "bandwidth must be positive");
    if (!(ic.setup_latency_s >= 0.0) || !(ic.gpp_npu_dma_extra_s >= 0.0))
        report.add("interconnect", "latencies must be non-negative");
    return report;
}

/// Shared assertion helper: every Mapping produced anywhere must pass this.
inline ValidationReport check_mapping(const ApplicationGraph &g, const Platform &p, const Mapping &m) {
    ValidationReport report;
    for (const auto &a : g.actors) {
        auto it = m.assignment.find(a.id);
        if (it == m.assignment.end()) {
            report.add(a.id, "unmapped actor");
            continue;
        }
        const Resource *r = p.find(it->second);
        if (!r) {
            report.add(a.id, "mapped to unknown resource '" + it->second + "'");
            continue;
        }
        if (!r->supports(a))
            report.add(a.id, "op " + a.op_type + " unsupported on " + r->id);
    }
    for (const auto &[actor, res] : m.assignment)
        if (!g.find_actor(actor))
            report.add(actor, "mapping names an unknown actor");
    for (const auto &r : p.resources) {
        std::vector<std::string> expected;
        for (const auto &[actor, res] : m.assignment)
            if (res == r.id)
                expected.push_back(actor);
        auto it = m.order.find(r.id);
        if (it == m.order.end()) {
            if (!expected.empty())
                report.add(r.id, "missing order");
            continue;
        }
        std::vector<std::string> got = it->second;
        std::sort(got.begin(), got.end());
        std::sort(expected.begin(), expected.end());
        if (got != expected)
            report.add(r.id, "order is not a permutation of the actors assigned there");
    }
    for (const auto &[res, seq] : m.order)
        if (!p.find(res))
            report.add(res, "order names an unknown resource");
    return report;
}

/// Throwing variant of check_mapping that picks the most specific error code.
inline void require_valid_mapping(const ApplicationGraph &g, const Platform &p, const Mapping &m) {
    for (const auto &a : g.actors) {
        auto it = m.assignment.find(a.id);
        if (it == m.assignment.end())
            throw Error(Errc::UnmappedActor, a.id);
        const Resource &r = p.resource(it->second);
        if (!r.supports(a))
            throw Error(Errc::UnsupportedAssignment, a.id + " (" + a.op_type + ") on " + r.id);
    }
    for (const auto &r : p.resources) {
        bool used = std::any_of(m.assignment.begin(), m.assignment.end(),
                                [&](const auto &kv) { return kv.second == r.id; });
        if (used && !m.order.count(r.id))
            throw Error(Errc::MissingOrder, r.id);
    }
    auto report = check_mapping(g, p, m);
    if (!report.ok())
        throw Error(Errc::InvalidInput, report.summary());
}

// ---------------------------------------------------------------------------
// Channel classification and NPU support
// ---------------------------------------------------------------------------

struct ChannelClasses {
    std::vector<std::string> intra;
    std::vector<std::string> inter;
};

inline ChannelClasses classify_channels(const ApplicationGraph &g, const Mapping &m) {
    ChannelClasses out;
    for (const auto &c : g.channels) {
        auto s = m.assignment.find(c.src);
        auto d = m.assignment.find(c.dst);
        if (s == m.assignment.end())
            throw Error(Errc::UnmappedActor, c.src);
        if (d == m.assignment.end())
            throw Error(Errc::UnmappedActor, c.dst);
        (s->second == d->second ? out.intra : out.inter).push_back(c.id);
    }
    return out;
}

struct UnsupportedReport {
    /// NPU id -> actors whose op_type it cannot run.
    std::map<std::string, std::vector<std::string>> per_npu;
    /// Fraction of actors that no NPU of the platform can run.
    double fraction = 0.0;
};

inline UnsupportedReport check_npu_support(const ApplicationGraph &g, const Platform &p) {
    UnsupportedReport report;
    std::size_t nowhere = 0;
    for (const auto &a : g.actors) {
        bool any = false;
        for (const auto &r : p.resources) {
            if (!r.is_npu())
                continue;
            if (r.supports(a))
                any = true;
            else
                report.per_npu[r.id].push_back(a.id);
        }
        if (!any)
            ++nowhere;
    }
    if (!g.actors.empty())
        report.fraction = static_cast<double>(nowhere) / static_cast<double>(g.actors.size());
    return report;
}

// ---------------------------------------------------------------------------
// Graph helpers shared by the builders
// ---------------------------------------------------------------------------

/// Topological order over token-free channels; ties go to the smallest id.
inline std::vector<std::string> topological_order(const ApplicationGraph &g) {
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto &a : g.actors)
        indeg[a.id] = 0;
    for (const auto &c : g.channels) {
        if (c.initial_tokens != 0)
            continue;
        succ[c.src].push_back(c.dst);
        ++indeg[c.dst];
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto &[id, d] : indeg)
        if (d == 0)
            ready.push(id);
    std::vector<std::string> out;
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        out.push_back(id);
        for (const auto &w : succ[id])
            if (--indeg[w] == 0)
                ready.push(w);
    }
    if (out.size() != g.actors.size())
        throw Error(Errc::ZeroDelayCycle, "application graph '" + g.name + "'");
    return out;
}

/// Rebuilds every resource's order as the topological order restricted to it.
inline void derive_orders(const ApplicationGraph &g, Mapping &m) {
    m.order.clear();
    for (const auto &id : topological_order(g))
        m.order[m.assignment.at(id)].push_back(id);
}

/// Weakly connected component index per actor (components numbered in actor order).
inline std::map<std::string, int> weak_components(const ApplicationGraph &g) {
    std::map<std::string, std::string> parent;
    for (const auto &a : g.actors)
        parent[a.id] = a.id;
    auto find = [&](std::string x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto &c : g.channels)
        if (parent.count(c.src) && parent.count(c.dst))
            parent[find(c.src)] = find(c.dst);
    std::map<std::string, int> root_index;
    std::map<std::string, int> out;
    for (const auto &a : g.actors) {
        auto root = find(a.id);
        auto [it, fresh] = root_index.try_emplace(root, static_cast<int>(root_index.size()));
        out[a.id] = it->second;
    }
    return out;
}

} // namespace nsoc
