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

// io.hpp: JSON file formats (application, platform, mapping, schedule),
// the on-disk schedule database and Gantt export.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsoc/error.hpp"
#include "nsoc/mapper.hpp"
#include "nsoc/sdfg.hpp"
#include "nsoc/usecase.hpp"

namespace nsoc::io {

using json = nlohmann::json;

/// Rounds to 12 significant digits so serialized numbers are stable.
inline double round12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

/// Two-space indented JSON with sorted keys and a trailing newline.
inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

namespace detail {

inline void expect_keys(const json &j, std::initializer_list<const char *> required,
                        std::initializer_list<const char *> optional, const std::string &where) {
    if (!j.is_object())
        throw Error(Errc::InvalidInput, where + ": expected an object");
    for (const char *k : required)
        if (!j.contains(k))
            throw Error(Errc::InvalidInput, where + ": missing field '" + k + "'");
    for (const auto &[key, value] : j.items()) {
        bool known = false;
        for (const char *k : required)
            known = known || key == k;
        for (const char *k : optional)
            known = known || key == k;
        if (!known)
            throw Error(Errc::InvalidInput, where + ": unknown field '" + key + "'");
    }
}

template <typename T>
T get(const json &j, const char *key, const std::string &where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw Error(Errc::InvalidInput, where + "." + key + ": " + e.what());
    }
}

inline json parse_text(const std::string &text, const std::string &where) {
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        throw Error(Errc::InvalidInput, where + ": " + e.what());
    }
}

} // namespace detail

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::InvalidInput, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::InvalidInput, "cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

inline ApplicationGraph application_from_json(const json &j) {
    detail::expect_keys(j, {"name", "actors", "channels"}, {}, "application");
    ApplicationGraph g;
    g.name = detail::get<std::string>(j, "name", "application");
    for (const auto &ja : j.at("actors")) {
        detail::expect_keys(ja, {"id", "op_type", "latency"}, {"state_bytes"}, "actor");
        Actor a;
        a.id = detail::get<std::string>(ja, "id", "actor");
        a.op_type = detail::get<std::string>(ja, "op_type", a.id);
        a.exec_time = detail::get<std::map<std::string, double>>(ja, "latency", a.id);
        if (ja.contains("state_bytes"))
            a.state_bytes = detail::get<std::uint64_t>(ja, "state_bytes", a.id);
        g.actors.push_back(std::move(a));
    }
    for (const auto &jc : j.at("channels")) {
        detail::expect_keys(jc, {"id", "src", "dst"}, {"rate", "bytes_per_token", "initial_tokens"}, "channel");
        Channel c;
        c.id = detail::get<std::string>(jc, "id", "channel");
        c.src = detail::get<std::string>(jc, "src", c.id);
        c.dst = detail::get<std::string>(jc, "dst", c.id);
        if (jc.contains("rate"))
            c.rate = detail::get<std::uint32_t>(jc, "rate", c.id);
        if (jc.contains("bytes_per_token"))
            c.bytes_per_token = detail::get<std::uint64_t>(jc, "bytes_per_token", c.id);
        if (jc.contains("initial_tokens"))
            c.initial_tokens = detail::get<std::uint32_t>(jc, "initial_tokens", c.id);
        g.channels.push_back(std::move(c));
    }
    auto report = validate_application(g);
    if (!report.ok())
        throw Error(Errc::InvalidInput, "application '" + g.name + "': " + report.summary());
    return g;
}

inline json to_json(const ApplicationGraph &g) {
    json actors = json::array();
    for (const auto &a : g.actors) {
        json lat = json::object();
        for (const auto &[k, v] : a.exec_time)
            lat[k] = round12(v);
        actors.push_back({{"id", a.id}, {"op_type", a.op_type}, {"latency", lat}, {"state_bytes", a.state_bytes}});
    }
    json channels = json::array();
    for (const auto &c : g.channels)
        channels.push_back({{"id", c.id},
                            {"src", c.src},
                            {"dst", c.dst},
                            {"rate", c.rate},
                            {"bytes_per_token", c.bytes_per_token},
                            {"initial_tokens", c.initial_tokens}});
    return {{"name", g.name}, {"actors", actors}, {"channels", channels}};
}

// ---------------------------------------------------------------------------
// Platform
// ---------------------------------------------------------------------------

inline Platform platform_from_json(const json &j) {
    detail::expect_keys(j, {"name", "resources", "interconnect"}, {}, "platform");
    Platform p;
    p.name = detail::get<std::string>(j, "name", "platform");
    for (const auto &jr : j.at("resources")) {
        detail::expect_keys(jr, {"id", "kind", "active_power_w", "idle_power_w"}, {"supported_ops", "subunits"},
                            "resource");
        Resource r;
        r.id = detail::get<std::string>(jr, "id", "resource");
        auto kind = parse_kind(detail::get<std::string>(jr, "kind", r.id));
        if (!kind)
            throw Error(Errc::InvalidInput, r.id + ": kind must be GPP or NPU");
        r.kind = *kind;
        r.active_power_w = detail::get<double>(jr, "active_power_w", r.id);
        r.idle_power_w = detail::get<double>(jr, "idle_power_w", r.id);
        if (jr.contains("supported_ops"))
            r.supported_ops = detail::get<std::set<std::string>>(jr, "supported_ops", r.id);
        if (jr.contains("subunits")) {
            for (const auto &js : jr.at("subunits")) {
                detail::expect_keys(js, {"name", "op_types"}, {}, r.id + ".subunit");
                r.subunits.push_back({detail::get<std::string>(js, "name", r.id),
                                      detail::get<std::set<std::string>>(js, "op_types", r.id)});
            }
        }
        if (r.is_npu()) {
            if (!jr.contains("subunits") && !r.supported_ops.empty())
                r.subunits.push_back({"core", r.supported_ops});
            if (!jr.contains("supported_ops"))
                for (const auto &s : r.subunits)
                    r.supported_ops.insert(s.op_types.begin(), s.op_types.end());
        }
        p.resources.push_back(std::move(r));
    }
    const auto &ji = j.at("interconnect");
    detail::expect_keys(ji, {"bandwidth_bytes_per_s"}, {"setup_latency_s", "gpp_npu_dma_extra_s"}, "interconnect");
    p.interconnect.bandwidth_bytes_per_s = detail::get<double>(ji, "bandwidth_bytes_per_s", "interconnect");
    if (ji.contains("setup_latency_s"))
        p.interconnect.setup_latency_s = detail::get<double>(ji, "setup_latency_s", "interconnect");
    if (ji.contains("gpp_npu_dma_extra_s"))
        p.interconnect.gpp_npu_dma_extra_s = detail::get<double>(ji, "gpp_npu_dma_extra_s", "interconnect");
    auto report = validate_platform(p);
    if (!report.ok())
        throw Error(Errc::InvalidInput, "platform '" + p.name + "': " + report.summary());
    return p;
}

inline json to_json(const Platform &p) {
    json resources = json::array();
    for (const auto &r : p.resources) {
        json jr = {{"id", r.id},
                   {"kind", std::string(kind_name(r.kind))},
                   {"active_power_w", round12(r.active_power_w)},
                   {"idle_power_w", round12(r.idle_power_w)}};
        if (r.is_npu()) {
            jr["supported_ops"] = r.supported_ops;
            json subs = json::array();
            for (const auto &s : r.subunits)
                subs.push_back({{"name", s.name}, {"op_types", s.op_types}});
            jr["subunits"] = subs;
        }
        resources.push_back(jr);
    }
    const auto &ic = p.interconnect;
    return {{"name", p.name},
            {"resources", resources},
            {"interconnect",
             {{"bandwidth_bytes_per_s", round12(ic.bandwidth_bytes_per_s)},
              {"setup_latency_s", round12(ic.setup_latency_s)},
              {"gpp_npu_dma_extra_s", round12(ic.gpp_npu_dma_extra_s)}}}};
}

// ---------------------------------------------------------------------------
// Mapping and schedule
// ---------------------------------------------------------------------------

/// {"mapping": {actor: resource}, "order": {resource: [actors]}}; a missing
/// order is derived topologically. A full schedule file is accepted too.
inline Mapping mapping_from_json(const json &j, const ApplicationGraph &g) {
    if (!j.is_object() || !j.contains("mapping"))
        throw Error(Errc::InvalidInput, "mapping file: missing field 'mapping'");
    Mapping m;
    m.assignment = detail::get<std::map<std::string, std::string>>(j, "mapping", "mapping file");
    if (j.contains("order"))
        m.order = detail::get<std::map<std::string, std::vector<std::string>>>(j, "order", "mapping file");
    else
        derive_orders(g, m);
    return m;
}

inline json to_json(const Schedule &s) {
    json gantt = json::array();
    for (const auto &seg : s.gantt)
        gantt.push_back(
            {{"unit", seg.unit}, {"actor", seg.actor}, {"start_s", round12(seg.start_s)}, {"end_s", round12(seg.end_s)}});
    return {{"application", s.application},
            {"platform", s.platform},
            {"mapping", s.mapping.assignment},
            {"order", s.mapping.order},
            {"transaction_order", s.transaction_order},
            {"period_s", round12(s.period_s)},
            {"throughput", round12(s.throughput)},
            {"energy_j", round12(s.energy_j)},
            {"block_n", s.block_n},
            {"gantt", gantt}};
}

inline Schedule schedule_from_json(const json &j) {
    detail::expect_keys(j,
                        {"application", "platform", "mapping", "order", "transaction_order", "period_s", "throughput",
                         "energy_j", "block_n", "gantt"},
                        {}, "schedule");
    Schedule s;
    const std::string where = "schedule";
    s.application = detail::get<std::string>(j, "application", where);
    s.platform = detail::get<std::string>(j, "platform", where);
    s.mapping.assignment = detail::get<std::map<std::string, std::string>>(j, "mapping", where);
    s.mapping.order = detail::get<std::map<std::string, std::vector<std::string>>>(j, "order", where);
    s.transaction_order = detail::get<std::vector<std::string>>(j, "transaction_order", where);
    s.period_s = detail::get<double>(j, "period_s", where);
    s.throughput = detail::get<double>(j, "throughput", where);
    s.energy_j = detail::get<double>(j, "energy_j", where);
    s.block_n = detail::get<unsigned>(j, "block_n", where);
    for (const auto &jg : j.at("gantt")) {
        detail::expect_keys(jg, {"unit", "actor", "start_s", "end_s"}, {}, "gantt");
        s.gantt.push_back({detail::get<std::string>(jg, "unit", "gantt"), detail::get<std::string>(jg, "actor", "gantt"),
                           detail::get<double>(jg, "start_s", "gantt"), detail::get<double>(jg, "end_s", "gantt")});
    }
    if (gantt_overlaps(s.gantt))
        throw Error(Errc::InvalidInput, "schedule: overlapping Gantt segments on one unit");
    return s;
}

inline ApplicationGraph load_application(const std::filesystem::path &path) {
    return application_from_json(detail::parse_text(read_file(path), path.string()));
}
inline Platform load_platform(const std::filesystem::path &path) {
    return platform_from_json(detail::parse_text(read_file(path), path.string()));
}
inline Schedule load_schedule(const std::filesystem::path &path) {
    return schedule_from_json(detail::parse_text(read_file(path), path.string()));
}
inline Mapping load_mapping(const std::filesystem::path &path, const ApplicationGraph &g) {
    return mapping_from_json(detail::parse_text(read_file(path), path.string()), g);
}

// ---------------------------------------------------------------------------
// Schedule database
// ---------------------------------------------------------------------------
//
// <dir>/index.json:
//   {"applications": {"<name>": {"application": "<name>.app.json",
//                                "schedules": ["<name>.0.json", ...]}}}

inline json read_index(const std::filesystem::path &dir) {
    auto path = dir / "index.json";
    if (!std::filesystem::exists(path))
        return {{"applications", json::object()}};
    auto j = detail::parse_text(read_file(path), path.string());
    detail::expect_keys(j, {"applications"}, {}, "index");
    return j;
}

/// Writes one schedule file per archive member and updates the index.
inline void save_archive(const std::filesystem::path &dir, const ApplicationGraph &g, const ParetoArchive &archive) {
    std::filesystem::create_directories(dir);
    json index = read_index(dir);
    if (index["applications"].contains(g.name))
        for (const auto &old : index["applications"][g.name]["schedules"])
            std::filesystem::remove(dir / old.get<std::string>());
    const std::string app_file = g.name + ".app.json";
    write_file(dir / app_file, dump(to_json(g)));
    json files = json::array();
    for (std::size_t i = 0; i < archive.size(); ++i) {
        std::string name = g.name + "." + std::to_string(i) + ".json";
        write_file(dir / name, dump(to_json(archive.members()[i])));
        files.push_back(name);
    }
    index["applications"][g.name] = {{"application", app_file}, {"schedules", files}};
    write_file(dir / "index.json", dump(index));
}

inline ScheduleDb load_db(const std::filesystem::path &dir) {
    if (!std::filesystem::exists(dir / "index.json"))
        throw Error(Errc::InvalidInput, "no schedule database at " + dir.string());
    json index = read_index(dir);
    ScheduleDb db;
    for (const auto &[name, entry] : index["applications"].items()) {
        detail::expect_keys(entry, {"application", "schedules"}, {}, "index." + name);
        ScheduleDbEntry e;
        e.application = load_application(dir / entry["application"].get<std::string>());
        for (const auto &f : entry["schedules"])
            e.archive.offer(load_schedule(dir / f.get<std::string>()));
        db.emplace(name, std::move(e));
    }
    return db;
}

// ---------------------------------------------------------------------------
// Gantt export
// ---------------------------------------------------------------------------

struct GanttRow {
    std::string unit;
    std::string actor;
    double start_s;
    double end_s;
    std::string kind; // compute | comm
};

inline std::vector<GanttRow> gantt_rows(const Schedule &s) {
    if (gantt_overlaps(s.gantt))
        throw Error(Errc::InvalidInput, "overlapping Gantt segments on one unit");
    std::vector<GanttRow> rows;
    for (const auto &seg : s.gantt)
        rows.push_back({seg.unit, seg.actor, seg.start_s, seg.end_s,
                        seg.actor.find('@') == std::string::npos ? "compute" : "comm"});
    std::stable_sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
        return a.unit != b.unit ? a.unit < b.unit : a.start_s < b.start_s;
    });
    return rows;
}

inline std::string gantt_csv(const std::vector<GanttRow> &rows) {
    std::string out = "unit,actor,start_s,end_s,kind\n";
    char buf[64];
    for (const auto &r : rows) {
        out += r.unit + "," + r.actor + ",";
        std::snprintf(buf, sizeof buf, "%.12g", r.start_s);
        out += buf;
        out += ",";
        std::snprintf(buf, sizeof buf, "%.12g", r.end_s);
        out += buf;
        out += "," + r.kind + "\n";
    }
    return out;
}

inline json gantt_json(const std::vector<GanttRow> &rows) {
    json out = json::array();
    for (const auto &r : rows)
        out.push_back({{"unit", r.unit},
                       {"actor", r.actor},
                       {"start_s", round12(r.start_s)},
                       {"end_s", round12(r.end_s)},
                       {"kind", r.kind}});
    return out;
}

} // namespace nsoc::io
