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

#include <filesystem>

#include "nsoc/io.hpp"
#include "support.hpp"

using namespace nsoc;
using namespace nsoc::testing;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return Errc::Deadlock;
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("nsoc_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }

private:
    fs::path path_;
};

io::json fixture_json(const std::string &name) { return io::detail::parse_text(io::read_file(fixture(name)), name); }

} // namespace

TEST(Io, Round12) {
    EXPECT_EQ(io::round12(0.1 + 0.2), 0.3);
    EXPECT_EQ(io::round12(1.0 / 3.0), 0.333333333333);
    EXPECT_EQ(io::round12(0.0), 0.0);
}

TEST(Io, DumpSortsKeys) {
    io::json j = {{"b", 1}, {"a", 2}};
    EXPECT_EQ(io::dump(j), "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}

TEST(Io, ApplicationRoundTrip) {
    for (const auto &name : shipped_apps()) {
        auto g = app_fixture(name);
        auto text = io::dump(io::to_json(g));
        auto back = io::application_from_json(io::detail::parse_text(text, name));
        EXPECT_EQ(io::dump(io::to_json(back)), text) << name;
        ASSERT_EQ(back.actors.size(), g.actors.size());
        for (std::size_t i = 0; i < g.actors.size(); ++i)
            EXPECT_EQ(back.actors[i].exec_time, g.actors[i].exec_time);
    }
}

TEST(Io, PlatformRoundTrip) {
    for (const char *name : {"nsoc_2npu", "nsoc_1npu", "gpp_npu_shared", "npu_only", "ubrain_like", "speck_like",
                             "grai_like", "single_gpp"}) {
        auto p = platform_fixture(name);
        auto text = io::dump(io::to_json(p));
        auto back = io::platform_from_json(io::detail::parse_text(text, name));
        EXPECT_EQ(io::dump(io::to_json(back)), text) << name;
    }
}

TEST(Io, NpuWithoutSubunitsGetsCore) {
    auto p = platform_fixture("speck_like");
    for (const auto &r : p.resources)
        if (r.is_npu()) {
            ASSERT_EQ(r.subunits.size(), 1u);
            EXPECT_EQ(r.subunits.front().name, "core");
            EXPECT_EQ(r.subunits.front().op_types, r.supported_ops);
        }
}

TEST(Io, UnknownFieldsRejected) {
    auto app = fixture_json("lenet_like.app.json");
    app["actors"][0]["colour"] = "red";
    EXPECT_EQ(code_of([&] { io::application_from_json(app); }), Errc::InvalidInput);

    auto plat = fixture_json("nsoc_1npu.platform.json");
    plat["interconnect"]["latency"] = 1;
    EXPECT_EQ(code_of([&] { io::platform_from_json(plat); }), Errc::InvalidInput);

    auto top = fixture_json("nsoc_1npu.platform.json");
    top["version"] = 2;
    EXPECT_EQ(code_of([&] { io::platform_from_json(top); }), Errc::InvalidInput);
}

TEST(Io, MissingAndMistypedFields) {
    auto app = fixture_json("lenet_like.app.json");
    app["actors"][0].erase("op_type");
    EXPECT_EQ(code_of([&] { io::application_from_json(app); }), Errc::InvalidInput);

    auto typed = fixture_json("lenet_like.app.json");
    typed["channels"][0]["initial_tokens"] = "three";
    EXPECT_EQ(code_of([&] { io::application_from_json(typed); }), Errc::InvalidInput);

    EXPECT_EQ(code_of([] { io::detail::parse_text("{ not json", "inline"); }), Errc::InvalidInput);
    EXPECT_EQ(code_of([] { io::read_file("/nonexistent/nowhere.json"); }), Errc::InvalidInput);
}

TEST(Io, InvalidGraphRejected) {
    auto app = fixture_json("lenet_like.app.json");
    app["channels"][0]["dst"] = "ghost";
    EXPECT_EQ(code_of([&] { io::application_from_json(app); }), Errc::InvalidInput);
}

TEST(Io, MappingOrderDerivedWhenAbsent) {
    auto g = inception();
    auto j = fixture_json("inception_ref.mapping.json");
    j.erase("order");
    auto m = io::mapping_from_json(j, g);
    Mapping expect = m;
    derive_orders(g, expect);
    EXPECT_EQ(m.order, expect.order);
    EXPECT_TRUE(mapping_ok(g, platform_fixture("nsoc_2npu"), m));
}

TEST(Io, ScheduleRoundTrip) {
    auto g = inception();
    auto p = platform_fixture("nsoc_2npu");
    auto s = evaluate_mapping(g, p, reference_mapping(g), 2);
    auto text = io::dump(io::to_json(s));
    auto back = io::schedule_from_json(io::detail::parse_text(text, "schedule"));
    EXPECT_EQ(io::dump(io::to_json(back)), text);
    EXPECT_EQ(back.mapping, s.mapping);
    EXPECT_EQ(back.transaction_order, s.transaction_order);
    EXPECT_NEAR(back.period_s, s.period_s, 1e-12 * s.period_s);
}

TEST(Io, OverlappingGanttRejected) {
    auto g = inception();
    auto p = platform_fixture("nsoc_2npu");
    auto j = io::to_json(evaluate_mapping(g, p, reference_mapping(g)));
    j["gantt"].push_back({{"unit", "GPP1"}, {"actor", "x"}, {"start_s", 0.0}, {"end_s", 1e3}});
    j["gantt"].push_back({{"unit", "GPP1"}, {"actor", "y"}, {"start_s", 1.0}, {"end_s", 2.0}});
    EXPECT_EQ(code_of([&] { io::schedule_from_json(j); }), Errc::InvalidInput);
}

TEST(Io, GanttExport) {
    Schedule empty;
    EXPECT_EQ(io::gantt_csv(io::gantt_rows(empty)), "unit,actor,start_s,end_s,kind\n");
    EXPECT_EQ(io::gantt_json(io::gantt_rows(empty)), io::json::array());

    Schedule s;
    s.gantt = {{"NPU1:conv", "conv2", 0.5, 1.0}, {"GPP1", "S1@GPP1", 0.25, 0.5}, {"NPU1:conv", "conv1", 0.0, 0.5}};
    auto rows = io::gantt_rows(s);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].actor, "S1@GPP1");
    EXPECT_EQ(rows[0].kind, "comm");
    EXPECT_EQ(rows[1].actor, "conv1");
    EXPECT_EQ(rows[1].kind, "compute");
    EXPECT_EQ(io::gantt_csv(rows), "unit,actor,start_s,end_s,kind\n"
                                   "GPP1,S1@GPP1,0.25,0.5,comm\n"
                                   "NPU1:conv,conv1,0,0.5,compute\n"
                                   "NPU1:conv,conv2,0.5,1,compute\n");
}

TEST(Io, ScheduleDatabase) {
    TempDir dir;
    auto a = app_fixture("lenet_like");
    auto b = app_fixture("projection_block");
    auto p = platform_fixture("nsoc_1npu");
    HillClimbConfig cfg;
    cfg.block_n = 2;
    auto ra = hill_climb(a, p, cfg);
    auto rb = hill_climb(b, p, cfg);
    io::save_archive(dir.path(), a, ra.archive);
    io::save_archive(dir.path(), b, rb.archive);
    // Saving again replaces the first entry rather than duplicating it.
    io::save_archive(dir.path(), a, ra.archive);

    auto db = io::load_db(dir.path());
    ASSERT_EQ(db.size(), 2u);
    EXPECT_EQ(db.at(a.name).archive.size(), ra.archive.size());
    EXPECT_EQ(db.at(b.name).archive.size(), rb.archive.size());
    EXPECT_EQ(io::dump(io::to_json(db.at(a.name).application)), io::dump(io::to_json(a)));
    for (std::size_t i = 0; i < ra.archive.size(); ++i)
        EXPECT_EQ(io::dump(io::to_json(db.at(a.name).archive.members()[i])),
                  io::dump(io::to_json(ra.archive.members()[i])));
    EXPECT_FALSE(has_dominated_pair(db.at(b.name).archive.members()));

    EXPECT_EQ(code_of([&] { io::load_db(dir.path() / "missing"); }), Errc::InvalidInput);
}
