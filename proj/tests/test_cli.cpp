#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "tat/cli.hpp"

using namespace tat;
using namespace tat::cli;

namespace {

const char* kBase = R"({
    "grid": {"lo": -1.6, "hi": 1.6, "cells": 48},
    "speed": {"model": "constant", "value": 1.0},
    "region": {"shape": "disk", "radius": 1.0},
    "patch": {"arcs": [[0.0, 0.75]]},
    "phantom": {"bumps": [{"center": [0.25, -0.2], "radius": 0.35, "amplitude": 1.0}]},
    "solver": {"t_factor": 1.5},
    "distance": {"sources": [[1.3, 0.0]], "mode": "exterior"},
    "inversion": {"iterations": 6, "power_iterations": 5},
    "seed": 3
})";

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("tat_test_cli_" + name);
    fs::remove_all(d);
    return d;
}

ExperimentConfig config(const fs::path& out, const std::vector<std::string>& overrides = {}) {
    json doc = parse_document(kBase, "base");
    for (const auto& o : overrides) apply_override(doc, o);
    doc["output"] = out.string();
    return parse_config(doc);
}

int run_tool(const std::string& args) {
    const int status = std::system((std::string(TATCTL_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("document parsing reports positions") {
    try {
        parse_document("{\n  \"grid\": {\"lo\": -1,\n  }\n}", "bad.json");
        FAIL("malformed JSON accepted");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.json") != std::string::npos);
        CHECK(msg.find(":3:") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    const ExperimentConfig c = config("out");
    CHECK(c.grid.h() == doctest::Approx(3.2 / 48));
    CHECK(c.arcs.size() == 1);
    CHECK(c.bumps.size() == 1);
    CHECK(c.distance.exterior);
    CHECK(c.seed == 3);
    CHECK(c.tFactor == doctest::Approx(1.5));
    CHECK(c.wave.boundary == BoundaryCondition::sponge);

    auto fails_with = [](const std::string& override, const std::string& fragment) {
        try {
            config("out", {override});
            return false;
        } catch (const ConfigError& e) {
            return std::string(e.what()).find(fragment) != std::string::npos;
        }
    };
    CHECK(fails_with("solver.bogus=1", "solver.bogus"));
    CHECK(fails_with("phantom.bumps=[{\"center\":[0,0],\"radius\":0.2,\"colour\":1}]", "phantom.bumps[0].colour"));
    CHECK(fails_with("region.shape=hexagon", "region.shape"));
    CHECK(fails_with("speed.model=wobbly", "speed.model"));
    CHECK(fails_with("inversion.power_iterations=2", "power_iterations"));
    CHECK(fails_with("grid.cells=\"many\"", "grid.cells"));
    CHECK_THROWS_AS(config("out", {"novalue"}), ConfigError);
}

TEST_CASE("overrides") {
    json doc = parse_document(kBase, "base");
    apply_override(doc, "solver.boundary=reflecting");
    apply_override(doc, "solver.t_max=2.5");
    apply_override(doc, "patch.arcs=[[0,0.25]]");
    apply_override(doc, "new.section.key=7");
    CHECK(doc["solver"]["boundary"] == "reflecting");
    CHECK(doc["solver"]["t_max"] == 2.5);
    CHECK(doc["patch"]["arcs"][0][1] == 0.25);
    CHECK(doc["new"]["section"]["key"] == 7);
    CHECK_THROWS_AS(apply_override(doc, "solver.t_max.inner=1"), ConfigError);
    doc.erase("new");
    doc["output"] = "x";
    const ExperimentConfig c = parse_config(doc);
    CHECK(c.wave.boundary == BoundaryCondition::reflecting);
    REQUIRE(c.tMax.has_value());
    CHECK(*c.tMax == 2.5);
}

TEST_CASE("speed models") {
    const ExperimentConfig layered = config("o", {R"(speed={"model":"layered","below":1,"above":1.5,"interface":0,"width":0.2})"});
    CHECK(make_speed(layered).max() == doctest::Approx(1.5));
    const ExperimentConfig radial =
        config("o", {R"(speed={"model":"radial","center":[0,0],"radius":0.5,"background":1,"peak":1.4})"});
    CHECK(make_speed(radial).max() == doctest::Approx(1.4).epsilon(1e-3));

    const fs::path dir = scratch("speed");
    fs::create_directories(dir);
    const ExperimentConfig base = config("o");
    write_field(dir / "c", base.grid, Field::Constant(base.grid.nx(), base.grid.ny(), 1.7), "speed");
    const ExperimentConfig file = config("o", {"speed={\"model\":\"file\",\"path\":\"" + (dir / "c").string() + "\"}"});
    CHECK(make_speed(file).min() == doctest::Approx(1.7));
    fs::remove_all(dir);
}

TEST_CASE("coverage command") {
    const fs::path out = scratch("coverage");
    std::ostringstream s;
    CHECK(cmd_coverage(config(out, {"patch.arcs=[[0,1]]"}), s) == kOk);
    CHECK(s.str().rfind("property_p: satisfied, tMin = ", 0) == 0);
    CHECK(fs::exists(out / "coverage" / "manifest.json"));
    std::ostringstream q;
    // A violated property is a verdict, not a failure of the tool.
    CHECK(cmd_coverage(config(out, {"patch.arcs=[[0,0.25]]"}), q) == kOk);
    CHECK(q.str().find("property_p: violated") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("distance command and check-only mode") {
    const fs::path out = scratch("distance");
    std::ostringstream s;
    CHECK(cmd_distance(config(out, {"distance.oracle=true", "distance.mode=free"}), s) == kOk);
    CHECK(s.str().find("lipschitz: pass") != std::string::npos);
    CHECK(s.str().find("oracle: max discrepancy") != std::string::npos);

    const FieldFile d = read_field(out / "distance" / "distance");
    Field bad = d.values;
    bad(30, 12) *= 0.5;
    write_field(out / "corrupt", d.grid, bad, "distance");
    std::ostringstream c;
    CHECK(cmd_distance(config(out, {"distance.check_field=\"" + (out / "corrupt").string() + "\""}), c) ==
          kInvariantFailure);
    CHECK(c.str().find("lipschitz: fail") != std::string::npos);
    // Central differences skip the node itself, so the worst excess lands on a neighbour.
    int fx = -1, fy = -1;
    const auto at = c.str().find("fail at node (");
    REQUIRE(at != std::string::npos);
    REQUIRE(std::sscanf(c.str().c_str() + at, "fail at node (%d, %d)", &fx, &fy) == 2);
    CHECK(std::abs(fx - 30) + std::abs(fy - 12) <= 1);

    write_field(out / "wrong", d.grid, bad, "phantom");
    std::ostringstream w;
    CHECK_THROWS_AS(cmd_distance(config(out, {"distance.check_field=\"" + (out / "wrong").string() + "\""}), w),
                    ConfigError);
    fs::remove_all(out);
}

TEST_CASE("upstream artifacts are checked") {
    const fs::path out = scratch("upstream");
    std::ostringstream s;
    try {
        cmd_reconstruct(config(out), s);
        FAIL("missing upstream accepted");
    } catch (const UpstreamError& e) {
        CHECK(std::string(e.what()).find("simulate") != std::string::npos);
        CHECK(std::string(e.what()).find("first") != std::string::npos);
    }
    CHECK(cmd_simulate(config(out), s) == kOk);
    CHECK(cmd_reconstruct(config(out), s) == kOk);
    // Different solver settings no longer match the recorded simulation.
    CHECK_THROWS_AS(cmd_reconstruct(config(out, {"solver.t_max=2.0"}), s), UpstreamError);

    const json manifest = json::parse(std::ifstream(out / "simulate" / "manifest.json"));
    CHECK(manifest.contains("format_version"));
    CHECK(manifest.contains("config_sha256"));
    CHECK(manifest["seed"] == 3);
    CHECK(fs::exists(out / "simulate" / "timings.json"));
    fs::remove_all(out);
}

TEST_CASE("report orders runs by final residual") {
    const fs::path a = scratch("report_a"), b = scratch("report_b"), r = scratch("report_out");
    std::ostringstream s;
    const ExperimentConfig ca = config(a, {"inversion.iterations=2"});
    const ExperimentConfig cb = config(b, {"inversion.iterations=8"});
    for (const auto* c : {&ca, &cb}) {
        REQUIRE(cmd_simulate(*c, s) == kOk);
        REQUIRE(cmd_reconstruct(*c, s) == kOk);
    }
    std::ostringstream rep;
    CHECK(cmd_report({ca, cb}, r, rep) == kOk);
    std::ifstream csv(r / "report.csv");
    std::string header, first, second;
    std::getline(csv, header);
    std::getline(csv, first);
    std::getline(csv, second);
    CHECK(header.rfind("label,", 0) == 0);
    // More iterations, smaller residual: b comes first.
    CHECK(first.rfind(b.filename().string(), 0) == 0);
    CHECK(second.rfind(a.filename().string(), 0) == 0);
    CHECK(rep.str().find("lowest relative error: " + b.filename().string()) != std::string::npos);
    CHECK_THROWS_AS(cmd_report({config(scratch("report_none"))}, r, rep), UpstreamError);
    for (const auto& d : {a, b, r}) fs::remove_all(d);
}

TEST_CASE("tatctl exit codes") {
    const fs::path dir = scratch("tool");
    fs::create_directories(dir);
    std::ofstream(dir / "good.json") << kBase;
    std::ofstream(dir / "broken.json") << "{ \"grid\": ";
    const std::string good = (dir / "good.json").string();
    CHECK(run_tool("--version") == 0);
    CHECK(run_tool("coverage " + good + " output=" + (dir / "out").string()) == 0);
    CHECK(run_tool("coverage " + good + " solver.bogus=1") == 2);
    CHECK(run_tool("coverage " + (dir / "broken.json").string()) == 2);
    CHECK(run_tool("coverage " + (dir / "missing.json").string()) == 2);
    CHECK(run_tool("distance " + good + " output=" + (dir / "out").string()) == 0);
    CHECK(run_tool("distance " + good + " distance.lipschitz_constant=0 output=" + (dir / "out").string()) == 1);
    CHECK(run_tool("reconstruct " + good + " output=" + (dir / "empty").string()) == 2);
    CHECK(run_tool("frobnicate") == 2);
    fs::remove_all(dir);
}
