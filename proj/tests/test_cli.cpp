#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cpxapprox/io.hpp"

using namespace cpx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string binary_path() {
    const char* p = std::getenv("CPXAPPROX_BIN");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / "cpxapprox_cli_test";
    fs::create_directories(dir);
    fs::path outp = dir / ("out" + std::to_string(counter) + ".txt");
    fs::path errp = dir / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = binary_path() + " " + args + " > " + outp.string() + " 2> " +
                      errp.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = (status >= 0) ? ((status >> 8) & 0xff) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    r.out = slurp(outp);
    r.err = slurp(errp);
    return r;
}

fs::path write_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "cpxapprox_cli_test";
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream out(p);
    out << content;
    return p;
}

const char* kLinf4Instance = R"({
  "dimension": 4,
  "norm": {"kind": "facets", "data": [
    [[1,0],[0,0],[0,0],[0,0]],
    [[0,0],[1,0],[0,0],[0,0]],
    [[0,0],[0,0],[1,0],[0,0]],
    [[0,0],[0,0],[0,0],[1,0]]]},
  "subspace": {"span": [
    [[0,0],[0,0],[0,-1],[0,1]],
    [[0,1],[0,-1],[1,-1],[1,1]]]},
  "x": [[1,0],[1,0],[1,0],[1,0]],
  "y0": [[0,0],[0,0],[0,-1],[0,1]]
})";

const char* kHyper3Instance = R"({
  "dimension": 3,
  "norm": {"kind": "facets", "data": [
    [[1,0],[0,0],[0,0]],
    [[0,0],[1,0],[0,0]],
    [[0,0],[0,0],[1,0]]]},
  "subspace": {"kernel": [
    [[0.3333333333333333,0],[0.3333333333333333,0],[0.3333333333333333,0]]]},
  "projection": {
    "g": [[[0.3333333333333333,0],[0.3333333333333333,0],[0.3333333333333333,0]]],
    "w": [[[1,0],[1,0],[1,0]]]},
  "y0": [[1,0],[-1,0],[0,0]]
})";

}  // namespace

TEST_CASE("cli: evaluation commands on the four-dimensional sup-norm instance") {
    auto p = write_file("linf4.json", kLinf4Instance);
    auto r = run_cli("norm-eval -i " + p.string());
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    REQUIRE(rep["command"] == "norm-eval");
    REQUIRE(rep["status"] == "ok");
    REQUIRE(rep["value"].get<double>() == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(rep["provenance"]["tol"].get<double>() == 1e-8);
    REQUIRE(rep["provenance"]["seed"].get<std::uint64_t>() == 0);
    REQUIRE(rep["provenance"]["samples"].get<int>() == 10000);

    r = run_cli("dual-eval -i " + p.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(json::parse(r.out)["value"].get<double>() == Catch::Approx(4.0).margin(1e-10));

    r = run_cli("best-approx -i " + p.string());
    REQUIRE(r.exit_code == 0);
    rep = json::parse(r.out);
    REQUIRE(rep["distance"].get<double>() == Catch::Approx(1.0).margin(1e-6));

    r = run_cli("certify -i " + p.string());
    REQUIRE(r.exit_code == 0);
    rep = json::parse(r.out);
    REQUIRE(rep["method"] == "adjoint");
    REQUIRE(rep["result"]["status"] == "unique");
}

TEST_CASE("cli: probe command writes the fixed csv columns") {
    auto p = write_file("linf4.json", kLinf4Instance);
    fs::path csv = fs::temp_directory_path() / "cpxapprox_cli_test" / "probe.csv";
    auto r = run_cli("alpha-probe -i " + p.string() + " --alpha 2 --csv " + csv.string());
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    REQUIRE(rep["probe"]["alpha"].get<double>() == 2.0);
    REQUIRE(rep["probe"]["ts"].size() == 6);
    REQUIRE(rep["probe"].contains("verdict"));

    std::ifstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    REQUIRE(header == "t,ratio,alpha,verdict-flag");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        REQUIRE(std::count(line.begin(), line.end(), ',') == 3);
    }
    REQUIRE(rows == 6);
}

TEST_CASE("cli: projection commands on the symmetric hyperplane instance") {
    auto p = write_file("hyper3.json", kHyper3Instance);
    auto r = run_cli("min-proj -i " + p.string() + " --restarts 10 --iterations 150");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    REQUIRE(rep["value"].get<double>() == Catch::Approx(4.0 / 3.0).margin(1e-5));
    REQUIRE(rep["max_iterations"].get<bool>() == false);

    r = run_cli("cm -i " + p.string());
    REQUIRE(r.exit_code == 0);
    rep = json::parse(r.out);
    REQUIRE(rep["trace"].get<double>() == Catch::Approx(4.0 / 3.0).margin(1e-6));
    REQUIRE(rep["all_weights_positive"].get<bool>());
    REQUIRE(rep["no_common_kernel_on_Y"].get<bool>());

    r = run_cli("realify-certify -i " + p.string() + " --evidence");
    REQUIRE(r.exit_code == 0);
    rep = json::parse(r.out);
    REQUIRE(rep["result"]["status"] == "two-strong");
    REQUIRE(rep["result"]["constant"].get<double>() > 0.0);
}

TEST_CASE("cli: duality witness command") {
    const char* inst = R"({
      "dimension": 2,
      "norm": {"kind": "vertices", "data": [[[1,0],[0,0]],[[0,0],[1,0]]]}
    })";
    auto p = write_file("l1_2.json", inst);
    auto r = run_cli("duality-witness -i " + p.string() + " --count 5 --seed 3");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    REQUIRE(rep["functionals"].size() == 5);
    REQUIRE(rep["ts"].size() == 5);
}

TEST_CASE("cli: run-case names and exit codes") {
    auto r = run_cli("run-case linf-hyperplane");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    REQUIRE(rep["status"] == "pass");
    for (const auto& c : rep["details"]["checks"]) REQUIRE(c["pass"].get<bool>());

    r = run_cli("run-case lp-1dim");
    REQUIRE(r.exit_code == 0);
    REQUIRE(json::parse(r.out)["status"] == "pass");

    r = run_cli("run-case no-such-case");
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("unknown case") != std::string::npos);
}

TEST_CASE("cli: usage and input errors map to the documented exit codes") {
    auto r = run_cli("bogus-subcommand");
    REQUIRE(r.exit_code == 1);

    r = run_cli("norm-eval -i /nonexistent/path.json");
    REQUIRE(r.exit_code == 2);

    auto bad = write_file("bad_span.json", R"({
      "dimension": 2,
      "norm": {"kind": "vertices", "data": [[[1,0],[0,0]]]},
      "x": [[1,0],[1,0]]
    })");
    r = run_cli("norm-eval -i " + bad.string());
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("vertices do not span") != std::string::npos);

    auto malformed = write_file("malformed.json", "{\n  \"dimension\": 2,\n");
    r = run_cli("norm-eval -i " + malformed.string());
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("line") != std::string::npos);

    auto mismatched = write_file("mismatch.json", R"({
      "dimension": 3,
      "norm": {"kind": "facets", "data": [[[1,0],[0,0]],[[0,0],[1,0]]]},
      "x": [[1,0],[1,0],[1,0]]
    })");
    r = run_cli("norm-eval -i " + mismatched.string());
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("norm.data") != std::string::npos);
}

TEST_CASE("cli: instance files round-trip through serialization") {
    for (const char* text : {kLinf4Instance, kHyper3Instance}) {
        InstanceFile a = parse_instance_text(text);
        std::string dumped = serialize_instance(a);
        InstanceFile b = parse_instance_text(dumped);
        REQUIRE(a.dimension == b.dimension);
        REQUIRE(a.norm.kind() == b.norm.kind());
        REQUIRE((a.norm.generators() - b.norm.generators()).norm() <= 1e-14);
        REQUIRE(a.subspace.has_value() == b.subspace.has_value());
        if (a.subspace) {
            REQUIRE((a.subspace->span() - b.subspace->span()).norm() <= 1e-12);
            REQUIRE((a.subspace->kernel() - b.subspace->kernel()).norm() <= 1e-12);
        }
        REQUIRE(a.x.has_value() == b.x.has_value());
        if (a.x) REQUIRE((*a.x - *b.x).norm() <= 1e-14);
        REQUIRE(a.y0.has_value() == b.y0.has_value());
        if (a.y0) REQUIRE((*a.y0 - *b.y0).norm() <= 1e-14);
        REQUIRE(a.projection.has_value() == b.projection.has_value());
        if (a.projection) {
            REQUIRE((a.projection->first - b.projection->first).norm() <= 1e-14);
            REQUIRE((a.projection->second - b.projection->second).norm() <= 1e-14);
        }
    }
}

TEST_CASE("cli: parse errors carry a location and field names") {
    try {
        parse_instance_text("{ \"dimension\": \n2,, }");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
        parse_instance_text(R"({"dimension": 2,
            "norm": {"kind": "lp"}})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("norm.p") != std::string::npos);
    }
    try {
        parse_instance_text(R"({"dimension": 2,
            "norm": {"kind": "lp", "p": 1.5},
            "x": [[1,0],[0,0],[0,0]]})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("x") != std::string::npos);
    }
}
