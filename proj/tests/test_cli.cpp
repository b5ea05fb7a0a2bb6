#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semiflow/job.hpp"

using namespace semiflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("semiflow_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

int lab(const std::string& args) {
    std::string cmd = std::string(SEMIFLOW_LAB_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

job::JobSpec spec(job::Command c) {
    job::JobSpec s;
    s.command = c;
    return s;
}

json without_timing(json r) {
    r.erase("timing");
    return r;
}

} // namespace

TEST_CASE("classify reports the group verdict") {
    auto s = spec(job::Command::Classify);
    s.expression = "1-z^2";
    auto o = job::run(s);
    REQUIRE(o.exit_code == 0);
    const auto& r = o.report;
    CHECK(r["schema"] == 1);
    CHECK(r["job"]["expression"] == "1-z^2");
    CHECK(r["errors"].empty());
    const auto& c = r["results"]["classification"];
    CHECK(c["is_group"] == true);
    CHECK(c["theta_max"].get<double>() == 0.0);
    CHECK(c["generates_semigroup"] == true);
    CHECK(c["compact_criterion"]["points"].size() == 64);
    CHECK(r["provenance"]["version"] == job::tool_version());
    CHECK(r["provenance"]["grids"]["boundary_samples"] == 4096);
    CHECK(r["timing"].contains("total_seconds"));
}

TEST_CASE("flow of an example against its closed form") {
    auto dir = scratch("flow");
    auto s = spec(job::Command::Flow);
    s.example = "mobius-group";
    s.times = {0.5};
    s.grid = 10;
    s.csv_dir = dir;
    s.report_path = dir / "report.json";
    auto o = job::run(s);
    REQUIRE(o.exit_code == 0);
    const auto& f = o.report["results"]["flow"];
    REQUIRE(f["closed_form_defect"].size() == 1);
    CHECK(f["closed_form_defect"][0]["defect"].get<double>() < 1e-8);
    CHECK(f["dw"]["boundary"] == true);

    auto rows = read_csv(dir / "trajectories.csv");
    REQUIRE(rows.size() == 1 + 100 * 21);
    CHECK(rows[0] == std::vector<std::string>{"point", "z_re", "z_im", "t", "w_re", "w_im"});
    // t = 0 rows reproduce the starting point.
    CHECK(rows[1][1] == rows[1][4]);
    CHECK(rows[1][2] == rows[1][5]);

    // The report on disk matches the returned one and no temporaries remain.
    CHECK(json::parse(slurp(dir / "report.json")) == o.report);
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("matrix spectra of the linear contraction") {
    auto dir = scratch("matrix");
    auto s = spec(job::Command::Matrix);
    s.expression = "-z";
    s.weight = WeightKind::Hardy;
    s.N = 64;
    s.times = {1.0};
    s.csv_dir = dir;
    auto o = job::run(s);
    REQUIRE(o.exit_code == 0);
    auto rows = read_csv(dir / "spectrum_t1.csv");
    REQUIRE(rows.size() == 66);
    CHECK(rows[0] == std::vector<std::string>{"k", "sigma"});
    for (std::size_t k = 0; k <= 64; ++k) CHECK(std::abs(std::stod(rows[k + 1][1]) - std::exp(-double(k))) < 1e-10);
    const auto& m = o.report["results"]["matrix"]["flows"][0];
    CHECK(m["trace_class"]["flag"] == true);
    CHECK(m["expm_defect"].get<double>() < 1e-8);
    auto mrows = read_csv(dir / "matrix_t1.csv");
    REQUIRE(mrows.size() == 66);
    CHECK(mrows[0].size() == 2 * 65);
    CHECK(mrows[0][0] == "c0_re");
}

TEST_CASE("static maps and half-plane generators") {
    auto s = spec(job::Command::Matrix);
    s.example = "lotto";
    auto o = job::run(s);
    REQUIRE(o.exit_code == 0);
    CHECK(o.report["results"]["matrix"]["hs_integral"]["diverges"] == true);
    CHECK(o.report["results"]["matrix"]["hs_integral_square"]["diverges"] == false);

    auto h = spec(job::Command::HalfPlane);
    h.expression = "2*z + 3i";
    h.space = Space::HalfPlane;
    auto ho = job::run(h);
    REQUIRE(ho.exit_code == 0);
    const auto& r = ho.report["results"]["halfplane"];
    CHECK(r["group"]["p"].get<double>() == doctest::Approx(2.0));
    CHECK(r["group"]["q"].get<double>() == doctest::Approx(3.0));
    CHECK(r["rotated_bp"].size() == 6);
    CHECK(r["norm_at"].size() == 2);

    auto a = spec(job::Command::HalfPlane);
    a.example = "halfplane-affine";
    auto ao = job::run(a);
    CHECK(ao.report["results"]["halfplane"]["group"].is_null());
    CHECK(ao.report["results"]["halfplane"]["delta"].get<double>() == doctest::Approx(-1.0));
}

TEST_CASE("errors are embedded with nonzero exit codes") {
    auto s = spec(job::Command::Classify);
    s.expression = "1 + ";
    auto o = job::run(s);
    CHECK(o.exit_code == 2);
    REQUIRE(o.report["errors"].size() == 1);
    CHECK(o.report["errors"][0]["position"] == 4);

    s.expression = "z";
    s.example = "cubic";
    CHECK(job::run(s).exit_code == 2);

    s.expression.reset();
    s.example = "no-such";
    CHECK(job::run(s).exit_code == 2);

    auto neg = spec(job::Command::Flow);
    neg.expression = "-z";
    neg.times = {-1.0};
    CHECK(job::run(neg).exit_code == 2);

    // A failing operation keeps the rest of the report.
    auto bad = spec(job::Command::Flow);
    bad.expression = "z";
    bad.times = {2.0};
    auto bo = job::run(bad);
    CHECK(bo.exit_code == 1);
    CHECK(bo.report["results"]["symbol"]["label"] == "z");
    CHECK(bo.report["results"]["flow"].is_null());
    CHECK(bo.report["errors"][0]["operation"] == "flow");

    auto wrong_space = spec(job::Command::Classify);
    wrong_space.example = "halfplane-affine";
    CHECK(job::run(wrong_space).exit_code == 1);

    auto extra = spec(job::Command::ListExamples);
    extra.example = "cubic";
    CHECK(job::run(extra).exit_code == 2);
}

TEST_CASE("job files") {
    json j = {{"command", "matrix"}, {"expression", "z/2"}, {"map", true}, {"N", 16}, {"t", {0.25}},
              {"tolerances", {{"alias", 1e-8}}}};
    auto s = job::JobSpec::from_json(j);
    CHECK(s.command == job::Command::Matrix);
    CHECK(s.expression_is_map);
    CHECK(s.N == 16);
    CHECK(s.tol.alias == 1e-8);
    auto back = job::JobSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());

    CHECK_THROWS_AS(job::JobSpec::from_json({{"command", "classify"}, {"expresion", "z"}}), job::JobError);
    CHECK_THROWS_AS(job::JobSpec::from_json({{"command", "classify"}, {"N", "many"}}), job::JobError);
    CHECK_THROWS_AS(job::JobSpec::from_json({{"command", "classify"}, {"N", -3}}), job::JobError);
    CHECK_THROWS_AS(job::JobSpec::from_json({{"command", "explode"}}), job::JobError);
    CHECK_THROWS_AS(job::JobSpec::from_json({{"command", "matrix"}, {"weight", "sobolev"}}), job::JobError);
    CHECK_THROWS_AS(job::JobSpec::from_json(json::array()), job::JobError);

    auto o = job::run(s);
    REQUIRE(o.exit_code == 0);
    CHECK(o.report["results"]["matrix"]["hs_integral"]["value"].get<double>() == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("property: reports are deterministic outside the timing block") {
    for (auto c : {job::Command::Classify, job::Command::Flow, job::Command::Matrix}) {
        auto s = spec(c);
        s.expression = "z*(z^2 - 2)";
        s.N = 16;
        auto a = job::run(s), b = job::run(s);
        CHECK(without_timing(a.report).dump() == without_timing(b.report).dump());
    }
    // Thread count does not change results.
    auto s = spec(job::Command::ReportAll);
    ::setenv("SEMIFLOW_LAB_THREADS", "1", 1);
    auto one = job::run(s);
    ::setenv("SEMIFLOW_LAB_THREADS", "3", 1);
    auto three = job::run(s);
    ::unsetenv("SEMIFLOW_LAB_THREADS");
    CHECK(one.exit_code == 0);
    CHECK(without_timing(one.report).dump() == without_timing(three.report).dump());
    CHECK(one.report["results"]["examples"].size() == builtin_examples().size());
}

TEST_CASE("non-finite numbers are flagged") {
    CHECK(job::number(NAN) == "NaN");
    CHECK(job::number(INFINITY) == "Infinity");
    CHECK(job::number(-INFINITY) == "-Infinity");
    CHECK(job::number(1.5) == 1.5);
}

TEST_CASE("command-line front end") {
    auto dir = scratch("binary");
    auto out = (dir / "c.json").string();
    REQUIRE(lab("classify --G \"1-z^2\" --out " + out) == 0);
    auto r = json::parse(slurp(out));
    CHECK(r["results"]["classification"]["is_group"] == true);
    CHECK(r["results"]["classification"]["theta_max"].get<double>() == 0.0);

    REQUIRE(lab("flow --example mobius-group --t 0.5 --grid 10 --csv-dir " + dir.string() + " --out " + out) == 0);
    r = json::parse(slurp(out));
    CHECK(r["results"]["flow"]["closed_form_defect"][0]["defect"].get<double>() < 1e-8);
    CHECK(fs::exists(dir / "trajectories.csv"));

    REQUIRE(lab("matrix --G \"-z\" --beta hardy --N 64 --t 1.0 --csv-dir " + dir.string() + " --out " + out) == 0);
    auto rows = read_csv(dir / "spectrum_t1.csv");
    REQUIRE(rows.size() == 66);
    for (std::size_t k = 0; k <= 64; ++k) CHECK(std::abs(std::stod(rows[k + 1][1]) - std::exp(-double(k))) < 1e-10);

    std::ofstream(dir / "job.json") << R"({"command": "halfplane", "example": "halfplane-group", "output": {"report": ")"
                                    << out << "\"}}";
    REQUIRE(lab("--job " + (dir / "job.json").string()) == 0);
    r = json::parse(slurp(out));
    CHECK(r["results"]["halfplane"]["group"]["q"].get<double>() == doctest::Approx(3.0));

    CHECK(lab("list-examples") == 0);
    CHECK(lab("classify --G \"1 +\"") == 2);
    CHECK(lab("flow --G z --t 2") == 1);
    CHECK(lab("classify --bogus") != 0);
    CHECK(lab("") != 0);
    CHECK(lab("--job " + (dir / "missing.json").string()) == 2);
    CHECK(lab("--job " + (dir / "job.json").string() + " classify --G z") == 2);
    fs::remove_all(dir.parent_path());
}
