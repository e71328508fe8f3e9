#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "oblique/report.hpp"
#include "support.hpp"

using namespace oblique;

TEST_SUITE("report") {

TEST_CASE("doubles round-trip through text") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1e6, 1e6);
    for (int t = 0; t < 1000; ++t) {
        const double v = U(rng) * std::pow(10.0, double(t % 40) - 20.0);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(json_number(std::nan("")).is_null());
    CHECK(json_number(1.5).get<double>() == 1.5);
}

TEST_CASE("schedule CSV lists outer and inner steps") {
    ErgodicEstimate e;
    e.method = Method::Truncation;
    e.d = 1.0;
    e.schedule = {{4.0, 1.1, std::nan(""), std::nan(""), 7}, {8.0, 1.05, 1.0, 0.1, 9}};
    e.inner = {{{0.125, 1.2, std::nan(""), std::nan(""), 3}}, {{0.125, 1.1, std::nan(""), std::nan(""), 4}}};
    const std::string csv = schedule_csv(e);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "level,step,parameter,d_estimate,extrapolate,profile_delta,iterations");
    std::getline(is, line);
    CHECK(line == "R,0,4,1.1000000000000001,nan,nan,7");
    std::getline(is, line);
    CHECK(line.rfind("lambda,0,0.125,", 0) == 0);
    std::getline(is, line);
    CHECK(line.rfind("R,1,8,", 0) == 0);

    const auto j = estimate_json(e);
    CHECK(j["method"] == "Truncation");
    CHECK(j["schedule"].size() == 2);
    CHECK(j["schedule"][0]["extrapolate"].is_null());
    CHECK(j["inner"][1][0]["iterations"] == 4);
}

TEST_CASE("field exports") {
    const Problem p = load_problem(testing::data_path("strip_average.json"), {16, 16});
    GridField f;
    f.geom = make_geometry(p.domain, {16, 16});
    f.values = Eigen::VectorXd::LinSpaced(256, 0.0, 1.0);
    f.tags.assign(256, NodeTag::Interior);
    f.tags[0] = NodeTag::ObliqueBoundary;
    const auto s = field_summary(f);
    CHECK(s["n1"] == 16);
    CHECK(s["max"] == 1.0);
    CHECK(s["tags"]["ObliqueBoundary"] == 1);
    const std::string csv = field_csv(f);
    CHECK(csv.rfind("x1,x2,tag,value\n0,0,ObliqueBoundary,0\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
}

TEST_CASE("text files") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "oblique_report_test";
    fs::remove_all(dir);
    const std::string path = (dir / "nested" / "out.txt").string();
    write_text_file(path, "a,b\n1,2\n");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "a,b\n1,2\n");
    fs::remove_all(dir);
    CHECK_THROWS_AS(write_text_file("/proc/oblique/x.txt", "x"), IoError);
}

}  // TEST_SUITE
