#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oblique/oblique.h"

namespace {

std::string path(const char* name) { return std::string(OBQ_TEST_DATA) + "/" + name; }

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

obq_options small() {
    obq_options o;
    obq_options_default(&o);
    o.n1 = o.n2 = 32;
    return o;
}

}  // namespace

TEST_CASE("defaults, version and status names") {
    obq_options o;
    obq_options_default(&o);
    CHECK(o.n1 == 64);
    CHECK(o.tol_d == 1e-6);
    CHECK(o.early_stop == 1);
    CHECK(o.max_doublings == 4);
    CHECK(o.cell_max_doublings == 5);
    CHECK(o.knots[0] == 5);
    CHECK(o.knots[1] == 7);
    CHECK(o.knots[2] == 5);
    CHECK(std::strlen(obq_version()) > 0);
    CHECK(std::string(obq_status_name(OBQ_OK)) == "OK");
    CHECK(std::string(obq_status_name(OBQ_ERR_TABLE_RANGE)) == "TableRangeExceeded");
}

TEST_CASE("problems load and report errors by code") {
    obq_problem* p = nullptr;
    REQUIRE(obq_problem_load(path("strip_average.json").c_str(), 16, 16, &p) == OBQ_OK);
    CHECK(std::string(obq_problem_name(p)) == "strip_average");
    obq_problem_free(p);

    p = nullptr;
    REQUIRE(obq_problem_parse(slurp(path("three_controls.json")).c_str(), 16, 16, &p) == OBQ_OK);
    obq_problem_free(p);

    obq_problem* q = nullptr;
    CHECK(obq_problem_parse("{ nope", 16, 16, &q) == OBQ_ERR_PARSE);
    CHECK(q == nullptr);
    CHECK(std::string(obq_last_error_code()) == "ParseError");
    CHECK(std::strlen(obq_last_error()) > 0);
    CHECK(obq_problem_load("/nonexistent.json", 16, 16, &q) == OBQ_ERR_IO);
    CHECK(obq_problem_load(path("strip_average.json").c_str(), 16, 16, nullptr) == OBQ_ERR_INVALID_ARGUMENT);

    auto j = nlohmann::json::parse(slurp(path("strip_average.json")));
    j["a"] = {{{1, 0.2}, {0.1, 1}}};
    CHECK(obq_problem_parse(j.dump().c_str(), 16, 16, &q) == OBQ_ERR_ASSUMPTION);
    CHECK(std::string(obq_last_error()).find("symmetry") != std::string::npos);
    obq_problem_free(nullptr);
    obq_result_free(nullptr);
}

TEST_CASE("validate lists violations without failing") {
    obq_result* r = nullptr;
    int ok = -1;
    REQUIRE(obq_validate(path("drift_violation.json").c_str(), 16, 16, &r, &ok) == OBQ_OK);
    CHECK(ok == 0);
    CHECK(std::string(obq_result_json(r)).find("ass1_b1") != std::string::npos);
    obq_result_free(r);
    REQUIRE(obq_validate(path("strip_average.json").c_str(), 16, 16, &r, &ok) == OBQ_OK);
    CHECK(ok == 1);
    obq_result_free(r);
}

TEST_CASE("ergodic results carry d, verdicts and a schedule") {
    obq_problem* p = nullptr;
    REQUIRE(obq_problem_load(path("strip_average.json").c_str(), 16, 16, &p) == OBQ_OK);
    obq_options o = small();
    o.method = OBQ_METHOD_DISCOUNT;
    obq_result* r = nullptr;
    REQUIRE(obq_ergodic(p, &o, &r) == OBQ_OK);
    CHECK(obq_result_d(r) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(obq_result_converged(r) == 1);
    double lo = 0, hi = 0;
    CHECK(obq_result_band(r, &lo, &hi) == 0);
    const auto j = nlohmann::json::parse(obq_result_json(r));
    CHECK(j["verdicts"]["schedule_converged"]["pass"] == true);
    CHECK(j["verdicts"]["d_within_g_range"]["pass"] == true);
    REQUIRE(obq_result_artifact_count(r) == 1);
    CHECK(std::string(obq_result_artifact_name(r, 0)) == "schedule.csv");
    CHECK(std::string(obq_result_artifact(r, "schedule.csv")).rfind("level,step,", 0) == 0);
    CHECK(obq_result_artifact(r, "missing.csv") == nullptr);
    obq_result_free(r);

    // A schedule that stops short still yields its estimate.
    o.k_min = 2;
    o.k_max = 3;
    o.tol_d = 1e-14;
    r = nullptr;
    CHECK(obq_ergodic(p, &o, &r) == OBQ_ERR_NONCONVERGENCE);
    REQUIRE(r != nullptr);
    CHECK(obq_result_converged(r) == 0);
    CHECK(std::isfinite(obq_result_d(r)));
    obq_result_free(r);

    o = small();
    o.n1 = 2;
    CHECK(obq_ergodic(p, &o, &r) == OBQ_ERR_INVALID_ARGUMENT);
    o = small();
    o.cell_max_doublings = -1;
    CHECK(obq_ergodic(p, &o, &r) == OBQ_ERR_INVALID_ARGUMENT);
    obq_problem_free(p);
}

TEST_CASE("degenerate problems report a band") {
    obq_problem* p = nullptr;
    REQUIRE(obq_problem_load(path("eikonal_box.json").c_str(), 16, 16, &p) == OBQ_OK);
    obq_options o = small();
    obq_result* r = nullptr;
    REQUIRE(obq_ergodic(p, &o, &r) == OBQ_OK);
    double lo = 0, hi = 0;
    CHECK(obq_result_band(r, &lo, &hi) == 1);
    CHECK(lo < hi);
    obq_result_free(r);
    obq_problem_free(p);
}

TEST_CASE("cell and table entry points") {
    obq_problem* p = nullptr;
    REQUIRE(obq_problem_load(path("cell_flat_law.json").c_str(), 16, 16, &p) == OBQ_OK);
    obq_options o = small();
    o.cell_n1 = 16;
    obq_result* r = nullptr;
    REQUIRE(obq_cell(p, 0.5, 0.25, 0.0, 0.0, &o, &r) == OBQ_OK);
    CHECK(obq_result_d(r) == doctest::Approx(0.75).epsilon(1e-6));
    obq_result_free(r);

    o.knots[0] = 2;
    o.knots[1] = 2;
    o.knots[2] = 1;
    REQUIRE(obq_table(p, &o, &r) == OBQ_OK);
    const auto j = nlohmann::json::parse(obq_result_json(r));
    CHECK(j["verdicts"]["r_monotone"]["pass"] == true);
    CHECK(j["verdicts"]["knot_exact"]["pass"] == true);
    CHECK(j["verdicts"]["csv_roundtrip"]["pass"] == true);
    CHECK(std::string(obq_result_artifact(r, "table.csv")).rfind("x1,r,p1,Lbar\n", 0) == 0);
    obq_result_free(r);

    const double eps[] = {0.125, 0.25};
    CHECK(obq_homogenize(p, eps, 2, &o, &r) == OBQ_ERR_INVALID_ARGUMENT);
    obq_problem_free(p);

    REQUIRE(obq_problem_load(path("strip_average.json").c_str(), 16, 16, &p) == OBQ_OK);
    CHECK(obq_cell(p, 0.5, 0.0, 0.0, 0.0, &o, &r) == OBQ_ERR_INVALID_ARGUMENT);
    obq_problem_free(p);
}
