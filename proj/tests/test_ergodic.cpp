#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oblique/ergodic.hpp"
#include "support.hpp"

using namespace oblique;
using std::numbers::pi;

namespace {

ErgodicOptions small(std::size_t n = 32) {
    ErgodicOptions o;
    o.grid = {n, n};
    return o;
}

bool mentions(const ErgodicEstimate& e, const std::string& text) {
    return std::any_of(e.diagnostics.begin(), e.diagnostics.end(),
                       [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

// Uniformly elliptic box with oblique rows on all four sides.
Problem elliptic_box(const std::string& g) {
    auto j = testing::read_json("eikonal_box.json");
    j["controls"] = {"laplacian", "sheared"};
    j["a"] = {{{1, 0}, {0, 1}}, {{1.5, 0.3}, {0.3, 1}}};
    j["b"] = {{0, 0}, {0.2, 0}};
    j["uniformly_elliptic"] = true;
    j["g"] = g;
    return testing::make(j, {16, 16});
}

}  // namespace

TEST_SUITE("ergodic") {

TEST_CASE("strip constant is the boundary average of g") {
    const Problem p = load_problem(testing::data_path("strip_average.json"), {16, 16});
    const double avg = testing::simpson([](double x) { return 2.0 + std::sin(2 * pi * x); }, 0.0, 1.0, 1000);
    const ErgodicEstimate e = extract_d_discount(p, small());
    CHECK(e.converged);
    CHECK(e.method == Method::VanishingDiscount);
    CHECK(e.d == doctest::Approx(avg).epsilon(1e-5));
}

TEST_CASE("discount schedule bookkeeping") {
    const Problem p = elliptic_box("2 + cos(pi*x1) + x2");
    ErgodicOptions o = small(24);
    o.early_stop = false;
    o.k_min = 2;
    o.k_max = 9;
    const ErgodicEstimate e = extract_d_discount(p, o);
    REQUIRE(e.schedule.size() == 8);
    for (std::size_t k = 0; k < e.schedule.size(); ++k) {
        CHECK(e.schedule[k].parameter == std::ldexp(1.0, -int(k) - 2));
        if (k > 0)
            CHECK(e.schedule[k].extrapolate ==
                  doctest::Approx(2 * e.schedule[k].d_estimate - e.schedule[k - 1].d_estimate));
    }
    // Richardson estimates settle faster than the raw ones.
    const auto& s = e.schedule;
    CHECK(std::fabs(s[7].extrapolate - s[6].extrapolate) < std::fabs(s[7].d_estimate - s[6].d_estimate));
    CHECK(e.profile.values[e.x0_node] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("shift, homogeneity and monotonicity of d in g") {
    const ErgodicOptions o = small(24);
    const double d0 = extract_d(elliptic_box("2 + cos(pi*x1) + x2"), Method::Auto, o).d;
    const double d1 = extract_d(elliptic_box("2.5 + cos(pi*x1) + x2"), Method::Auto, o).d;
    CHECK(d1 - d0 == doctest::Approx(0.5).epsilon(1e-5));
    const double dt = extract_d(elliptic_box("3*(2 + cos(pi*x1) + x2)"), Method::Auto, o).d;
    CHECK(dt == doctest::Approx(3 * d0).epsilon(1e-5));
    const double dz = extract_d(elliptic_box("0"), Method::Auto, o).d;
    CHECK(std::fabs(dz) < 1e-9);
    const double dm = extract_d(elliptic_box("2 + cos(pi*x1) + x2 + 0.2*x1^2"), Method::Auto, o).d;
    CHECK(dm >= d0 - 1e-9);
    // d lies between the extremes of g.
    CHECK(d0 > 1.0);
    CHECK(d0 < 4.0);
}

TEST_CASE("the pinning point does not change d") {
    const Problem p = elliptic_box("2 + cos(pi*x1) + x2");
    ErgodicOptions o = small(24);
    const double a = extract_d_discount(p, o).d;
    o.x0 = Vec2{0.2, 0.8};
    const ErgodicEstimate e = extract_d_discount(p, o);
    CHECK(e.d == doctest::Approx(a).epsilon(1e-5));
}

TEST_CASE("schedules that stop short carry their estimate") {
    const Problem p = elliptic_box("2 + cos(pi*x1) + x2");
    ErgodicOptions o = small(16);
    o.k_min = 2;
    o.k_max = 3;
    o.tol_d = 1e-14;
    try {
        extract_d_discount(p, o);
        FAIL("expected ScheduleNonConvergence");
    } catch (const ScheduleNonConvergence& e) {
        CHECK(!e.estimate().converged);
        CHECK(e.estimate().schedule.size() == 2);
        CHECK(std::isfinite(e.estimate().d));
    }
    o.k_max = 2;
    CHECK_THROWS_AS(extract_d_discount(p, o), InvalidArgument);
}

TEST_CASE("half space with tangential transport") {
    const Problem p = load_problem(testing::data_path("halfspace_drift.json"), {16, 16});
    const double avg = testing::simpson([](double x) { return 1.0 + 0.3 * std::cos(2 * pi * x); }, 0.0, 1.0, 1000);
    const ErgodicEstimate e = extract_d(p, Method::Auto, small());
    CHECK(e.method == Method::Truncation);
    CHECK(e.converged);
    CHECK(e.d == doctest::Approx(avg).epsilon(1e-4));
    CHECK(mentions(e, "not unique"));
    CHECK(!mentions(e, "DriftConditionWarning"));

    auto j = testing::read_json("halfspace_drift.json");
    j["b"] = {{1, 0.5}};
    ErgodicOptions o = small(16);
    o.tol_d = 1e-3;
    try {
        CHECK(mentions(extract_d_halfspace(testing::make(j, {16, 16}), o), "DriftConditionWarning"));
    } catch (const ScheduleNonConvergence& e) {
        CHECK(mentions(e.estimate(), "DriftConditionWarning"));
    }
}

TEST_CASE("zero data give d = 0") {
    const Problem p = load_problem(testing::data_path("strip_zero.json"), {16, 16});
    const ErgodicEstimate e = extract_d(p, Method::Auto, small());
    CHECK(std::fabs(e.d) < 1e-12);
    CHECK(mentions(e, "not unique"));
}

TEST_CASE("degenerate controllable data report a band") {
    const Problem p = load_problem(testing::data_path("eikonal_box.json"), {16, 16});
    CHECK(select_method(p, {32, 32}) == Method::VanishingViscosity);
    const ErgodicEstimate e = extract_d(p, Method::Auto, small());
    CHECK(e.method == Method::VanishingViscosity);
    CHECK(e.band_lo <= e.d);
    CHECK(e.d <= e.band_hi);
    CHECK(e.band_hi > e.band_lo);
    CHECK(e.inner.size() == e.schedule.size());
    // Controls can steer to the cheapest boundary point: d is at most min g = 1.
    CHECK(e.d <= 1.0 + 2e-2);
    CHECK(e.d > 0.9);
}

TEST_CASE("dispatch and unsupported cases") {
    CHECK(select_method(load_problem(testing::data_path("strip_average.json"), {16, 16}), {32, 32}) ==
          Method::Truncation);
    CHECK(select_method(elliptic_box("1"), {32, 32}) == Method::VanishingDiscount);
    const Problem osc = load_problem(testing::data_path("cell_flat_law.json"), {16, 16});
    CHECK_THROWS_AS(select_method(osc, {32, 32}), InvalidArgument);
    CHECK_THROWS_AS(extract_d_discount(osc, small()), InvalidArgument);

    auto j = testing::read_json("eikonal_box.json");
    j["controls"] = {"still"};
    j["a"] = {{{0, 0}, {0, 0}}};
    j["b"] = {{0, 0}};
    CHECK_THROWS_AS(extract_d(testing::make(j, {16, 16}), Method::Auto, small(16)), UnsupportedDegenerate);
}

}  // TEST_SUITE
