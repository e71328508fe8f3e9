#include <doctest.h>

#include <cmath>

#include "oblique/homogenize.hpp"
#include "support.hpp"

using namespace oblique;

namespace {

Problem flat_law_problem() { return load_problem(testing::data_path("cell_flat_law.json"), {16, 16}); }

Problem with(const std::string& key, const std::string& value) {
    auto j = testing::read_json("cell_flat_law.json");
    if (key == "f1") j["domain"]["f1"] = value;
    else j[key] = value;
    return testing::make(j, {16, 16});
}

// Lbar(x1, r, p1) = c r - g, the exact law of a flat bottom.
EffectiveLawTable robin_law(double c, double g, double r_lo, double r_hi) {
    KnotGrids k{{-0.5, 0.5}, {r_lo, r_hi}, {-5.0, 5.0}};
    std::vector<double> v;
    for (std::size_t i = 0; i < 2; ++i)
        for (double r : k.r)
            for (std::size_t q = 0; q < 2; ++q) v.push_back(c * r - g);
    return EffectiveLawTable(k, v);
}

}  // namespace

TEST_SUITE("homogenize") {

TEST_CASE("zero data give the zero solution") {
    const EpsilonSolve s = solve_epsilon(with("g", "0"), 0.125, {65, 33});
    CHECK(s.max_abs < 1e-12);
    CHECK(s.u.values.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("grids coarser than eps / 8 are rejected") {
    const Problem p = flat_law_problem();
    CHECK_THROWS_AS(solve_epsilon(p, 0.125, {33, 33}), ResolutionError);
    CHECK_NOTHROW(solve_epsilon(p, 0.125, {65, 33}));
    CHECK_THROWS_AS(solve_epsilon(p, -1.0, {65, 33}), InvalidArgument);
    CHECK_THROWS_AS(solve_epsilon(load_problem(testing::data_path("strip_average.json"), {16, 16}), 0.1, {65, 17}),
                    InvalidArgument);
}

TEST_CASE("solutions obey comparison and the barrier") {
    const Problem lo = with("g", "1 + 0.5*cos(2*pi*xi)");
    const Problem hi = with("g", "1.2 + 0.5*cos(2*pi*xi)");
    const EpsilonSolve a = solve_epsilon(lo, 0.125, {65, 33});
    const EpsilonSolve b = solve_epsilon(hi, 0.125, {65, 33});
    CHECK((b.u.values - a.u.values).minCoeff() >= -1e-12);
    // M = max(|top value|, max g / c) = 1.5.
    CHECK(a.max_abs <= 1.5 + 1e-9);
    CHECK(a.u.values.minCoeff() >= -1e-12);
    CHECK(a.residual < 1e-9);
}

TEST_CASE("flat bottoms make every epsilon equal to the flat law") {
    const Problem p = with("f1", "0");
    const GridField flat = solve_flat_law(p, {65, 33});
    for (double eps : {0.25, 0.125}) {
        const EpsilonSolve s = solve_epsilon(p, eps, {65, 33});
        CHECK((s.u.values - flat.values).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("homogenized solve with an exact Robin law") {
    const Problem p = flat_law_problem();
    const GridField flat = solve_flat_law(with("f1", "0"), {33, 33});
    HomogenizeOptions o;
    const HomogenizedSolve h = solve_homogenized(p, robin_law(1.0, 1.0, -2.0, 2.0), {33, 33}, o);
    CHECK((h.u.values - flat.values).lpNorm<Eigen::Infinity>() < 1e-7);
    REQUIRE(!h.increments.empty());
    CHECK(h.increments.back() < o.outer_tol);
    // Damped contraction: increments shrink.
    for (std::size_t q = 2; q < h.increments.size(); ++q) CHECK(h.increments[q] <= h.increments[q - 1] * 1.0001);

    // Starting from the answer converges at once.
    const HomogenizedSolve again = solve_homogenized(p, robin_law(1.0, 1.0, -2.0, 2.0), {33, 33}, o, &h.u);
    CHECK(again.increments.size() <= 2);
}

TEST_CASE("homogenized solve errors") {
    const Problem p = flat_law_problem();
    HomogenizeOptions o;
    CHECK_THROWS_AS(solve_homogenized(p, robin_law(1.0, 1.0, 0.9, 2.0), {33, 33}, o), TableRangeExceeded);
    o.outer_max = 2;
    o.outer_tol = 1e-30;
    CHECK_THROWS_AS(solve_homogenized(p, robin_law(1.0, 1.0, -2.0, 2.0), {33, 33}, o), OuterNonConvergence);
    o = {};
    o.theta = 0.0;
    CHECK_THROWS_AS(solve_homogenized(p, robin_law(1.0, 1.0, -2.0, 2.0), {33, 33}, o), InvalidArgument);
}

TEST_CASE("boundary traces and padded knot ranges") {
    const Problem p = flat_law_problem();
    const GridField u = solve_flat_law(p, {33, 17});
    const BoundaryTrace t = boundary_trace(u);
    // The two bottom corners are Dirichlet nodes and carry no trace.
    REQUIRE(t.x1.size() == 31);
    CHECK(t.r.size() == 31);
    HomogenizeOptions o;
    o.knots_x1 = 4;
    o.knots_r = 3;
    o.knots_p1 = 3;
    const KnotGrids k = knots_from_trace(p, t, o);
    CHECK(k.x1.size() == 4);
    CHECK(k.x1.front() == doctest::Approx(-0.5));
    CHECK(k.x1.back() == doctest::Approx(0.5));
    for (std::size_t q = 0; q < t.r.size(); ++q) {
        CHECK(k.r.front() < t.r[q]);
        CHECK(t.r[q] < k.r.back());
        CHECK(k.p1.front() < t.p1[q]);
        CHECK(t.p1[q] < k.p1.back());
    }
}

TEST_CASE("convergence study on a small sweep") {
    const Problem p = load_problem(testing::data_path("rough_robin.json"), {16, 16});
    HomogenizeOptions o;
    o.grid = {65, 65};
    o.knots_x1 = 3;
    o.knots_r = 3;
    o.knots_p1 = 2;
    o.cell.n1 = 16;
    const ConvergenceReport rep = convergence_study(p, {0.25, 0.125}, o);
    REQUIRE(rep.sup_errors.size() == 2);
    CHECK(rep.sup_errors[1] < rep.sup_errors[0]);
    CHECK(rep.sup_errors[0] < 0.05);
    CHECK(rep.max_abs_u <= rep.barrier + 1e-9);
    CHECK(rep.barrier == doctest::Approx(1.5));
    CHECK(rep.compared_nodes > 0);
    CHECK(rep.restart_gap >= 0.0);
    CHECK(rep.restart_gap < 1e-6);
    CHECK(rep.law.worst_r_increment() > 0.0);
    CHECK(rep.to_csv().rfind("eps,sup_error,iterations\n", 0) == 0);
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["sup_errors"].size() == 2);
    CHECK(j["law_knots"]["x1"] == 3);

    CHECK_THROWS_AS(convergence_study(p, {}, o), InvalidArgument);
    CHECK_THROWS_AS(convergence_study(p, {0.125, 0.25}, o), InvalidArgument);
}

}  // TEST_SUITE
