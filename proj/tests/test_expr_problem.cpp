#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "oblique/expr.hpp"
#include "oblique/problem.hpp"
#include "support.hpp"

using namespace oblique;
using testing::make;
using testing::read_json;

namespace {

bool has_violation(const std::vector<Violation>& v, const std::string& name) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.name == name; });
}

std::vector<Violation> violations_of(const nlohmann::json& j) {
    try {
        make(j, {16, 16});
    } catch (const AssumptionViolated& e) {
        return e.violations();
    }
    return {};
}

}  // namespace

TEST_SUITE("problem") {

TEST_CASE("expressions evaluate and differentiate") {
    const Expr e = Expr::parse("2 + sin(2*pi*x1) * exp(-x2) + xi^2");
    CHECK(e(0.25, 0.0, 3.0) == doctest::Approx(2.0 + 1.0 + 9.0));
    CHECK(e.depends_on(Var::Xi));
    CHECK(Expr::parse("3*4 - 2").is_constant());
    CHECK(Expr::parse("3*4 - 2")(0.0, 0.0) == 10.0);
    CHECK(Expr::parse("2^3")(0.0, 0.0) == doctest::Approx(8.0));

    // Symbolic derivatives against central differences.
    const char* sources[] = {"sin(x1)*cosh(x2)", "sqrt(1 + x1^2) / (2 + cos(xi))", "tanh(x1*x2) + log(3 + x2)",
                             "0.1*(1 - cos(2*pi*xi))*cos(pi*x1)^2", "exp(x1) * abs(x2 - 5)"};
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (const char* src : sources) {
        const Expr f = Expr::parse(src);
        for (int t = 0; t < 10; ++t) {
            const Point3 p{U(rng), U(rng), U(rng)};
            const double h = 1e-6;
            const double fd1 = (f({p.x1 + h, p.x2, p.xi}) - f({p.x1 - h, p.x2, p.xi})) / (2 * h);
            const double fd2 = (f({p.x1, p.x2 + h, p.xi}) - f({p.x1, p.x2 - h, p.xi})) / (2 * h);
            const double fd3 = (f({p.x1, p.x2, p.xi + h}) - f({p.x1, p.x2, p.xi - h})) / (2 * h);
            CHECK(f.derivative(Var::X1)(p) == doctest::Approx(fd1).epsilon(1e-6));
            CHECK(f.derivative(Var::X2)(p) == doctest::Approx(fd2).epsilon(1e-6));
            CHECK(f.derivative(Var::Xi)(p) == doctest::Approx(fd3).epsilon(1e-6));
        }
    }
}

TEST_CASE("malformed expressions raise ParseError") {
    CHECK_THROWS_AS(Expr::parse("sin("), ParseError);
    CHECK_THROWS_AS(Expr::parse("foo(x1)"), ParseError);
    CHECK_THROWS_AS(Expr::parse("x3 + 1"), ParseError);
    CHECK_THROWS_AS(Expr::parse("1 +"), ParseError);
    CHECK_THROWS_AS(Expr::parse(""), ParseError);
}

TEST_CASE("symmetric 2x2 eigenvalues match a dense eigensolver") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int t = 0; t < 200; ++t) {
        const Sym2 s{U(rng), U(rng), U(rng)};
        Eigen::Matrix2d m;
        m << s.a11, s.a12, s.a12, s.a22;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
        CHECK(s.min_eigenvalue() == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-12).scale(1.0));
        CHECK(s.max_eigenvalue() == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("specs load with their declared structure") {
    const Problem p = load_problem(testing::data_path("strip_average.json"));
    CHECK(p.name == "strip_average");
    CHECK(p.domain.kind == DomainKind::PeriodicHalfStrip);
    CHECK(p.domain.top == TopKind::Neumann);
    CHECK(p.coeffs.size() == 1);
    CHECK(p.bc.mode == BcMode::Discounted);
    CHECK(p.bc.mode_value == 1.0);
    CHECK(p.stats.gamma0 == doctest::Approx(1.0));
    CHECK(p.stats.min_eigenvalue == doctest::Approx(1.0));

    const Problem t = load_problem(testing::data_path("three_controls.json"));
    CHECK(t.coeffs.size() == 3);
    CHECK(t.domain.kind == DomainKind::OscillatingEpsilon);
    CHECK(t.domain.bottom(0.2) == doctest::Approx(0.05 * std::sin(0.2 * std::numbers::pi)));
    CHECK(t.coeffs.matrix(2, 0.0, 0.5).a12 == doctest::Approx(0.3));
}

TEST_CASE("syntax and schema errors raise ParseError") {
    CHECK_THROWS_AS(parse_problem("{ not json"), ParseError);
    auto j = read_json("strip_average.json");
    j.erase("g");
    CHECK_THROWS_AS(make(j), ParseError);
    j = read_json("strip_average.json");
    j["domain"]["kind"] = "Annulus";
    CHECK_THROWS_AS(make(j), ParseError);
    j = read_json("strip_average.json");
    j["mode"] = {{"kind", "discounted"}, {"lambda", -1}};
    CHECK_THROWS_AS(make(j), ParseError);
    CHECK_THROWS_AS(load_problem("/nonexistent/problem.json"), IoError);
}

TEST_CASE("every violated assumption is reported") {
    auto j = read_json("cell_flat_law.json");
    j["domain"]["f1"] = "-0.1*(1 - cos(2*pi*xi))*cos(pi*x1)^2";
    j["c"] = "-1";
    const auto v = violations_of(j);
    CHECK(has_violation(v, "f1_nonnegative"));
    CHECK(has_violation(v, "robin_coefficient"));
}

TEST_CASE("tangential gamma violates transversality") {
    auto j = read_json("eikonal_box.json");
    j["gamma"] = {"1", "0"};
    CHECK(has_violation(violations_of(j), "transversality"));
}

TEST_CASE("coefficient invariants") {
    auto j = read_json("strip_average.json");
    j["a"] = {{{1, 0.2}, {0.1, 1}}};
    CHECK(has_violation(violations_of(j), "symmetry"));

    j = read_json("strip_average.json");
    j["a"] = {{{1, 0}, {0, "-0.5"}}};
    CHECK(has_violation(violations_of(j), "nonnegative_diffusion"));

    j = read_json("strip_average.json");
    j["a"] = {{{1, 0}, {0, "x2"}}};
    j["uniformly_elliptic"] = true;
    CHECK(has_violation(violations_of(j), "uniform_ellipticity"));

    j = read_json("strip_average.json");
    j["domain"]["top"]["kind"] = "oblique";
    CHECK(has_violation(violations_of(j), "top_condition"));

    j = read_json("cell_flat_law.json");
    j["domain"]["f1"] = "0.1*(1 - cos(2*pi*xi))";
    CHECK(has_violation(violations_of(j), "lateral_derivative"));
}

TEST_CASE("validation is deterministic") {
    const Problem p = [] {
        Problem q = load_problem(testing::data_path("cell_flat_law.json"), {16, 16});
        q.bc.c = Expr::parse("sin(2*pi*xi)");
        return q;
    }();
    ValidationStats s1, s2;
    const auto v1 = validate_problem(p, {32, 32}, &s1);
    const auto v2 = validate_problem(p, {32, 32}, &s2);
    REQUIRE(v1.size() == v2.size());
    CHECK(!v1.empty());
    for (std::size_t i = 0; i < v1.size(); ++i) {
        CHECK(v1[i].name == v2[i].name);
        CHECK(v1[i].location == v2[i].location);
    }
    CHECK(s1.samples == s2.samples);
    CHECK(s1.min_c == s2.min_c);
}

TEST_CASE("degenerate admissibility classes") {
    const Problem lap = load_problem(testing::data_path("strip_average.json"));
    CHECK(check_degenerate_admissibility(lap.coeffs, lap.domain) == Admissibility::UniformlyElliptic);

    const Problem eik = load_problem(testing::data_path("eikonal_box.json"));
    CHECK(check_degenerate_admissibility(eik.coeffs, eik.domain) == Admissibility::Controllable);

    auto j = read_json("eikonal_box.json");
    j["controls"] = {"still"};
    j["a"] = {{{0, 0}, {0, 0}}};
    j["b"] = {{0, 0}};
    const Problem still = make(j);
    CHECK(check_degenerate_admissibility(still.coeffs, still.domain) == Admissibility::Unsupported);

    // Diffusion only inside a disc around the centre: abs(q) + q = 2 max(q, 0).
    j = read_json("eikonal_box.json");
    const std::string bump = "abs(0.04 - (x1-0.5)^2 - (x2-0.5)^2) + 0.04 - (x1-0.5)^2 - (x2-0.5)^2";
    j["controls"] = {"island"};
    j["a"] = {{{bump, 0}, {0, bump}}};
    j["b"] = {{0, 0}};
    const Problem isl = make(j);
    CHECK(check_degenerate_admissibility(isl.coeffs, isl.domain) == Admissibility::EllipticIsland);
}

}  // TEST_SUITE
