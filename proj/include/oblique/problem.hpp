#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "oblique/errors.hpp"
#include "oblique/expr.hpp"

namespace oblique {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    double min_eigenvalue() const;
    double max_eigenvalue() const;
    double det() const { return a11 * a22 - a12 * a12; }
    double trace() const { return a11 + a22; }
};

enum class DomainKind { BoundedFlattenable, PeriodicHalfStrip, OscillatingEpsilon };
enum class TopKind { Oblique, Neumann, Truncation, Dirichlet };
enum class SideKind { Oblique, Dirichlet, Periodic };

const char* to_string(DomainKind k);

/// Bottom/top description of a graph-bounded 2-D domain.
///
/// BoundedFlattenable: f0(x1) <= x2 <= top, x1 in [x1_min, x1_max].
/// PeriodicHalfStrip:  f0(x1) + f1(x1, x1) <= x2 (truncated at top.height), x1 periodic.
/// OscillatingEpsilon: f0(x1) + eps f1(x1, x1/eps) <= x2 <= top, Dirichlet off the bottom.
struct DomainSpec {
    DomainKind kind = DomainKind::BoundedFlattenable;
    double x1_min = 0.0;
    double x1_max = 1.0;
    Expr f0;  // x1 only
    Expr f1;  // (x1, xi), 1-periodic in xi
    TopKind top = TopKind::Oblique;
    double top_height = 1.0;
    double top_value = 0.0;  // Dirichlet value on the top, if any
    SideKind sides = SideKind::Oblique;
    std::optional<double> epsilon;

    /// Sets f0 and f1 and caches their symbolic derivatives. Always use this
    /// rather than assigning f0/f1 directly.
    void set_profiles(Expr bottom_f0, Expr oscillation_f1);

    bool periodic() const { return kind == DomainKind::PeriodicHalfStrip; }
    double period() const { return x1_max - x1_min; }

    /// Bottom height and derivatives as a function of x1 for a given epsilon
    /// (ignored unless the kind is OscillatingEpsilon; eps = 0 is the limit domain).
    double bottom(double x1, double eps = 0.0) const;
    double bottom_d1(double x1, double eps = 0.0) const;
    double bottom_d2(double x1, double eps = 0.0) const;

    double f0_d1(double x1) const { return df0_(x1, 0.0); }
    double f0_d2(double x1) const { return d2f0_(x1, 0.0); }
    double f1_dxi(double x1, double xi) const { return f1_xi_(x1, 0.0, xi); }
    double f1_dxixi(double x1, double xi) const { return f1_xixi_(x1, 0.0, xi); }

private:
    Expr df0_, d2f0_;
    Expr f1_x1_, f1_xi_, f1_x1x1_, f1_x1xi_, f1_xixi_;
};

enum class BcMode { Discounted, FixedD, Robin };

struct ControlledCoefficients {
    std::vector<std::string> controls;
    // Per control: a11, a12, a21, a22 and b1, b2 as expressions in (x1, x2).
    std::vector<std::array<Expr, 4>> a;
    std::vector<std::array<Expr, 2>> b;
    bool uniformly_elliptic = false;
    std::optional<double> lambda1;
    std::optional<double> Lambda1;

    std::size_t size() const { return controls.size(); }
    Sym2 matrix(std::size_t alpha, double x1, double x2) const;
    Vec2 drift(std::size_t alpha, double x1, double x2) const;
};

struct ObliqueBoundaryData {
    bool gamma_is_normal = true;
    Expr gamma1, gamma2;  // used when !gamma_is_normal, in (x1, x2)
    Expr g;               // in (x1, x2, xi)
    Expr c;               // in (x1, x2, xi)
    BcMode mode = BcMode::Discounted;
    double mode_value = 1.0;  // lambda for Discounted, d for FixedD

    /// gamma at a boundary point with outward unit normal n.
    Vec2 gamma(double x1, double x2, Vec2 normal) const;
};

/// Statistics recorded while validating a problem.
struct ValidationStats {
    double gamma0 = 0.0;            // min <gamma, n> over sampled boundary points
    double lipschitz = 0.0;         // sampled Lipschitz modulus of a, b
    double min_eigenvalue = 0.0;    // over sampled x and controls
    double max_eigenvalue = 0.0;
    double min_c = 0.0;
    std::size_t samples = 0;
};

struct Problem {
    std::string name;
    DomainSpec domain;
    ControlledCoefficients coeffs;
    ObliqueBoundaryData bc;
    ValidationStats stats;
};

/// Resolution of the solve grid that validation must cover. Probes are taken
/// on that grid plus midpoints, i.e. on (2 n1 - 1) x (2 n2 - 1) points.
struct ProbeGrid {
    std::size_t n1 = 64;
    std::size_t n2 = 64;
};

/// Parses a problem-spec JSON document. Throws ParseError or
/// AssumptionViolated (listing every violated assumption).
Problem parse_problem(const std::string& json_text, ProbeGrid probe = {});
Problem load_problem(const std::string& path, ProbeGrid probe = {});

/// Checks every type invariant on the probe grid; returns the violations and
/// fills `stats`. Deterministic.
std::vector<Violation> validate_problem(const Problem& p, ProbeGrid probe,
                                        ValidationStats* stats = nullptr);

enum class Admissibility { UniformlyElliptic, EllipticIsland, Controllable, Unsupported };
const char* to_string(Admissibility a);

/// Classifies which sufficient condition for a (possibly degenerate) ergodic
/// constant holds on interior probe points.
Admissibility check_degenerate_admissibility(const ControlledCoefficients& coeffs,
                                             const DomainSpec& domain, ProbeGrid probe = {});

/// Interior probe points of the limit domain (epsilon = 0), row-major in (x1, eta).
std::vector<Vec2> interior_probe_points(const DomainSpec& domain, ProbeGrid probe);

}  // namespace oblique
