#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "oblique/grid.hpp"
#include "oblique/problem.hpp"

namespace oblique {

/// Per-column geometric data the transform was built from.
struct JacobianData {
    double bottom_d1 = 0.0;
    double bottom_d2 = 0.0;
    double f1_xi = 0.0;
};

/// Coefficients of the Bellman operator written in computational
/// coordinates (s, eta): -A_t : D^2 v - b_t . D v for each control.
struct FlattenedOperator {
    Geometry geom;
    std::size_t controls = 0;
    std::vector<Sym2> a_t;  // index alpha * nodes + k
    std::vector<Vec2> b_t;
    std::vector<JacobianData> jacobian;  // per column
    double lambda_min = 0.0;             // eigenvalue range of the physical matrices
    double lambda_max = 0.0;

    const Sym2& a(std::size_t alpha, std::size_t k) const { return a_t[alpha * geom.size() + k]; }
    const Vec2& b(std::size_t alpha, std::size_t k) const { return b_t[alpha * geom.size() + k]; }
};

/// Physical coefficients of control alpha at (x1, x2).
using CoefficientFn = std::function<void(std::size_t alpha, double x1, double x2, Sym2& a, Vec2& b)>;

struct FlattenOptions {
    double viscosity = 0.0;  // added to the physical diffusion as viscosity * I
    bool require_ellipticity = false;
};

/// Chain rule through x2 = B(s) + eta (T - B(s)), exact at every node.
/// Throws EllipticityLost if ellipticity is required and a transformed
/// matrix has an eigenvalue <= 0.
FlattenedOperator flatten(const Geometry& geom, std::size_t controls, const CoefficientFn& coeff,
                          FlattenOptions opt = {});

/// flatten() with the problem's own coefficient family.
FlattenedOperator flatten_bulk(const Problem& p, const Geometry& geom, FlattenOptions opt = {});

/// Checks b1 = 0, b2 = a11 f0'' and the discriminant inequality per probe
/// point and control. Report only.
std::vector<Violation> validate_homogenization_assumptions(const Problem& p, ProbeGrid probe = {});

/// Frozen-coefficient cell operator at the boundary point (x1, f0(x1)).
struct CellOperator {
    double x1 = 0.0;
    double x2 = 0.0;
    double slope = 0.0;           // f0'(x1)
    std::vector<Sym2> matrices;   // one constant matrix per control
    double lambda_min = 0.0;      // eigenvalue bounds of the cell matrices
    double lambda_max = 0.0;
    DomainSpec domain;            // provides f1 and its xi-derivatives
    Expr c, g;

    double bottom(double xi) const { return domain.f1(x1, 0.0, xi); }
    double bottom_d1(double xi) const { return domain.f1_dxi(x1, xi); }
    double bottom_d2(double xi) const { return domain.f1_dxixi(x1, xi); }
    /// Co-normal on the cell bottom.
    Vec2 gamma(double xi) const;
    /// Boundary Hamiltonian H(x, r, p, xi).
    double H(double r, Vec2 p, double xi) const;
};

/// Throws InvalidArgument off an oscillating problem's x1 range, and
/// AssumptionViolated when f1 derivatives are not finite on the probe
/// set or a cell matrix is not positive definite.
CellOperator cell_operator(const Problem& p, double x1);

}  // namespace oblique
