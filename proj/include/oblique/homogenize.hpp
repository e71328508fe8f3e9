#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oblique/cell.hpp"
#include "oblique/grid.hpp"
#include "oblique/problem.hpp"
#include "oblique/solver.hpp"

namespace oblique {

struct HomogenizeOptions {
    GridShape grid{129, 129};
    HowardOptions howard;
    CellOptions cell;
    std::size_t knots_x1 = 5, knots_r = 7, knots_p1 = 5;
    double theta = 0.5;         // outer damping
    double outer_tol = 1e-8;    // sup-norm increment
    std::size_t outer_max = 200;
    double margin = 0.5;        // relative padding of the pilot ranges
    GridShape pilot_grid{33, 33};
    bool restart_check = true;  // rerun the outer loop from u = 0 and compare
};

/// Solution of the oscillating problem at one epsilon plus solver counters.
struct EpsilonSolve {
    double eps = 0.0;
    GridField u;
    std::size_t iterations = 0;
    double residual = 0.0;
    double max_abs = 0.0;
};

/// Robin rows on the oscillating bottom, Dirichlet rows elsewhere. Throws
/// ResolutionError when h1 > eps / 8.
EpsilonSolve solve_epsilon(const Problem& p, double eps, GridShape grid, const HowardOptions& opt = {});

/// Limit-domain solve with the arc-length averaged Robin law
///   <grad u, nu> + cbar u = gbar.
/// Exact for laws that are affine in r and independent of p1.
GridField solve_flat_law(const Problem& p, GridShape grid, const HowardOptions& opt = {});

struct HomogenizedSolve {
    GridField u;
    std::vector<double> increments;  // sup-norm increment per outer step
    std::size_t howard_iterations = 0;
};

/// Outer fixed point on <grad u, nu> + Lbar(x1, u, grad u) = 0 with the law
/// frozen at the previous iterate and linearized in r. `init` may be empty.
/// Throws TableRangeExceeded if the converged boundary data leave the table,
/// OuterNonConvergence after outer_max steps.
HomogenizedSolve solve_homogenized(const Problem& p, const EffectiveLawTable& law, GridShape grid,
                                   const HomogenizeOptions& opt = {}, const GridField* init = nullptr);

/// Boundary samples (x1, u, du/dx1) of a limit-domain field, one per oblique
/// bottom node.
struct BoundaryTrace {
    std::vector<double> x1, r, p1;
};
BoundaryTrace boundary_trace(const GridField& u);

/// Knot grids covering a trace, padded by `margin` times the span on each side.
KnotGrids knots_from_trace(const Problem& p, const BoundaryTrace& t, const HomogenizeOptions& opt);

struct ConvergenceReport {
    std::vector<double> epsilons;
    std::vector<double> sup_errors;
    std::vector<EpsilonSolve> solves;
    GridField homog_solution;
    EffectiveLawTable law;
    std::vector<double> outer_increments;
    double barrier = 0.0;        // M with |u_eps| <= M for every eps
    double max_abs_u = 0.0;      // observed max |u_eps| over the sweep
    double layer_depth = 0.0;    // nodes with x2 - f0 below this are skipped
    std::size_t compared_nodes = 0;
    double restart_gap = -1.0;   // sup |u - u_restart|, negative when not run
    std::vector<std::string> diagnostics;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Runs solve_epsilon for each eps (parallel), builds the law table from a
/// pilot solve, solves the homogenized problem and compares on Omega nodes
/// above the oscillation layer.
ConvergenceReport convergence_study(const Problem& p, const std::vector<double>& eps_list,
                                    const HomogenizeOptions& opt = {});

}  // namespace oblique
