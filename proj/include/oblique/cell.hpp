#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oblique/ergodic.hpp"
#include "oblique/flatten.hpp"
#include "oblique/problem.hpp"
#include "oblique/solver.hpp"

namespace oblique {

struct CellOptions {
    std::size_t n1 = 32;     // columns per period
    double tol_d = 1e-6;
    double R0 = 4.0;         // first truncation height
    int max_doublings = 5;
    int k_min = 3;
    int k_max = 12;
    bool early_stop = true;
    HowardOptions howard;
    std::size_t cache_capacity = 48;  // factorizations kept per x1 knot
};

struct CellResult {
    double d = 0.0;
    GridField corrector;
    ErgodicEstimate estimate;
};

/// Rows of the cell grid at height R: the computational spacing is kept
/// inside the monotone range and as close as possible to isotropic.
std::size_t cell_rows(const CellOperator& op, const std::vector<std::size_t>& controls,
                      std::size_t n1, double R);

/// Ergodic constant d(x, r, p) of the cell problem at (x1, f0(x1)).
CellResult solve_cell(const Problem& p, double x1, double r, Vec2 grad, const CellOptions& opt = {},
                      FactorCache* cache = nullptr);

/// Same with the control set reduced to {alpha}.
double frozen_control_d(const Problem& p, double x1, double r, Vec2 grad, std::size_t alpha,
                        const CellOptions& opt = {}, FactorCache* cache = nullptr);

struct KnotGrids {
    std::vector<double> x1, r, p1;
};

/// n evenly spaced knots on [lo, hi] (a single knot at lo when n = 1).
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Tabulated effective law Lbar(x1, r, p1) = -d(x1, r, p1), multilinear.
class EffectiveLawTable {
public:
    EffectiveLawTable() = default;
    EffectiveLawTable(KnotGrids knots, std::vector<double> values);

    const KnotGrids& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * knots_.r.size() + j) * knots_.p1.size() + k];
    }

    /// Multilinear interpolation, clamped to the knot box. Exact at knots.
    double operator()(double x1, double r, double p1) const;
    /// d Lbar / d r of the interpolant (one-sided at the upper r knot).
    double r_slope(double x1, double r, double p1) const;
    /// Inside the knot box. An axis with a single knot covers every value.
    bool contains(double x1, double r, double p1) const;

    /// Smallest Lbar(r_{j+1}) - Lbar(r_j) over all fibers.
    double worst_r_increment() const;

    std::string to_csv() const;
    static EffectiveLawTable from_csv(const std::string& text);

private:
    KnotGrids knots_;
    std::vector<double> values_;
};

/// Solves the cell problem at every knot (parallel over x1 knots). Throws
/// MonotonicityViolation when Lbar decreases in r by more than 10 tol_d.
EffectiveLawTable build_law_table(const Problem& p, const KnotGrids& knots, const CellOptions& opt = {});

}  // namespace oblique
