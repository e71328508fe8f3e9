#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "oblique/problem.hpp"

namespace oblique {

struct GridShape {
    std::size_t n1 = 64;
    std::size_t n2 = 64;
};

/// Terrain-following grid: column i sits at x1 = x1_0 + i h1, and node (i, j)
/// at x2 = B_i + eta_j (T - B_i) with eta_j = j h2, h2 = 1/(n2 - 1).
/// Periodic grids do not duplicate the seam column.
struct Geometry {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    bool periodic = false;
    double x1_0 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double top = 1.0;
    std::vector<double> bottom, bottom_d1, bottom_d2;  // per column

    std::size_t size() const { return n1 * n2; }
    std::size_t index(std::size_t i, std::size_t j) const { return i + n1 * j; }
    double x1(std::size_t i) const { return x1_0 + h1 * double(i); }
    double eta(std::size_t j) const { return h2 * double(j); }
    double depth(std::size_t i) const { return top - bottom[i]; }
    double x2(std::size_t i, std::size_t j) const { return bottom[i] + eta(j) * depth(i); }
};

/// Builds the grid for a problem domain. `eps` selects the oscillating
/// bottom (0 is the limit domain); `top` overrides the top height.
Geometry make_geometry(const DomainSpec& d, GridShape shape, double eps = 0.0,
                       double top = -1.0);

/// Grid over a periodic column family with bottom profile given pointwise.
template <class Bottom>
Geometry make_periodic_geometry(std::size_t n1, std::size_t n2, double x1_0, double period,
                                double top, Bottom&& b) {
    Geometry g;
    g.n1 = n1;
    g.n2 = n2;
    g.periodic = true;
    g.x1_0 = x1_0;
    g.h1 = period / double(n1);
    g.h2 = 1.0 / double(n2 - 1);
    g.top = top;
    g.bottom.resize(n1);
    g.bottom_d1.resize(n1);
    g.bottom_d2.resize(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        const auto [v, d1, d2] = b(g.x1(i));
        g.bottom[i] = v;
        g.bottom_d1[i] = d1;
        g.bottom_d2[i] = d2;
    }
    return g;
}

enum class NodeTag : std::uint8_t { Interior, ObliqueBoundary, NeumannTop, Dirichlet, PeriodicSeam };
const char* to_string(NodeTag t);

/// Scalar values on a Geometry with per-node boundary tags.
struct GridField {
    Geometry geom;
    Eigen::VectorXd values;
    std::vector<NodeTag> tags;

    std::size_t nx1() const { return geom.n1; }
    std::size_t nx2() const { return geom.n2; }
    double h1() const { return geom.h1; }
    double h2() const { return geom.h2; }
    double at(std::size_t i, std::size_t j) const { return values[geom.index(i, j)]; }

    /// Linear interpolation along column i at physical height x2 (clamped).
    double sample_column(std::size_t i, double x2) const;
};

/// Node nearest the centroid of the grid's physical domain.
std::size_t centroid_node(const Geometry& g);

/// Node nearest a physical point.
std::size_t nearest_node(const Geometry& g, Vec2 x);

}  // namespace oblique
