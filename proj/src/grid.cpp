#include "oblique/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oblique {

Geometry make_geometry(const DomainSpec& d, GridShape shape, double eps, double top) {
    if (shape.n1 < 4 || shape.n2 < 3) throw InvalidArgument("grid must be at least 4 x 3 nodes");
    Geometry g;
    g.n1 = shape.n1;
    g.n2 = shape.n2;
    g.periodic = d.periodic();
    g.x1_0 = d.x1_min;
    g.h1 = g.periodic ? d.period() / double(g.n1) : (d.x1_max - d.x1_min) / double(g.n1 - 1);
    g.h2 = 1.0 / double(g.n2 - 1);
    g.top = top > 0.0 ? top : d.top_height;
    g.bottom.resize(g.n1);
    g.bottom_d1.resize(g.n1);
    g.bottom_d2.resize(g.n1);
    for (std::size_t i = 0; i < g.n1; ++i) {
        const double x = g.x1(i);
        g.bottom[i] = d.bottom(x, eps);
        g.bottom_d1[i] = d.bottom_d1(x, eps);
        g.bottom_d2[i] = d.bottom_d2(x, eps);
        if (!(g.top > g.bottom[i]))
            throw InvalidArgument("domain is empty: bottom reaches the top at x1 = " +
                                  std::to_string(x));
    }
    return g;
}

const char* to_string(NodeTag t) {
    switch (t) {
        case NodeTag::Interior: return "Interior";
        case NodeTag::ObliqueBoundary: return "ObliqueBoundary";
        case NodeTag::NeumannTop: return "NeumannTop";
        case NodeTag::Dirichlet: return "Dirichlet";
        case NodeTag::PeriodicSeam: return "PeriodicSeam";
    }
    return "?";
}

double GridField::sample_column(std::size_t i, double x2) const {
    const double b = geom.bottom[i];
    const double eta = std::clamp((x2 - b) / geom.depth(i), 0.0, 1.0);
    const double t = eta / geom.h2;
    const std::size_t j = std::min<std::size_t>(geom.n2 - 2, std::size_t(std::floor(t)));
    const double w = t - double(j);
    return (1.0 - w) * at(i, j) + w * at(i, j + 1);
}

std::size_t centroid_node(const Geometry& g) {
    const std::size_t i = g.n1 / 2;
    double mean_b = 0.0;
    for (double b : g.bottom) mean_b += b;
    mean_b /= double(g.n1);
    return nearest_node(g, {g.x1(i), 0.5 * (mean_b + g.top)});
}

std::size_t nearest_node(const Geometry& g, Vec2 x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) {
            const double dx = g.x1(i) - x.x, dy = g.x2(i, j) - x.y;
            const double dist = dx * dx + dy * dy;
            if (dist < best_d) {
                best_d = dist;
                best = g.index(i, j);
            }
        }
    }
    return best;
}

}  // namespace oblique
